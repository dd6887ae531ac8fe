#!/usr/bin/env python3
"""
Command-line entry point for lintest
"""
import sys

from lintest.main import main

if __name__ == "__main__":
    sys.exit(main())
