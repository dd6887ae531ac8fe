import math
import os

from dotenv import load_dotenv

from lintest import __version__

load_dotenv()

# Runtime settings
DEFAULT_SEED = int(os.getenv("LINTEST_SEED", "20241017"))
DEBUG = os.getenv("DEBUG", "False").lower() == "true"
LOG_LEVEL = "DEBUG" if DEBUG else os.getenv("LINTEST_LOG_LEVEL", "INFO").upper()
VERSION = f"lintest-{__version__}"

# Capacity caps
CUBE_CAP = 16  # variables per cube
ENUM_CAP = 4  # variables for full function enumeration
FAMILY_CAP = 2  # variables for dense observable families
SPECTRUM_CAP = 4  # variables for on-demand spectra
DIM_CAP = 64
REPEAT_CAP = 10_000  # supported question pairs of a materialized repetition
CLASSICAL_CAP = 10**7  # deterministic strategies per side
EXACT_W_CAP = 2  # |W| for exhaustive test evaluation
SEESAW_DIM_CAP = 8

# Tolerances
TOL = 1e-8
ARITH_TOL = 1e-12
LEMMA_TOL = 1e-10
PARSEVAL_TOL = 1e-6

SEESAW_RESTARTS = 10
DELTA = 1 - 1 / math.sqrt(2)
