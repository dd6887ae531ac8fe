import argparse
import json
import logging
import sys
from typing import List, Optional

from lintest import commands, config
from lintest.models.cube import SectionPolicy
from lintest.services.fixtures import FIXTURES
from lintest.utils.exceptions import LintestError

logger = logging.getLogger("lintest")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str = config.LOG_LEVEL) -> None:
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _test_options(parser: argparse.ArgumentParser, epsilon_required: bool = True) -> None:
    parser.add_argument("--epsilon", required=epsilon_required, help="Noise rate p/q, below 1/2")
    parser.add_argument("--u", type=int, default=1, help="Parallel rounds per test round")
    parser.add_argument("--h", type=int, default=1, help="Answer length bound in bits")
    parser.add_argument("--delta", type=float, default=config.DELTA)
    parser.add_argument("--policy", choices=[p.value for p in SectionPolicy], default="lexmin")
    parser.add_argument("--paper-mode", action="store_true", help="Require epsilon < 1/72")
    parser.add_argument("--rep-C", dest="rep_C", type=float, default=1.0, help="Repetition bound constant C")
    parser.add_argument("--rep-c", dest="rep_c", type=float, default=1.0, help="Repetition bound exponent c")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lintest",
        description="Long-code test compiler for nonlocal games, with value estimation and audits",
    )
    parser.add_argument("--version", action="version", version=config.VERSION)
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    parser.add_argument("--out", help="Write the result here instead of stdout")
    parser.add_argument(
        "--log-level", type=str.upper, choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None,
        help="Stderr log level; defaults to LINTEST_LOG_LEVEL, or DEBUG when DEBUG=true",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="Write a built-in game with its known strategies")
    p.add_argument("name", choices=sorted(FIXTURES))
    p.set_defaults(handler=commands.cmd_fixture)

    p = sub.add_parser("build", help="Build a game from a constraint system")
    p.add_argument("input")
    p.add_argument("--kind", choices=["bcs", "lcs"], default="bcs")
    p.add_argument("--symmetric", action="store_true", help="Synchronous constraint-variable game")
    p.set_defaults(handler=commands.cmd_build)

    p = sub.add_parser("transform", help="Apply game transformations in order")
    p.add_argument("input")
    p.add_argument("--passes", required=True, help="Comma-separated: nonempty, project, repeat")
    p.add_argument("--u", type=int, default=2)
    p.add_argument("--symmetric", action="store_true", help="Keep repaired games synchronous")
    p.set_defaults(handler=commands.cmd_transform)

    p = sub.add_parser("compile", help="Compile a synchronous game into the long-code test")
    p.add_argument("input")
    _test_options(p)
    p.set_defaults(handler=commands.cmd_compile)

    p = sub.add_parser("estimate", help="Estimate a game or test value")
    p.add_argument("input")
    p.add_argument("--method", choices=["classical", "montecarlo", "seesaw"], default="montecarlo")
    p.add_argument("--strategy", help="Synchronous strategy JSON")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--restarts", type=int, default=config.SEESAW_RESTARTS)
    p.add_argument("--exact", action="store_true", help="Enumerate the test instead of sampling")
    p.add_argument("--transcript", help="JSON-lines file of sampled rounds")
    _test_options(p, epsilon_required=False)
    p.set_defaults(handler=commands.cmd_estimate)

    p = sub.add_parser("audit", help="Run the soundness inequalities on one strategy")
    p.add_argument("input")
    p.add_argument("--strategy", help="Perfect strategy JSON; a random strategy otherwise")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--exact", action="store_true", help="Exact test value instead of Monte Carlo")
    _test_options(p)
    p.set_defaults(handler=commands.cmd_audit)

    p = sub.add_parser("verify", help="Run acceptance suites from a config file")
    p.add_argument("config")
    p.add_argument("--image", help="Also write a PNG summary here")
    p.add_argument("--no-timestamp", action="store_true", help="Omit created_at for byte-identical reports")
    p.set_defaults(handler=commands.cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or config.LOG_LEVEL)
    logger.info("%s %s", config.VERSION, args.command)
    try:
        args.handler(args)
    except LintestError as e:
        print(json.dumps(e.detail, sort_keys=True, default=str), file=sys.stderr)
        return e.exit_code
    except Exception:
        logger.exception("unhandled error in %s", args.command)
        print(json.dumps({"error": "Internal error"}), file=sys.stderr)
        return 1
    logger.info("%s finished", args.command)
    return 0


if __name__ == "__main__":
    sys.exit(main())
