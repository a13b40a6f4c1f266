"""Command-line entry point: ``qflow run|sweep|steady|snapshot-info``."""

import argparse
import json
import logging
import sys

from . import driver
from .errors import QFlowError


def _values(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser():
    ap = argparse.ArgumentParser(prog="qflow", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configuration to t_end")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--resume", help="snapshot (.bin or .json) to continue from")

    sw = sub.add_parser("sweep", help="regularization ladder plus the zero level")
    sw.add_argument("--config", required=True)
    sw.add_argument("--param", required=True, choices=("eps", "delta"))
    sw.add_argument("--values", required=True, type=_values)
    sw.add_argument("--out", required=True)

    st = sub.add_parser("steady", help="run until the steady-state check passes")
    st.add_argument("--config", required=True)
    st.add_argument("--tol", required=True, type=float)
    st.add_argument("--tmax", required=True, type=float)
    st.add_argument("--out", required=True)

    info = sub.add_parser("snapshot-info", help="print a snapshot header and field ranges")
    info.add_argument("path")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return driver.cmd_run(args.config, args.out, resume=args.resume)
    if args.command == "sweep":
        return driver.cmd_sweep(args.config, args.param, args.values, args.out)
    if args.command == "steady":
        return driver.cmd_steady(args.config, args.tol, args.tmax, args.out)
    try:
        print(json.dumps(driver.snapshot_info(args.path), indent=1))
    except QFlowError as exc:
        return driver._error_exit(exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
