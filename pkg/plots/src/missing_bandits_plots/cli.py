"""Command line front end: regenerate the standard figures.

Exit codes: 0 success, 1 bad input (missing files, schema violations,
unknown figure name), 2 unexpected internal failure.
"""

import argparse
import sys
from typing import List, Optional

from .figures import regenerate_figures
from .schema import SchemaError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="missing-bandits-plots")
    parser.add_argument("--results", required=True,
                        help="directory holding the results CSV files")
    parser.add_argument("--out", required=True,
                        help="directory to write figure images into")
    parser.add_argument("--only", action="append", default=[], metavar="NAME",
                        help="render only the named figure (repeatable)")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return 1
    try:
        produced = regenerate_figures(
            args.results, args.out, only=args.only or None
        )
        if not args.quiet:
            for name, info in produced.items():
                for path in info["paths"]:
                    print(f"wrote {path}")
        return 0
    except (SchemaError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
