"""Command-line entry point: ``adiabatic-lab-figures render job.json``.

Exit codes: 0 success, 2 invalid job file, 3 missing input or schema
mismatch.
"""

from __future__ import annotations

import argparse
import sys

from .jobs import JobInvalid, MissingInput, SchemaMismatch, load_job
from .render import render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="adiabatic-lab-figures")
    sub = parser.add_subparsers(dest="command", required=True)
    render_p = sub.add_parser("render", help="render one figure job")
    render_p.add_argument("job", help="path to a figure job JSON file")
    args = parser.parse_args(argv)

    try:
        job = load_job(args.job)
    except JobInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        out = render(job)
    except (MissingInput, SchemaMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
