"""Render one figure per invocation from harness CSV outputs.

Exit codes: 0 success, 1 bad arguments or schema mismatch (stderr carries
the column diff).
"""

from __future__ import annotations

import argparse
import sys

from .render import KINDS, FigureSpec, render
from .schemas import SchemaMismatch


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="cerdec-figures", description=__doc__)
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument(
        "--in", dest="inputs", required=True,
        help="input CSV path(s), comma separated (violin: records,report)",
    )
    parser.add_argument("--out", required=True, help="output image (png/svg/pdf)")
    parser.add_argument("--k", type=int, help="dataset size for the violin kind")
    parser.add_argument("--linear-y", action="store_true")
    try:
        args = parser.parse_args(argv)
        spec = FigureSpec(
            inputs=tuple(p.strip() for p in args.inputs.split(",")),
            kind=args.kind,
            output=args.out,
            k=args.k,
            log_y=not args.linear_y,
        )
        path = render(spec)
        print(f"wrote {path}")
        return 0
    except SystemExit as exc:
        return 1 if exc.code else 0
    except (SchemaMismatch, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
