"""figgen <kind> <csv> [-m manifest] -o out.png|svg"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .io import SchemaError
from .render import FigureJob, Kind, render


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="figgen",
                                description="Render simulator CSV outputs as figures")
    p.add_argument("kind", choices=[k.value for k in Kind])
    p.add_argument("csv", help="input CSV produced by the simulator CLI")
    p.add_argument("-m", "--manifest", default=None,
                   help="manifest JSON; schema version is verified when given")
    p.add_argument("-o", "--output", required=True, help="output image (.png or .svg)")
    p.add_argument("--version", action="version", version=__version__)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = FigureJob(kind=args.kind, csv_path=args.csv,
                    output_path=args.output, manifest_path=args.manifest)
    try:
        render(job)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"figgen: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
