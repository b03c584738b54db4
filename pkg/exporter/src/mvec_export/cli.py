"""Command-line interface: ``mvec-export export`` and ``mvec-export verify``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from mvec_export.export import ExportError, ExportJob, export_embeddings, verify_mvec
from mvec_export.mvecio import MvecFormatError

EXIT_OK = 0
EXIT_DATA = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="mvec-export",
                     description="Export contextual token embeddings to MVEC")
    sub = parser.add_subparsers(dest="command", required=True)

    exp = sub.add_parser("export", help="encode a dataset and write an MVEC file")
    exp.add_argument("--dataset", required=True, help="dialogue JSONL path")
    exp.add_argument("--model", required=True, help="encoder model id or path")
    exp.add_argument("--out", required=True, help="output MVEC path")
    exp.add_argument("--layer", type=int, default=-1,
                     help="hidden-state layer to export (default: last)")
    exp.add_argument("--max-length", type=int, default=128,
                     help="encoder sequence length cap")

    ver = sub.add_parser("verify", help="check an MVEC file covers a dataset")
    ver.add_argument("--mvec", required=True)
    ver.add_argument("--dataset", required=True)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code)
    try:
        if args.command == "export":
            job = ExportJob(dataset=args.dataset, model=args.model, out=args.out,
                            layer=args.layer, max_length=args.max_length)
            summary = export_embeddings(job)
            print(json.dumps(summary.as_dict(), sort_keys=True))
            return EXIT_OK
        report = verify_mvec(args.mvec, args.dataset)
        print(json.dumps(report, sort_keys=True))
        for key in report["missing"]:
            print(f"missing: {key}", file=sys.stderr)
        return EXIT_OK
    except (ExportError, MvecFormatError, OSError) as exc:
        print(f"mvec-export: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
