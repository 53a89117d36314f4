"""Command-line entry point.

probe-extract --input images/ --out emb/ [--probe id] [--resize 512]
              [--batch 16] [--captions file]

Exit codes: 0 success, 1 usage, 2 data/format, 3 numeric. Errors print to
stderr with a machine-parsable error_code= prefix. Extraction has no
randomness: identical inputs reproduce outputs byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from zoomatch.errors import FormatError, NumericError, ZoomatchError

from .errors import ProbeExtractError
from .extract import ExtractionJob, extract
from .probes import available_probes


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"error_code=usage: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="probe-extract",
        description="Embed an image folder and emit rows.f32 plus a "
                    "Gaussian stats directory in the zoomatch container "
                    "format.",
    )
    parser.add_argument("--input", type=Path, required=True,
                        help="folder searched recursively for images")
    parser.add_argument("--out", type=Path, required=True,
                        help="output directory")
    parser.add_argument("--probe", default="pixel-probe-v1",
                        help=f"probe id ({', '.join(available_probes())})")
    parser.add_argument("--resize", type=int, default=512,
                        help="square center-crop resolution before encoding")
    parser.add_argument("--batch", type=int, default=16,
                        help="images decoded and embedded per batch")
    parser.add_argument("--captions", type=Path, default=None,
                        help="optional captions file recorded in the job "
                             "summary (text embedding is a reserved path)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(input_dir=args.input, captions=args.captions,
                            probe_id=args.probe, resize=args.resize,
                            batch_size=args.batch)
        result = extract(job, args.out)
    except NumericError as e:
        print(f"error_code=numeric: {e}", file=sys.stderr)
        return 3
    except FormatError as e:
        print(f"error_code=format: {e}", file=sys.stderr)
        return 2
    except (ProbeExtractError, ZoomatchError, OSError) as e:
        print(f"error_code=data: {e}", file=sys.stderr)
        return 2
    print(f"wrote {result.n_rows} embeddings (dim {result.dim}, "
          f"{len(result.skipped)} skipped) to {result.out_dir}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
