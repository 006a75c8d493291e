"""``report --spec PATH``: render the requested figures plus an index page."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .figures import ReportSpec, render_all


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = argparse.ArgumentParser(prog="report",
                                     description="render figures from narrativeflow artifacts")
    parser.add_argument("--spec", type=Path, required=True, help="report spec JSON")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    args = parser.parse_args(argv)
    try:
        spec = ReportSpec.load(args.spec)
    except (OSError, KeyError, ValueError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    rendered = render_all(spec)
    for name, path in rendered.items():
        print(f"{name}: {path}")
    print(f"index: {spec.outdir / 'index.html'}")
    if not rendered:
        print("error: every requested figure was skipped", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
