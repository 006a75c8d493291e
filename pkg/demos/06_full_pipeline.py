#!/usr/bin/env python3
"""End-to-end pipeline run on the bundled mini corpus.

Equivalent to:

    narrativeflow pipeline --config tests/data/mini_corpus/mini.toml --outdir out

then rerun to show every stage resuming from the manifest.
"""
import tempfile
from pathlib import Path

from narrativeflow.pipeline import load_config, run_pipeline

mini = Path(__file__).resolve().parents[1] / "tests" / "data" / "mini_corpus"
with tempfile.TemporaryDirectory() as tmp:
    cfg = load_config(mini / "mini.toml", {"outdir": tmp})
    manifest = run_pipeline(cfg)
    print("first run:")
    for stage, record in manifest["stages"].items():
        outputs = ", ".join(record["outputs"]) or "-"
        print(f"  {stage:10s} {record['elapsed_s']:.2f}s -> {outputs}")

    manifest = run_pipeline(cfg)
    skipped = [s for s, r in manifest["stages"].items() if r.get("skipped")]
    print(f"second run skipped {len(skipped)}/{len(manifest['stages'])} stages "
          "(inputs unchanged)")
