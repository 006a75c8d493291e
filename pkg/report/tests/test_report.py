import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from narrativeflow_report.figures import (
    FIGURES, ReportSpec, node_sizes, render_all, spring_layout,
)

GOLDEN = Path(__file__).resolve().parents[2] / "tests" / "data" / "golden"
MINI = Path(__file__).resolve().parents[2] / "tests" / "data" / "mini_corpus"

ARTIFACTS = {
    "copy_matrix": str(GOLDEN / "copy_matrix.csv"),
    "bias_latent": str(GOLDEN / "bias_latent.csv"),
    "bias_coefficients": str(GOLDEN / "bias_coefficients.csv"),
    "influence_graph": str(GOLDEN / "influence_graph.tsv"),
    "centrality": str(GOLDEN / "centrality.csv"),
    "sites": str(MINI / "sites.csv"),
}


def _spec(outdir, **kwargs):
    return ReportSpec(artifacts=dict(ARTIFACTS), outdir=outdir, **kwargs)


def test_golden_artifacts_present():
    for name, path in ARTIFACTS.items():
        assert Path(path).is_file(), f"missing fixture {name}: {path}"


def test_renders_all_four_figure_types(tmp_path):
    rendered = render_all(_spec(tmp_path))
    assert set(rendered) == set(FIGURES)
    for path in rendered.values():
        assert path.is_file() and path.stat().st_size > 0
    index = (tmp_path / "index.html").read_text()
    for path in rendered.values():
        assert path.name in index


def test_rerun_is_idempotent(tmp_path):
    spec = _spec(tmp_path)
    first = render_all(spec)
    snapshot = {p.name: p.read_bytes() for p in first.values()}
    snapshot["index.html"] = (tmp_path / "index.html").read_bytes()
    second = render_all(_spec(tmp_path))
    assert set(second) == set(first)
    for name, blob in snapshot.items():
        assert (tmp_path / name).read_bytes() == blob, f"{name} changed on rerun"


def test_svg_output_is_valid_xml(tmp_path):
    rendered = render_all(_spec(tmp_path, image_format="svg"))
    for path in rendered.values():
        assert path.suffix == ".svg"
        root = ET.parse(path).getroot()
        assert root.tag.endswith("svg")


def test_node_sizes_monotone_in_hub():
    hub = np.array([0.0, 0.01, 0.2, 0.05, 1.0, 0.7])
    sizes = node_sizes(hub)
    order = np.argsort(hub)
    assert np.all(np.diff(sizes[order]) >= 0)
    strictly = np.argsort(hub[np.unique(hub, return_index=True)[1]])
    uniq = np.unique(hub)
    uniq_sizes = node_sizes(uniq)
    assert np.all(np.diff(uniq_sizes) > 0)
    assert np.all(node_sizes(np.zeros(3)) == node_sizes(np.zeros(3))[0])


def test_graph_figure_sizes_follow_centrality_file(tmp_path):
    # the figure's size mapping applied to the artifact's hub column is monotone
    from narrativeflow_report.artifacts import read_centrality, read_influence_graph

    edges = read_influence_graph(ARTIFACTS["influence_graph"])
    centrality = read_centrality(ARTIFACTS["centrality"])
    nodes = sorted({e["src"] for e in edges} | {e["dst"] for e in edges})
    hub = np.array([centrality[d]["hub"] for d in nodes])
    sizes = node_sizes(hub)
    order = np.argsort(hub)
    assert np.all(np.diff(sizes[order]) >= 0)
    assert sizes[np.argmax(hub)] == sizes.max()


def test_missing_artifact_skips_with_warning(tmp_path, caplog):
    artifacts = dict(ARTIFACTS)
    artifacts["copy_matrix"] = str(tmp_path / "nope.csv")
    spec = ReportSpec(artifacts=artifacts, outdir=tmp_path)
    with caplog.at_level("WARNING"):
        rendered = render_all(spec)
    assert "copy_matrix" not in rendered
    assert set(rendered) == set(FIGURES) - {"copy_matrix"}
    assert any("copy_matrix" in r.message for r in caplog.records)
    assert "skipped" in (tmp_path / "index.html").read_text()


def test_empty_graph_skips_copy_matrix(tmp_path):
    empty = tmp_path / "copy_matrix.csv"
    rows = ["dst_ecosystem,src_ecosystem,copy_share,mean_delay_days,delay_delta_days"]
    for dst in ("reliable", "mixed", "unreliable"):
        for src in ("reliable", "mixed", "unreliable"):
            rows.append(f"{dst},{src},0,nan,nan")
    empty.write_text("\n".join(rows) + "\n")
    artifacts = dict(ARTIFACTS)
    artifacts["copy_matrix"] = str(empty)
    rendered = render_all(ReportSpec(artifacts=artifacts, outdir=tmp_path / "out",
                                     figures=["copy_matrix"]))
    assert rendered == {}


def test_spec_validation(tmp_path):
    with pytest.raises(ValueError, match="png or svg"):
        ReportSpec(artifacts={}, outdir=tmp_path, image_format="gif")
    with pytest.raises(ValueError, match="unknown figures"):
        ReportSpec(artifacts={}, outdir=tmp_path, figures=["pie_chart"])


def test_spec_load_relative_paths(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "artifacts": {"copy_matrix": "copy.csv"},
        "outdir": "figs",
        "format": "svg",
        "dpi": 72,
    }))
    spec = ReportSpec.load(spec_path)
    assert spec.artifacts["copy_matrix"] == str(tmp_path / "copy.csv")
    assert spec.outdir == tmp_path / "figs"
    assert spec.image_format == "svg" and spec.dpi == 72


def test_spring_layout_deterministic():
    edges = [{"src": "a", "dst": "b"}, {"src": "b", "dst": "c"}]
    p1 = spring_layout(["a", "b", "c"], edges)
    p2 = spring_layout(["a", "b", "c"], edges)
    for node in p1:
        assert np.array_equal(p1[node], p2[node])


def _run_cli(*args):
    return subprocess.run([sys.executable, "-m", "narrativeflow_report.cli", *args],
                          capture_output=True, text=True)


def test_cli_end_to_end(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "artifacts": ARTIFACTS,
        "outdir": str(tmp_path / "figs"),
        "format": "png",
    }))
    result = _run_cli("--spec", str(spec_path))
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "figs" / "index.html").is_file()
    assert len(list((tmp_path / "figs").glob("*.png"))) == 4


def test_cli_all_skipped_nonzero_exit(tmp_path):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({
        "artifacts": {"copy_matrix": str(tmp_path / "missing.csv")},
        "outdir": str(tmp_path / "figs"),
        "figures": ["copy_matrix"],
    }))
    result = _run_cli("--spec", str(spec_path))
    assert result.returncode == 1
    assert "skipped" in result.stderr


def test_cli_bad_spec_exit_2(tmp_path):
    result = _run_cli("--spec", str(tmp_path / "nope.json"))
    assert result.returncode == 2
