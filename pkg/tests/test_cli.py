import csv
import json

import numpy as np
import pytest

from wbcquant.cli import main
from wbcquant.errors import ConfigError
from wbcquant.io import write_image
from wbcquant.pipeline import build_config, parse_config_text

SMALL = {"width": 800, "height": 600, "n_discrete": 12, "clusters": [4]}


def synth_corpus(tmp_path, n=3, **extra):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({**SMALL, "n_images": n, "seed": 3, "stem": "img", **extra}))
    out = tmp_path / "corpus"
    assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
    return out


class TestConfig:
    def test_parse(self):
        vals = parse_config_text("# comment\nF = 0.2\n\nseg_block=200  # trailing\n")
        assert vals == {"F": "0.2", "seg_block": "200"}

    def test_build(self):
        cfg = build_config({"F": "0.2", "seg_block": "200", "merge_mode": "intersection", "detect_edges": "no"})
        assert cfg.li.F == 0.2 and cfg.seg_block == 200
        assert cfg.edge.merge_mode == "intersection" and cfg.detect_edges is False

    @pytest.mark.parametrize("vals", [{"nope": "1"}, {"F": "abc"}, {"F": "2"}, {"detect_edges": "maybe"},
                                      {"seg_block": "8"}])
    def test_rejects(self, vals):
        with pytest.raises(ConfigError):
            build_config(vals)

    def test_malformed_line(self):
        with pytest.raises(ConfigError):
            parse_config_text("F 0.2")


def test_synth_writes_pairs(tmp_path):
    out = synth_corpus(tmp_path)
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted(f"img_{i:04d}{ext}" for i in range(3) for ext in (".png", ".truth.json", ".void.png"))


def test_analyze_batch(tmp_path):
    corpus = synth_corpus(tmp_path)
    out = tmp_path / "out"
    assert main(["analyze", "--input", str(corpus), "--out", str(out), "--set", "detect_edges=false"]) == 0
    rows = list(csv.reader((out / "summary.csv").open()))
    assert rows[0][:6] == ["image_id", "n_discrete", "n_clusters", "mean_discrete_size",
                           "n_cells_in_clusters", "n_total"]
    assert rows[0][-1] == "bin_gt_160" and len(rows) == 4
    assert [r[0] for r in rows[1:]] == ["img_0000", "img_0001", "img_0002"]
    for r in rows[1:]:
        assert r[1] == "12" and r[2] == "1"
    report = json.loads((out / "img_0000.json").read_text())
    assert report["schema"] == 1 and report["n_total"] == report["n_discrete"] + report["n_cells_in_clusters"]
    assert not (out / "errors.json").exists()


def test_uniform_image_counts_zero(tmp_path):
    write_image(tmp_path / "gray.png", np.full((600, 800), 150, np.uint8))
    out = tmp_path / "out"
    assert main(["analyze", "--input", str(tmp_path / "gray.png"), "--out", str(out), "--debug-masks"]) == 0
    report = json.loads((out / "gray.json").read_text())
    assert report["n_total"] == 0
    for suffix in (".mask.png", ".empty_space.png", ".muscle_edge.png", ".roi.txt"):
        assert (out / f"gray{suffix}").exists()


def test_partial_failure(tmp_path):
    corpus = synth_corpus(tmp_path, n=1)
    (corpus / "broken.png").write_bytes(b"not a png")
    out = tmp_path / "out"
    assert main(["analyze", "--input", str(corpus), "--out", str(out), "--set", "detect_edges=0"]) == 1
    errors = json.loads((out / "errors.json").read_text())
    assert len(errors) == 1 and errors[0]["path"].endswith("broken.png")
    assert (out / "img_0000.json").exists()
    assert len((out / "summary.csv").read_text().splitlines()) == 2


def test_config_errors(tmp_path, capsys):
    corpus = synth_corpus(tmp_path, n=1)
    out = str(tmp_path / "out")
    assert main(["analyze", "--input", str(corpus), "--out", out, "--set", "F=2"]) == 2
    assert main(["analyze", "--input", str(tmp_path / "missing"), "--out", out]) == 2
    assert main(["analyze", "--input", str(corpus), "--out", out, "--config", str(tmp_path / "nope.cfg")]) == 2
    bad_spec = tmp_path / "bad.json"
    bad_spec.write_text(json.dumps({"colour": "red"}))
    assert main(["synth", "--spec", str(bad_spec), "--out", out]) == 2
    assert main(["benchmark", "--corpus", str(corpus), "--methods", "triangle", "--out", out]) == 2


def test_config_file_and_override(tmp_path):
    corpus = synth_corpus(tmp_path, n=1)
    cfg = tmp_path / "run.cfg"
    cfg.write_text("detect_edges = false\nbin_width = 10\nbin_top = 100\n")
    out = tmp_path / "out"
    assert main(["analyze", "--input", str(corpus), "--out", str(out), "--config", str(cfg),
                 "--set", "bin_top=40"]) == 0
    header = (out / "summary.csv").read_text().splitlines()[0].split(",")
    assert header[6:] == ["bin_0_10", "bin_11_20", "bin_21_30", "bin_31_40", "bin_gt_40"]


def test_workers_match_sequential(tmp_path):
    corpus = synth_corpus(tmp_path, n=2)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["analyze", "--input", str(corpus), "--out", str(a), "--set", "detect_edges=0"]) == 0
    assert main(["analyze", "--input", str(corpus), "--out", str(b), "--set", "detect_edges=0", "--workers", "2"]) == 0
    for name in ("summary.csv", "img_0000.json", "img_0001.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_benchmark(tmp_path, capsys):
    corpus = synth_corpus(tmp_path, n=2)
    out = tmp_path / "bench"
    assert main(["benchmark", "--corpus", str(corpus), "--methods", "li_otsu,otsu", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert printed == (out / "benchmark.txt").read_text()
    rows = list(csv.DictReader((out / "benchmark.csv").open()))
    assert [r["method"] for r in rows] == ["li_otsu", "otsu"]
