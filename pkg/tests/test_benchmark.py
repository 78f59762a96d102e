import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wbcquant.benchmark import (
    accuracy,
    benchmark_corpus,
    format_table,
    greedy_match,
    load_corpus,
    run_benchmark,
    score_mask,
    segment_with,
    to_csv,
    truth_points,
)
from wbcquant.errors import InvalidInputError
from wbcquant.pipeline import PipelineConfig
from wbcquant.synth import SynthSpec, render, write


def disk_mask(truth, shape):
    ys, xs = np.mgrid[0:shape[0], 0:shape[1]]
    m = np.zeros(shape, bool)
    for o in truth["objects"]:
        m |= (xs - o["x"]) ** 2 + (ys - o["y"]) ** 2 <= o["r"] ** 2
    return m


def test_greedy_prefers_closest():
    det = np.array([[0.0, 0.0], [10.0, 0.0]])
    tru = np.array([[9.0, 0.0], [-5.0, 0.0]])
    assert sorted(greedy_match(det, tru, 15)) == [(0, 1), (1, 0)]
    assert greedy_match(det, tru, 0.5) == []
    assert greedy_match(np.empty((0, 2)), tru, 15) == []


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), nd=st.integers(0, 30), nt=st.integers(0, 30))
def test_matching_invariants(seed, nd, nt):
    rng = np.random.default_rng(seed)
    det = rng.uniform(0, 100, (nd, 2))
    tru = rng.uniform(0, 100, (nt, 2))
    pairs = greedy_match(det, tru, 15)
    assert len(pairs) <= min(nd, nt)
    assert len({i for i, _ in pairs}) == len({j for _, j in pairs}) == len(pairs)
    assert all(np.hypot(*(det[i] - tru[j])) <= 15 for i, j in pairs)


def test_score_mask_counts():
    m = np.zeros((100, 100), bool)
    m[10:20, 10:20] = True   # matches
    m[50:60, 50:60] = True   # false positive
    m[90, 90] = True         # debris
    s = score_mask(m, np.array([[14.5, 14.5], [80.0, 20.0]]))
    assert (s.matched, s.false_positive, s.false_negative, s.debris, s.detections) == (1, 1, 1, 1, 2)
    assert s.false_positive + s.matched == s.detections


def test_accuracy():
    assert accuracy(0, 0, 0) == 1.0
    assert accuracy(8, 1, 1) == 0.8


def test_perfect_method():
    spec = SynthSpec(width=600, height=400, n_discrete=15, seed=1)
    img, truth, clean = render(spec)
    d = truth.to_dict()
    s = score_mask(disk_mask(d, img.shape), truth_points(d))
    assert s.false_positive == s.false_negative == 0
    assert accuracy(s.matched, s.false_positive, s.false_negative) == 1.0


def test_void_only_image():
    img, truth, _ = render(SynthSpec(width=800, height=600, n_discrete=0, noise_sigma=2, seed=9))
    cfg = PipelineConfig()
    rows = {r.method: r for r in run_benchmark([(img, truth.to_dict())], ["li_otsu", "otsu"], cfg)}
    assert rows["li_otsu"].total_count == 0 and rows["li_otsu"].empty_space_resistant
    assert rows["otsu"].total_count > 0 and not rows["otsu"].empty_space_resistant


def test_unknown_method():
    with pytest.raises(InvalidInputError):
        segment_with(np.zeros((10, 10), np.uint8), "triangle", PipelineConfig())


def test_corpus_roundtrip(tmp_path):
    for seed in range(2):
        write(SynthSpec(width=600, height=400, n_discrete=10, seed=seed), tmp_path, f"img{seed}")
    rows = benchmark_corpus(tmp_path, ["li_otsu", "yen"])
    assert [r.method for r in rows] == ["li_otsu", "yen"]
    assert all(0 <= r.accuracy <= 1 for r in rows)
    assert rows[0].accuracy == 1.0
    table = format_table(rows)
    assert table.splitlines()[0].split()[0] == "method" and "100.00%" in table
    assert to_csv(rows).splitlines()[0].startswith("method,false_positive")


def test_corpus_without_truth(tmp_path):
    write(SynthSpec(width=300, height=300, n_discrete=2, seed=0), tmp_path, "a")
    (tmp_path / "a.truth.json").unlink()
    with pytest.raises(InvalidInputError):
        load_corpus(tmp_path)
    with pytest.raises(InvalidInputError):
        load_corpus(tmp_path / "nothing")
