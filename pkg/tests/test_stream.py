import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from oraclebandit.errors import ConfigError, TraceError
from oraclebandit.stream import (SegmentSpec, StreamSpec, complement_draw, generate_stream,
                                 load_trace, write_trace)


def test_uniform_segment_range():
    s = generate_stream(StreamSpec(10, (SegmentSpec(0, 0.0, 5),), seed=7))
    assert len(s) == 5
    assert all(0 <= lab < 10 for lab in s.labels)


def test_degenerate_skew():
    s = generate_stream(StreamSpec(10, (SegmentSpec(1, 1.0, 4, dominant_set=(3,)),), seed=1))
    assert s.labels.tolist() == [3, 3, 3, 3]


def test_same_seed_same_stream():
    spec = StreamSpec(1000, (SegmentSpec(5, 0.9, 500), SegmentSpec(0, 0.0, 200)), seed=99)
    a, b = generate_stream(spec), generate_stream(spec)
    assert np.array_equal(a.labels, b.labels)
    assert a.dominant_sets == b.dominant_sets


def test_dominant_fraction_large_stream():
    s = generate_stream(StreamSpec(1000, (SegmentSpec(5, 0.9, 10**6),), seed=3))
    dom = np.array(s.dominant_sets[0])
    frac = np.isin(s.labels, dom).mean()
    assert abs(frac - 0.9) <= 0.001


def test_dominant_classes_uniform_chi_square():
    s = generate_stream(StreamSpec(1000, (SegmentSpec(5, 0.9, 200_000),), seed=11))
    dom = np.array(s.dominant_sets[0])
    inside = s.labels[np.isin(s.labels, dom)]
    counts = np.array([(inside == d).sum() for d in dom])
    assert stats.chisquare(counts).pvalue > 0.001


def test_non_dominant_uniform_over_complement():
    s = generate_stream(StreamSpec(20, (SegmentSpec(4, 0.5, 200_000),), seed=5))
    dom = set(s.dominant_sets[0])
    outside = np.array([lab for lab in s.labels if lab not in dom])
    counts = np.bincount(outside, minlength=20)
    assert all(counts[d] == 0 for d in dom)
    rest = np.array([counts[k] for k in range(20) if k not in dom])
    assert stats.chisquare(rest).pvalue > 0.001


@settings(max_examples=60, deadline=None, derandomize=True)
@given(st.integers(2, 40).flatmap(
    lambda N: st.tuples(st.just(N), st.sets(st.integers(0, N - 1), min_size=1, max_size=N - 1))))
def test_complement_draw_matches_explicit_list(args):
    N, dom = args
    dom_sorted = np.array(sorted(dom))
    comp = [k for k in range(N) if k not in dom]
    draws = np.arange(len(comp))
    assert complement_draw(dom_sorted, draws).tolist() == comp


@settings(max_examples=25, deadline=None, derandomize=True)
@given(seed=st.integers(0, 2**32 - 1), p=st.floats(0.1, 0.95), n=st.integers(1, 20))
def test_skew_within_three_sigma(seed, p, n):
    L = 20_000
    s = generate_stream(StreamSpec(500, (SegmentSpec(n, p, L),), seed=seed))
    frac = np.isin(s.labels, s.dominant_sets[0]).mean()
    assert abs(frac - p) <= 3 * np.sqrt(p * (1 - p) / L) + 1e-12


def test_total_items_cycles_segments():
    spec = StreamSpec(100, (SegmentSpec(2, 0.9, 30), SegmentSpec(0, 0.0, 20)), seed=0,
                      total_items=110)
    s = generate_stream(spec)
    assert len(s) == 110
    assert [seg.length for seg in s.segments] == [30, 20, 30, 20, 10]
    assert s.segment_ids[-1] == 4


@pytest.mark.parametrize("spec", [
    StreamSpec(10, ()),
    StreamSpec(10, (SegmentSpec(11, 0.5, 5),)),
    StreamSpec(10, (SegmentSpec(2, 1.5, 5),)),
])
def test_invalid_specs(spec):
    with pytest.raises(ConfigError):
        generate_stream(spec)


def test_load_trace_basic(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0,3\n1,3\n2,7")
    s = load_trace(p, num_classes=10)
    assert [(it.index, it.true_label) for it in s] == [(0, 3), (1, 3), (2, 7)]
    assert not s.has_epochs


def test_load_trace_empty(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("")
    assert len(load_trace(p, num_classes=10)) == 0


def test_load_trace_label_out_of_range_names_line(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("0,3\n1,3\n5,12\n")
    with pytest.raises(TraceError, match="line 3"):
        load_trace(p, num_classes=10)


def test_load_trace_parse_error_line(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("#N=10\n0,1\n\n2,x\n")
    with pytest.raises(TraceError, match="line 4"):
        load_trace(p)


def test_header_and_round_trip(tmp_path):
    p = tmp_path / "t.csv"
    write_trace(p, [1, 4, 4, 0], num_classes=6)
    s = load_trace(p)
    assert s.num_classes == 6
    assert s.labels.tolist() == [1, 4, 4, 0]
