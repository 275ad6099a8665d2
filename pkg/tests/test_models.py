import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from oraclebandit.errors import ConfigError, ControllerError
from oraclebandit.models import (BUILTIN_TEMPLATES, OTHER, CompactProfile, OracleProfile,
                                 SpecializationParams, interpolate_profile, oracle_classify,
                                 oracle_classify_many, specialize, specialized_classify,
                                 specialized_classify_many)

from conftest import three_sigma

A = SpecializationParams(0.9, 0.05, 0.9)
B = SpecializationParams(0.8, 0.15, 0.7)


def _template(table, cost=2.0):
    return CompactProfile("t", cost, 4.0, table)


def test_perfect_oracle(rng):
    o = OracleProfile(1.0, 10.0, 50)
    assert all(oracle_classify(o, 17, rng) == 17 for _ in range(200))
    assert (oracle_classify_many(o, np.full(1000, 17), rng) == 17).all()


def test_forced_confusion(rng):
    o = OracleProfile(0.0, 10.0, 2)
    assert all(oracle_classify(o, 0, rng) == 1 for _ in range(200))


def test_oracle_accuracy_monte_carlo(rng):
    o = OracleProfile(0.68, 10.0, 1000)
    y = oracle_classify_many(o, np.full(10**6, 7), rng)
    assert abs((y == 7).mean() - 0.68) <= 0.0014


def test_scalar_oracle_matches_rate(rng):
    o = OracleProfile(0.68, 10.0, 1000)
    n = 50_000
    hits = sum(oracle_classify(o, 7, rng) == 7 for _ in range(n))
    assert abs(hits / n - 0.68) <= three_sigma(0.68, n)


def test_oracle_errors_uniform_over_other_labels(rng):
    o = OracleProfile(0.5, 10.0, 6)
    y = oracle_classify_many(o, np.full(120_000, 2), rng)
    wrong = np.bincount(y[y != 2], minlength=6)
    assert wrong[2] == 0
    assert stats.chisquare(np.delete(wrong, 2)).pvalue > 0.001


def test_interpolation_examples():
    assert interpolate_profile({5: A}, 1) == A
    assert interpolate_profile({5: A}, 99) == A
    mid = interpolate_profile({5: A, 15: B}, 10)
    assert mid.as_tuple() == pytest.approx((0.85, 0.10, 0.8))
    assert interpolate_profile({5: A, 15: B}, 20) == B


@settings(max_examples=100, deadline=None, derandomize=True)
@given(n=st.floats(0, 40, allow_nan=False))
def test_interpolation_stays_between_neighbours(n):
    table = BUILTIN_TEMPLATES["F2-like"].param_table
    got = interpolate_profile(table, n).as_tuple()
    keys = sorted(table)
    lo = max([k for k in keys if k <= n], default=keys[0])
    hi = min([k for k in keys if k >= n], default=keys[-1])
    for g, a, b in zip(got, table[lo].as_tuple(), table[hi].as_tuple()):
        assert min(a, b) - 1e-12 <= g <= max(a, b) + 1e-12
    if n in table:
        assert got == table[int(n)].as_tuple()


def test_bad_params_rejected():
    with pytest.raises(ConfigError):
        SpecializationParams(0.9, 0.2, 0.5)
    with pytest.raises(ConfigError):
        CompactProfile("x", 1.0, 1.0, {})
    with pytest.raises(ConfigError):
        CompactProfile("x", 1.0, 1.0, {0: A})


def test_specialize_examples():
    t = _template({5: A, 15: B})
    m = specialize(t, range(5), 0.6)
    assert m.params == A
    assert specialize(t, range(5), 0.6) == m
    assert specialize(t, range(10), 0.6).params.as_tuple() == pytest.approx((0.85, 0.1, 0.8))
    with pytest.raises(ControllerError):
        specialize(t, [], 0.6)


def test_perfect_specialist(rng):
    m = specialize(_template({1: SpecializationParams(1, 0, 1)}), {3, 4, 5}, 0.5)
    assert all(specialized_classify(m, 4, rng) == 4 for _ in range(100))
    assert all(specialized_classify(m, 9, rng) == OTHER for _ in range(100))


def test_specialist_rates_monte_carlo(rng):
    m = specialize(_template({1: SpecializationParams(0.8, 0.15, 0.9)}), range(5), 0.5)
    y = specialized_classify_many(m, np.full(10**6, 2), rng)
    assert abs((y == 2).mean() - 0.8) <= 0.0012
    assert abs((y == OTHER).mean() - 0.15) <= 0.0011
    # the rest are confusions inside D, never the true label
    confused = y[(y != 2) & (y != OTHER)]
    assert set(np.unique(confused)) <= {0, 1, 3, 4}


def test_scalar_specialist_agrees_with_vectorised(rng):
    p = SpecializationParams(0.7, 0.2, 0.6)
    m = specialize(_template({1: p}), range(4), 0.5)
    n = 40_000
    ins = [specialized_classify(m, 1, rng) for _ in range(n)]
    outs = [specialized_classify(m, 50, rng) for _ in range(n)]
    assert abs(np.mean(np.array(ins) == 1) - 0.7) <= three_sigma(0.7, n)
    assert abs(np.mean(np.array(ins) == OTHER) - 0.2) <= three_sigma(0.2, n)
    assert abs(np.mean(np.array(outs) == OTHER) - 0.6) <= three_sigma(0.6, n)


def test_singleton_set_sends_confusion_to_other(rng):
    m = specialize(_template({1: SpecializationParams(0.7, 0.1, 0.9)}), {8}, 0.5)
    y = specialized_classify_many(m, np.full(200_000, 8), rng)
    assert set(np.unique(y)) <= {8, OTHER}
    assert abs((y == OTHER).mean() - 0.3) <= three_sigma(0.3, 200_000)


def test_a_out_factor_degrades_rejection(rng):
    m = specialize(_template({1: SpecializationParams(0.9, 0.05, 0.8)}), range(5), 0.9,
                   a_out_factor=0.5)
    assert m.effective_a_out == pytest.approx(0.4)
    y = specialized_classify_many(m, np.full(200_000, 100), rng)
    assert abs((y == OTHER).mean() - 0.4) <= three_sigma(0.4, 200_000)
