import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonclt import block, excursion, limitlaw
from nonclt.errors import ForbiddenTransition, NoReturn, PathTooShort


def test_decompose_examples():
    d = excursion.decompose([0, 0, 0, 0])
    np.testing.assert_array_equal(d.kappa, [0, 1, 2, 3])
    np.testing.assert_array_equal(d.w_sums, [0, 0, 0])
    d = excursion.decompose([0, 1, 1, 0])
    np.testing.assert_array_equal(d.kappa, [0, 3])
    np.testing.assert_array_equal(d.w_sums, [2])
    d = excursion.decompose([0, -1, 0, 1, 1, 1, 0])
    np.testing.assert_array_equal(d.kappa, [0, 2, 6])
    np.testing.assert_array_equal(d.w_sums, [-1, 3])


def test_decompose_ignores_leading_segment():
    d = excursion.decompose([1, 1, 0, -1, 0])
    np.testing.assert_array_equal(d.kappa, [2, 4])
    np.testing.assert_array_equal(d.w_sums, [-1])


def test_decompose_errors():
    with pytest.raises(NoReturn):
        excursion.decompose([1, 1, 0, 1])
    with pytest.raises(ForbiddenTransition):
        excursion.decompose([0, 1, -1, 0])


@st.composite
def valid_paths(draw):
    # alternate zero runs with monochromatic excursions
    n = draw(st.integers(2, 12))
    out = []
    for _ in range(n):
        out += [0] * draw(st.integers(1, 4))
        if draw(st.booleans()):
            out += [draw(st.sampled_from([-1, 1]))] * draw(st.integers(1, 5))
    return np.array(out + [0])


@settings(max_examples=200, deadline=None)
@given(valid_paths())
def test_decompose_invariants(path):
    d = excursion.decompose(path)
    assert np.all(path[d.kappa] == 0)
    assert len(d.kappa) == np.sum(path == 0)
    assert len(d.w_sums) == len(d.kappa) - 1
    for n in range(1, len(d.kappa)):
        seg = path[d.kappa[n - 1] + 1:d.kappa[n]]
        assert d.w_sums[n - 1] == seg.sum()
        assert len(set(seg.tolist())) <= 1
    again = excursion.decompose(path.copy())
    np.testing.assert_array_equal(again.w_sums, d.w_sums)


@pytest.mark.parametrize("eps,theta,I", [(1 / 9, 1 / 9, 72), (1 / 100, 1 / 100, 9900),
                                         (1 / 20, 1 / 20, 380)])
def test_block_length_examples(eps, theta, I):
    assert excursion.block_length(block.BlockParams(eps, theta)) == I


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-12, 1 / 9), st.floats(1e-12, 1 / 9))
def test_block_length_floor(eps, theta):
    params = block.BlockParams(eps, theta)
    I = excursion.block_length(params)
    assert I >= 72
    q = params.theta_star * eps
    assert (1 - q) * (1 - 1e-12) <= q * I <= 1 + 1e-12
    smaller = block.BlockParams(eps / 2, theta)
    assert excursion.block_length(smaller) >= I


def test_w_law_matches_g():
    params = block.BlockParams(1 / 20, 1 / 20)
    m = 100_000
    w = excursion.harvest_w(params, m, seed=4)
    assert len(w) == m
    pmf = limitlaw.IntegerPMF.from_samples(w, 400)
    g = limitlaw.g_pmf(params.exit_rate, params.theta, 400)
    assert limitlaw.tv_distance(pmf, g) < 0.01
    a = params.exit_rate
    assert abs(np.mean(w == 0) - (1 - a)) <= 3 * math.sqrt(a * (1 - a) / m)
    for n in (1, 2, 3):
        pos, neg = np.sum(w == n), np.sum(w == -n)
        # binomial split of pos + neg at one half
        assert abs(pos - neg) <= 4 * math.sqrt(pos + neg)


def test_w_law_distance_wrapper():
    params = block.BlockParams(1 / 9, 1 / 9)
    assert excursion.w_law_distance(params, 100_000, seed=1) < 0.01


def test_w_independence_diagnostic():
    params = block.BlockParams(1 / 9, 1 / 20)
    w = excursion.harvest_w(params, 200_000, seed=9).astype(float)
    w -= w.mean()
    r1 = np.dot(w[:-1], w[1:]) / np.dot(w, w)
    assert abs(r1) <= 4 / math.sqrt(len(w))


def test_harvest_deterministic():
    params = block.BlockParams(1 / 9, 1 / 9)
    np.testing.assert_array_equal(excursion.harvest_w(params, 5000, seed=2),
                                  excursion.harvest_w(params, 5000, seed=2))


def test_coupling_sums_all_zero_path():
    assert excursion.coupling_sums(np.zeros(100, dtype=int), 72) == (0, 0)


def test_coupling_sums_too_short():
    with pytest.raises(PathTooShort):
        excursion.coupling_sums(np.zeros(50, dtype=int), 72)
    path = np.zeros(100, dtype=int)
    path[1:40] = 1
    with pytest.raises(PathTooShort):
        excursion.coupling_sums(path, 72)


@st.composite
def quiet_tail_paths(draw):
    # X_0 = 0 and X_I = 0, with zeros after I long enough to hold kappa_I
    I = draw(st.integers(3, 40))
    body = draw(valid_paths())[:I]
    body = np.concatenate([body, np.zeros(max(0, I - len(body)), dtype=int)])
    body[0] = 0
    # a sign run cut at I must close before the quiet tail
    nonzero = int(np.count_nonzero(body))
    tail = np.zeros(nonzero + 1 + draw(st.integers(0, 5)), dtype=int)
    return I, np.concatenate([body, tail])


@settings(max_examples=300, deadline=None)
@given(quiet_tail_paths())
def test_coupling_agrees_on_quiet_paths(case):
    I, path = case
    sx, sw = excursion.coupling_sums(path, I)
    assert sx == sw


def test_coupling_discrepancy_bound():
    params = block.BlockParams(1 / 20, 1 / 20)
    trials = 4000
    freq = excursion.coupling_discrepancy(params, trials, seed=3)
    se = math.sqrt(3 / 20 * (1 - 3 / 20) / trials)
    assert freq <= 3 / 20 + 3 * se


def test_coupling_discrepancy_deterministic_and_trend():
    freqs = []
    for eps in (1 / 9, 1 / 30, 1 / 100):
        params = block.BlockParams(eps, 1 / 20)
        freqs.append(excursion.coupling_discrepancy(params, 1500, seed=8))
    assert freqs[0] > freqs[1] > freqs[2]
    assert excursion.coupling_discrepancy(block.BlockParams(1 / 9, 1 / 20), 300, seed=8) == \
        excursion.coupling_discrepancy(block.BlockParams(1 / 9, 1 / 20), 300, seed=8)


def test_coupling_counts_aborts():
    params = block.BlockParams(1 / 9, 1 / 9)
    # paths of length 1 never reach index I even after doubling three times
    assert excursion.coupling_discrepancy(params, 20, seed=0, initial_length=1) == 1.0


def test_w_histogram_csv(tmp_path):
    params = block.BlockParams(1 / 9, 1 / 9)
    w = excursion.harvest_w(params, 1000, seed=0)
    path = tmp_path / "w.csv"
    excursion.write_w_histogram(w, params, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "value,count,empirical,exact"
    counts = sum(int(line.split(",")[1]) for line in lines[1:])
    assert counts == 1000
