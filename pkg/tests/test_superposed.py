import math
from collections import Counter

import numpy as np
import pytest

from nonclt import block, envelope, recursion, superposed
from nonclt.errors import BoundViolation, InvalidParams, ScaleRatioViolation, ValidationFailure


def hand_level(j, h, eps=1 / 9, theta=1 / 9):
    return recursion.LevelParams(j=j, B=1.0, eps_star=eps, t=2.0, line_intercept=math.log(eps),
                                 line_slope=-theta, eps=eps, theta=theta,
                                 theta_star=theta / (1 - eps), I=72, h=float(h))


@pytest.fixture(scope="module")
def run4():
    xi = envelope.preset_log_rates("stretched-exp", 10**4)
    env = envelope.build_envelope(xi)
    return xi, env, recursion.generate_levels(env).levels


@pytest.fixture(scope="module")
def hand_config():
    return superposed.SuperposedConfig((hand_level(1, 1), hand_level(2, 3)), validate=False)


def test_config_requires_two_levels(run4):
    _, _, levels = run4
    with pytest.raises(InvalidParams):
        superposed.SuperposedConfig(levels[:2])
    cfg = superposed.SuperposedConfig(levels)
    assert cfg.J == 3
    assert all(lv.j >= 1 for lv in cfg.levels)


def test_config_validates_levels():
    with pytest.raises(ValidationFailure):
        superposed.SuperposedConfig((hand_level(1, 1), hand_level(2, 3)))


def test_encoding_examples():
    assert superposed.encode_state([0, 0, 0], [1, 3, 9]) == 0
    assert superposed.encoding_injective([1, 3, 9])
    ys, codes = superposed.all_encodings([1, 3, 9])
    assert len(np.unique(codes)) == 27
    np.testing.assert_array_equal(codes, ys @ np.array([1, 3, 9]))
    with pytest.raises(ScaleRatioViolation):
        superposed.encode_state([1, -1, 0], [1, 2, 4])


def test_encoding_injective_ten_levels():
    assert superposed.encoding_injective(3.0 ** np.arange(10))
    assert superposed.encoding_injective(np.cumprod(np.full(10, 3.7)))


def test_encoding_injective_generated(run4):
    _, _, levels = run4
    assert superposed.encoding_injective([lv.h for lv in levels[1:]])


def test_hand_sample_values(hand_config):
    s = superposed.sample(hand_config, 5000, seed=1)
    allowed = {a + b for a in (-1, 0, 1) for b in (-3, 0, 3)}
    assert set(np.unique(s.combined).tolist()) <= allowed
    np.testing.assert_array_equal(s.combined, hand_config.scales @ s.level_paths)
    for path in s.level_paths:
        assert not np.any(path[:-1].astype(int) * path[1:] < 0)


def test_hand_sample_mean_and_variance(hand_config):
    x = superposed.sample(hand_config, 400_000, seed=2).combined
    var = superposed.stationary_variance(hand_config.levels)
    assert var == pytest.approx(10 / 9)
    # batch means absorb the serial correlation
    bm = x.reshape(200, -1).mean(1)
    assert abs(x.mean()) <= 3 * bm.std(ddof=1) / math.sqrt(len(bm))
    bv = (x**2).reshape(200, -1).mean(1)
    assert abs(bv.mean() - var) <= 3 * bv.std(ddof=1) / math.sqrt(len(bv))


def test_sample_deterministic(run4):
    cfg = superposed.SuperposedConfig(run4[2], master_seed=5)
    a = superposed.sample(cfg, 2000)
    b = superposed.sample(cfg, 2000)
    np.testing.assert_array_equal(a.combined, b.combined)


def test_pair_swap_reversibility(hand_config):
    x = superposed.sample(hand_config, 300_000, seed=3).combined
    pairs = Counter(zip(x[:-1].tolist(), x[1:].tolist()))
    for (s, t), c in pairs.most_common(20):
        assert abs(c - pairs[(t, s)]) <= 4 * math.sqrt(c)


def test_second_moment_finite(run4):
    assert superposed.stationary_variance(run4[2][1:]) <= 1


def test_beta_bound_report(run4):
    xi, env, levels = run4
    rep = superposed.beta_bound_report(levels, xi, env)
    assert rep.passed
    assert np.all(rep.bound <= rep.geometric * (1 + 1e-12))
    assert np.all(rep.bound < rep.zeta)
    assert len(rep.n) == len(xi)


def test_beta_bound_report_survives_underflow():
    # zeta_n and the deepest level's coefficient both underflow well before n = 1e6
    xi = envelope.preset_log_rates("stretched-exp", 10**6)
    env = envelope.build_envelope(xi)
    levels = recursion.generate_levels(env).levels
    rep = superposed.beta_bound_report(levels, xi, env)
    assert rep.passed
    assert rep.zeta[-1] == 0.0 and np.isfinite(rep.log_bound[-1])
    assert np.all(rep.log_bound < rep.xi)


def test_beta_bound_report_detects_violation(run4):
    xi, env, levels = run4
    fake = xi - 1000.0
    with pytest.raises(BoundViolation):
        superposed.beta_bound_report(levels, fake, env)
    assert not superposed.beta_bound_report(levels, fake, env, strict=False).passed
    with pytest.raises(InvalidParams):
        superposed.beta_bound_report(levels, xi, env, n_max=len(xi) + 1)


def test_beta_bound_csv(run4, tmp_path):
    xi, env, levels = run4
    rep = superposed.beta_bound_report(levels, xi, env, n_max=10)
    path = tmp_path / "beta.csv"
    rep.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,beta_sum,six_eps_bound,zeta,log_beta_sum,log_zeta,per_level_ok"
    assert len(lines) == 11


def product_oracle(first, second, n):
    # nine-state chain built directly from the Kronecker transition matrix
    p = np.kron(block.make_transition(first), block.make_transition(second))
    pi = np.kron(block.stationary(first), block.stationary(second))
    joint = pi[:, None] * np.linalg.matrix_power(p, n)
    return 0.5 * np.abs(joint - np.outer(pi, pi)).sum()


@pytest.mark.parametrize("n", [1, 3, 10, 40])
def test_product_beta_subadditive(n):
    a, b = block.BlockParams(1 / 9, 1 / 9), block.BlockParams(1 / 20, 1 / 50)
    pb = superposed.product_beta(a, b, n)
    assert pb == pytest.approx(product_oracle(a, b, n), abs=1e-14)
    assert pb <= block.beta_n_exact(a, n) + block.beta_n_exact(b, n) + 1e-12


def test_window_probability_small_n(run4):
    rows = superposed.dissipation_probe(run4[2], n_list=[4], trials=10**4, seed=1)
    assert rows[0].value > 0.99


def test_window_probability_dominates_atoms():
    rng = np.random.default_rng(0)
    x = rng.integers(-20, 21, size=5000) * 0.7
    p = superposed.max_window_probability(x)
    _, counts = np.unique(x, return_counts=True)
    assert p >= counts.max() / len(x)


def test_window_probability_bruteforce():
    rng = np.random.default_rng(1)
    x = rng.normal(size=3000) * 3
    centers = np.arange(math.floor(x.min() / 0.1) - 20, math.ceil(x.max() / 0.1) + 21) * 0.1
    brute = max(np.mean((x > c - 1) & (x < c + 1)) for c in centers)
    assert superposed.max_window_probability(x) == pytest.approx(brute, abs=1e-12)


def test_dissipation_trend(run4):
    levels = run4[2]
    trials = 2 * 10**4
    rows = superposed.dissipation_probe(levels, trials=trials, seed=4)
    assert [r.n for r in rows] == [lv.I for lv in levels[1:]]
    vals = np.array([r.value for r in rows])
    se = np.array([r.stderr for r in rows])
    assert np.all(vals[1:] <= vals[:-1] + 2 * np.hypot(se[1:], se[:-1]))


def test_exact_levels_below_budget():
    lv = hand_level(1, 1, eps=1 / 20, theta=1 / 20)
    x, gauss = superposed.sample_normalized_sums([lv, hand_level(2, 3)], 100, 10, seed=0,
                                                 scale=1.0)
    assert gauss == []
    assert np.all(x == np.round(x))


def test_gaussian_levels_reported(run4):
    levels = run4[2]
    _, gauss = superposed.sample_normalized_sums(levels, levels[-1].I, 100, 0, 1.0)
    assert gauss == [1, 2]


def test_lower_level_second_moment(run4):
    levels = run4[2]
    for j in (2, 3):
        assert superposed.lower_level_second_moment(levels, j) <= 2 / j


def test_single_level_sublimit_converges(run4):
    levels = run4[2]
    d = [superposed.sublimit_distance_exact(levels, j, only={j}) for j in (1, 2, 3)]
    assert d[2] < d[1] < d[0]
    assert d[2] < 0.01


def test_exact_cf_matches_monte_carlo(run4):
    levels = run4[2]
    t = np.array([0.5, 1.0, 2.0])
    exact = superposed.sublimit_cf_exact(levels, 2, t, only={2})
    x, gauss = superposed.sample_normalized_sums(levels, levels[2].I, 40_000, 9,
                                                 levels[2].theta / levels[2].h, only={2})
    assert gauss == []
    emp = np.array([np.mean(np.cos(tv * x)) for tv in t])
    assert np.all(np.abs(emp - exact) <= 4 / math.sqrt(len(x)))


def test_sublimit_monte_carlo_weakly_decreasing(run4):
    levels = run4[2]
    trials = 2 * 10**4
    d2, _ = superposed.sublimit_probe(levels, 2, trials=trials, seed=3)
    d3, _ = superposed.sublimit_probe(levels, 3, trials=trials, seed=3)
    assert d3 <= d2 + 3 / math.sqrt(trials)


def test_variance_growth_along_block_lengths():
    # stated for generated configurations: Var(S_n)/n at I_J is at least ten times that at I_2
    levels = recursion.generate_levels(
        envelope.build_envelope(envelope.preset_log_rates("stretched-exp", 10**6))).levels
    g2 = superposed.variance_growth(levels, levels[2].I)
    gJ = superposed.variance_growth(levels, levels[-1].I)
    assert gJ >= 10 * g2


def test_probe_csv(tmp_path):
    rows = [superposed.ProbeRow(2, 100, 0.5, 0.01, [1]), superposed.ProbeRow(3, 200, 0.4, 0.01)]
    path = tmp_path / "probe.csv"
    superposed.write_probe_csv(rows, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "j,n,value,stderr,gaussian_levels"
    assert lines[1].endswith(",1")

