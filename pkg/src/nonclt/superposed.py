"""The truncated superposed chain ``X_k = sum_j h_j X^(j)_k``.

The level chains ``X^(1), ..., X^(J)`` are independent building blocks
with the parameters produced by :mod:`nonclt.recursion`.  Because
``h_{j+1} >= 3 h_j`` the weighted sum determines every level state, so
``X`` is itself a stationary reversible Markov chain.

Partial sums over windows of ``I_j`` steps are far too long to simulate
step by step.  :func:`sample_normalized_sums` simulates a level exactly,
excursion by excursion, when the window holds a manageable number of
excursions, and otherwise draws a Gaussian with the exact variance of
that level's partial sum.  The Gaussian is only ever used for levels
whose window contains more than ``exact_budget`` expected excursions.
"""

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import block, limitlaw, mixing
from .errors import BoundViolation, InvalidParams, ScaleRatioViolation
from .recursion import LEVEL0, validate_levels
from .rng import stream

#: Expected excursions per window above which a level is drawn as a Gaussian.
EXACT_BUDGET = 2000.0


@dataclass(frozen=True, eq=False)
class SuperposedConfig:
    """Levels ``1..J`` (level 0 excluded) plus Monte Carlo settings.

    With ``validate=False`` only the scale ratios are checked, which allows
    hand-built levels in experiments.
    """

    levels: tuple
    master_seed: int = 0
    trials: int = 10**4
    path_length: int = 10**4
    validate: bool = True

    def __post_init__(self):
        levels = tuple(lv for lv in self.levels if lv.j >= 1)
        if len(levels) < 2:
            raise InvalidParams(f"need at least 2 levels, got {len(levels)}")
        if self.validate:
            validate_levels([LEVEL0, *levels])
        else:
            check_scales([lv.h for lv in levels])
        object.__setattr__(self, "levels", levels)

    @property
    def J(self):
        return len(self.levels)

    @property
    def scales(self):
        return np.array([lv.h for lv in self.levels])


@dataclass(frozen=True, eq=False)
class SuperposedSample:
    level_paths: np.ndarray
    combined: np.ndarray


def check_scales(h):
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0):
        raise ScaleRatioViolation("scales must be positive")
    if np.any(h[1:] < 3 * h[:-1]):
        k = int(np.flatnonzero(h[1:] < 3 * h[:-1])[0])
        raise ScaleRatioViolation(f"h[{k + 1}]/h[{k}] = {h[k + 1] / h[k]!r} < 3")
    return h


def encode_state(y, h):
    """``sum_j h_j y_j`` for a level-state vector ``y`` in ``{-1, 0, 1}^J``."""
    h = check_scales(h)
    y = np.asarray(y)
    if y.shape[-1] != len(h):
        raise InvalidParams("y and h have different lengths")
    return y @ h


def all_encodings(h):
    """Encodings of all ``3^J`` level-state vectors, in lexicographic order."""
    h = check_scales(h)
    ys = np.array(list(itertools.product((-1, 0, 1), repeat=len(h))))
    return ys, ys @ h


def encoding_injective(h):
    _, codes = all_encodings(h)
    return len(np.unique(codes)) == len(codes)


def sample(config, length, seed=None):
    """One stationary path of the truncated chain; level ``j`` uses stream ``(seed, j)``."""
    master = config.master_seed if seed is None else seed
    paths = np.stack([block.sample_path(lv.block, length, stream(master, lv.j))
                      for lv in config.levels])
    combined = config.scales @ paths.astype(float)
    return SuperposedSample(paths, combined)


def stationary_variance(levels):
    """``Var X_0 = sum_j h_j^2 eps_j``."""
    return math.fsum(lv.h**2 * lv.eps for lv in levels)


# --- mixing bound -----------------------------------------------------------

@dataclass
class BetaBoundReport:
    """Mixing bound per ``n``; the ``log_`` fields stay finite where the values underflow."""

    n: np.ndarray
    log_bound: np.ndarray
    log_geometric: np.ndarray
    xi: np.ndarray
    per_level_ok: np.ndarray

    @property
    def bound(self):
        return np.exp(self.log_bound)

    @property
    def geometric(self):
        return np.exp(self.log_geometric)

    @property
    def zeta(self):
        return np.exp(self.xi)

    @property
    def passed(self):
        return bool(np.all(self.log_bound < self.xi) and np.all(self.per_level_ok))

    def rows(self):
        return zip(self.n, self.bound, self.geometric, self.zeta, self.log_bound, self.xi,
                   self.per_level_ok)

    HEADER = ("n", "beta_sum", "six_eps_bound", "zeta", "log_beta_sum", "log_zeta",
              "per_level_ok")

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.HEADER)
            for row in self.rows():
                w.writerow([int(row[0]), *(repr(float(x)) for x in row[1:6]), int(row[6])])


def beta_bound_report(levels, xi, env, n_max=None, strict=True):
    """``sum_j beta_j(n)`` against ``sum_j 6 eps_j (1-theta_j)^n`` and ``zeta_n``.

    ``xi`` are the log-rates (``xi[n-1] = log zeta_n``) and ``env`` their
    envelope.  Also checks ``6 eps_j exp(-theta_j n) <= e^-j exp(phi(n))``
    for every level.  Everything is compared in log space, since ``zeta_n``
    and the coefficients underflow long before the inequalities get tight.
    With ``strict`` a failed inequality raises :class:`BoundViolation`.
    """
    levels = [lv for lv in levels if lv.j >= 1]
    xi = np.asarray(xi, dtype=float)
    n_max = len(xi) if n_max is None else int(n_max)
    if n_max > len(xi):
        raise InvalidParams("n_max exceeds the rate horizon")
    n = np.arange(1, n_max + 1)
    phi = env(n.astype(float))
    log_bound = np.full(n_max, -np.inf)
    log_geo = np.full(n_max, -np.inf)
    per_level = np.ones(n_max, dtype=bool)
    for lv in levels:
        bp = lv.block
        log_bound = np.logaddexp(log_bound, block.log_beta_n_exact(bp, n))
        log_geo = np.logaddexp(log_geo, math.log(6 * lv.eps) + n * math.log1p(-lv.theta))
        per_level &= math.log(6 * lv.eps) - lv.theta * n <= -lv.j + phi
    rep = BetaBoundReport(n, log_bound, log_geo, xi[:n_max], per_level)
    if strict:
        over = log_bound > log_geo + 1e-12
        if np.any(over):
            k = int(np.argmax(over))
            raise BoundViolation(f"beta sum exceeds the 6 eps (1-theta)^n bound at n={n[k]}")
        if not rep.passed:
            k = int(np.argmax(~((log_bound < rep.xi) & per_level)))
            raise BoundViolation(f"mixing bound fails at n={n[k]}")
    return rep


def product_beta(first, second, n):
    """Exact ``beta`` of the pair ``((X0, Y0), (Xn, Yn))`` for two independent blocks."""
    return mixing.beta_coefficient(
        mixing.product_joint(block.n_step_joint(first, n), block.n_step_joint(second, n)))


# --- partial sums -----------------------------------------------------------

def expected_excursions(params, n):
    return float(n) * params.exit_rate


def level_sums(params, n, trials, rng, exact_budget=EXACT_BUDGET):
    """Draws of ``X_1 + ... + X_n`` for one level and whether they are exact."""
    if expected_excursions(params, n) <= exact_budget:
        return block.sample_partial_sums(params, n, trials, rng), True
    sd = math.sqrt(block.partial_sum_variance(params, n))
    return rng.normal(0.0, sd, size=trials), False


def sample_normalized_sums(levels, n, trials, seed, scale, only=None,
                           exact_budget=EXACT_BUDGET):
    """Draws of ``scale * sum_k X_k`` over a window of ``n`` steps.

    Level ``j`` uses stream ``(seed, j)``.  ``only`` restricts the sum to the
    given level indices.  Returns the draws and the set of levels that
    were replaced by a Gaussian.
    """
    total = np.zeros(trials)
    gaussian = []
    for lv in levels:
        if lv.j < 1 or (only is not None and lv.j not in only):
            continue
        s, exact = level_sums(lv.block, n, trials, stream(seed, lv.j), exact_budget)
        total += (scale * lv.h) * s
        if not exact:
            gaussian.append(lv.j)
    return total, gaussian


def max_window_probability(values, width=2.0, step=0.1):
    """Largest fraction of ``values`` in an open window ``(c - width/2, c + width/2)``.

    Centers run over the grid ``step * Z``; only centers within reach of a
    sample can matter, so those are the only ones evaluated.
    """
    v = np.sort(np.asarray(values, dtype=float))
    half = width / 2
    lo = np.floor((v - half) / step).astype(np.int64)
    span = int(math.ceil(width / step)) + 1
    centers = np.unique((lo[:, None] + np.arange(span + 1)).ravel()) * step
    counts = np.searchsorted(v, centers + half, "left") - np.searchsorted(v, centers - half, "right")
    return float(counts.max()) / len(v)


@dataclass
class ProbeRow:
    j: int
    n: int
    value: float
    stderr: float
    gaussian_levels: list = field(default_factory=list)


def dissipation_probe(levels, n_list=None, trials=10**4, seed=0, width=2.0, step=0.1,
                      exact_budget=EXACT_BUDGET):
    """Max window probability of ``n^(-1/2) S_n`` for each ``n`` (default ``I_1, ..., I_J``).

    Row ``k`` uses stream ``(seed, 1, k)`` as its seed root.
    """
    levels = [lv for lv in levels if lv.j >= 1]
    if n_list is None:
        n_list = [lv.I for lv in levels]
    rows = []
    for k, n in enumerate(n_list):
        root = stream(seed, 1, k).integers(2**63)
        x, gauss = sample_normalized_sums(levels, n, trials, root, 1.0 / math.sqrt(n),
                                          exact_budget=exact_budget)
        p = max_window_probability(x, width, step)
        j = next((lv.j for lv in levels if lv.I == n), 0)
        rows.append(ProbeRow(j, int(n), p, math.sqrt(p * (1 - p) / trials), gauss))
    return rows


def sublimit_probe(levels, j, t_grid=limitlaw.DEFAULT_T_GRID, trials=10**4, seed=0,
                   only=None, exact_budget=EXACT_BUDGET):
    """Sup-distance between the CF of ``(theta_j/h_j) sum_{k<=I_j} X_k`` and ``exp(1/(1+t^2)-1)``.

    Uses the full truncated chain unless ``only`` names a subset of levels.
    """
    lv = _level(levels, j)
    root = stream(seed, 2, j).integers(2**63)
    x, gauss = sample_normalized_sums(levels, lv.I, trials, root, lv.theta / lv.h, only,
                                      exact_budget)
    return limitlaw.cf_distance(x, t_grid), gauss


def sublimit_cf_exact(levels, j, t_grid=limitlaw.DEFAULT_T_GRID, only=None):
    """Exact CF of ``(theta_j/h_j) sum_{k<=I_j} X_k`` on ``t_grid``.

    The levels are independent, so the CF is the product of the level CFs
    at ``t theta_j h_u / h_j``.  Each factor is real and even in ``t``.
    """
    lv = _level(levels, j)
    t = np.asarray(t_grid, dtype=float)
    ut, inv = np.unique(np.abs(t), return_inverse=True)
    out = np.ones(len(ut))
    for u in levels:
        if u.j < 1 or (only is not None and u.j not in only):
            continue
        out *= block.partial_sum_cf(u.block, lv.I, ut * lv.theta * u.h / lv.h).real
    return out[inv]


def sublimit_distance_exact(levels, j, t_grid=limitlaw.DEFAULT_T_GRID, only=None):
    t = np.asarray(t_grid, dtype=float)
    return float(np.max(np.abs(sublimit_cf_exact(levels, j, t, only) - limitlaw.p1sl_cf(t))))


def lower_level_second_moment(levels, j):
    """``E[((theta_j/h_j) sum_{k<=I_j} sum_{u<j} h_u X^(u)_k)^2]`` in closed form."""
    lv = _level(levels, j)
    c = lv.theta / lv.h
    return math.fsum(c**2 * u.h**2 * block.partial_sum_variance(u.block, lv.I)
                     for u in levels if 1 <= u.j < j)


def variance_growth(levels, n):
    """``Var(S_n)/n`` of the truncated chain from the level closed forms."""
    return math.fsum(lv.h**2 * block.partial_sum_variance(lv.block, n)
                     for lv in levels if lv.j >= 1) / n


def _level(levels, j):
    for lv in levels:
        if lv.j == j:
            return lv
    raise InvalidParams(f"no level {j}")


def write_probe_csv(rows, path, header=("j", "n", "value", "stderr", "gaussian_levels")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([r.j, r.n, repr(r.value), repr(r.stderr),
                        " ".join(str(g) for g in r.gaussian_levels)])
