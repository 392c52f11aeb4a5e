"""The three-state reversible building-block chain.

States are ``-1, 0, 1`` and matrices are indexed in that order.  A chain
with parameters ``(epsilon, theta)`` sits at 0 with probability
``1 - epsilon`` and makes rare excursions to a single sign:

======  ===================  ==================  ==================
from    to -1                to 0                to 1
======  ===================  ==================  ==================
-1      ``1 - theta``        ``theta``           0
0       ``theta* eps / 2``   ``1 - theta* eps``  ``theta* eps / 2``
1       0                    ``theta``           ``1 - theta``
======  ===================  ==================  ==================

with ``theta* = theta / (1 - epsilon)``.
"""

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import mixing
from .errors import InvalidParams
from .rng import as_generator

STATES = (-1, 0, 1)
_VALUES = np.array(STATES, dtype=float)


@dataclass(frozen=True)
class BlockParams:
    epsilon: float
    theta: float
    theta_star: float = field(init=False)

    def __post_init__(self):
        eps, th = float(self.epsilon), float(self.theta)
        if not (0.0 < eps <= 1.0 / 9.0):
            raise InvalidParams(f"epsilon={eps!r} outside (0, 1/9]")
        if not (0.0 < th <= 1.0 / 9.0):
            raise InvalidParams(f"theta={th!r} outside (0, 1/9]")
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "theta_star", th / (1.0 - eps))

    @property
    def exit_rate(self):
        """Probability ``theta* * epsilon`` of leaving state 0 in one step."""
        return self.theta_star * self.epsilon


def stationary(params):
    eps = params.epsilon
    return np.array([eps / 2, 1.0 - eps, eps / 2])


def make_transition(params):
    eps, th, ts = params.epsilon, params.theta, params.theta_star
    out = ts * eps
    return np.array([
        [1.0 - th, th, 0.0],
        [out / 2, 1.0 - out, out / 2],
        [0.0, th, 1.0 - th],
    ])


def make_joint(params):
    """Joint law of ``(X_0, X_1)``; symmetric with both marginals stationary."""
    eps, th = params.epsilon, params.theta
    corner = (1.0 - th) * eps / 2
    edge = th * eps / 2
    return np.array([
        [corner, edge, 0.0],
        [edge, 1.0 - eps - th * eps, edge],
        [0.0, edge, corner],
    ])


def support_matrices(params):
    """The projections ``A`` (every row stationary) and ``C`` used by the power formula."""
    a = np.tile(stationary(params), (3, 1))
    c = np.array([[0.5, 0.0, -0.5], [0.0, 0.0, 0.0], [-0.5, 0.0, 0.5]])
    return a, c


def _delta(params):
    # (1-theta*)/(1-theta) = 1 - delta
    eps, th = params.epsilon, params.theta
    return th * eps / ((1.0 - eps) * (1.0 - th))


def _scaled_deviation(params, n):
    """``log (1-theta)^n`` and ``(P^n - A) / (1-theta)^n``.

    The scaled matrix is ``r (I - A) + (1 - r) C`` with ``r = (1-delta)^n``,
    so its entries stay bounded however small ``(1-theta)^n`` becomes.
    """
    n = np.asarray(n, dtype=float)
    eps = params.epsilon
    log_y = n * math.log1p(-params.theta)
    a = n * math.log1p(-_delta(params))
    ratio, frac = np.exp(a), -np.expm1(a)
    # entries assembled from nonnegative pieces so that tiny epsilon
    # does not cancel against 1 - epsilon
    i_minus_a = np.array([
        [1.0 - eps / 2, -(1.0 - eps), -eps / 2],
        [-eps / 2, eps, -eps / 2],
        [-eps / 2, -(1.0 - eps), 1.0 - eps / 2],
    ])
    _, c = support_matrices(params)
    return log_y, ratio[..., None, None] * i_minus_a + frac[..., None, None] * c


def n_step_deviation(params, n):
    """``P^n - A`` from the closed form; shape ``(..., 3, 3)`` for array ``n``."""
    log_y, scaled = _scaled_deviation(params, n)
    return np.exp(log_y)[..., None, None] * scaled


def n_step_closed(params, n):
    """``n``-step transition matrix ``z^n I + (1 - z^n) A + (y^n - z^n) C``."""
    if np.any(np.asarray(n) < 1):
        raise InvalidParams("n must be >= 1")
    a, _ = support_matrices(params)
    # entries that vanish at n = 1 can round to -1e-20
    return np.maximum(a + n_step_deviation(params, n), 0.0)


def n_step_joint(params, n):
    """Joint law of ``(X_0, X_n)`` as a :class:`~nonclt.mixing.FiniteJoint`."""
    probs = stationary(params)[:, None] * n_step_closed(params, int(n))
    return mixing.FiniteJoint(STATES, STATES, probs)


def beta_n_exact(params, n):
    """``beta(sigma(X_0), sigma(X_n))`` at the finest partition.

    Equal to ``mixing.beta_coefficient(n_step_joint(params, n))`` but summed
    from the centered closed form, so it keeps full relative precision when
    the coefficient is far below machine epsilon.  Accepts array ``n``.
    """
    out = np.exp(log_beta_n_exact(params, n))
    return float(out) if np.ndim(out) == 0 else out


def log_beta_n_exact(params, n):
    """Natural log of :func:`beta_n_exact`, finite where the coefficient underflows."""
    if np.any(np.asarray(n) < 1):
        raise InvalidParams("n must be >= 1")
    log_y, scaled = _scaled_deviation(params, n)
    pi = stationary(params)
    out = log_y + np.log(0.5 * np.einsum("i,...ij->...", pi, np.abs(scaled)))
    return float(out) if np.ndim(out) == 0 else out


def covariance(params, n):
    """``Cov(X_0, X_n) = epsilon (1 - theta)^n`` (``n = 0`` gives the variance)."""
    if np.any(np.asarray(n) < 0):
        raise InvalidParams("n must be >= 0")
    out = params.epsilon * np.exp(np.asarray(n, dtype=float) * math.log1p(-params.theta))
    return float(out) if np.ndim(out) == 0 else out


def moment_covariance(params, n):
    """``sum_ij i j pi_i p^(n)_ij`` evaluated from the ``n``-step matrices."""
    prod = np.outer(_VALUES, _VALUES) * stationary(params)[:, None]
    out = np.einsum("ij,...ij->...", prod, n_step_closed(params, n))
    return float(out) if np.ndim(out) == 0 else out


def asymptotic_variance(params):
    return params.epsilon * (2.0 / params.theta - 1.0)


def _theta_plus_log1m(theta):
    # theta + log(1 - theta), negative, O(theta^2)
    theta = np.asarray(theta, dtype=float)
    t = np.minimum(theta, 1e-3)
    series = -(t**2 / 2 + t**3 / 3 + t**4 / 4 + t**5 / 5 + t**6 / 6)
    return np.where(theta < 1e-3, series, theta + np.log1p(-theta))


def _x_plus_expm1_neg(x):
    # x + exp(-x) - 1 >= 0, O(x^2)
    x = np.asarray(x, dtype=float)
    # clamp so the unused branch cannot overflow
    x_s = np.minimum(x, 1e-2)
    series = x_s**2 / 2 - x_s**3 / 6 + x_s**4 / 24 - x_s**5 / 120 + x_s**6 / 720
    return np.where(x < 1e-2, series, x + np.expm1(-x))


def partial_sum_variance(params, n):
    """``E[(X_1 + ... + X_n)^2] = n * u_n``.

    Uses ``sum_{l<n} (n - l) y^l = N / theta^2`` with the numerator ``N``
    split into pieces that are each accurate for tiny ``theta`` and huge ``n``.
    Accepts array ``n``.
    """
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 1):
        raise InvalidParams("n must be >= 1")
    eps, th = params.epsilon, params.theta
    a = -math.log1p(-th)
    na = n_arr * a
    numer = (n_arr * _theta_plus_log1m(th) + _x_plus_expm1_neg(na)
             - th * np.expm1(-na))
    total = numer / th**2
    out = eps * (2.0 * total - n_arr)
    return float(out) if np.ndim(out) == 0 else out


def _geometric(rng, q, size=None):
    """Run lengths ``>= 1`` with exit probability ``q`` per step, as floats.

    Drawn by inversion from exponentials so that ``q`` far below ``1e-16``
    still produces correct (astronomically long) runs.
    """
    q = np.asarray(q, dtype=float)
    e = rng.standard_exponential(q.shape if size is None else size)
    return 1.0 + np.floor(e / -np.log1p(-q))


def sample_path(params, length, seed=None):
    """Stationary path ``X_0, ..., X_{length-1}`` as an ``int8`` array.

    Sampled run by run: a visit to 0 lasts a geometric number of steps with
    exit probability ``theta* epsilon`` and then jumps to a fair random sign;
    a visit to ``+-1`` lasts a geometric number of steps with exit probability
    ``theta`` and then returns to 0.  Memorylessness makes the run containing
    ``X_0`` geometric as well.
    """
    rng = as_generator(seed)
    start = int(rng.choice(3, p=stationary(params))) - 1
    return _run_path(params, int(length), rng, start)


def _run_path(params, length, rng, start):
    if length < 1:
        raise InvalidParams("length must be >= 1")
    out = np.empty(length, dtype=np.int8)
    pos, state = 0, start
    q0, q1 = params.exit_rate, params.theta
    # expected cycle length, used only to size the batches
    cycle = 1.0 / q0 + 1.0 / q1
    while pos < length:
        k = int(min(max(8, 2 * (length - pos) / cycle + 8), 1 << 20))
        zero_runs = _geometric(rng, q0, k)
        exc_runs = _geometric(rng, q1, k)
        signs = rng.integers(0, 2, size=k) * 2 - 1
        if state == 0:
            vals = np.empty(2 * k, dtype=np.int8)
            vals[0::2] = 0
            vals[1::2] = signs
            runs = np.empty(2 * k)
            runs[0::2], runs[1::2] = zero_runs, exc_runs
        else:
            vals = np.empty(2 * k, dtype=np.int8)
            vals[0::2] = state
            vals[1::2] = 0
            # after the first excursion, continue alternating zero / fresh signs
            vals[2::2] = signs[1:]
            runs = np.empty(2 * k)
            runs[0::2], runs[1::2] = exc_runs, zero_runs
        runs = np.minimum(runs, length - pos)
        cum = np.cumsum(runs)
        stop = int(np.searchsorted(cum, length - pos)) + 1
        vals, runs = vals[:stop], runs[:stop]
        chunk = np.repeat(vals, runs.astype(np.int64))
        take = min(len(chunk), length - pos)
        out[pos:pos + take] = chunk[:take]
        pos += take
        state = 0 if vals[-1] != 0 else int(signs[-1])
    return out


def sample_partial_sums(params, n, size, seed=None):
    """Independent draws of ``X_1 + ... + X_n`` for stationary copies of the chain.

    Exact run-by-run simulation vectorized over the copies; the cost grows
    with the number of excursions in the window (about ``n * theta * epsilon``),
    not with ``n``.  Sums are returned as floats so that windows longer than
    ``2**63`` steps are representable.
    """
    rng = as_generator(seed)
    n = float(n)
    state = rng.choice(3, p=stationary(params), size=size).astype(np.int8) - 1
    pos = np.zeros(size)
    total = np.zeros(size)
    active = np.arange(size)
    q0, q1 = params.exit_rate, params.theta
    while active.size:
        s = state[active]
        q = np.where(s == 0, q0, q1)
        run = _geometric(rng, q)
        take = np.minimum(run, n - pos[active])
        total[active] += s * take
        pos[active] += take
        flip = rng.integers(0, 2, size=active.size).astype(np.int8) * 2 - 1
        state[active] = np.where(s == 0, flip, 0)
        active = active[pos[active] < n]
    return total


def partial_sum_cf(params, n, t):
    """Exact ``E exp(i t (X_1 + ... + X_n))`` for the stationary chain.

    Evaluates ``pi D (P D)^(n-1) 1`` with ``D = diag(exp(i t x))`` by repeated
    squaring in extended precision.  The working precision grows with the
    number of digits of ``n`` because the leading eigenvalue of ``P D`` can
    sit within ``1/n`` of 1.  ``t`` may be a scalar or a sequence.
    """
    n = int(n)
    if n < 1:
        raise InvalidParams("n must be >= 1")
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(ts.shape, dtype=complex)
    with mpmath.workdps(30 + len(str(n))):
        p = [[mpmath.mpf(x) for x in row] for row in _exact_transition(params)]
        pi = [mpmath.mpf(x) for x in _exact_stationary(params)]
        for idx, tv in enumerate(ts):
            if tv == 0.0:
                out[idx] = 1.0
                continue
            d = [mpmath.expj(mpmath.mpf(float(tv)) * x) for x in (-1, 0, 1)]
            m = [[p[i][j] * d[j] for j in range(3)] for i in range(3)]
            mp_pow = _matpow(m, n - 1)
            row = [pi[i] * d[i] for i in range(3)]
            val = sum(row[i] * sum(mp_pow[i]) for i in range(3))
            out[idx] = complex(val)
    return out[0] if np.ndim(t) == 0 else out


def _exact_transition(params):
    # same entries as make_transition, with 1 - q formed in extended precision
    eps, th = mpmath.mpf(params.epsilon), mpmath.mpf(params.theta)
    out = eps * th / (1 - eps)
    return [[1 - th, th, 0], [out / 2, 1 - out, out / 2], [0, th, 1 - th]]


def _exact_stationary(params):
    eps = mpmath.mpf(params.epsilon)
    return [eps / 2, 1 - eps, eps / 2]


def _matmul(a, b):
    return [[a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j]
             for j in range(3)] for i in range(3)]


def _matpow(m, k):
    result = [[mpmath.mpf(int(i == j)) for j in range(3)] for i in range(3)]
    base = m
    while k:
        if k & 1:
            result = _matmul(result, base)
        k >>= 1
        if k:
            base = _matmul(base, base)
    return result
