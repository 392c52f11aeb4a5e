"""The integer laws ``g[a, p]`` and the compound Poisson-Laplace limit law.

``g[a, p]`` puts mass ``1 - a`` at 0 and ``(a/2) p (1-p)^(n-1)`` at each
of ``n`` and ``-n`` for ``n >= 1``.  If ``a -> 0``, ``p -> 0`` and
``J a -> 1``, the scaled sum ``p (Z_1 + ... + Z_J)`` of ``J`` independent
``g[a, p]`` variables converges to the law of ``eta_1 + ... + eta_N``
with ``N ~ Poisson(1)`` and standard Laplace ``eta_k``, whose
characteristic function is ``exp(1/(1 + t^2) - 1)``.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParams
from .rng import as_generator

#: Default cap on the tail mass dropped when truncating ``g[a, p]``.
TAIL_CAP = 1e-10

#: Default symmetric grid for characteristic-function comparisons.
DEFAULT_T_GRID = np.round(np.arange(-50, 51) * 0.1, 12)


@dataclass(frozen=True, eq=False)
class IntegerPMF:
    """Probabilities on ``-K..K`` plus the mass of ``|k| > K``."""

    support: np.ndarray
    probs: np.ndarray
    tail_mass: float = 0.0

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=float)
        if support.shape != probs.shape:
            raise InvalidParams("support and probs must have the same shape")
        if np.any(probs < 0) or self.tail_mass < 0:
            raise InvalidParams("probabilities must be nonnegative")
        if abs(probs.sum() + self.tail_mass - 1.0) > 1e-12:
            raise InvalidParams("stored mass plus tail mass must equal 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", float(self.tail_mass))

    def __getitem__(self, k):
        idx = np.searchsorted(self.support, k)
        if idx < len(self.support) and self.support[idx] == k:
            return float(self.probs[idx])
        return 0.0

    @classmethod
    def from_samples(cls, samples, K):
        """Empirical law of integer samples; values beyond ``K`` go to the tail."""
        samples = np.asarray(samples)
        support = np.arange(-K, K + 1)
        inside = np.abs(samples) <= K
        counts = np.bincount((samples[inside] + K).astype(np.int64), minlength=2 * K + 1)
        n = len(samples)
        return cls(support, counts / n, float((~inside).sum()) / n)


@dataclass(frozen=True, eq=False)
class CFGrid:
    t_values: np.ndarray
    values: np.ndarray

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re", "im"])
            for t, v in zip(self.t_values, self.values):
                w.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])


def _check_ap(a, p):
    if not (0.0 < a < 1.0) or not (0.0 < p < 1.0):
        raise InvalidParams(f"need 0 < a < 1 and 0 < p < 1, got a={a!r}, p={p!r}")


def tail_cutoff(a, p, cap=TAIL_CAP):
    """Smallest ``K`` with tail mass ``a (1-p)^K <= cap``."""
    _check_ap(a, p)
    if a <= cap:
        return 1
    return max(1, math.ceil(math.log(cap / a) / math.log1p(-p)))


def g_pmf(a, p, K=None):
    """Truncated ``g[a, p]`` on ``-K..K``; ``K`` defaults to :func:`tail_cutoff`."""
    _check_ap(a, p)
    if K is None:
        K = tail_cutoff(a, p)
    if K < 1:
        raise InvalidParams("K must be >= 1")
    n = np.arange(1, K + 1)
    side = 0.5 * a * p * np.exp((n - 1) * math.log1p(-p))
    probs = np.concatenate([side[::-1], [1.0 - a], side])
    tail = a * math.exp(K * math.log1p(-p))
    # absorb rounding so that stored + tail is 1 to the last bit that matters
    tail = max(0.0, 1.0 - probs.sum()) if abs(1.0 - probs.sum() - tail) < 1e-13 else tail
    return IntegerPMF(np.arange(-K, K + 1), probs, tail)


def upsilon(c):
    """``e^c - (1 + c)``, accurate for small ``|c|``."""
    c = np.asarray(c, dtype=complex)
    small = np.abs(c) < 1e-3
    series = c**2 / 2 + c**3 / 6 + c**4 / 24 + c**5 / 120
    return np.where(small, series, np.expm1(c) - c)


def g_cf(a, p, t):
    """Characteristic function of ``g[a, p]`` in closed form.

    ``1 + a ((p/2) [1/(p - i t + u(-i t)) + 1/(p + i t + u(i t))] - 1)``
    with ``u(c) = e^c - (1 + c)``; each denominator equals ``e^(-+i t) - (1 - p)``.
    """
    _check_ap(a, p)
    t = np.asarray(t, dtype=float)
    it = 1j * t
    d_minus = p - it + upsilon(-it)
    d_plus = p + it + upsilon(it)
    out = 1.0 + a * (0.5 * p * (1.0 / d_minus + 1.0 / d_plus) - 1.0)
    return complex(out) if out.ndim == 0 else out


def g_cf_series(pmf, t):
    """Direct sum ``sum_k e^(i t k) g(k)`` over the stored support."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.exp(1j * np.outer(t, pmf.support)) @ pmf.probs


def p1sl_cf(t):
    """``exp(1/(1 + t^2) - 1)``."""
    t = np.asarray(t, dtype=float)
    out = np.exp(1.0 / (1.0 + t * t) - 1.0)
    return float(out) if out.ndim == 0 else out


def _poisson1(rng, count):
    # inversion by sequential search; mean 1 keeps the loop short
    u = rng.random(count)
    n = np.zeros(count, dtype=np.int64)
    prob = math.exp(-1.0)
    cdf = np.full(count, prob)
    k = 0
    active = u > cdf
    while active.any():
        k += 1
        prob /= k
        n[active] = k
        cdf[active] += prob
        active &= u > cdf
        if k > 40:
            break
    return n


def p1sl_sample(count, seed=None):
    """Draws from the compound Poisson(1)-Laplace law.

    ``N`` by sequential inversion, Laplace terms by inverse CDF.
    """
    rng = as_generator(seed)
    n = _poisson1(rng, count)
    total = int(n.sum())
    u = rng.random(total) - 0.5
    lap = -np.sign(u) * np.log1p(-2.0 * np.abs(u))
    owner = np.repeat(np.arange(count), n)
    return np.bincount(owner, weights=lap, minlength=count)


def lemma42_distance(a, p, J, t_grid=DEFAULT_T_GRID):
    """``max_t |g_cf(a, p, t p)^J - p1sl_cf(t)|`` over ``t_grid``."""
    _check_ap(a, p)
    if int(J) < 1:
        raise InvalidParams("J must be >= 1")
    t = np.asarray(t_grid, dtype=float)
    phi = g_cf(a, p, t * p)
    # power via log-modulus and angle keeps J in the millions stable
    powered = np.exp(int(J) * np.log(np.asarray(phi, dtype=complex)))
    return float(np.max(np.abs(powered - p1sl_cf(t))))


def cf_distance(samples, t_grid=DEFAULT_T_GRID, target=p1sl_cf):
    """Sup over ``t_grid`` of ``|empirical CF - target CF|``."""
    t = np.asarray(t_grid, dtype=float)
    x = np.asarray(samples, dtype=float)
    emp = np.array([np.mean(np.exp(1j * tv * x)) for tv in t])
    return float(np.max(np.abs(emp - target(t))))


def tv_distance(first, second):
    """Total variation between two :class:`IntegerPMF` (tails counted as disjoint mass)."""
    lo = min(first.support[0], second.support[0])
    hi = max(first.support[-1], second.support[-1])
    dense = np.zeros((2, hi - lo + 1))
    dense[0, first.support - lo] = first.probs
    dense[1, second.support - lo] = second.probs
    return 0.5 * (np.abs(dense[0] - dense[1]).sum() + first.tail_mass + second.tail_mass)
