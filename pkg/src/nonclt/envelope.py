"""Convex minorant of log-rates and tangent-line selection.

Given rates ``0 < zeta_n < 1`` for ``n = 1..N`` with log-rates
``xi_n = log zeta_n``, the envelope ``phi`` is the largest convex function
on ``[0, N]`` with ``phi(0) = 0`` and negative slopes lying below every
``(n, xi_n)``.  It is the lower convex hull of ``(0, 0)`` and the points
``(n, xi_n)``, cut off where the hull stops decreasing and extended flat
from there.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEnvelope, HorizonTooSmall, RateOutOfRange

PRESETS = ("stretched-exp", "poly-log")


@dataclass(frozen=True, eq=False)
class RateSequence:
    """Rates ``zeta_1, ..., zeta_N``; ``values[0]`` is ``zeta_1``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise RateOutOfRange("rates must be a nonempty vector")
        bad = ~((v > 0) & (v < 1))
        if bad.any():
            n = int(np.flatnonzero(bad)[0]) + 1
            raise RateOutOfRange(f"zeta_{n} = {v[n - 1]!r} is outside (0, 1)")
        object.__setattr__(self, "values", v)
        _trend_warning(v)

    @property
    def horizon(self):
        return len(self.values)


def _trend_warning(v):
    # advisory only: rates need only tend to 0 subexponentially
    k = max(1, len(v) // 10)
    if len(v) >= 10 and not (v[-1] < v[0] and v[-k:].min() < 0.5 * v[:k].min()):
        warnings.warn("rate sequence does not look like it decreases toward 0", stacklevel=3)


def preset_log_rates(name, N, alpha=0.5):
    """``xi_n`` for ``n = 1..N`` of a named preset, computed in log space.

    ``stretched-exp`` gives ``zeta_n = exp(-n^alpha)`` with ``0 < alpha < 1``;
    ``poly-log`` gives ``zeta_n = exp(-n / log(n + 2))``.
    """
    n = np.arange(1, int(N) + 1, dtype=float)
    if name == "stretched-exp":
        if not 0.0 < alpha < 1.0:
            raise RateOutOfRange(f"alpha={alpha!r} must lie in (0, 1)")
        return -(n**alpha)
    if name == "poly-log":
        return -n / np.log(n + 2.0)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESETS}")


def preset_rates(name, N, alpha=0.5):
    return RateSequence(np.exp(preset_log_rates(name, N, alpha)))


def read_rates(path):
    """One rate per line; blank lines and ``#`` comments are ignored."""
    vals = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                vals.append(float(line))
    return RateSequence(np.array(vals))


def log_rates(rates):
    if not isinstance(rates, RateSequence):
        rates = RateSequence(rates)
    return np.log(rates.values)


@dataclass(frozen=True, eq=False)
class Envelope:
    """Piecewise-linear convex ``phi`` on ``[0, horizon]``.

    ``xs[0] = 0`` and ``ys[0] = 0``; ``slopes[k]`` is the slope on
    ``[xs[k], xs[k+1]]``.  Past ``xs[-1]`` the envelope is flat.
    """

    xs: np.ndarray
    ys: np.ndarray
    horizon: int

    @property
    def slopes(self):
        return np.diff(self.ys) / np.diff(self.xs)

    @property
    def intercepts(self):
        """Value at 0 of the line carrying each segment."""
        return self.ys[:-1] - self.slopes * self.xs[:-1]

    @property
    def breakpoints(self):
        return list(zip(self.xs.tolist(), self.ys.tolist()))

    def __call__(self, x):
        out = np.interp(np.asarray(x, dtype=float), self.xs, self.ys)
        return float(out) if out.ndim == 0 else out


def _cross(xs, ys, i, j, k):
    return (xs[j] - xs[i]) * (ys[k] - ys[i]) - (ys[j] - ys[i]) * (xs[k] - xs[i])


def _chain(xs, ys):
    # Andrew's monotone chain, lower half; collinear points are dropped
    keep = []
    for k in range(len(xs)):
        while len(keep) >= 2 and _cross(xs, ys, keep[-2], keep[-1], k) <= 0:
            keep.pop()
        keep.append(k)
    return np.array(keep, dtype=np.int64)


def lower_hull(xs, ys, max_passes=64):
    """Indices of the lower convex hull vertices of points sorted by ``x``.

    Vertices with a non-left turn are removed in vectorized passes, which
    finish in one pass when the data are already convex.  If the passes do
    not settle, the survivors go through a monotone chain.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    idx = np.arange(len(xs))
    for _ in range(max_passes):
        if len(idx) < 3:
            return idx
        x, y = xs[idx], ys[idx]
        cross = (x[1:-1] - x[:-2]) * (y[2:] - y[:-2]) - (y[1:-1] - y[:-2]) * (x[2:] - x[:-2])
        # a vertex on or above the chord of its neighbours is not a hull
        # vertex, whatever else is removed in the same pass
        bad = cross <= 0
        if not bad.any():
            return idx
        keep = np.ones(len(idx), dtype=bool)
        keep[1:-1] = ~bad
        idx = idx[keep]
    sub = _chain(xs[idx], ys[idx])
    return idx[sub]


def build_envelope(xi):
    """Envelope of ``(0, 0)`` and ``(n, xi[n-1])`` for ``n = 1..N``."""
    xi = np.asarray(xi, dtype=float)
    if xi.size == 0:
        raise DegenerateEnvelope("no log-rates given")
    if np.any(~np.isfinite(xi)) or np.any(xi >= 0):
        raise RateOutOfRange("log-rates must be finite and negative")
    xs = np.arange(len(xi) + 1, dtype=float)
    ys = np.concatenate([[0.0], xi])
    idx = lower_hull(xs, ys)
    hx, hy = xs[idx], ys[idx]
    slopes = np.diff(hy) / np.diff(hx)
    neg = np.flatnonzero(slopes < 0)
    if neg.size == 0:
        raise DegenerateEnvelope("hull has no segment with negative slope")
    # slopes are nondecreasing, so the negative ones form a prefix
    last = int(neg[-1]) + 1
    return Envelope(hx[:last + 1], hy[:last + 1], len(xi))


def minimal_slope_bound(xi):
    """``r = min_n xi_n / n`` over the horizon."""
    xi = np.asarray(xi, dtype=float)
    return float(np.min(xi / np.arange(1, len(xi) + 1)))


def tangent_select(env, D, s):
    """Midpoint of the first hull segment whose line has slope in ``[-s, 0)`` and value ``<= D`` at 0.

    Returns ``(t, intercept, slope)``.  Midpoints avoid the kinks of ``phi``,
    so the returned line is the unique tangent at ``t``.
    """
    if not D < 0 or not s > 0:
        raise ValueError("need D < 0 and s > 0")
    slopes = env.slopes
    icpt = env.intercepts
    ok = np.flatnonzero((slopes >= -s) & (slopes < 0) & (icpt <= D))
    if ok.size == 0:
        raise HorizonTooSmall(
            f"no envelope segment within horizon {env.horizon} has slope >= {-s!r} "
            f"and intercept <= {D!r}")
    k = int(ok[0])
    t = 0.5 * (env.xs[k] + env.xs[k + 1])
    return float(t), float(icpt[k]), float(slopes[k])

