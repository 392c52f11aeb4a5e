"""Excursions of the building-block chain away from state 0.

With ``kappa_0 < kappa_1 < ...`` the successive visits of a path to 0,
the excursion sum ``W_n`` is the sum of the path over the open gap
``(kappa_{n-1}, kappa_n)``.  The ``W_n`` are i.i.d. with law
``g[theta* epsilon, theta]``, and over the block length
``I = floor(1 / (theta* epsilon))`` the partial sum of the path and the
sum of the first ``I`` excursion sums differ with probability at most
``3 epsilon``.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import block, limitlaw
from .errors import ForbiddenTransition, NoReturn, PathTooShort
from .rng import as_generator, stream

#: Retries (each doubling the path) before a coupling trial is aborted.
COUPLING_RETRIES = 3

#: Ulp tolerance for snapping ``1 / (theta* epsilon)`` to an integer.
FLOOR_ULPS = 4


@dataclass(frozen=True, eq=False)
class ExcursionDecomposition:
    kappa: np.ndarray
    w_sums: np.ndarray


def decompose(traj):
    """Return times to 0 and the excursion sums between consecutive returns."""
    x = np.asarray(traj, dtype=np.int64)
    if x.size > 1 and np.any(x[:-1] * x[1:] < 0):
        raise ForbiddenTransition("path jumps directly between -1 and 1")
    kappa = np.flatnonzero(x == 0)
    if kappa.size < 2:
        raise NoReturn(f"path visits 0 only {kappa.size} time(s)")
    cs = np.cumsum(x)
    return ExcursionDecomposition(kappa, np.diff(cs[kappa]))


def block_length(params):
    """``floor(1 / (theta* epsilon))``.

    Parameters such as ``1/100`` are not exact in binary64, so the quotient
    can fall a few ulps short of the integer it represents.  A quotient
    within :data:`FLOOR_ULPS` ulps of an integer is taken to be that integer.
    """
    x = (1.0 - params.epsilon) / (params.theta * params.epsilon)
    r = round(x)
    if abs(x - r) <= FLOOR_ULPS * math.ulp(x):
        return int(r)
    return math.floor(x)


def harvest_w(params, count, seed=None):
    """``count`` excursion sums from paths started at a visit to 0.

    Paths begin at 0 (so ``kappa_0 = 0``); by the renewal property at
    returns to 0, segments can be concatenated after dropping the
    unfinished final excursion of each.
    """
    rng = as_generator(seed)
    # mean gap between returns is 1 + theta* eps / theta
    per_step = 1.0 / (1.0 + params.exit_rate / params.theta)
    out = []
    have = 0
    while have < count:
        need = count - have
        length = int(need / per_step * 1.02) + 64
        path = block._run_path(params, length, rng, 0)
        w = decompose(path).w_sums[:need]
        out.append(w)
        have += len(w)
    return np.concatenate(out)[:count]


def w_law_distance(params, trials, seed=None, K=None):
    """TV distance between ``trials`` harvested excursion sums and ``g[theta* eps, theta]``.

    Both laws are truncated at ``K`` (the exact tail beyond ``K`` and any
    empirical values beyond ``K`` count fully toward the distance).
    """
    a, p = params.exit_rate, params.theta
    if K is None:
        K = limitlaw.tail_cutoff(a, p)
    w = harvest_w(params, trials, seed)
    return limitlaw.tv_distance(limitlaw.IntegerPMF.from_samples(w, K),
                                limitlaw.g_pmf(a, p, K))


def coupling_sums(traj, I):
    """``(X_1 + ... + X_I, W_1 + ... + W_I)`` from one path.

    Raises :class:`PathTooShort` if the path ends before ``kappa_I`` or
    before index ``I``.
    """
    x = np.asarray(traj, dtype=np.int64)
    if len(x) <= I:
        raise PathTooShort(f"path of length {len(x)} does not reach index {I}")
    kappa = np.flatnonzero(x == 0)
    if kappa.size < I + 1:
        raise PathTooShort(f"path has {kappa.size} zeros, needs {I + 1}")
    cs = np.cumsum(x)
    sx = int(cs[I] - cs[0])
    sw = int(cs[kappa[I]] - cs[kappa[0]])
    return sx, sw


def coupling_discrepancy(params, trials, seed=None, initial_length=None):
    """Frequency of ``X_1 + ... + X_I != W_1 + ... + W_I`` over independent trials.

    Trial ``k`` uses stream ``(seed, k)``.  Each path starts at length
    ``initial_length`` (default ``4 I``) and is regenerated at double the
    length on :class:`PathTooShort`, at most :data:`COUPLING_RETRIES` times;
    a trial that still fails counts as a discrepancy.
    """
    I = block_length(params)
    length0 = 4 * I if initial_length is None else int(initial_length)
    master = 0 if seed is None else seed
    bad = 0
    for k in range(trials):
        rng = stream(master, k)
        length = length0
        for _ in range(COUPLING_RETRIES + 1):
            try:
                sx, sw = coupling_sums(block.sample_path(params, length, rng), I)
                bad += sx != sw
                break
            except PathTooShort:
                length *= 2
        else:
            bad += 1
    return bad / trials


def write_w_histogram(w, params, path):
    """CSV of ``value, count, empirical, exact`` for harvested excursion sums."""
    w = np.asarray(w, dtype=np.int64)
    values, counts = np.unique(w, return_counts=True)
    a, p = params.exit_rate, params.theta
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["value", "count", "empirical", "exact"])
        for v, c in zip(values, counts):
            exact = 1.0 - a if v == 0 else 0.5 * a * p * (1.0 - p) ** (abs(int(v)) - 1)
            out.writerow([int(v), int(c), repr(c / len(w)), repr(exact)])
