"""Dependence coefficients for two finite random variables.

All quantities are computed from the joint probability table of a pair
``(U, V)`` of finite-valued random variables, which is enough for
stationary Markov chains because the past/future coefficients reduce to
the pair ``(X_0, X_n)``.  Logarithms are natural.
"""

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMarginal, InvalidDistribution, StateSpaceTooLarge

#: Largest number of states per side for which ``alpha_coefficient`` enumerates events.
ALPHA_MAX_STATES = 16

_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscretePMF:
    states: tuple
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or len(probs) != len(self.states):
            raise InvalidDistribution("probs must be a vector with one entry per state")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise InvalidDistribution("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > _SUM_TOL:
            raise InvalidDistribution(f"probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True, eq=False)
class FiniteJoint:
    """Joint law of a pair of finite random variables.

    ``probs[i, j]`` is ``P(U = row_states[i], V = col_states[j])``.
    """

    row_states: tuple
    col_states: tuple
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(self.row_states), len(self.col_states)):
            raise InvalidDistribution(
                f"probs has shape {probs.shape}, expected "
                f"({len(self.row_states)}, {len(self.col_states)})")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise InvalidDistribution("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > _SUM_TOL:
            raise InvalidDistribution(f"probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "row_states", tuple(self.row_states))
        object.__setattr__(self, "col_states", tuple(self.col_states))
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_array(cls, probs):
        probs = np.asarray(probs, dtype=float)
        return cls(tuple(range(probs.shape[0])), tuple(range(probs.shape[1])), probs)

    @property
    def row_marginal(self):
        return self.probs.sum(axis=1)

    @property
    def col_marginal(self):
        return self.probs.sum(axis=0)

    def row_pmf(self):
        return DiscretePMF(self.row_states, self.row_marginal)

    def col_pmf(self):
        return DiscretePMF(self.col_states, self.col_marginal)


def independent_joint(row, col):
    """Product joint of two marginals."""
    return FiniteJoint(row.states, col.states, np.outer(row.probs, col.probs))


def product_joint(first, second):
    """Joint of ``((U1, U2), (V1, V2))`` for independent pairs ``(U1, V1)`` and ``(U2, V2)``."""
    rows = tuple(itertools.product(first.row_states, second.row_states))
    cols = tuple(itertools.product(first.col_states, second.col_states))
    return FiniteJoint(rows, cols, np.kron(first.probs, second.probs))


def product_pmf(first, second):
    states = tuple(itertools.product(first.states, second.states))
    return DiscretePMF(states, np.kron(first.probs, second.probs))


def _centered(joint):
    return joint.probs - np.outer(joint.row_marginal, joint.col_marginal)


def alpha_coefficient(joint):
    """Strong-mixing coefficient ``sup |P(A x B) - P(A)P(B)|`` by exact enumeration.

    Every subset ``A`` of row states is enumerated.  For a fixed ``A`` the
    best column event is the set of columns where the centered mass is
    positive (or, symmetrically, negative), so the column side needs no
    enumeration.  Both sides are limited to :data:`ALPHA_MAX_STATES` states.
    """
    m, n = joint.probs.shape
    if m > ALPHA_MAX_STATES or n > ALPHA_MAX_STATES:
        raise StateSpaceTooLarge(
            f"{m}x{n} joint exceeds the {ALPHA_MAX_STATES}-state enumeration limit; "
            "use beta_coefficient/2 as an upper bound")
    d = _centered(joint)
    # enumerate over the smaller side
    if m > n:
        d = d.T
        m, n = n, m
    masks = (np.arange(1 << m)[:, None] >> np.arange(m)) & 1
    v = masks.astype(float) @ d
    best = np.maximum(np.clip(v, 0, None).sum(axis=1), np.clip(-v, 0, None).sum(axis=1))
    return float(best.max())


def beta_coefficient(joint):
    """Absolute-regularity coefficient at the finest partition."""
    return float(0.5 * np.abs(_centered(joint)).sum())


def rho_coefficient(joint):
    """Maximal correlation: second singular value of ``p_ij / sqrt(p_i. p_.j)``."""
    r, c = joint.row_marginal, joint.col_marginal
    if np.any(r <= 0) or np.any(c <= 0):
        raise DegenerateMarginal("maximal correlation needs strictly positive marginals")
    q = joint.probs / np.sqrt(np.outer(r, c))
    s = np.linalg.svd(q, compute_uv=False)
    if len(s) < 2:
        return 0.0
    return float(np.clip(s[1], 0.0, 1.0))


def info_coefficient(joint):
    """Mutual information ``sum p log(p / (p_i. p_.j))`` with ``0 log 0 = 0``."""
    p = joint.probs
    i, k = np.nonzero(p)
    # a difference of logs survives marginals whose product underflows
    logs = np.log(p[i, k]) - np.log(joint.row_marginal[i]) - np.log(joint.col_marginal[k])
    return float(max(np.sum(p[i, k] * logs), 0.0))


def entropy(pmf):
    p = pmf.probs[pmf.probs > 0]
    return float(max(-np.sum(p * np.log(p)), 0.0))


def write_joint_csv(joint, path):
    """Header row holds column states; first column holds row states."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([""] + [str(s) for s in joint.col_states])
        for state, row in zip(joint.row_states, joint.probs):
            w.writerow([str(state)] + [repr(float(x)) for x in row])


def read_joint_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidDistribution(f"{path}: empty file")
    cols = [_parse_state(s) for s in rows[0][1:]]
    states, probs = [], []
    for row in rows[1:]:
        if not row:
            continue
        states.append(_parse_state(row[0]))
        probs.append([float(x) for x in row[1:]])
    return FiniteJoint(tuple(states), tuple(cols), np.array(probs))


def _parse_state(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text
