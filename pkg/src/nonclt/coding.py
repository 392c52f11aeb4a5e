"""Injective perturbation coding of a finite base chain.

A base chain ``zeta_k`` on a finite set ``Gamma`` is coded as
``Y_k = f(zeta_k) + v(zeta_k) eta_k`` with ``eta_k`` i.i.d., independent
of the base chain, ``P(eta = -p) = 1 - p`` and ``P(eta = 1 - p) = p``.
When ``(t, z) -> f(t) + v(t) z`` is one-to-one the coded chain generates
the same sigma-fields as the pair ``(zeta_k, eta_k)``, so its information
coefficient equals the base chain's while its marginal entropy grows by
exactly the binary entropy of ``p``.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import block, mixing
from .errors import BudgetTooSmall, InvalidParams
from .rng import as_generator

#: Denominator of the dyadic grid for ``p``.
P_GRID = 1024

#: Two coded values closer than this count as a collision.
COLLISION_TOL = 1e-12


def binary_entropy(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log1p(-p)


def choose_p(g1):
    """Largest ``k/1024 < 1/2`` whose binary entropy is at most ``g1/2``."""
    if not g1 > 0.0:
        raise InvalidParams(f"g1={g1!r} must be positive")
    best = 0
    lo, hi = 1, P_GRID // 2 - 1
    # binary entropy increases on (0, 1/2), so bisect on k
    while lo <= hi:
        mid = (lo + hi) // 2
        if binary_entropy(mid / P_GRID) <= g1 / 2:
            best, lo = mid, mid + 1
        else:
            hi = mid - 1
    if best == 0:
        raise BudgetTooSmall(
            f"g1={g1!r} is below twice the entropy of 1/{P_GRID} "
            f"({2 * binary_entropy(1 / P_GRID)!r})")
    return best / P_GRID


def eta_pmf(p):
    """``eta`` on states ``(-p, 1-p)`` with probabilities ``(1-p, p)``."""
    return mixing.DiscretePMF((-p, 1.0 - p), np.array([1.0 - p, p]))


@dataclass(frozen=True, eq=False)
class CodingSpec:
    base_states: tuple
    f_values: np.ndarray
    v_values: np.ndarray
    p: float

    def __post_init__(self):
        f = np.asarray(self.f_values, dtype=float)
        v = np.asarray(self.v_values, dtype=float)
        k = len(self.base_states)
        if f.shape != (k,) or v.shape != (k,):
            raise InvalidParams("f_values and v_values need one entry per base state")
        if not 0.0 < self.p < 0.5:
            raise InvalidParams(f"p={self.p!r} must lie in (0, 1/2)")
        if np.any(v <= 0) or np.any(v >= 1):
            raise InvalidParams("v values must lie in (0, 1)")
        if len(np.unique(v)) != k:
            raise InvalidParams("v values must be distinct")
        object.__setattr__(self, "base_states", tuple(self.base_states))
        object.__setattr__(self, "f_values", f)
        object.__setattr__(self, "v_values", v)
        object.__setattr__(self, "p", float(self.p))

    def coded_values(self):
        """``tau(t, z)`` as a ``(|Gamma|, 2)`` array with ``z`` in ``(-p, 1-p)``."""
        z = np.array([-self.p, 1.0 - self.p])
        return self.f_values[:, None] + self.v_values[:, None] * z


def injectivity_check(f_values, v_values, p):
    """``(True, None)`` if all coded values differ, else ``(False, witness)``.

    Takes raw arrays so that specs violating the distinct-``v`` rule can
    still be examined.  The witness is ``((t1, z1), (t2, z2))`` as index
    pairs into the base states and ``(-p, 1-p)``.
    """
    f = np.asarray(f_values, dtype=float)
    v = np.asarray(v_values, dtype=float)
    z = np.array([-p, 1.0 - p])
    vals = (f[:, None] + v[:, None] * z).ravel()
    order = np.argsort(vals, kind="stable")
    gaps = np.diff(vals[order])
    close = np.flatnonzero(gaps <= COLLISION_TOL)
    if close.size == 0:
        return True, None
    a, b = order[close[0]], order[close[0] + 1]
    return False, (divmod(int(a), 2), divmod(int(b), 2))


def random_spec(base_states, f_values, p, seed=None, max_tries=100):
    """Spec with ``v`` drawn uniformly from ``(0, 1)``, redrawn until the code is injective."""
    rng = as_generator(seed)
    k = len(base_states)
    for _ in range(max_tries):
        v = rng.uniform(0.0, 1.0, size=k)
        if np.any(v <= 0) or len(np.unique(v)) != k:
            continue
        ok, _ = injectivity_check(f_values, v, p)
        if ok:
            return CodingSpec(base_states, f_values, v, p)
    raise InvalidParams(f"no injective v found in {max_tries} draws")


def coded_joint(base_joint, spec):
    """Joint of ``(Y_0, Y_n)`` from the joint of ``(zeta_0, zeta_n)``.

    States are the coded values ``tau(t, z)``; ``eta_0`` and ``eta_n`` are
    independent of each other and of the base pair.
    """
    q = eta_pmf(spec.p).probs
    probs = np.kron(base_joint.probs, np.outer(q, q))
    index = {s: i for i, s in enumerate(spec.base_states)}
    codes = spec.coded_values()
    rows = tuple(float(codes[index[s], z]) for s in base_joint.row_states for z in range(2))
    cols = tuple(float(codes[index[s], z]) for s in base_joint.col_states for z in range(2))
    return mixing.FiniteJoint(rows, cols, probs)


@dataclass
class CodingInfoReport:
    base_info: float
    coded_info: float
    base_entropy: float
    coded_entropy: float
    eta_entropy: float

    @property
    def info_gap(self):
        return abs(self.coded_info - self.base_info)

    @property
    def entropy_gap(self):
        return abs(self.coded_entropy - (self.base_entropy + self.eta_entropy))


def coding_info_report(base_joint, spec, tol=1e-10):
    """Information and entropy of the coded pair against the base pair."""
    ok, witness = injectivity_check(spec.f_values, spec.v_values, spec.p)
    if not ok:
        raise InvalidParams(f"coding is not injective: {witness}")
    cj = coded_joint(base_joint, spec)
    rep = CodingInfoReport(
        base_info=mixing.info_coefficient(base_joint),
        coded_info=mixing.info_coefficient(cj),
        base_entropy=mixing.entropy(base_joint.row_pmf()),
        coded_entropy=mixing.entropy(cj.row_pmf()),
        eta_entropy=binary_entropy(spec.p),
    )
    if rep.info_gap > tol:
        raise AssertionError(f"coded information differs from base by {rep.info_gap!r}")
    return rep


def draw_eta(p, size, rng):
    return np.where(rng.random(size) < p, 1.0 - p, -p)


def code_path(spec, base_path, seed=None, eta=None):
    """``Y_k = f(zeta_k) + v(zeta_k) eta_k`` along a base path.

    ``base_path`` holds base states (any array shape).  ``eta`` may be
    supplied; otherwise it is drawn i.i.d. from ``seed``.
    """
    index = {s: i for i, s in enumerate(spec.base_states)}
    base = np.asarray(base_path)
    uniq, inv = np.unique(base, return_inverse=True)
    try:
        lookup = np.array([index[s.item() if hasattr(s, "item") else s] for s in uniq],
                          dtype=np.int64)
    except KeyError as exc:
        raise InvalidParams(f"base path holds unknown state {exc.args[0]!r}") from None
    idx = lookup[inv].reshape(base.shape)
    if eta is None:
        eta = draw_eta(spec.p, idx.shape, as_generator(seed))
    return spec.f_values[idx] + spec.v_values[idx] * np.asarray(eta, dtype=float)


def default_base(epsilon=1 / 9, theta=1 / 9):
    """The building block as a base chain with ``f`` the identity on ``{-1, 0, 1}``."""
    params = block.BlockParams(epsilon, theta)
    return params, block.STATES, np.array(block.STATES, dtype=float)


@dataclass
class Claim7Report:
    n: int
    trials: int
    mean_v_eta: float
    se_v_eta: float
    cross: float
    se_cross: float
    normalized_second: float
    se_second: float
    var_y: float
    var_x: float
    se_var_diff: float


def claim7_probe(spec, base_paths, seed=None):
    """Moment identities of the coding from ``trials`` base paths of length ``n``.

    ``base_paths`` has shape ``(trials, n)`` and holds base states.  With
    ``X_k = f(zeta_k)`` and ``V_k = v(zeta_k) eta_k`` this estimates
    ``E V_k``, ``E[(sum X)(sum V)]``, ``E[(n^-1/2 sum V)^2]`` and the
    variances of ``sum Y`` and ``sum X``, each with a standard error.
    """
    base_paths = np.asarray(base_paths)
    trials, n = base_paths.shape
    rng = as_generator(seed)
    eta = draw_eta(spec.p, base_paths.shape, rng)
    y = code_path(spec, base_paths, eta=eta)
    x = code_path(spec, base_paths, eta=np.zeros(base_paths.shape))
    v = y - x
    sx, sv, sy = x.sum(1), v.sum(1), y.sum(1)
    prod = sx * sv
    second = sv**2 / n
    # Var(sum Y) - Var(sum X) = E[(sum V)^2] + 2 E[(sum X)(sum V)]
    diff = sv**2 + 2 * prod
    return Claim7Report(
        n=n, trials=trials,
        # the V_k are uncorrelated across k because eta is centered and independent
        mean_v_eta=float(v.mean()), se_v_eta=float(v.std() / math.sqrt(v.size)),
        cross=float(prod.mean()), se_cross=float(prod.std() / math.sqrt(trials)),
        normalized_second=float(second.mean()), se_second=float(second.std() / math.sqrt(trials)),
        var_y=float(sy.var()), var_x=float(sx.var()),
        se_var_diff=float(diff.std() / math.sqrt(trials)),
    )


def block_base_paths(params, n, trials, seed=None):
    """``trials`` independent stationary block paths of length ``n``."""
    rng = as_generator(seed)
    p = block.make_transition(params)
    cum = np.cumsum(p, axis=1)
    out = np.empty((trials, n), dtype=np.int64)
    state = rng.choice(3, p=block.stationary(params), size=trials)
    out[:, 0] = state
    for k in range(1, n):
        u = rng.random(trials)
        state = np.minimum((u[:, None] > cum[state]).sum(1), 2)
        out[:, k] = state
    return out - 1
