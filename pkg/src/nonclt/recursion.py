"""Level parameters of the superposed chain.

Starting from level 0 with ``eps = theta = 1/9`` and ``I = h = 1``, each
level ``j >= 1`` is built from its predecessors and the envelope ``phi``:

* ``B_j = j * sum_{u<j} h_u^2 eps_u / theta_u``;
* ``eps*_j = min(eps_{j-1}/2, 9^-j / I_{j-1}, 2^-j / (9 h_{j-1}^2), 1/9)``;
* a tangent line to ``phi`` with slope at least ``-min(1/9, theta_{j-1}/2, 2^-j/B_j)``
  and value at most ``log eps*_j`` at 0, lowered by ``j + 2``;
* ``eps_j = exp(L_j(0))``, ``theta_j = -L_j'``, ``theta*_j = theta_j/(1 - eps_j)``,
  ``I_j = floor(1/(theta*_j eps_j))``, ``h_j = max(3 h_{j-1}, sqrt(B_j theta_j / eps_j))``.
"""

import csv
import math
from dataclasses import asdict, dataclass, field

from . import envelope as envelope_mod
from .block import BlockParams
from .errors import HorizonTooSmall, NumericalUnderflow, ValidationFailure
from .excursion import block_length

#: Relative slack on identities that hold with equality at a boundary.
REL_TOL = 1e-12


@dataclass(frozen=True)
class LevelParams:
    j: int
    B: float
    eps_star: float
    t: float
    line_intercept: float
    line_slope: float
    eps: float
    theta: float
    theta_star: float
    I: int
    h: float

    @property
    def block(self):
        return BlockParams(self.eps, self.theta)

    def line(self, x):
        return self.line_intercept + self.line_slope * x


LEVEL0 = LevelParams(j=0, B=0.0, eps_star=1 / 9, t=0.0, line_intercept=math.log(1 / 9),
                     line_slope=-1 / 9, eps=1 / 9, theta=1 / 9, theta_star=1 / 8, I=1, h=1.0)


def next_level(history, env):
    """Level ``len(history)`` from ``history = [LEVEL0, level_1, ...]``."""
    j = len(history)
    prev = history[-1]
    B = j * math.fsum(lv.h**2 * lv.eps / lv.theta for lv in history)
    eps_star = min(prev.eps / 2, 9.0**-j / prev.I, 2.0**-j / (9 * prev.h**2), 1 / 9)
    s = min(1 / 9, prev.theta / 2, 2.0**-j / B)
    if eps_star <= 0.0:
        raise NumericalUnderflow(f"eps*_{j} underflows", achieved=j - 1)
    t, icpt, slope = envelope_mod.tangent_select(env, math.log(eps_star), s)
    icpt -= j + 2
    eps = math.exp(icpt)
    theta = -slope
    if eps == 0.0 or eps < 2.2250738585072014e-308:
        raise NumericalUnderflow(f"eps_{j} = exp({icpt!r}) underflows binary64", achieved=j - 1)
    theta_star = theta / (1.0 - eps)
    if not math.isfinite(1.0 / (theta_star * eps)):
        raise NumericalUnderflow(f"1/(theta*_{j} eps_{j}) overflows binary64", achieved=j - 1)
    I = block_length(BlockParams(eps, theta))
    h = max(3 * prev.h, math.sqrt(B * theta / eps))
    return LevelParams(j, B, eps_star, t, icpt, slope, eps, theta, theta_star, I, h)


@dataclass
class LevelRun:
    """Generated levels (``levels[0]`` is level 0) and why generation stopped."""

    levels: list
    stop_reason: str = ""
    stop_detail: str = ""
    error: Exception = None

    @property
    def depth(self):
        return len(self.levels) - 1


def generate_levels(env, max_levels=None):
    """Levels until ``max_levels``, the horizon runs out or binary64 underflows."""
    levels = [LEVEL0]
    while max_levels is None or len(levels) <= max_levels:
        try:
            levels.append(next_level(levels, env))
        except HorizonTooSmall as exc:
            return LevelRun(levels, "horizon", str(exc), exc)
        except NumericalUnderflow as exc:
            exc.achieved = len(levels) - 1
            return LevelRun(levels, "underflow", str(exc), exc)
    return LevelRun(levels, "max_levels", "")


@dataclass
class CheckResult:
    check: str
    level: int
    passed: bool
    lhs: float = float("nan")
    rhs: float = float("nan")


@dataclass
class ValidationReport:
    results: list = field(default_factory=list)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def failures(self):
        return [r for r in self.results if not r.passed]

    def raise_on_failure(self):
        bad = self.failures()
        if bad:
            r = bad[0]
            raise ValidationFailure(
                f"check {r.check} fails at level {r.level}: {r.lhs!r} vs {r.rhs!r}",
                check=r.check, level=r.level)


def _le(a, b):
    return a <= b + REL_TOL * abs(b)


def validate_levels(levels, raise_on_failure=True):
    """Check every level-parameter identity; ``levels[0]`` must be level 0.

    Each result is named after the property it tests: ``2D(a)`` through
    ``2D(g)`` for the summary properties, ``C1`` through ``C5`` for the
    defining inequalities, plus ``floor`` for the block-length identity.
    """
    rep = ValidationReport()

    def add(check, j, ok, lhs=float("nan"), rhs=float("nan")):
        rep.results.append(CheckResult(check, j, bool(ok), float(lhs), float(rhs)))

    sum_eps = sum_h2eps = 0.0
    for j in range(1, len(levels)):
        lv, pv = levels[j], levels[j - 1]
        # (a) ranges
        add("2D(a) eps in (0,1/9]", j, 0 < lv.eps <= 1 / 9, lv.eps, 1 / 9)
        add("2D(a) theta in (0,1/9]", j, 0 < lv.theta <= 1 / 9, lv.theta, 1 / 9)
        add("2D(a) theta* in (0,1/8]", j, 0 < lv.theta_star <= 1 / 8, lv.theta_star, 1 / 8)
        add("2D(a) I >= 72", j, lv.I >= 72, lv.I, 72)
        add("2D(a) t > 1", j, lv.t > 1, lv.t, 1)
        add("2D(a) eps = exp(L(0))", j,
            abs(lv.eps - math.exp(lv.line_intercept)) <= REL_TOL * lv.eps,
            lv.eps, math.exp(lv.line_intercept))
        add("2D(a) theta = -L'", j, lv.theta == -lv.line_slope, lv.theta, -lv.line_slope)
        add("2D(a) theta* = theta/(1-eps)", j,
            abs(lv.theta_star - lv.theta / (1 - lv.eps)) <= REL_TOL * lv.theta_star,
            lv.theta_star, lv.theta / (1 - lv.eps))
        # (b), (c) monotonicity
        add("2D(b) eps decreasing", j, lv.eps < pv.eps, lv.eps, pv.eps)
        add("2D(b) theta decreasing", j, lv.theta < pv.theta, lv.theta, pv.theta)
        add("2D(c) theta* decreasing", j, lv.theta_star < pv.theta_star, lv.theta_star, pv.theta_star)
        add("2D(c) I increasing", j, lv.I > pv.I, lv.I, pv.I)
        # (d)
        # theta/theta* = 1 - eps exactly; below eps ~ 1e-16 the stored ratio
        # rounds to 1, so the strict inequality is checked as 1 - ratio = eps > 0
        # alongside the stored theta* identity above
        add("2D(d) theta/theta* < 1", j, lv.eps > 0 and (lv.theta / lv.theta_star <= 1),
            1 - lv.eps, 1)
        prod = lv.theta_star * lv.eps * lv.I
        add("2D(d) theta* eps I <= 1", j, _le(prod, 1.0), prod, 1.0)
        add("floor theta* eps I > 1 - theta* eps", j,
            prod > (1 - lv.theta_star * lv.eps) * (1 - REL_TOL), prod, 1 - lv.theta_star * lv.eps)
        # (e) theta/h strictly decreasing
        add("2D(e) theta/h decreasing", j, lv.theta / lv.h < pv.theta / pv.h,
            lv.theta / lv.h, pv.theta / pv.h)
        # defining inequalities
        add("C1 eps < eps*", j, lv.eps < lv.eps_star, lv.eps, lv.eps_star)
        add("C1 eps* <= eps_prev/2", j, _le(lv.eps_star, pv.eps / 2), lv.eps_star, pv.eps / 2)
        add("C1 eps <= 9^-j", j, lv.eps <= 9.0**-j, lv.eps, 9.0**-j)
        bound = min(pv.theta / 2, 2.0**-j / lv.B)
        add("C2 theta <= min(theta_prev/2, 2^-j/B)", j, _le(lv.theta, bound), lv.theta, bound)
        ratio = lv.h**2 * lv.eps / lv.theta
        add("C3 h^2 eps/theta >= B", j, _le(lv.B, ratio), ratio, lv.B)
        if j >= 2:
            add("2D(g) B > j", j, lv.B > j, lv.B, j)
        add("C4 h >= 3 h_prev", j, lv.h >= 3 * pv.h, lv.h, 3 * pv.h)
        h2eps = lv.h**2 * lv.eps
        add("C5 h^2 eps <= 2^-j", j, _le(h2eps, 2.0**-j), h2eps, 2.0**-j)
        # (f) cumulative sums
        sum_eps += lv.eps
        sum_h2eps += h2eps
        add("2D(f) sum eps <= 1/8", j, sum_eps <= 1 / 8, sum_eps, 1 / 8)
        add("2D(f) sum h^2 eps <= 1 - 2^-J", j, _le(sum_h2eps, 1 - 2.0**-j),
            sum_h2eps, 1 - 2.0**-j)
    if raise_on_failure:
        rep.raise_on_failure()
    return rep


_COLUMNS = ("j", "B", "eps_star", "t", "line_intercept", "line_slope",
            "eps", "theta", "theta_star", "I", "h")


def level_table(levels):
    """Header and rows: the nine parameters plus derived check values."""
    header = _COLUMNS + ("theta_star_eps_I", "h2_eps", "theta_over_h")
    rows = []
    for lv in levels:
        row = asdict(lv)
        rows.append([row[c] for c in _COLUMNS]
                    + [lv.theta_star * lv.eps * lv.I, lv.h**2 * lv.eps, lv.theta / lv.h])
    return header, rows


def write_levels_csv(levels, path):
    header, rows = level_table(levels)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else str(x) for x in row])
