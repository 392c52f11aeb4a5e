"""Command-line front end.

Subcommands::

    nonclt block     --epsilon E --theta T --n-max N
    nonclt envelope  [rate options]
    nonclt levels    [rate options]
    nonclt simulate  [rate options] [--trials K]
    nonclt verify    [--config FILE] [rate options] [--trials K]
    nonclt appendix  [--g1 G] [--lag N] [--trials K]

Rate options are ``--preset {stretched-exp,poly-log} [--alpha A]`` or
``--rates FILE`` together with ``--horizon N``.  Reports are CSV files
written atomically to ``--out``, which defaults to ``$NONCLT_OUT`` or
``./nonclt-out``.  ``--svg`` adds line plots when matplotlib is installed.
The exit status is 0 exactly when every check of the subcommand passes.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import block, coding, envelope, recursion, superposed
from .errors import NoncltError

OUT_ENV = "NONCLT_OUT"

PROFILES = {
    "quick": {"trials": 10**4, "horizon": 10**3},
    "full": {"trials": 10**5, "horizon": 10**4},
}


# --- configuration ----------------------------------------------------------

@dataclass
class ExperimentConfig:
    """Settings of a full run.  Load from JSON with :meth:`from_dict`.

    ``rates`` is ``{"preset": name, "alpha": a}`` or ``{"file": path}``;
    ``levels`` is a positive integer or ``"auto-max"``; ``t_grid`` is
    ``{"start": a, "stop": b, "step": s}``; ``n_list`` is a list of window
    lengths for the dissipation probe or ``null`` for ``I_1, ..., I_J``.
    """

    rates: dict = field(default_factory=lambda: {"preset": "stretched-exp", "alpha": 0.5})
    horizon: int = 10**4
    levels: object = "auto-max"
    seed: int = 0
    trials: int = 10**5
    n_list: list = None
    t_grid: dict = field(default_factory=lambda: {"start": -5.0, "stop": 5.0, "step": 0.1})
    output_dir: str = None
    exact_budget: float = superposed.EXACT_BUDGET

    def __post_init__(self):
        for name in ("horizon", "trials"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.levels != "auto-max" and int(self.levels) < 1:
            raise ValueError("levels must be >= 1 or 'auto-max'")
        if "preset" in self.rates:
            if self.rates["preset"] not in envelope.PRESETS:
                raise ValueError(f"unknown preset {self.rates['preset']!r}")
            alpha = self.rates.get("alpha", 0.5)
            if self.rates["preset"] == "stretched-exp" and not 0 < alpha < 1:
                raise ValueError("alpha must lie in (0, 1)")
        elif "file" not in self.rates:
            raise ValueError("rates needs 'preset' or 'file'")
        if self.t_grid["step"] <= 0 or self.t_grid["stop"] < self.t_grid["start"]:
            raise ValueError("bad t_grid")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    def t_values(self):
        g = self.t_grid
        k = int(round((g["stop"] - g["start"]) / g["step"]))
        return np.round(g["start"] + g["step"] * np.arange(k + 1), 12)

    def log_rates(self):
        if "preset" in self.rates:
            return envelope.preset_log_rates(self.rates["preset"], self.horizon,
                                             self.rates.get("alpha", 0.5))
        xi = envelope.log_rates(envelope.read_rates(self.rates["file"]))
        if len(xi) < self.horizon:
            raise ValueError(f"rate file has {len(xi)} values, horizon is {self.horizon}")
        return xi[:self.horizon]


# --- output helpers ---------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows):
    """Write rows atomically: a temp file in the same directory, then rename."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    _atomic_write(path, buf.getvalue())


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _svg(path, series, xlabel, ylabel, logy=False):
    """Line plot of ``{label: (x, y)}``; silently skipped without matplotlib."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; skipping SVG", file=sys.stderr)
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, y) in series.items():
        ax.plot(x, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if logy:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str = ""


def _print_verdicts(verdicts):
    for v in verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'}  {v.name}  {v.detail}")


# --- block ------------------------------------------------------------------

def run_block(epsilon, theta, n_max, out_dir):
    """Matrices, mixing, covariance and variance tables for one building block."""
    params = block.BlockParams(epsilon, theta)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    p = block.make_transition(params)
    lam = block.make_joint(params)
    pi = block.stationary(params)
    a, c = block.support_matrices(params)
    verdicts = []

    rows = []
    for name, m in (("transition", p), ("joint", lam), ("A", a), ("C", c)):
        for i, si in enumerate(block.STATES):
            rows.append([name, si, *m[i]])
    write_csv(os.path.join(out_dir, "block_matrices.csv"),
              ["matrix", "row_state", "to_-1", "to_0", "to_1"], rows)
    verdicts.append(Verdict("rows sum to 1", bool(np.all(np.abs(p.sum(1) - 1) <= 1e-15))))
    verdicts.append(Verdict("detailed balance",
                            bool(np.all(np.abs(pi[:, None] * p - (pi[:, None] * p).T) <= 1e-15))))
    verdicts.append(Verdict("pi P = pi", bool(np.all(np.abs(pi @ p - pi) <= 1e-15))))

    n = np.arange(1, n_max + 1)
    beta = block.beta_n_exact(params, n)
    geo = 6 * params.epsilon * np.exp(n * math.log1p(-params.theta))
    dev = np.abs(block.n_step_deviation(params, n)).max(axis=(1, 2))
    write_csv(os.path.join(out_dir, "block_beta.csv"),
              ["n", "beta", "six_eps_one_minus_theta_n", "max_dev_from_pi"],
              zip(n, beta, geo, dev))
    verdicts.append(Verdict("beta <= 6 eps (1-theta)^n", bool(np.all(beta <= geo))))
    verdicts.append(Verdict("|p_n - pi| <= 2 (1-theta)^n",
                            bool(np.all(dev <= 2 * np.exp(n * math.log1p(-params.theta))))))

    cov = block.covariance(params, n)
    moment = block.moment_covariance(params, n)
    write_csv(os.path.join(out_dir, "block_covariance.csv"),
              ["n", "closed_form", "moment_sum"], zip(n, cov, moment))
    verdicts.append(Verdict("covariance closed form", bool(np.all(np.abs(cov - moment) <= 1e-12))))

    var = np.atleast_1d(block.partial_sum_variance(params, n))
    u = var / n
    lim = block.asymptotic_variance(params)
    write_csv(os.path.join(out_dir, "block_variance.csv"),
              ["n", "partial_sum_variance", "u_n", "asymptotic"],
              ((k, v, uu, lim) for k, v, uu in zip(n, var, u)))
    verdicts.append(Verdict("u_n nondecreasing", bool(np.all(np.diff(u) >= -1e-15 * lim))))
    verdicts.append(Verdict("u_n <= asymptotic", bool(np.all(u <= lim * (1 + 1e-12)))))
    return verdicts


# --- levels and full run ----------------------------------------------------

def build_levels(cfg):
    xi = cfg.log_rates()
    env = envelope.build_envelope(xi)
    max_levels = None if cfg.levels == "auto-max" else int(cfg.levels)
    run = recursion.generate_levels(env, max_levels)
    return xi, env, run


def write_levels(run, out_dir):
    write_csv(os.path.join(out_dir, "levels.csv"), *recursion.level_table(run.levels))
    rep = recursion.validate_levels(run.levels, raise_on_failure=False)
    write_csv(os.path.join(out_dir, "validation.csv"),
              ["check", "level", "passed", "lhs", "rhs"],
              ((r.check, r.level, r.passed, r.lhs, r.rhs) for r in rep.results))
    return rep


def run_full(cfg, out_dir, svg=False):
    """Envelope, levels, mixing bound, dissipation and sublimit probes, and verdicts."""
    os.makedirs(out_dir, exist_ok=True)
    xi, env, run = build_levels(cfg)
    rep = write_levels(run, out_dir)
    levels = run.levels[1:]
    verdicts = [Verdict("levels validate", rep.passed,
                        f"J={run.depth} stop={run.stop_reason}")]
    wanted = 2 if cfg.levels == "auto-max" else max(2, int(cfg.levels))
    if run.depth < wanted:
        exc = run.error or ValueError(f"only {run.depth} levels generated")
        exc.args = (f"{exc} (achieved J={run.depth}, need {wanted})",)
        raise exc

    # (i) centered with finite second moment
    second = superposed.stationary_variance(levels)
    verdicts.append(Verdict("(i) E X0 = 0, E X0^2 = sum h^2 eps <= 1", second <= 1.0,
                            f"E X0^2 = {second!r}"))

    # (ii) mixing bound
    beta = superposed.beta_bound_report(levels, xi, env, strict=False)
    write_csv(os.path.join(out_dir, "beta_vs_zeta.csv"), beta.HEADER, beta.rows())
    verdicts.append(Verdict("(ii) beta_X(n) < zeta_n for n <= N", beta.passed))

    # (iii) dissipation
    rows = superposed.dissipation_probe(levels, cfg.n_list, cfg.trials, cfg.seed,
                                        exact_budget=cfg.exact_budget)
    write_csv(os.path.join(out_dir, "dissipation.csv"),
              ["j", "n", "max_window_prob", "stderr", "gaussian_levels"],
              ((r.j, r.n, r.value, r.stderr, " ".join(map(str, r.gaussian_levels))) for r in rows))
    ok = all(b.value <= a.value + 2 * math.hypot(a.stderr, b.stderr)
             for a, b in zip(rows, rows[1:]))
    verdicts.append(Verdict("(iii) window probability nonincreasing", ok,
                            " ".join(f"{r.value:.4f}" for r in rows)))

    # (iv) subsequential limit
    t = cfg.t_values()
    cf_rows = []
    for lv in levels[1:]:
        mc, gauss = superposed.sublimit_probe(levels, lv.j, t, cfg.trials, cfg.seed,
                                              exact_budget=cfg.exact_budget)
        single = superposed.sublimit_distance_exact(levels, lv.j, t, only={lv.j})
        exact = superposed.sublimit_distance_exact(levels, lv.j, t)
        lower = superposed.lower_level_second_moment(levels, lv.j)
        cf_rows.append((lv.j, lv.I, lv.theta / lv.h, mc, exact, single, lower, 2 / lv.j,
                        " ".join(map(str, gauss))))
    write_csv(os.path.join(out_dir, "cf_distance.csv"),
              ["j", "n", "normalizer", "mc_distance", "exact_distance", "single_level_exact",
               "lower_level_second_moment", "two_over_j", "gaussian_levels"], cf_rows)
    last, first = cf_rows[-1], cf_rows[0]
    ok = last[3] < 0.05 and (len(cf_rows) == 1 or last[3] < first[3])
    verdicts.append(Verdict("(iv) CF distance at largest j < 0.05 and below j=2", ok,
                            f"j={last[0]} mc={last[3]:.4f} exact={last[4]:.4f}"))

    if svg:
        _svg(os.path.join(out_dir, "beta_vs_zeta.svg"),
             {"log sum of beta_j(n)": (beta.n, beta.log_bound), "log zeta_n": (beta.n, beta.xi)},
             "n", "natural log")
        _svg(os.path.join(out_dir, "cf_distance.svg"),
             {"Monte Carlo": ([r[0] for r in cf_rows], [r[3] for r in cf_rows]),
              "exact": ([r[0] for r in cf_rows], [r[4] for r in cf_rows])},
             "level j", "sup |CF - target|")
    _write_summary(verdicts, out_dir)
    return verdicts


def _write_summary(verdicts, out_dir):
    write_csv(os.path.join(out_dir, "summary.csv"), ["check", "passed", "detail"],
              ((v.name, v.passed, v.detail) for v in verdicts))


def run_appendix(g1, lag, trials, n, seed, out_dir):
    params, states, f = coding.default_base()
    p = coding.choose_p(g1)
    spec = coding.random_spec(states, f, p, seed=seed)
    joint = block.n_step_joint(params, lag)
    rep = coding.coding_info_report(joint, spec)
    paths = coding.block_base_paths(params, n, trials, seed=seed + 1)
    c7 = coding.claim7_probe(spec, paths, seed=seed + 2)
    write_csv(os.path.join(out_dir, "coding_spec.csv"), ["state", "f", "v", "p"],
              ((s, fv, vv, p) for s, fv, vv in zip(spec.base_states, spec.f_values,
                                                   spec.v_values)))
    write_csv(os.path.join(out_dir, "coding_report.csv"), ["quantity", "value"], [
        ("lag", lag), ("base_info", rep.base_info), ("coded_info", rep.coded_info),
        ("base_entropy", rep.base_entropy), ("coded_entropy", rep.coded_entropy),
        ("eta_entropy", rep.eta_entropy), *asdict(c7).items()])
    return [
        Verdict("coded I = base I", rep.info_gap <= 1e-10, f"gap {rep.info_gap:.3g}"),
        Verdict("coded H = base H + h(p)", rep.entropy_gap <= 1e-12, f"gap {rep.entropy_gap:.3g}"),
        Verdict("E[v eta] = 0", abs(c7.mean_v_eta) <= 4 * c7.se_v_eta),
        Verdict("E[(sum X)(sum v eta)] = 0", abs(c7.cross) <= 4 * c7.se_cross),
        Verdict("E[(n^-1/2 sum v eta)^2] <= 1", c7.normalized_second <= 1 + 3 * c7.se_second),
    ]


# --- argument parsing -------------------------------------------------------

def _add_common(sp):
    sp.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./nonclt-out)")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--svg", action="store_true", help="also write SVG plots")
    prof = sp.add_mutually_exclusive_group()
    prof.add_argument("--quick", action="store_true", help="trials=1e4, horizon=1e3")
    prof.add_argument("--full", action="store_true", help="trials=1e5, horizon=1e4")


def _add_rates(sp):
    sp.add_argument("--config", help="JSON experiment config")
    sp.add_argument("--preset", choices=envelope.PRESETS)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--rates", help="file with one rate per line")
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--levels", default=None, help="number of levels or auto-max")


def make_parser():
    ap = argparse.ArgumentParser(prog="nonclt", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("block", help="tables for one building block")
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--theta", type=float, required=True)
    sp.add_argument("--n-max", type=int, default=100)
    _add_common(sp)

    for name, text in (("envelope", "convex envelope of the log-rates"),
                       ("levels", "level parameters and their validation"),
                       ("simulate", "dissipation and sublimit probes"),
                       ("verify", "full run with verdicts")):
        sp = sub.add_parser(name, help=text)
        _add_rates(sp)
        _add_common(sp)

    sp = sub.add_parser("appendix", help="perturbation coding checks")
    sp.add_argument("--g1", type=float, default=0.5)
    sp.add_argument("--lag", type=int, default=3)
    sp.add_argument("--length", type=int, default=20)
    _add_common(sp)
    return ap


def config_from_args(args):
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    if args.quick or args.full:
        data.update(PROFILES["quick" if args.quick else "full"])
    if getattr(args, "preset", None):
        data["rates"] = {"preset": args.preset}
        if args.alpha is not None:
            data["rates"]["alpha"] = args.alpha
    if getattr(args, "rates", None):
        data["rates"] = {"file": args.rates}
    for key in ("horizon", "trials", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "levels", None):
        data["levels"] = args.levels if args.levels == "auto-max" else int(args.levels)
    return ExperimentConfig.from_dict(data)


def _out_dir(args, cfg=None):
    if args.out:
        return args.out
    if cfg is not None and cfg.output_dir:
        return cfg.output_dir
    return os.environ.get(OUT_ENV, "nonclt-out")


_HINTS = {
    "HorizonTooSmall": "supply more rates (raise --horizon) so later tangents fit inside [0, N]",
    "NumericalUnderflow": "binary64 cannot represent the next level; use fewer levels",
    "ValidationFailure": "a level identity failed; please report the config",
}


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        if args.command == "block":
            out = _out_dir(args)
            verdicts = run_block(args.epsilon, args.theta, args.n_max, out)
        elif args.command == "appendix":
            out = _out_dir(args)
            trials = args.trials or (10**4 if args.quick else 10**5)
            verdicts = run_appendix(args.g1, args.lag, trials, args.length, args.seed or 0, out)
        else:
            cfg = config_from_args(args)
            out = _out_dir(args, cfg)
            if args.command == "envelope":
                xi = cfg.log_rates()
                env = envelope.build_envelope(xi)
                write_csv(os.path.join(out, "envelope.csv"), ["x", "phi"], zip(env.xs, env.ys))
                ok = bool(np.all(env(np.arange(1, len(xi) + 1)) <= xi))
                verdicts = [Verdict("exp(phi(n)) <= zeta_n", ok, f"{len(env.xs)} breakpoints")]
                if args.svg:
                    n = np.arange(1, len(xi) + 1)
                    _svg(os.path.join(out, "envelope.svg"),
                         {"xi_n": (n, xi), "phi": (env.xs, env.ys)}, "n", "log rate")
            elif args.command == "levels":
                _, _, run = build_levels(cfg)
                os.makedirs(out, exist_ok=True)
                rep = write_levels(run, out)
                verdicts = [Verdict("levels validate", rep.passed,
                                    f"J={run.depth} stop={run.stop_reason}")]
            elif args.command == "simulate":
                _, _, run = build_levels(cfg)
                levels = run.levels[1:]
                if len(levels) < 1:
                    raise NoncltError(f"no levels generated: {run.stop_detail}")
                rows = superposed.dissipation_probe(levels, cfg.n_list, cfg.trials, cfg.seed,
                                                    exact_budget=cfg.exact_budget)
                write_csv(os.path.join(out, "dissipation.csv"),
                          ["j", "n", "max_window_prob", "stderr", "gaussian_levels"],
                          ((r.j, r.n, r.value, r.stderr, " ".join(map(str, r.gaussian_levels)))
                           for r in rows))
                verdicts = [Verdict("dissipation probe ran", True, f"{len(rows)} rows")]
            else:
                verdicts = run_full(cfg, out, svg=args.svg)
    except (NoncltError, ValueError, OSError) as exc:
        hint = _HINTS.get(type(exc).__name__, "")
        print(f"error: {type(exc).__name__}: {exc}" + (f"\nhint: {hint}" if hint else ""),
              file=sys.stderr)
        return 2
    _print_verdicts(verdicts)
    print(f"reports in {os.path.abspath(out)}")
    return 0 if all(v.passed for v in verdicts) else 1


if __name__ == "__main__":
    sys.exit(main())
