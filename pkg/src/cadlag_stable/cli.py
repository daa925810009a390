"""Experiment orchestration and the ``cadlag-stable`` command line."""

from __future__ import annotations

import argparse
import csv
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config, parse_config, reward_from_spec
from .errors import ConfigError, ConvergenceError, DegenerateFitError, TruncationError
from .heavy_tail import (
    StableParams,
    TailModel,
    c_alpha,
    c_alpha_pow,
    gamma_frac_moment,
    stable_cdf,
)
from .models import (
    ExceedanceRadii,
    LepageMarginals,
    ParetoSumMarginals,
    ParetoSumTruncation,
    PartialSumMarginals,
    PartialSumTruncation,
    lepage_minimal_terms,
    lepage_tail_bound,
)
from .parallel import map_replicates
from .renewal import RenewalEmpirical, RenewalRewardConfig, steady_state_cdf
from .verification import (
    cf_shape_test,
    counterexample_suite,
    functional_beta,
    ks_test,
    ks_two_sample,
    negligibility_curve,
    poisson_exceedance_test,
)

__all__ = ["SummaryRow", "ReportBundle", "run_experiment", "emit_reports", "main"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


@dataclass(frozen=True)
class SummaryRow:
    test: str
    passed: bool
    statistic: float
    threshold: float


@dataclass
class ReportBundle:
    summary: list
    artifacts: list
    config_echo: ExperimentConfig
    wall_time: float = 0.0
    tables: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.summary)


# ---------------------------------------------------------------------------
# formatting
# ---------------------------------------------------------------------------


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _sig12(x: float) -> str:
    return f"{x:.12g}"


def _header(cfg: ExperimentConfig) -> str:
    return f"# config_sha256={cfg.digest()} version={__version__} experiment={cfg.experiment}"


def _write_table(path: Path, cfg: ExperimentConfig, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(_header(cfg) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _num(c) for c in row])


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _tail(cfg: ExperimentConfig) -> TailModel:
    return TailModel(cfg.tail_kind, cfg.alpha, cfg.x_m)


def _marginal_table(times, values):
    cols = ["replicate"] + [f"t={t!r}" for t in times]
    return cols, [[i] + list(v) for i, v in enumerate(values)]


def _exp_constants(cfg):
    a = cfg.alpha
    rows = [
        ("c_alpha_pow", c_alpha_pow(a)),
        ("c_alpha", c_alpha(a)),
        ("gamma_frac_moment_1", gamma_frac_moment(1, a)),
        ("lepage_tail_bound_K", lepage_tail_bound(a, cfg.K)),
    ]
    summary = [SummaryRow(name, bool(np.isfinite(v) and v > 0), v, math.nan) for name, v in rows]
    table = (["name", "value"], [[name, _sig12(v)] for name, v in rows])
    return summary, {"constants": table}


def _stable_fit_rows(cfg, x, label):
    rep = cf_shape_test(x, cfg.alpha, 1.0, cfg.t_grid, threshold=cfg.cf_threshold)
    params = StableParams(cfg.alpha, rep.fitted_scale, 1.0, 0.0)
    ks = ks_test(x, lambda v: stable_cdf(params, v, cfg.stable_tol), threshold=cfg.ks_threshold)
    rows = [
        SummaryRow(f"{label}_cf_shape", rep.passed, rep.max_abs_gap, rep.threshold),
        SummaryRow(f"{label}_ks_fitted_stable", ks.passed, ks.statistic, ks.pass_threshold),
        SummaryRow(f"{label}_fitted_scale", True, rep.fitted_scale, math.nan),
    ]
    cf_table = (
        ["t", "re_empirical", "im_empirical", "re_model", "im_model"],
        [[t, e.real, e.imag, m.real, m.imag] for t, e, m in zip(rep.t_grid, rep.empirical, rep.model)],
    )
    return rows, cf_table


def _exp_partial_sum(cfg):
    times = tuple(cfg.times)
    vals = map_replicates(PartialSumMarginals(_tail(cfg), cfg.n, times), cfg.seed, cfg.replicates, cfg.workers)
    x = vals[:, times.index(1.0)] if 1.0 in times else vals[:, -1]
    rows, cf_table = _stable_fit_rows(cfg, x, "S_n(1)")
    return rows, {"marginals": _marginal_table(times, vals), "cf": cf_table}


def _exp_pareto_sum(cfg):
    if cfg.spectral != "indicator":
        raise ConfigError("the pareto_sum experiment runs the indicator spectral law", ["spectral"])
    times = tuple(cfg.times)
    tail = _tail(cfg)
    vals = map_replicates(ParetoSumMarginals(tail, cfg.n, times), cfg.seed, cfg.replicates, cfg.workers)
    ref = map_replicates(
        PartialSumMarginals(tail, cfg.n, (1.0,)), cfg.seed, cfg.replicates, cfg.workers,
        stream_offset=cfg.replicates,
    )[:, 0]
    x = vals[:, -1]
    rows, cf_table = _stable_fit_rows(cfg, x, "pareto_sum(1)")
    ks = ks_two_sample(x, ref, threshold=cfg.two_sample_threshold)
    rows.append(SummaryRow("ks_vs_partial_sum(1)", ks.passed, ks.statistic, ks.pass_threshold))
    return rows, {"marginals": _marginal_table(times, vals), "cf": cf_table}


def _exp_lepage(cfg):
    times = tuple(cfg.times)
    tail = _tail(cfg)
    bound = lepage_tail_bound(cfg.alpha, cfg.K)
    if bound > cfg.tail_tol:
        k_min = lepage_minimal_terms(cfg.alpha, cfg.tail_tol)
        raise TruncationError(
            f"lepage: tail bound {bound:.4g} exceeds tail_tol={cfg.tail_tol} at K={cfg.K}; need K >= {k_min}",
            minimal_terms=k_min,
        )
    lp = map_replicates(LepageMarginals(cfg.alpha, cfg.K, times), cfg.seed, cfg.replicates, cfg.workers)
    ps = map_replicates(
        PartialSumMarginals(tail, cfg.n, times), cfg.seed, cfg.replicates, cfg.workers,
        stream_offset=cfg.replicates,
    )
    rows = [SummaryRow("lepage_tail_bound", True, bound, cfg.tail_tol)]
    for j, t in enumerate(times):
        ks = ks_two_sample(lp[:, j], ps[:, j], threshold=cfg.two_sample_threshold)
        rows.append(SummaryRow(f"ks_lepage_vs_partial_sum_t={t!r}", ks.passed, ks.statistic, ks.pass_threshold))
    return rows, {"lepage_marginals": _marginal_table(times, lp), "partial_sum_marginals": _marginal_table(times, ps)}


def _exp_exceedance(cfg):
    rep = poisson_exceedance_test(
        ExceedanceRadii(_tail(cfg), cfg.n), cfg.n, cfg.r_grid, cfg.alpha, cfg.replicates,
        cfg.seed, cfg.workers, cfg.se_mult, (cfg.dispersion_low, cfg.dispersion_high),
    )
    rows = []
    for r in rep.rows:
        z = abs(r.mean - r.expected) / r.std_error if r.std_error > 0 else 0.0
        rows.append(SummaryRow(f"mean_count_r={r.r!r}", r.passed_mean, z, cfg.se_mult))
        rows.append(SummaryRow(f"dispersion_r={r.r!r}", r.passed_dispersion, r.dispersion, cfg.dispersion_high))
    table = (
        ["r", "expected", "mean", "variance", "std_error", "dispersion"],
        [[r.r, r.expected, r.mean, r.variance, r.std_error, r.dispersion] for r in rep.rows],
    )
    return rows, {"exceedances": table}


def _exp_negligibility(cfg):
    tail = _tail(cfg)
    runner = PartialSumTruncation(tail, cfg.n)
    curve = negligibility_curve(runner, cfg.epsilons, cfg.eta, cfg.n, cfg.replicates, cfg.seed, cfg.workers)
    target = 2.0 - cfg.alpha
    rows = [
        SummaryRow("variance_slope", curve.slope_ok(target, cfg.slope_tol), curve.fitted_slope, cfg.slope_tol),
        SummaryRow("isotonic_residual", curve.monotone_ok(cfg.iso_tol), curve.isotonic_residual, cfg.iso_tol),
    ]
    table = (
        ["epsilon", "exceed_prob", "variance", "infeasible"],
        [[e, p, v, bool(f)] for e, p, v, f in zip(curve.epsilons, curve.exceed_prob, curve.variances, curve.infeasible)],
    )
    return rows, {"negligibility": table}


def _exp_renewal(cfg):
    rcfg = RenewalRewardConfig(_tail(cfg), reward_from_spec(cfg.reward), cfg.T, cfg.w_grid)
    vals = map_replicates(RenewalEmpirical(rcfg), cfg.seed, cfg.replicates, cfg.workers)
    rows = []
    fit = []
    for j, w in enumerate(rcfg.w_grid):
        f0 = float(rcfg.reward.cdf(w))
        if not 0.0 < f0 < 1.0:
            rows.append(SummaryRow(f"E_T(w={w!r})_degenerate", bool(np.all(vals[:, j] == 0)), float(np.max(np.abs(vals[:, j]))), 0.0))
            continue
        beta = functional_beta([1.0 - f0, -f0], [f0, 1.0 - f0], cfg.alpha)
        rep = cf_shape_test(vals[:, j], cfg.alpha, beta, cfg.t_grid, threshold=cfg.cf_threshold)
        rows.append(SummaryRow(f"cf_shape_w={w!r}", rep.passed, rep.max_abs_gap, rep.threshold))
        e_abs = f0 * (1 - f0) ** cfg.alpha + (1 - f0) * f0**cfg.alpha
        predicted = rcfg.rate * c_alpha_pow(cfg.alpha) * e_abs
        fit.append([w, f0, beta, rep.fitted_scale**cfg.alpha, predicted, rep.max_abs_gap])
    # independent coupling: lambda E[Y 1{W <= w}] = G(w) exactly
    f0_gap = max(abs(steady_state_cdf(rcfg, w) - float(rcfg.reward.cdf(w))) for w in rcfg.w_grid)
    rows.append(SummaryRow("F0_equals_G", f0_gap == 0.0, f0_gap, 0.0))
    table = (["w", "F0", "beta", "fitted_scale_pow", "lambda_c_alpha_pow_E_abs_phi", "max_gap"], fit)
    return rows, {"renewal_cf": table, "marginals": _marginal_table(rcfg.w_grid, vals)}


def _exp_counterexamples(cfg):
    res = counterexample_suite()
    rows = [SummaryRow(r.name, r.passed, r.statistic, r.threshold) for r in res]
    table = (["fixture", "pass", "statistic", "threshold", "detail"],
             [[r.name, r.passed, r.statistic, r.threshold, r.detail] for r in res])
    return rows, {"counterexamples": table}


_DISPATCH = {
    "constants": _exp_constants,
    "partial_sum": _exp_partial_sum,
    "pareto_sum": _exp_pareto_sum,
    "lepage": _exp_lepage,
    "exceedance": _exp_exceedance,
    "negligibility": _exp_negligibility,
    "renewal_reward": _exp_renewal,
    "counterexamples": _exp_counterexamples,
}


def run_experiment(config: ExperimentConfig) -> ReportBundle:
    """Run one experiment and write its CSV artifacts into ``config.output_dir``.

    Identical configurations (worker count aside) produce byte-identical files.
    """
    cfg = config.validate()
    start = time.perf_counter()
    try:
        summary, tables = _DISPATCH[cfg.experiment](cfg)
    except (ConvergenceError, TruncationError) as exc:
        raise type(exc)(f"{cfg.experiment}: {exc}") from exc
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    artifacts = []
    for name, (cols, rows) in tables.items():
        path = out / f"{name}.csv"
        _write_table(path, cfg, cols, rows)
        artifacts.append(str(path))
    return ReportBundle(summary, artifacts, cfg, time.perf_counter() - start, tables)


def emit_reports(bundle: ReportBundle) -> int:
    """Write ``summary.csv`` and the resolved config; return the exit code."""
    cfg = bundle.config_echo
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_table(
            out / "summary.csv", cfg, ["test", "pass", "statistic", "threshold"],
            [[r.test, r.passed, r.statistic, r.threshold] for r in bundle.summary],
        )
        (out / "config.txt").write_text(cfg.serialize())
    except OSError:
        return EXIT_IO
    return EXIT_OK if bundle.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

_SUBCOMMANDS = {
    "constants": "constants",
    "simulate": None,
    "lepage": "lepage",
    "exceedances": "exceedance",
    "negligibility": "negligibility",
    "verify": None,
    "counterexamples": "counterexamples",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cadlag-stable", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value configuration file")
        s.add_argument("--seed", type=int)
        s.add_argument("--workers", type=int)
        s.add_argument("--out", help="output directory")
        s.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration key (repeatable)")
    return p


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}", [item])
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for key, val in (("seed", args.seed), ("workers", args.workers), ("output_dir", args.out)):
        if val is not None:
            overrides[key] = str(val)
    fixed = _SUBCOMMANDS[args.command]
    if fixed is not None:
        overrides["experiment"] = fixed
    elif args.command == "simulate" and "experiment" not in overrides and not args.config:
        overrides["experiment"] = "partial_sum"
    return parse_config(overrides, base=cfg)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read configuration: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        bundle = run_experiment(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, TruncationError, DegenerateFitError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"cannot write reports: {exc}", file=sys.stderr)
        return EXIT_IO
    code = emit_reports(bundle)
    if code == EXIT_IO:
        print(f"cannot write reports to {cfg.output_dir}", file=sys.stderr)
        return code
    for r in bundle.summary:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.test}  statistic={_num(r.statistic)}  threshold={_num(r.threshold)}")
    return code


if __name__ == "__main__":
    sys.exit(main())
