"""Config-driven experiment runner.

Experiments are described by a flat INI-style file with one section per
module; unknown sections or keys are fatal, so a typo cannot silently
change an experiment. All randomness flows from the [run] master seed
through the package's documented derivation rules, and every report CSV is
accompanied by a manifest sufficient to reproduce it.

Commands:
    eslab run <config>         execute the experiment, write reports
    eslab validate <config>    parse and validate only
    eslab summarize <dir>      render a schedule-vs-rate summary table

Exit codes: 0 success, 1 usage/config error, 2 invariant or bound violation.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds, es_model, io, sampling, schedules, seeding
from .optimizer import RunConfig, run_ensemble, run_minibatch_sgd
from .problems import make_logistic, make_random_quadratic

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "run_experiment", "summarize", "main"]


class ConfigError(Exception):
    """Invalid experiment configuration; the message names the offender."""


_SCHEMA = {
    "problem": {"kind", "n", "d", "spectrum", "heterogeneity", "lambda", "seed"},
    "scheme": {"kind", "tau", "q", "p"},
    "schedule": {"kind", "eta", "alpha", "horizon"},
    "run": {
        "steps",
        "steps_grid",
        "seeds",
        "seed",
        "probe_every",
        "probe_draws",
        "batch_size",
        "batch_sizes",
        "batch_growth",
    },
    "experiment": {"kind", "output_dir", "name", "window", "stride", "probe_points"},
}
_EXPERIMENT_KINDS = ("single_run", "ensemble_bound", "rate_sweep", "es_fit", "identity_suite")


def _fail(field, message):
    raise ConfigError(f"{field}: {message}")


def _get(section, key, default=None):
    return section.get(key, default)


def _get_int(section, name, key, default=None, minimum=None):
    raw = section.get(key)
    if raw is None:
        if default is None:
            _fail(f"{name}.{key}", "required key is missing")
        return default
    try:
        value = int(raw)
    except ValueError:
        _fail(f"{name}.{key}", f"expected an integer, got {raw!r}")
    if minimum is not None and value < minimum:
        _fail(f"{name}.{key}", f"must be at least {minimum}, got {value}")
    return value


def _get_float(section, name, key, default=None):
    raw = section.get(key)
    if raw is None:
        if default is None:
            _fail(f"{name}.{key}", "required key is missing")
        return default
    try:
        return float(raw)
    except ValueError:
        _fail(f"{name}.{key}", f"expected a number, got {raw!r}")


def _get_floats(section, name, key):
    raw = section.get(key)
    if raw is None:
        return None
    try:
        return [float(tok) for tok in raw.replace(",", " ").split()]
    except ValueError:
        _fail(f"{name}.{key}", f"expected a list of numbers, got {raw!r}")


@dataclass(frozen=True)
class ProblemSpec:
    kind: str
    n: int
    d: int
    spectrum: tuple[float, float] | None
    heterogeneity: float
    lam: float
    seed: int

    def build(self):
        if self.kind == "quadratic":
            return make_random_quadratic(self.n, self.d, self.spectrum, self.heterogeneity, self.seed)
        return make_logistic(self.n, self.d, self.lam, self.seed)

    def label(self):
        if self.kind == "quadratic":
            return f"quadratic(n={self.n},d={self.d},seed={self.seed})"
        return f"logistic(n={self.n},d={self.d},seed={self.seed})"


@dataclass(frozen=True)
class SchemeSpec:
    kind: str
    tau: int
    q: list[float] | None  # None means uniform
    p: list[float] | None

    def build(self, n: int):
        if self.kind == "tau_nice":
            if self.tau > n:
                _fail("scheme.tau", f"must not exceed problem.n = {n}")
            return sampling.TauNice(n, self.tau)
        if self.kind == "with_replacement":
            q = np.full(n, 1.0 / n) if self.q is None else np.asarray(self.q)
            if q.shape != (n,):
                _fail("scheme.q", f"needs {n} entries, got {q.size}")
            return sampling.WithReplacement(n, self.tau, q)
        p = np.full(n, 0.5) if self.p is None else np.asarray(self.p)
        if p.size == 1:
            p = np.full(n, float(p[0]))
        if p.shape != (n,):
            _fail("scheme.p", f"needs {n} entries (or a single scalar), got {p.size}")
        return sampling.IndependentBernoulli(p)


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str
    eta: float
    alpha: float | None
    horizon: int | None

    def build(self, steps: int):
        if self.kind == "constant":
            return schedules.Constant(self.eta)
        if self.kind == "harmonic":
            return schedules.Harmonic(self.eta)
        if self.kind == "polynomial":
            return schedules.Polynomial(self.eta, self.alpha)
        return schedules.Cosine(self.eta, self.horizon if self.horizon is not None else steps)


@dataclass(frozen=True)
class RunSpec:
    steps: int | None
    steps_grid: tuple[int, ...] | None
    seeds: int
    master_seed: int
    probe_every: int
    probe_draws: int
    batch_size: int
    batch_sizes: tuple[int, ...] | None
    batch_growth: float | None

    def tau_schedule(self, steps: int) -> np.ndarray:
        if self.batch_sizes is not None:
            if len(self.batch_sizes) != steps:
                _fail("run.batch_sizes", f"needs {steps} entries, got {len(self.batch_sizes)}")
            return np.asarray(self.batch_sizes, dtype=int)
        if self.batch_growth is not None:
            sizes = np.maximum(
                1, np.rint(self.batch_size * self.batch_growth ** np.arange(steps))
            )
            return sizes.astype(int)
        return np.full(steps, self.batch_size, dtype=int)

    def run_config(self, steps: int, with_batches: bool = False) -> RunConfig:
        tau = tuple(int(t) for t in self.tau_schedule(steps)) if with_batches else None
        return RunConfig(
            steps=steps,
            seed=self.master_seed,
            probe_every=self.probe_every,
            probe_draws=self.probe_draws,
            batch_sizes=tau,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    problem: ProblemSpec
    scheme: SchemeSpec
    schedule: ScheduleSpec
    run: RunSpec
    output_dir: Path
    name: str
    window: int
    stride: int
    probe_points: int
    raw_text: str

    def prefix(self) -> str:
        return f"{self.name}__" if self.name else ""


def _parse_problem(section) -> ProblemSpec:
    kind = _get(section, "kind")
    if kind not in ("quadratic", "logistic"):
        _fail("problem.kind", f"must be quadratic or logistic, got {kind!r}")
    n = _get_int(section, "problem", "n", minimum=1)
    d = _get_int(section, "problem", "d", minimum=1)
    seed = _get_int(section, "problem", "seed", minimum=0)
    spectrum = None
    heterogeneity = 0.0
    lam = 0.0
    if kind == "quadratic":
        values = _get_floats(section, "problem", "spectrum")
        if values is None or len(values) != 2:
            _fail("problem.spectrum", "quadratic problems need 'spectrum = lo, hi'")
        if values[0] < 0:
            _fail("problem.spectrum", "eigenvalues must be nonnegative")
        if values[0] > values[1]:
            _fail("problem.spectrum", "must satisfy lo <= hi")
        spectrum = (values[0], values[1])
        heterogeneity = _get_float(section, "problem", "heterogeneity", default=0.0)
        if heterogeneity < 0:
            _fail("problem.heterogeneity", "must be nonnegative")
    else:
        lam = _get_float(section, "problem", "lambda")
        if lam <= 0:
            _fail("problem.lambda", "must be positive")
    return ProblemSpec(kind, n, d, spectrum, heterogeneity, lam, seed)


def _parse_scheme(section) -> SchemeSpec:
    kind = _get(section, "kind")
    if kind not in ("tau_nice", "with_replacement", "independent"):
        _fail("scheme.kind", f"must be tau_nice, with_replacement or independent, got {kind!r}")
    tau = _get_int(section, "scheme", "tau", default=1, minimum=1)
    q = None
    if kind == "with_replacement":
        raw = section.get("q", "uniform")
        if raw.strip() != "uniform":
            q = _get_floats(section, "scheme", "q")
            if any(x <= 0 for x in q):
                _fail("scheme.q", "all probabilities must be positive")
            if abs(sum(q) - 1.0) > 1e-12:
                _fail("scheme.q", f"probabilities must sum to 1, got {sum(q)!r}")
    p = None
    if kind == "independent":
        raw = section.get("p")
        if raw is not None:
            p = _get_floats(section, "scheme", "p")
            if any(not 0.0 < x <= 1.0 for x in p):
                _fail("scheme.p", "inclusion probabilities must lie in (0, 1]")
    return SchemeSpec(kind, tau, q, p)


def _parse_schedule(section) -> ScheduleSpec:
    kind = _get(section, "kind")
    if kind not in ("constant", "harmonic", "polynomial", "cosine"):
        _fail("schedule.kind", f"must be constant, harmonic, polynomial or cosine, got {kind!r}")
    eta = _get_float(section, "schedule", "eta")
    if eta <= 0:
        _fail("schedule.eta", "must be positive")
    alpha = None
    if kind == "polynomial":
        alpha = _get_float(section, "schedule", "alpha")
        if not 0.0 < alpha < 1.0:
            _fail("schedule.alpha", f"must lie in (0, 1), got {alpha}")
    horizon = None
    if kind == "cosine" and "horizon" in section:
        horizon = _get_int(section, "schedule", "horizon", minimum=1)
    return ScheduleSpec(kind, eta, alpha, horizon)


def _parse_run(section) -> RunSpec:
    steps = None
    if "steps" in section:
        steps = _get_int(section, "run", "steps", minimum=1)
    grid = None
    if "steps_grid" in section:
        values = _get_floats(section, "run", "steps_grid")
        grid = tuple(int(v) for v in values)
        if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
            _fail("run.steps_grid", "must be a strictly increasing list of horizons")
    if steps is None and grid is None:
        _fail("run.steps", "either steps or steps_grid is required")
    seeds = _get_int(section, "run", "seeds", default=2, minimum=2)
    master_seed = _get_int(section, "run", "seed", minimum=0)
    probe_every = _get_int(section, "run", "probe_every", default=0, minimum=0)
    probe_draws = _get_int(section, "run", "probe_draws", default=0, minimum=0)
    if probe_every > 0 and probe_draws < 2:
        _fail("run.probe_draws", "probing requires at least 2 draws")
    batch_size = _get_int(section, "run", "batch_size", default=1, minimum=1)
    batch_sizes = None
    if "batch_sizes" in section:
        values = _get_floats(section, "run", "batch_sizes")
        batch_sizes = tuple(int(v) for v in values)
        if any(t < 1 for t in batch_sizes):
            _fail("run.batch_sizes", "all batch sizes must be at least 1")
    batch_growth = None
    if "batch_growth" in section:
        batch_growth = _get_float(section, "run", "batch_growth")
        if batch_growth < 1.0:
            _fail("run.batch_growth", "growth factor must be at least 1")
        if batch_sizes is not None:
            _fail("run.batch_growth", "give either batch_sizes or batch_growth, not both")
    return RunSpec(
        steps, grid, seeds, master_seed, probe_every, probe_draws, batch_size, batch_sizes, batch_growth
    )


def parse_config(path) -> ExperimentConfig:
    """Parse and fully validate an experiment configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw_text = path.read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(raw_text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from exc

    for section in parser.sections():
        if section not in _SCHEMA:
            _fail(section, f"unknown section (expected one of {sorted(_SCHEMA)})")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                _fail(f"{section}.{key}", "unknown key")

    for required in ("problem", "run", "experiment"):
        if required not in parser:
            _fail(required, "required section is missing")

    exp = parser["experiment"]
    kind = _get(exp, "kind")
    if kind not in _EXPERIMENT_KINDS:
        _fail("experiment.kind", f"must be one of {_EXPERIMENT_KINDS}, got {kind!r}")
    output_dir = Path(_get(exp, "output_dir", "reports"))
    name = _get(exp, "name", "")
    window = _get_int(exp, "experiment", "window", default=8, minimum=3)
    stride = _get_int(exp, "experiment", "stride", default=1, minimum=1)
    probe_points = _get_int(exp, "experiment", "probe_points", default=20, minimum=1)

    problem = _parse_problem(parser["problem"])
    run = _parse_run(parser["run"])

    needs_scheme = kind != "identity_suite"
    if needs_scheme and "scheme" not in parser:
        _fail("scheme", "required section is missing for this experiment kind")
    scheme = _parse_scheme(parser["scheme"]) if "scheme" in parser else SchemeSpec("tau_nice", 1, None, None)

    needs_schedule = kind in ("single_run", "ensemble_bound", "rate_sweep", "es_fit")
    if needs_schedule and "schedule" not in parser:
        _fail("schedule", "required section is missing for this experiment kind")
    schedule = (
        _parse_schedule(parser["schedule"])
        if "schedule" in parser
        else ScheduleSpec("constant", 1.0, None, None)
    )

    if kind == "rate_sweep":
        if run.steps_grid is None:
            _fail("run.steps_grid", "rate_sweep needs a horizon grid")
        if len(run.steps_grid) < 5:
            _fail("run.steps_grid", "rate_sweep needs at least 5 horizons (floor estimation)")
    elif run.steps is None:
        _fail("run.steps", f"{kind} needs a single horizon")
    if kind == "es_fit" and run.probe_every < 1:
        _fail("run.probe_every", "es_fit needs probes (probe_every >= 1)")
    if kind == "identity_suite" and problem.n > 20:
        _fail("problem.n", "identity_suite enumerates 2^n outcomes; keep n <= 20")

    cfg = ExperimentConfig(
        kind=kind,
        problem=problem,
        scheme=scheme,
        schedule=schedule,
        run=run,
        output_dir=output_dir,
        name=name,
        window=window,
        stride=stride,
        probe_points=probe_points,
        raw_text=raw_text,
    )
    # Constructor-level validation, without running anything.
    if needs_scheme:
        cfg.scheme.build(problem.n)
    if needs_schedule:
        cfg.schedule.build(run.steps or run.steps_grid[-1])
    return cfg


# -- experiment kinds --------------------------------------------------------


def _manifest_for(cfg: ExperimentConfig, report: Path, extra=None):
    io.write_manifest(
        report.with_suffix(".manifest.txt"), cfg.raw_text, cfg.run.master_seed, extra=extra
    )


def _run_single(cfg: ExperimentConfig) -> int:
    problem = cfg.problem.build()
    scheme = cfg.scheme.build(problem.n)
    steps = cfg.run.steps
    schedule = cfg.schedule.build(steps)
    run_cfg = cfg.run.run_config(steps)
    trajectory = run_minibatch_sgd(problem, scheme, cfg.run.tau_schedule(steps), schedule, run_cfg)
    report = cfg.output_dir / f"{cfg.prefix()}trajectory.csv"
    io.write_trajectory_csv(report, trajectory)
    _manifest_for(cfg, report, extra={"diverged": trajectory.diverged, "f_star": problem.f_star})
    return 0


def _run_ensemble_bound(cfg: ExperimentConfig) -> int:
    problem = cfg.problem.build()
    scheme = cfg.scheme.build(problem.n)
    steps = cfg.run.steps
    schedule = cfg.schedule.build(steps)
    run_cfg = cfg.run.run_config(steps, with_batches=True)
    ensemble = run_ensemble(problem, scheme, schedule, run_cfg, R=cfg.run.seeds)
    es = sampling.closed_form_es(scheme, problem)
    extra = 1e-8 if problem.numeric_infima else 0.0
    report = bounds.check_bound(ensemble, es, problem.L_bar, schedule, steps, extra_slack=extra)
    row = (
        cfg.problem.label(),
        scheme.label(),
        schedule.label(),
        steps,
        schedule.eta_max,
        report.lhs,
        report.rhs_terms[0],
        report.rhs_terms[1],
        report.rhs_terms[2],
        report.rhs_total,
        report.margin,
        report.holds,
    )
    out = cfg.output_dir / f"{cfg.prefix()}bound_report.csv"
    io.write_csv(out, io.BOUND_FIELDS, [row])
    _manifest_for(cfg, out, extra={"n_diverged": ensemble.n_diverged, "slack": report.slack})
    return 0 if report.holds else 2


def _run_rate_sweep(cfg: ExperimentConfig) -> int:
    problem = cfg.problem.build()
    scheme = cfg.scheme.build(problem.n)
    es = sampling.closed_form_es(scheme, problem)
    prediction = bounds.predicted_rate(cfg.schedule.kind, cfg.schedule.alpha)
    measured, curve = [], []
    for steps in cfg.run.steps_grid:
        schedule = cfg.schedule.build(steps)
        ensemble = run_ensemble(problem, scheme, schedule, cfg.run.run_config(steps), R=cfg.run.seeds)
        measured.append(float(ensemble.mean_grad_norm_sq.min()))
        curve.append(
            (steps, bounds.min_grad_bound_coarse(float(ensemble.mean_subopt[0]), es, problem.L_bar, schedule, steps))
        )
    if prediction.has_floor:
        fit, floor = bounds.fit_rate_subtracting_floor(curve)
    else:
        fit = bounds.fit_rate(curve)
        floor = 0.0
    rows = [
        (cfg.schedule.build(steps).label(), steps, lhs, fit.slope, prediction.exponent)
        for (steps, _), lhs in zip(curve, measured)
    ]
    out = cfg.output_dir / f"{cfg.prefix()}rate_sweep.csv"
    io.write_csv(out, io.RATE_FIELDS, rows)
    _manifest_for(
        cfg,
        out,
        extra={
            "fitted_slope": fit.slope,
            "fit_r_squared": fit.r_squared,
            "floor": floor,
            "note": "fitted_slope is the slope of the bound curve; min_grad records the measured ensemble minima",
        },
    )
    return 0


def _run_es_fit(cfg: ExperimentConfig) -> int:
    problem = cfg.problem.build()
    scheme = cfg.scheme.build(problem.n)
    steps = cfg.run.steps
    schedule = cfg.schedule.build(steps)
    run_cfg = cfg.run.run_config(steps)
    trajectory = run_minibatch_sgd(problem, scheme, cfg.run.tau_schedule(steps), schedule, run_cfg)
    samples = es_model.samples_from_trajectory(trajectory, problem.f_star)
    fits = es_model.windowed_fit(samples, cfg.window, cfg.stride, steps=trajectory.probe_steps)
    rows = [
        (
            wf.start,
            wf.fit.A_hat,
            wf.fit.B_hat,
            wf.fit.C_hat,
            wf.fit.r_squared,
            wf.fit.sample_count,
            wf.fit.rank_deficient,
        )
        for wf in fits
    ]
    out = cfg.output_dir / f"{cfg.prefix()}es_windows.csv"
    io.write_csv(out, io.WINDOW_FIELDS, rows)
    _manifest_for(cfg, out, extra={"n_samples": len(samples)})
    return 0


def _suite_schemes(n: int):
    out = [sampling.TauNice(n, min(2, n))]
    if n >= 2:
        out.append(sampling.WithReplacement(n, 2, np.full(n, 1.0 / n)))
    out.append(sampling.IndependentBernoulli(np.full(n, 0.6)))
    return out


def _run_identity_suite(cfg: ExperimentConfig) -> int:
    problem = cfg.problem.build()
    rng = seeding.probe_rng(cfg.run.master_seed)
    points = [rng.standard_normal(problem.d) for _ in range(cfg.probe_points)]
    rows = []

    def record(identity, scheme_label, worst, tol):
        rows.append((identity, scheme_label, worst, tol, bool(worst <= tol)))

    for scheme in _suite_schemes(problem.n):
        moments = scheme.moments()
        e_v, e_v2, e_vv = sampling.enumerate_moments(scheme)
        record("sampling_weight_mean_is_one", scheme.label(), float(np.abs(e_v - 1.0).max()), 1e-12)
        worst = float(np.max(np.abs(e_v2 - moments.e_v2) / (1.0 + np.abs(moments.e_v2))))
        if scheme.n > 1:
            off = e_vv[~np.eye(scheme.n, dtype=bool)]
            worst = max(worst, float(np.max(np.abs(off - moments.e_vivj) / (1.0 + abs(moments.e_vivj)))))
        record("closed_form_moments_match_enumeration", scheme.label(), worst, 1e-12)

        worst_unbiased = worst_second = worst_var = worst_es = worst_batch = worst_descent = 0.0
        es = sampling.closed_form_es(scheme, problem)
        eta = 0.9 * 2.0 / (problem.L_bar * max(es.B, 1.0)) / 2.0
        for x in points:
            grads = problem.component_grads(x)
            full = grads.mean(axis=0)
            mean_g = np.zeros(problem.d)
            for prob, v in scheme.outcomes():
                mean_g += prob * ((v @ grads) / scheme.n)
            denom = 1.0 + float(np.linalg.norm(full))
            worst_unbiased = max(worst_unbiased, float(np.linalg.norm(mean_g - full)) / denom)

            exact = sampling.exact_second_moment(problem, scheme, x)
            enum = sampling.enumerate_second_moment(problem, scheme, x)
            worst_second = max(worst_second, abs(exact - enum) / (1.0 + abs(enum)))

            var = es_model.variance_identity_check(problem, scheme, x)
            worst_var = max(worst_var, var.max_diff / (1.0 + abs(var.variance_direct)))

            check = sampling.verify_es_pointwise(problem, scheme, x)
            worst_es = max(worst_es, (check.lhs - check.rhs) / (1.0 + abs(check.rhs)))

            f, g = problem.value_and_grad(x)
            gnsq = float(g @ g)
            single = sampling.exact_second_moment(problem, scheme, x)
            for tau in (2, 3):
                batch = gnsq + (single - gnsq) / tau
                rhs = es_model.minibatch_es_rhs(es, tau, f - problem.f_star, gnsq)
                worst_batch = max(worst_batch, (batch - rhs) / (1.0 + abs(rhs)))

            descent = bounds.descent_step_check(problem, scheme, x, eta)
            worst_descent = max(worst_descent, (descent.lhs - descent.rhs) / (1.0 + abs(descent.rhs)))

        ineq_tol = 1e-9 + (1e-8 if problem.numeric_infima else 0.0)
        record("stochastic_gradient_is_unbiased", scheme.label(), worst_unbiased, 1e-12)
        record("second_moment_matches_enumeration", scheme.label(), worst_second, 1e-12)
        record("variance_decomposition_identity", scheme.label(), worst_var, 1e-12)
        record("expected_smoothness_inequality", scheme.label(), worst_es, ineq_tol)
        record("minibatch_second_moment_bound", scheme.label(), worst_batch, ineq_tol)
        record("one_step_expected_descent", scheme.label(), worst_descent, ineq_tol)

    worst_gap = 0.0
    for x in points:
        gap = es_model.grad_gap_check(problem, x)
        worst_gap = max(worst_gap, (gap.lhs - gap.rhs) / (1.0 + abs(gap.rhs)))
    record(
        "gradient_gap_inequality",
        "-",
        worst_gap,
        1e-9 + (1e-8 if problem.numeric_infima else 0.0),
    )

    out = cfg.output_dir / f"{cfg.prefix()}identity_suite.csv"
    io.write_csv(out, io.IDENTITY_FIELDS, rows)
    _manifest_for(cfg, out, extra={"probe_points": cfg.probe_points})
    return 0 if all(row[4] for row in rows) else 2


def run_experiment(cfg: ExperimentConfig) -> int:
    """Execute the configured experiment; returns the process exit code."""
    runner = {
        "single_run": _run_single,
        "ensemble_bound": _run_ensemble_bound,
        "rate_sweep": _run_rate_sweep,
        "es_fit": _run_es_fit,
        "identity_suite": _run_identity_suite,
    }[cfg.kind]
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return runner(cfg)


# -- summaries ----------------------------------------------------------------


def summarize(directory) -> str:
    """Schedule-vs-rate table from the reports in ``directory``.

    One row per schedule kind seen in rate sweeps or bound reports:
    predicted exponent, fitted slope, and the fraction of bound checks that
    held. Raises ConfigError when the directory has no reports.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"report directory not found: {directory}")
    rate_files = sorted(directory.glob("*rate_sweep.csv"))
    bound_files = sorted(directory.glob("*bound_report.csv"))
    if not rate_files and not bound_files:
        raise ConfigError(f"no rate_sweep or bound_report CSVs found in {directory}")

    import csv as _csv

    per_schedule: dict[str, dict] = {}

    def slot(kind):
        return per_schedule.setdefault(kind, {"predicted": None, "slope": None, "held": 0, "checks": 0})

    for path in rate_files:
        with path.open(newline="", encoding="utf-8") as fh:
            for rec in _csv.DictReader(fh):
                kind = rec["schedule"].split("(")[0]
                entry = slot(kind)
                entry["predicted"] = float(rec["predicted_exponent"])
                entry["slope"] = float(rec["fitted_slope"])
    for path in bound_files:
        with path.open(newline="", encoding="utf-8") as fh:
            for rec in _csv.DictReader(fh):
                kind = rec["schedule"].split("(")[0]
                entry = slot(kind)
                entry["checks"] += 1
                entry["held"] += rec["holds"] == "true"

    header = f"{'schedule':<12} {'predicted_exponent':>18} {'fitted_slope':>14} {'bound_holds':>12}"
    lines = [header, "-" * len(header)]
    for kind in sorted(per_schedule):
        entry = per_schedule[kind]
        predicted = "-" if entry["predicted"] is None else f"{entry['predicted']:+.3f}"
        slope = "-" if entry["slope"] is None else f"{entry['slope']:+.3f}"
        holds = "-" if entry["checks"] == 0 else f"{entry['held'] / entry['checks']:.2f}"
        lines.append(f"{kind:<12} {predicted:>18} {slope:>14} {holds:>12}")
    return "\n".join(lines)


# -- entry point --------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="eslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("config", type=Path)
    val_p = sub.add_parser("validate", help="parse and validate a config file")
    val_p.add_argument("config", type=Path)
    sum_p = sub.add_parser("summarize", help="summarize the reports in a directory")
    sum_p.add_argument("directory", type=Path)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0

    try:
        if args.command == "validate":
            parse_config(args.config)
            print(f"{args.config}: valid")
            return 0
        if args.command == "run":
            code = run_experiment(parse_config(args.config))
            if code == 2:
                print("violation detected; see the report CSVs", file=sys.stderr)
            return code
        print(summarize(args.directory))
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
