"""SGD runner: x_{k+1} = x_k - eta_k * g_v(x_k), with trajectory recording,
second-moment probes, and seed ensembles.

Probes estimate E||g_v(x_k)||^2 at selected iterates from M fresh sampling
vectors drawn from a stream that is independent of the optimization stream,
so enabling or disabling probes never changes the optimization path. All
draws for a run are consumed from the update stream in step order, which
makes a mini-batch run with tau_k = 1 bit-identical to the single-sample
runner under the same seed.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import seeding
from .problems import FiniteSumProblem
from .sampling import closed_form_es, second_moment_from_grads
from .schedules import admissible, schedule_values

__all__ = [
    "RunConfig",
    "Trajectory",
    "EnsembleTrajectory",
    "InadmissibleStepWarning",
    "run_sgd",
    "run_minibatch_sgd",
    "run_ensemble",
    "probe_second_moment",
    "default_start",
]

# A run is flagged divergent when f exceeds this multiple of (1 + |f_0|).
DIVERGENCE_FACTOR = 1e12


class InadmissibleStepWarning(UserWarning):
    """The schedule exceeds the 2/(L*B) ceiling; the run proceeds anyway."""


@dataclass(frozen=True)
class RunConfig:
    """Settings for a single run.

    ``probe_every == 0`` disables probing; when enabled, each probe uses
    ``probe_draws`` fresh sampling vectors (at least 2, for a defined
    standard error). ``x0`` defaults to the all-ones vector.
    """

    steps: int
    seed: int
    probe_every: int = 0
    probe_draws: int = 0
    batch_sizes: tuple[int, ...] | None = None
    record_iterates: bool = False
    x0: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.probe_every < 0:
            raise ValueError("probe_every must be nonnegative")
        if self.probe_every > 0 and self.probe_draws < 2:
            raise ValueError("probing requires probe_draws >= 2")
        if self.batch_sizes is not None:
            sizes = tuple(int(t) for t in self.batch_sizes)
            if any(t < 1 for t in sizes):
                raise ValueError("batch sizes must be at least 1")
            object.__setattr__(self, "batch_sizes", sizes)
        if self.x0 is not None:
            object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))


@dataclass(frozen=True)
class Trajectory:
    """Per-step records of one run.

    ``f``, ``grad_norm_sq`` and ``eta`` have one entry per recorded iterate
    (steps+1 when the run completed; ``eta`` is NaN at the final record,
    where no step is taken). Probe arrays are indexed by ``probe_steps``.
    """

    steps: int
    f: np.ndarray
    grad_norm_sq: np.ndarray
    eta: np.ndarray
    probe_steps: np.ndarray
    probe_estimate: np.ndarray
    probe_se: np.ndarray
    probe_exact: np.ndarray
    diverged: bool
    x_final: np.ndarray | None
    iterates: np.ndarray | None

    @property
    def recorded(self) -> int:
        return self.f.size


@dataclass(frozen=True)
class EnsembleTrajectory:
    """Per-step means and standard errors across an ensemble of seeds.

    Statistics cover the non-divergent members only; ``n_diverged`` reports
    how many runs were excluded. ``mean_subopt`` is the mean of f_k - f_star.
    """

    steps: int
    R: int
    n_diverged: int
    mean_subopt: np.ndarray
    se_subopt: np.ndarray
    mean_grad_norm_sq: np.ndarray
    se_grad_norm_sq: np.ndarray


def default_start(problem: FiniteSumProblem) -> np.ndarray:
    return np.ones(problem.d)


def _warn_if_inadmissible(problem, scheme, schedule):
    es = closed_form_es(scheme, problem)
    if not admissible(schedule, problem.L_bar, es.B):
        warnings.warn(
            f"eta_max={schedule.eta_max:g} is not below 2/(L*B)="
            f"{2.0 / (problem.L_bar * es.B):g}; the convergence bound does not apply",
            InadmissibleStepWarning,
            stacklevel=3,
        )


def _probe_from_grads(scheme, grads, n, m_draws, rng, tau):
    """(estimate, se, exact) of E||g||^2 at a frozen iterate.

    ``grads`` are the component gradients there; for a mini-batch of size
    tau the estimate averages tau fresh vectors per draw and the exact value
    uses E||mean of tau iid g||^2 = ||grad f||^2 + (E||g||^2 - ||grad f||^2)/tau.
    """
    exact_single = second_moment_from_grads(scheme, grads)
    full = grads.mean(axis=0)
    full_sq = float(full @ full)
    exact = full_sq + (exact_single - full_sq) / tau
    weights = scheme.draw_many(rng, m_draws * tau)
    if tau > 1:
        weights = weights.reshape(m_draws, tau, -1).mean(axis=1)
    sampled = (weights @ grads) / n
    vals = np.einsum("ij,ij->i", sampled, sampled)
    est = float(vals.mean())
    se = float(vals.std(ddof=1)) / math.sqrt(m_draws)
    return est, se, exact


def probe_second_moment(problem, scheme, x, draws, rng):
    """Monte Carlo (mean, standard error) of ||g_v(x)||^2 over ``draws`` vectors."""
    if draws < 2:
        raise ValueError("need at least 2 draws for a standard error")
    grads = problem.component_grads(x)
    est, se, _ = _probe_from_grads(scheme, grads, problem.n, int(draws), rng, tau=1)
    return est, se


def _run(problem, scheme, schedule, cfg, tau_per_step):
    steps = cfg.steps
    etas = schedule_values(schedule, steps)
    x = np.array(cfg.x0, dtype=float) if cfg.x0 is not None else default_start(problem)
    if x.shape != (problem.d,):
        raise ValueError(f"x0 must have shape ({problem.d},)")

    rng_update = seeding.update_rng(cfg.seed)
    rng_probe = seeding.probe_rng(cfg.seed)
    draws = scheme.draw_many(rng_update, int(tau_per_step.sum()))
    offsets = np.concatenate(([0], np.cumsum(tau_per_step)))

    f_rec = np.empty(steps + 1)
    g_rec = np.empty(steps + 1)
    eta_rec = np.full(steps + 1, np.nan)
    iterates = np.empty((steps + 1, problem.d)) if cfg.record_iterates else None
    probe_steps, probe_est, probe_se, probe_exact = [], [], [], []

    diverged = False
    recorded = 0
    limit = math.inf
    for k in range(steps + 1):
        f, g = problem.value_and_grad(x)
        gnsq = float(g @ g)
        if k == 0:
            limit = DIVERGENCE_FACTOR * (1.0 + abs(f))
        if not (math.isfinite(f) and math.isfinite(gnsq)) or f > limit:
            diverged = True
            break
        f_rec[k] = f
        g_rec[k] = gnsq
        if iterates is not None:
            iterates[k] = x
        recorded = k + 1
        if cfg.probe_every > 0 and k % cfg.probe_every == 0:
            tau_here = int(tau_per_step[k]) if k < steps else int(tau_per_step[-1])
            grads = problem.component_grads(x)
            est, se, exact = _probe_from_grads(
                scheme, grads, problem.n, cfg.probe_draws, rng_probe, tau_here
            )
            probe_steps.append(k)
            probe_est.append(est)
            probe_se.append(se)
            probe_exact.append(exact)
        if k == steps:
            break
        eta_rec[k] = etas[k]
        rows = draws[offsets[k] : offsets[k + 1]]
        w = rows.mean(axis=0) if rows.shape[0] > 1 else rows[0]
        nz = np.flatnonzero(w)
        grad_step = (w[nz] @ problem.component_grads(x, indices=nz)) / problem.n
        x = x - etas[k] * grad_step

    return Trajectory(
        steps=steps,
        f=f_rec[:recorded].copy(),
        grad_norm_sq=g_rec[:recorded].copy(),
        eta=eta_rec[:recorded].copy(),
        probe_steps=np.asarray(probe_steps, dtype=int),
        probe_estimate=np.asarray(probe_est),
        probe_se=np.asarray(probe_se),
        probe_exact=np.asarray(probe_exact),
        diverged=diverged,
        x_final=None if diverged else x,
        iterates=iterates[:recorded].copy() if iterates is not None else None,
    )


def run_sgd(problem, scheme, schedule, cfg: RunConfig) -> Trajectory:
    """Single-sample-per-step SGD; deterministic given (problem, scheme, cfg)."""
    _warn_if_inadmissible(problem, scheme, schedule)
    return _run(problem, scheme, schedule, cfg, np.ones(cfg.steps, dtype=int))


def run_minibatch_sgd(problem, scheme, tau_schedule, schedule, cfg: RunConfig) -> Trajectory:
    """SGD whose step-k gradient averages tau_k independent sampling vectors.

    ``tau_schedule`` is an int (constant batch size) or a per-step sequence;
    with all tau_k = 1 the output is bit-identical to :func:`run_sgd`.
    """
    if np.isscalar(tau_schedule):
        tau = np.full(cfg.steps, int(tau_schedule), dtype=int)
    else:
        tau = np.asarray(tau_schedule, dtype=int)
        if tau.shape != (cfg.steps,):
            raise ValueError(f"tau_schedule must have length {cfg.steps}")
    if np.any(tau < 1):
        raise ValueError("batch sizes must be at least 1")
    _warn_if_inadmissible(problem, scheme, schedule)
    return _run(problem, scheme, schedule, cfg, tau)


def _ensemble_member(args):
    problem, scheme, schedule, cfg, tau_schedule = args
    if tau_schedule is None:
        return _run(problem, scheme, schedule, cfg, np.ones(cfg.steps, dtype=int))
    return _run(problem, scheme, schedule, cfg, tau_schedule)


def run_ensemble(problem, scheme, schedule, cfg: RunConfig, R: int, n_jobs: int = 1):
    """R independent runs with seeds master ^ r, reduced to per-step statistics.

    Runs are embarrassingly parallel; ``n_jobs > 1`` executes them in a
    process pool with the same seeds, so the result does not depend on the
    worker count. Divergent runs are excluded from the statistics and
    counted in ``n_diverged``.
    """
    R = int(R)
    if R < 2:
        raise ValueError("an ensemble needs at least 2 runs")
    _warn_if_inadmissible(problem, scheme, schedule)
    tau = None
    if cfg.batch_sizes is not None:
        tau = np.asarray(cfg.batch_sizes, dtype=int)
        if tau.shape != (cfg.steps,):
            raise ValueError(f"batch_sizes must have length {cfg.steps}")
    jobs = [
        (problem, scheme, schedule, replace(cfg, seed=seeding.worker_seed(cfg.seed, r)), tau)
        for r in range(R)
    ]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            runs = list(pool.map(_ensemble_member, jobs, chunksize=max(1, R // (4 * n_jobs))))
    else:
        runs = [_ensemble_member(job) for job in jobs]

    kept = [t for t in runs if not t.diverged]
    n_diverged = R - len(kept)
    if len(kept) < 2:
        raise RuntimeError(f"only {len(kept)} of {R} runs survived; cannot form statistics")

    subopt = np.stack([t.f for t in kept]) - problem.f_star
    gnsq = np.stack([t.grad_norm_sq for t in kept])
    scale = math.sqrt(len(kept))
    return EnsembleTrajectory(
        steps=cfg.steps,
        R=R,
        n_diverged=n_diverged,
        mean_subopt=subopt.mean(axis=0),
        se_subopt=subopt.std(axis=0, ddof=1) / scale,
        mean_grad_norm_sq=gnsq.mean(axis=0),
        se_grad_norm_sq=gnsq.std(axis=0, ddof=1) / scale,
    )
