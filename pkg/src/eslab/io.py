"""CSV report writing and ingestion.

All report bodies are deterministic given (config, master seed): floats are
rendered with their shortest round-trip representation and booleans as
true/false. Provenance (config echo, versions, timestamp) goes into a
sidecar manifest, never into the CSV body, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import datetime
import math
from pathlib import Path

import numpy as np

from .es_model import ESSample
from .optimizer import Trajectory

__all__ = [
    "TRAJECTORY_FIELDS",
    "BOUND_FIELDS",
    "RATE_FIELDS",
    "WINDOW_FIELDS",
    "IDENTITY_FIELDS",
    "fmt",
    "write_csv",
    "write_manifest",
    "write_trajectory_csv",
    "read_trajectory_samples",
]

TRAJECTORY_FIELDS = (
    "k",
    "f",
    "grad_norm_sq",
    "eta",
    "second_moment_hat",
    "second_moment_se",
    "exact_second_moment",
)
BOUND_FIELDS = (
    "problem",
    "scheme",
    "schedule",
    "K",
    "eta",
    "lhs",
    "rhs_term1",
    "rhs_term2",
    "rhs_term3",
    "rhs_total",
    "margin",
    "holds",
)
RATE_FIELDS = ("schedule", "K", "min_grad", "fitted_slope", "predicted_exponent")
WINDOW_FIELDS = ("window_start", "A_hat", "B_hat", "C_hat", "r_squared", "n_samples", "rank_flag")
IDENTITY_FIELDS = ("identity", "scheme", "worst_error", "tolerance", "passed")


def fmt(value) -> str:
    """Deterministic cell rendering: shortest-repr floats, true/false, ''."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else repr(v)
    return str(value)


def write_csv(path, fields, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for row in rows:
            writer.writerow([fmt(cell) for cell in row])


def write_manifest(path, config_text: str, master_seed: int, extra: dict | None = None) -> None:
    """Reproduction recipe for the sibling report: config echo, seed, versions."""
    from . import __version__

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"generated_at: {datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')}",
        f"eslab_version: {__version__}",
        f"numpy_version: {np.__version__}",
        f"master_seed: {master_seed}",
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {value}")
    lines.append("config: |")
    lines.extend("  " + line for line in config_text.splitlines())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trajectory_csv(path, trajectory: Trajectory) -> None:
    probe_at = {int(k): i for i, k in enumerate(trajectory.probe_steps)}
    rows = []
    for k in range(trajectory.recorded):
        if k in probe_at:
            i = probe_at[k]
            probe = (
                trajectory.probe_estimate[i],
                trajectory.probe_se[i],
                trajectory.probe_exact[i],
            )
        else:
            probe = (None, None, None)
        rows.append((k, trajectory.f[k], trajectory.grad_norm_sq[k], trajectory.eta[k]) + probe)
    write_csv(path, TRAJECTORY_FIELDS, rows)


def read_trajectory_samples(path, f_star: float, use_exact: bool = False) -> list[ESSample]:
    """Regression samples from a trajectory CSV's probe rows.

    Weighting follows :func:`eslab.es_model.samples_from_trajectory`:
    inverse squared standard error floored at its 5th percentile, or unit
    weights for exact values.
    """
    rows = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRAJECTORY_FIELDS:
            raise ValueError(f"{path} is not a trajectory CSV")
        for rec in reader:
            if rec["second_moment_hat"] == "":
                continue
            rows.append(
                (
                    float(rec["f"]) - f_star,
                    float(rec["grad_norm_sq"]),
                    float(rec["exact_second_moment"] if use_exact else rec["second_moment_hat"]),
                    float(rec["second_moment_se"]),
                )
            )
    if not rows:
        raise ValueError(f"{path} carries no probe rows")
    if use_exact:
        weights = np.ones(len(rows))
    else:
        se = np.array([r[3] for r in rows])
        positive = se[se > 0]
        if positive.size:
            se = np.maximum(se, np.percentile(positive, 5.0))
            weights = 1.0 / se**2
        else:
            weights = np.ones(len(rows))
    return [
        ESSample(
            subopt=max(r[0], 0.0),
            grad_sq=r[1],
            second_moment=r[2],
            weight=float(w),
        )
        for r, w in zip(rows, weights)
    ]
