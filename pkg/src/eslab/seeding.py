"""Deterministic random-stream derivation.

Every source of randomness in the package flows from integer seeds through
the two rules below, so that experiment outputs are reproducible regardless
of worker count or probe configuration:

* ensemble member ``r`` runs with seed ``master_seed ^ r`` (bitwise XOR),
* within one run, the optimization stream and the measurement (probe)
  stream are separate children of the run seed, so probing never perturbs
  the optimization path.
"""

from __future__ import annotations

import numpy as np

_UPDATE_STREAM = 0
_PROBE_STREAM = 1


def worker_seed(master_seed: int, worker_index: int) -> int:
    """Seed for the ``worker_index``-th member of an ensemble."""
    if master_seed < 0 or worker_index < 0:
        raise ValueError("seeds and worker indices must be nonnegative")
    return master_seed ^ worker_index


def update_rng(seed: int) -> np.random.Generator:
    """Generator driving the optimization updates of a single run."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_UPDATE_STREAM,)))


def probe_rng(seed: int) -> np.random.Generator:
    """Generator driving second-moment probes; independent of :func:`update_rng`."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(_PROBE_STREAM,)))
