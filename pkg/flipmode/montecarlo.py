# flipmode/montecarlo.py
"""Seeded sampling of multipixel measurements.

Each shard owns a counter-based Philox stream spawned from the seed, so the
sample set depends only on ``(seed, shards)`` and never on how the shards
are scheduled.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .detection import detection_mode, overlap_coefficients, pixel_integrals
from .errors import InvalidParameter, SimulationError
from .gaussian_state import mean_field_mode
from .modes import normalize

logger = logging.getLogger(__name__)

N_BATCHES = 100
CHUNK_SIZE = 1 << 16
CLAMP_TOL = 1e-10


@dataclass(frozen=True)
class SimConfig:
    n_samples: int = 100_000
    seed: int = 0
    shards: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidParameter(f"n_samples must be >= 1, got {self.n_samples}.")
        if self.shards < 1:
            raise InvalidParameter(f"shards must be >= 1, got {self.shards}.")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameter(f"seed must fit in 64 unsigned bits, got {self.seed}.")

    def shard_sizes(self):
        base, extra = divmod(self.n_samples, self.shards)
        return [base + (1 if k < extra else 0) for k in range(self.shards)]

    def generators(self):
        children = np.random.SeedSequence(self.seed).spawn(self.shards)
        return [np.random.Generator(np.random.Philox(child)) for child in children]


@dataclass(frozen=True)
class SimResult:
    sample_mean: float
    sample_variance: float
    stderr_variance: float
    n_samples: int
    seed: int
    shards: int
    flags: tuple = field(default=())

    def to_dict(self):
        """JSON-ready view; undefined statistics become ``None``."""
        def finite(value):
            return value if math.isfinite(value) else None

        return {
            "sample_mean": self.sample_mean,
            "sample_variance": finite(self.sample_variance),
            "stderr_variance": finite(self.stderr_variance),
            "n_samples": self.n_samples,
            "seed": self.seed,
            "shards": self.shards,
            "flags": list(self.flags),
        }


def covariance_factor(cov):
    """Symmetric square root ``L`` with ``L L^T = cov``, small negatives clamped."""
    values, vectors = linalg.eigh(cov)
    if values.size and values.min() < -CLAMP_TOL:
        raise SimulationError(
            f"Covariance is not positive semidefinite (min eigenvalue {values.min():.3e})."
        )
    return vectors * np.sqrt(np.clip(values, 0.0, None))


def variance_stderr(samples):
    """Standard error of the sample variance from up to 100 batch variances."""
    n = samples.size
    if n < 2:
        return math.nan
    batches = min(N_BATCHES, n // 2)
    if batches < 2:
        # normal-theory estimate for tiny samples
        return float(np.var(samples, ddof=1) * math.sqrt(2.0 / (n - 1)))
    batch_vars = np.array([np.var(chunk, ddof=1) for chunk in np.array_split(samples, batches)])
    return float(np.std(batch_vars, ddof=1) / math.sqrt(batches))


def _run_shards(draw, cfg, workers):
    sizes = cfg.shard_sizes()
    generators = cfg.generators()
    workers = workers or min(cfg.shards, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(draw, generators, sizes))
    return np.concatenate(parts)


def summarize(samples, cfg, offset=0.0):
    flags = []
    if samples.size < 2:
        flags.append("single_sample")
        logger.warning("Monte-Carlo run with a single sample: variance and its error are undefined.")
        variance = math.nan
    else:
        variance = float(np.var(samples, ddof=1))
    return SimResult(
        sample_mean=float(offset + np.mean(samples)),
        sample_variance=variance,
        stderr_variance=variance_stderr(samples),
        n_samples=int(samples.size),
        seed=cfg.seed,
        shards=cfg.shards,
        flags=tuple(flags),
    )


def simulate_linearized(state, basis, layout, cfg, workers=None):
    """Sample ``dN = sum_i (C_i da_i^dag + c.c.)`` from the state's covariance."""
    factor = covariance_factor(state.cov)
    v0, n0 = mean_field_mode(state, basis)
    detection = detection_mode(v0, layout)
    coefficients = overlap_coefficients(state, basis, layout)

    # C da^dag + c.c. = Re(C) dX + Im(C) dY on interleaved quadratures
    weights = np.empty(2 * state.dim)
    weights[0::2] = coefficients.real
    weights[1::2] = coefficients.imag
    # vacuum fluctuations of the part of w1 outside the working basis
    outside = max(0.0, n0 * detection.f ** 2 - float(np.sum(np.abs(coefficients) ** 2)))
    outside_scale = math.sqrt(outside)
    projected = factor.T @ weights
    mean = n0 * float(np.sum(layout.gains * pixel_integrals(v0, layout)))

    def draw(generator, size):
        out = np.empty(size)
        for start in range(0, size, CHUNK_SIZE):
            stop = min(size, start + CHUNK_SIZE)
            z = generator.standard_normal((stop - start, projected.size + 1))
            out[start:stop] = z[:, :-1] @ projected + outside_scale * z[:, -1]
        return out

    logger.debug("Linearized sampling: %d samples over %d shards", cfg.n_samples, cfg.shards)
    return summarize(_run_shards(draw, cfg, workers), cfg, offset=mean)


def simulate_poisson(v0, n0, layout, cfg, gains=None, workers=None):
    """Independent Poisson counts per pixel, combined with the pixel gains.

    Valid for coherent states only. ``gains`` overrides the layout gains.
    """
    if not math.isfinite(n0) or n0 <= 0:
        raise InvalidParameter(f"N0 must be positive, got {n0}.")
    rates = n0 * pixel_integrals(normalize(v0), layout)
    gains = layout.gains if gains is None else np.asarray(gains, dtype=float)
    if gains.shape != rates.shape:
        raise InvalidParameter(f"Expected {rates.size} gains, got {gains.size}.")

    def draw(generator, size):
        out = np.empty(size)
        for start in range(0, size, CHUNK_SIZE):
            stop = min(size, start + CHUNK_SIZE)
            counts = generator.poisson(rates, size=(stop - start, rates.size))
            out[start:stop] = counts @ gains
        return out

    return summarize(_run_shards(draw, cfg, workers), cfg)
