# flipmode/modes.py
"""Transverse modes sampled on a uniform 2-D grid.

All integrals are midpoint Riemann sums over the grid cells, so
``overlap(u, v) = sum(conj(u) * v) * dA``. Modes and bases are immutable.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, InvalidGrid, InvalidMode, InvalidParameter

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-6
GS_TOL = 1e-10
DEFAULT_GRID_SIZE = 256
DEFAULT_WINDOW_WAISTS = 8.0
MIN_WINDOW_WAISTS = 6.0


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered sampling of a rectangular transverse window."""
    nx: int
    ny: int
    width_x: float
    width_y: float

    def __post_init__(self):
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise InvalidGrid("Sample counts must be integers.")
        if self.nx < 2 or self.ny < 2:
            raise InvalidGrid(f"Grid needs at least 2x2 cells, got {self.nx}x{self.ny}.")
        for name in ("width_x", "width_y"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise InvalidGrid(f"{name} must be finite and positive, got {value}.")

    @classmethod
    def for_waist(cls, waist, n=DEFAULT_GRID_SIZE, window_waists=DEFAULT_WINDOW_WAISTS):
        width = window_waists * waist
        return cls(nx=n, ny=n, width_x=width, width_y=width)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def dx(self):
        return self.width_x / self.nx

    @property
    def dy(self):
        return self.width_y / self.ny

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def x(self):
        return -self.width_x / 2 + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y(self):
        return -self.width_y / 2 + (np.arange(self.ny) + 0.5) * self.dy

    def mesh(self):
        """Cell-center coordinates as two ``(ny, nx)`` arrays."""
        return np.meshgrid(self.x, self.y)

    def matches(self, other):
        return (
            isinstance(other, Grid)
            and self.nx == other.nx
            and self.ny == other.ny
            and math.isclose(self.width_x, other.width_x, rel_tol=1e-12)
            and math.isclose(self.width_y, other.width_y, rel_tol=1e-12)
        )

    def __str__(self):
        return f"Grid({self.nx}x{self.ny}, {self.width_x:g}x{self.width_y:g})"


def check_same_grid(*objects):
    first = objects[0].grid
    for obj in objects[1:]:
        if not first.matches(obj.grid):
            raise GridMismatchError(first, obj.grid)
    return first


class SampledMode:
    """Complex field amplitude per grid cell, array shape ``(ny, nx)``."""

    __slots__ = ("grid", "_amplitude")

    def __init__(self, grid, amplitude):
        amplitude = np.array(amplitude, dtype=complex)
        if amplitude.shape != grid.shape:
            raise GridMismatchError(grid, f"array of shape {amplitude.shape}")
        if not np.all(np.isfinite(amplitude)):
            raise InvalidMode("Mode amplitude contains non-finite values.")
        amplitude.setflags(write=False)
        self.grid = grid
        self._amplitude = amplitude

    @property
    def amplitude(self):
        return self._amplitude

    @property
    def intensity(self):
        return np.abs(self._amplitude) ** 2

    def norm(self):
        return math.sqrt(float(np.sum(self.intensity)) * self.grid.cell_area)

    def scaled(self, factor):
        return SampledMode(self.grid, self._amplitude * factor)

    def is_real(self, tol=1e-12):
        scale = np.max(np.abs(self._amplitude)) or 1.0
        return bool(np.max(np.abs(self._amplitude.imag)) <= tol * scale)

    def __repr__(self):
        return f"SampledMode({self.grid}, norm={self.norm():.6g})"


def overlap(u, v):
    """Discrete inner product <u, v>, antilinear in ``u``."""
    grid = check_same_grid(u, v)
    return complex(np.vdot(u.amplitude, v.amplitude) * grid.cell_area)


def normalize(mode):
    norm = mode.norm()
    if norm == 0:
        raise InvalidMode("Cannot normalize an all-zero mode.")
    return mode.scaled(1.0 / norm)


def combine(modes, coefficients):
    """Sample ``sum(c_i * mode_i)`` on the shared grid."""
    modes = list(modes)
    if not modes:
        raise InvalidMode("Cannot combine an empty list of modes.")
    grid = check_same_grid(*modes)
    stack = np.stack([m.amplitude for m in modes])
    amplitude = np.tensordot(np.asarray(coefficients, dtype=complex), stack, axes=1)
    return SampledMode(grid, amplitude)


def flip_x(mode):
    """Mirror image ``u(-x, y)``."""
    return SampledMode(mode.grid, mode.amplitude[:, ::-1])


def flip_y(mode):
    return SampledMode(mode.grid, mode.amplitude[::-1, :])


def hermite_functions(max_order, t):
    """Normalized Hermite functions psi_0..psi_max_order evaluated at ``t``.

    Three-term recurrence on the normalized functions, no factorial overflow.
    """
    t = np.asarray(t, dtype=float)
    values = np.empty((max_order + 1,) + t.shape)
    values[0] = math.pi ** -0.25 * np.exp(-t ** 2 / 2)
    if max_order >= 1:
        values[1] = math.sqrt(2.0) * t * values[0]
    for k in range(1, max_order):
        values[k + 1] = (
            math.sqrt(2.0 / (k + 1)) * t * values[k]
            - math.sqrt(k / (k + 1)) * values[k - 1]
        )
    return values


def _hg_profiles(max_order, coords, waist, center):
    # 1-D HG profiles in physical units: u_m(x) = (sqrt2/w)^(1/2) psi_m(sqrt2 (x-x0)/w)
    t = math.sqrt(2.0) * (coords - center) / waist
    return hermite_functions(max_order, t) * math.sqrt(math.sqrt(2.0) / waist)


def _check_beam_parameters(waist, center):
    if not math.isfinite(waist) or waist <= 0:
        raise InvalidParameter(f"waist must be finite and positive, got {waist}.")
    if not all(math.isfinite(c) for c in center):
        raise InvalidParameter(f"center must be finite, got {center}.")


def _window_warnings(grid, waist):
    warnings = []
    if min(grid.width_x, grid.width_y) < MIN_WINDOW_WAISTS * waist:
        warnings.append(
            f"window {grid.width_x:g}x{grid.width_y:g} is smaller than "
            f"{MIN_WINDOW_WAISTS:g} waists ({waist:g}); orthonormality degrades"
        )
        logger.warning("Hermite-Gauss basis: %s", warnings[-1])
    return warnings


def hermite_gauss_mode(m, n, waist, grid, center=(0.0, 0.0), renormalize=True):
    """HG_mn at the waist plane, ``m`` along x and ``n`` along y."""
    _check_beam_parameters(waist, center)
    if m < 0 or n < 0:
        raise InvalidParameter(f"HG indices must be non-negative, got ({m}, {n}).")
    ux = _hg_profiles(m, grid.x, waist, center[0])[m]
    uy = _hg_profiles(n, grid.y, waist, center[1])[n]
    mode = SampledMode(grid, np.outer(uy, ux))
    return normalize(mode) if renormalize else mode


def hermite_gauss_basis(max_order, waist, grid, center=(0.0, 0.0), ortho_tol=ORTHO_TOL):
    """All HG_mn with m + n <= max_order, ordered by (m + n, m)."""
    _check_beam_parameters(waist, center)
    if max_order < 0:
        raise InvalidParameter(f"max_order must be >= 0, got {max_order}.")
    warnings = _window_warnings(grid, waist)
    ux = _hg_profiles(max_order, grid.x, waist, center[0])
    uy = _hg_profiles(max_order, grid.y, waist, center[1])

    modes, labels, tails = [], [], []
    for order in range(max_order + 1):
        for m in range(order + 1):
            n = order - m
            raw = SampledMode(grid, np.outer(uy[n], ux[m]))
            # the analytic profile has unit norm on the infinite plane
            tails.append(max(0.0, 1.0 - raw.norm() ** 2))
            modes.append(normalize(raw))
            labels.append(f"HG{m}{n}")

    error = orthonormality_error(modes)
    if error > ortho_tol:
        # truncation error is reported, not rejected
        warnings.append(
            f"orthonormality error {error:.3e} exceeds {ortho_tol:.1e}; "
            f"widen the window or lower max_order"
        )
        logger.warning("Hermite-Gauss basis: %s", warnings[-1])
    metadata = {
        "kind": "hermite_gauss",
        "waist": waist,
        "max_order": max_order,
        "labels": labels,
        "tail_residual": tails,
        "orthonormality_error": error,
        "warnings": warnings,
    }
    return ModeBasis(modes, ortho_tol=max(ortho_tol, error), metadata=metadata)


def orthonormality_error(modes):
    """max |<u_i, u_j> - delta_ij| over the given modes."""
    modes = list(modes)
    if not modes:
        return 0.0
    grid = check_same_grid(*modes)
    rows = np.stack([m.amplitude.ravel() for m in modes])
    gram = rows.conj() @ rows.T * grid.cell_area
    return float(np.max(np.abs(gram - np.eye(len(modes)))))


class ModeBasis:
    """Ordered orthonormal list of modes sharing one grid."""

    def __init__(self, modes, ortho_tol=ORTHO_TOL, metadata=None, grid=None):
        self.modes = tuple(modes)
        self.ortho_tol = ortho_tol
        self.metadata = dict(metadata or {})
        if self.modes:
            self.grid = check_same_grid(*self.modes)
        else:
            self.grid = grid
        error = self.orthonormality_error()
        if error > ortho_tol:
            raise InvalidMode(
                f"Basis is not orthonormal: max |<u_i,u_j> - delta_ij| = {error:.3e} "
                f"exceeds {ortho_tol:.1e}."
            )

    def __len__(self):
        return len(self.modes)

    def __iter__(self):
        return iter(self.modes)

    def __getitem__(self, index):
        return self.modes[index]

    def matrix(self):
        """Modes as rows of a ``(k, ny*nx)`` array."""
        if not self.modes:
            return np.zeros((0, 0), dtype=complex)
        return np.stack([m.amplitude.ravel() for m in self.modes])

    def orthonormality_error(self):
        return orthonormality_error(self.modes)

    def coefficients(self, mode):
        """Overlaps <u_i, mode> for every basis member."""
        if self.modes:
            check_same_grid(self.modes[0], mode)
        return self.matrix().conj() @ mode.amplitude.ravel() * self.grid.cell_area

    def synthesize(self, coefficients):
        return combine(self.modes, coefficients)

    def __repr__(self):
        return f"ModeBasis({len(self)} modes on {self.grid})"


def _orthogonalize(vector, accepted, cell_area):
    # two passes of modified Gram-Schmidt
    for _ in range(2):
        for q in accepted:
            vector = vector - np.vdot(q, vector) * cell_area * q
    return vector


def gram_schmidt(raw, tol=GS_TOL, ortho_tol=ORTHO_TOL):
    """Orthonormalize ``raw`` in order, dropping numerically dependent members."""
    raw = list(raw)
    if not raw:
        return ModeBasis([], ortho_tol=ortho_tol, metadata={"rank": 0, "dropped": []})
    grid = check_same_grid(*raw)
    accepted, dropped = [], []
    for index, mode in enumerate(raw):
        input_norm = mode.norm()
        residual = _orthogonalize(mode.amplitude.ravel(), accepted, grid.cell_area)
        residual_norm = math.sqrt(float(np.vdot(residual, residual).real) * grid.cell_area)
        if input_norm == 0 or residual_norm < tol * input_norm:
            dropped.append(index)
            continue
        accepted.append(residual / residual_norm)
    if dropped:
        logger.debug("Gram-Schmidt dropped dependent inputs %s", dropped)
    modes = [SampledMode(grid, v.reshape(grid.shape)) for v in accepted]
    return ModeBasis(
        modes,
        ortho_tol=ortho_tol,
        metadata={"rank": len(modes), "dropped": dropped},
        grid=grid,
    )


def complete_basis(partial, pool, dimension=None, tol=GS_TOL):
    """Extend ``partial`` with pool members until ``dimension`` is reached.

    The first ``len(partial)`` modes are returned untouched; pool order is
    preserved. ``dimension`` defaults to ``len(pool)``.
    """
    members = list(partial) + list(pool)
    if not members:
        return ModeBasis([], metadata={"requested_dimension": 0, "achieved_dimension": 0})
    grid = check_same_grid(*members)
    target = len(pool) if dimension is None else dimension
    target = max(target, len(partial))

    accepted = [m.amplitude.ravel() for m in partial]
    modes = list(partial)
    for mode in pool:
        if len(modes) >= target:
            break
        input_norm = mode.norm()
        residual = _orthogonalize(mode.amplitude.ravel(), accepted, grid.cell_area)
        residual_norm = math.sqrt(float(np.vdot(residual, residual).real) * grid.cell_area)
        if input_norm == 0 or residual_norm < tol * input_norm:
            continue
        vector = residual / residual_norm
        accepted.append(vector)
        modes.append(SampledMode(grid, vector.reshape(grid.shape)))

    metadata = {
        "requested_dimension": target,
        "achieved_dimension": len(modes),
        "rank_deficit": target - len(modes),
    }
    if len(modes) < target:
        logger.warning(
            "Basis completion reached dimension %d of %d requested; pool rank is insufficient.",
            len(modes), target,
        )
    ortho_tol = max(getattr(partial, "ortho_tol", ORTHO_TOL), getattr(pool, "ortho_tol", ORTHO_TOL))
    return ModeBasis(modes, ortho_tol=ortho_tol, metadata=metadata, grid=grid)
