# flipmode/gaussian_state.py
"""Multimode Gaussian states relative to a mode basis.

Quadratures are interleaved ``(X_0, Y_0, X_1, Y_1, ...)`` with
``X = a + a^dagger`` and ``Y = i(a^dagger - a)``, so the vacuum covariance is
the identity and ``[X, Y] = 2i``. The mean vector holds the complex
amplitudes ``<a_i>`` in units of sqrt(photons per exposure).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidParameter, InvalidState, NonUnitaryError, ZeroMeanFieldError
from .modes import ModeBasis

logger = logging.getLogger(__name__)

RANK_TOL = 1e-8
SYMMETRY_TOL = 1e-10
PHYSICALITY_TOL = 1e-8
UNITARITY_TOL = 1e-8


def symplectic_form(dim):
    """Interleaved symplectic form, one ``[[0, 1], [-1, 0]]`` block per mode."""
    return np.kron(np.eye(dim), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def squeezed_block(r, angle=0.0):
    """2x2 covariance of squeezed vacuum; ``angle=0`` squeezes X."""
    rot = rotation(angle)
    return rot @ np.diag([math.exp(-2 * r), math.exp(2 * r)]) @ rot.T


@dataclass(frozen=True)
class SqueezerSpec:
    mode_index: int
    r: float
    angle: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.r) or not math.isfinite(self.angle):
            raise InvalidParameter(f"Squeezer parameters must be finite, got r={self.r}, angle={self.angle}.")

    def block(self):
        return squeezed_block(self.r, self.angle)


class GaussianState:
    """Mean amplitudes and quadrature covariance of an n-mode Gaussian state."""

    def __init__(self, mean, cov, validate=True):
        mean = np.array(mean, dtype=complex).reshape(-1)
        cov = np.array(cov, dtype=float)
        if validate:
            self._validate(mean, cov)
        mean.setflags(write=False)
        cov.setflags(write=False)
        self._mean = mean
        self._cov = cov

    @staticmethod
    def _validate(mean, cov):
        dim = mean.shape[0]
        expected = (2 * dim, 2 * dim)
        if cov.shape != expected:
            raise InvalidState(f"Invalid 'cov' matrix shape; expected={expected}, actual={cov.shape}.")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidState("Mean and covariance must be finite.")
        asymmetry = float(np.max(np.abs(cov - cov.T))) if dim else 0.0
        if asymmetry > SYMMETRY_TOL:
            raise InvalidState(f"The covariance matrix is not symmetric (max deviation {asymmetry:.3e}).")
        if dim:
            lowest = float(np.min(linalg.eigvalsh(cov + 1j * symplectic_form(dim))))
            if lowest < -PHYSICALITY_TOL:
                raise InvalidState(
                    "The covariance matrix violates the uncertainty relation "
                    f"(min eigenvalue of V + i*Omega is {lowest:.3e})."
                )

    @property
    def dim(self):
        return self._mean.shape[0]

    @property
    def mean(self):
        return self._mean

    @property
    def cov(self):
        return self._cov

    @property
    def n0(self):
        """Total mean photon number carried by the mean field."""
        return float(np.sum(np.abs(self._mean) ** 2))

    def block(self, k):
        return self._cov[2 * k:2 * k + 2, 2 * k:2 * k + 2]

    def normal_correlators(self):
        """``N_ij = <da_i^dag da_j>`` and ``M_ij = <da_i da_j>`` assembled from V."""
        v = self._cov
        xx = v[0::2, 0::2]
        yy = v[1::2, 1::2]
        xy = v[0::2, 1::2]
        yx = v[1::2, 0::2]
        n = (xx + yy + 1j * (xy - yx)) / 4 - np.eye(self.dim) / 2
        m = (xx - yy + 1j * (xy + yx)) / 4
        return n, m

    def photon_numbers(self):
        n, _ = self.normal_correlators()
        return np.abs(self._mean) ** 2 + np.real(np.diag(n))

    def augmented(self, extra):
        """The same state with ``extra`` vacuum modes appended."""
        if extra == 0:
            return self
        mean = np.concatenate([self._mean, np.zeros(extra, dtype=complex)])
        cov = np.eye(2 * (self.dim + extra))
        cov[:2 * self.dim, :2 * self.dim] = self._cov
        return GaussianState(mean, cov, validate=False)

    def with_mode_block(self, k, block):
        """Replace mode ``k``'s covariance block, dropping its cross-correlations."""
        cov = np.array(self._cov)
        cov[2 * k:2 * k + 2, :] = 0.0
        cov[:, 2 * k:2 * k + 2] = 0.0
        cov[2 * k:2 * k + 2, 2 * k:2 * k + 2] = block
        return GaussianState(self._mean, cov)

    def allclose(self, other, atol=1e-10):
        return (
            self.dim == other.dim
            and np.allclose(self._mean, other.mean, atol=atol, rtol=0)
            and np.allclose(self._cov, other.cov, atol=atol, rtol=0)
        )

    def __repr__(self):
        return f"GaussianState(dim={self.dim}, n0={self.n0:.6g})"


def vacuum(dim):
    return GaussianState(np.zeros(dim, dtype=complex), np.eye(2 * dim), validate=False)


def _check_index(index, dim, what):
    if int(index) != index or not 0 <= index < dim:
        raise InvalidParameter(f"{what} index {index} out of range for dimension {dim}.")


def make_state(dim, coherent=(), squeezers=()):
    """Product of coherent amplitudes and single-mode squeezed blocks."""
    if dim < 0:
        raise InvalidParameter(f"dim must be non-negative, got {dim}.")
    mean = np.zeros(dim, dtype=complex)
    seen = set()
    for index, amplitude in coherent:
        _check_index(index, dim, "Coherent")
        if index in seen:
            raise InvalidParameter(f"Duplicate coherent amplitude for mode {index}.")
        seen.add(index)
        mean[index] = complex(amplitude)

    cov = np.eye(2 * dim)
    squeezed = set()
    for squeezer in squeezers:
        k = squeezer.mode_index
        _check_index(k, dim, "Squeezer")
        if k in squeezed:
            raise InvalidParameter(f"Duplicate squeezer for mode {k}.")
        squeezed.add(k)
        cov[2 * k:2 * k + 2, 2 * k:2 * k + 2] = squeezer.block()
    return GaussianState(mean, cov)


def unitarity_deviation(u):
    u = np.asarray(u, dtype=complex)
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0])))) if u.size else 0.0


def check_unitary(u, tol=UNITARITY_TOL):
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NonUnitaryError(float("inf"))
    deviation = unitarity_deviation(u)
    if deviation > tol:
        raise NonUnitaryError(deviation)
    return u


def passive_symplectic(u):
    """Real orthogonal-symplectic image of ``b = U a`` on interleaved quadratures."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    o = np.empty((2 * dim, 2 * dim))
    o[0::2, 0::2] = u.real
    o[0::2, 1::2] = -u.imag
    o[1::2, 0::2] = u.imag
    o[1::2, 1::2] = u.real
    return o


def basis_change(state, u, tol=UNITARITY_TOL):
    """Passive mode mixing: mean -> U mean, V -> O V O^T."""
    u = check_unitary(u, tol)
    if u.shape[0] != state.dim:
        raise InvalidParameter(f"Unitary of size {u.shape[0]} does not match state dimension {state.dim}.")
    o = passive_symplectic(u)
    cov = o @ state.cov @ o.T
    return GaussianState(u @ state.mean, (cov + cov.T) / 2)


def beam_splitter(dim, i, j, theta=math.pi / 4, phi=0.0):
    """Unitary mixing modes ``i`` and ``j``; ``theta = pi/4`` is 50/50."""
    _check_index(i, dim, "Beam splitter")
    _check_index(j, dim, "Beam splitter")
    if i == j:
        raise InvalidParameter("Beam splitter needs two distinct modes.")
    u = np.eye(dim, dtype=complex)
    c, s = math.cos(theta), math.sin(theta)
    u[i, i] = c
    u[i, j] = -np.exp(-1j * phi) * s
    u[j, i] = np.exp(1j * phi) * s
    u[j, j] = c
    return u


def mean_field_mode(state, basis):
    """Normalized mean-field mode v0 = sum <a_i> u_i / sqrt(N0), and N0."""
    if state.dim != len(basis):
        raise InvalidParameter(f"State dimension {state.dim} does not match basis size {len(basis)}.")
    n0 = state.n0
    if n0 == 0:
        raise ZeroMeanFieldError()
    v0 = basis.synthesize(state.mean / math.sqrt(n0))
    return v0.scaled(1.0 / v0.norm()), n0


def fluctuation_span(state):
    """Columns spanning the non-vacuum subspace: mean, A - I and B."""
    n, m = state.normal_correlators()
    # A_ij - delta_ij = <da_i da_j^dag> - delta_ij = N_ji
    return np.column_stack([state.mean, n.T, m])


def _rank_threshold(singular_values, tol):
    largest = float(singular_values[0]) if singular_values.size else 0.0
    return tol * max(largest, 1.0)


def degree(state, tol=RANK_TOL):
    """Minimum number of non-vacuum modes needed to describe the state."""
    if state.dim == 0:
        return 0
    singular = linalg.svd(fluctuation_span(state), compute_uv=False)
    return int(np.sum(singular > _rank_threshold(singular, tol)))


def is_single_mode(state, tol=RANK_TOL):
    return degree(state, tol) <= 1


def complete_columns(columns, dim, tol=1e-10):
    """Extend orthonormal ``columns`` to a ``dim x dim`` unitary.

    Standard basis vectors are tried in order, so vectors already orthogonal to
    the given columns are kept as they are.
    """
    accepted = [np.asarray(c, dtype=complex) for c in columns]
    for k in range(dim):
        if len(accepted) == dim:
            break
        vector = np.zeros(dim, dtype=complex)
        vector[k] = 1.0
        for _ in range(2):
            for q in accepted:
                vector = vector - np.vdot(q, vector) * q
        norm = np.linalg.norm(vector)
        if norm > tol:
            accepted.append(vector / norm)
    return np.column_stack(accepted) if accepted else np.zeros((dim, 0), dtype=complex)


def non_vacuum_modes(state, tol=RANK_TOL):
    """Indices of modes with mean field, squeezing/excess noise or correlations."""
    mean_scale = tol * max(1.0, math.sqrt(state.n0))
    cov_scale = tol * max(1.0, float(np.max(np.abs(state.cov))) if state.dim else 1.0)
    deviation = np.abs(state.cov - np.eye(2 * state.dim))
    indices = []
    for k in range(state.dim):
        rows = deviation[2 * k:2 * k + 2, :]
        if abs(state.mean[k]) > mean_scale or np.max(rows) > cov_scale:
            indices.append(k)
    return indices


def eigenbasis(state, basis, tol=RANK_TOL):
    """Minimum basis whose first mode carries the whole mean field.

    Returns the new basis and the state expressed in it; the transformed
    mean is ``(sqrt(N0), 0, ..., 0)``.
    """
    if state.dim != len(basis):
        raise InvalidParameter(f"State dimension {state.dim} does not match basis size {len(basis)}.")
    n0 = state.n0
    if n0 == 0:
        raise ZeroMeanFieldError()
    q0 = state.mean / math.sqrt(n0)
    span = fluctuation_span(state)
    residual = span - np.outer(q0, q0.conj() @ span)
    extra = degree(state, tol) - 1
    columns = [q0]
    if extra > 0:
        left, _, _ = linalg.svd(residual)
        columns.extend(left[:, k] for k in range(extra))
    q = complete_columns(columns, state.dim)

    transformed = basis_change(state, q.conj().T)
    modes = [basis.synthesize(q[:, k]) for k in range(state.dim)]
    new_basis = ModeBasis(
        modes,
        ortho_tol=basis.ortho_tol * max(1, state.dim),
        metadata={"kind": "eigenbasis", "degree": extra + 1},
    )
    logger.debug("Eigenbasis built: degree %d in dimension %d", extra + 1, state.dim)
    return new_basis, transformed
