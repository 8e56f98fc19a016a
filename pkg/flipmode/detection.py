# flipmode/detection.py
"""Noise of linear multipixel measurements and the mode that carries it.

The measurement is ``N_sigma = sum_j sigma_j N(D_j)``. In the linearized
regime its fluctuations are ``sum_i (C_i da_i^dag + c.c.)`` with
``C_i = sum_j sigma_j int_{D_j} u_i^* A_psi``. The variance is computed two
independent ways: directly from the correlators in the working basis, and
from the X quadrature of the detection mode ``w1 = sigma v0 / f`` after
changing to a basis that contains it. The two must agree.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BasisMismatchError,
    DegenerateMeasurement,
    FlipmodeError,
    InvalidLayout,
    InvalidParameter,
    NotADifferenceMeasurement,
)
from .gaussian_state import (
    GaussianState,
    SqueezerSpec,
    basis_change,
    complete_columns,
    make_state,
    mean_field_mode,
)
from .modes import (
    GS_TOL,
    ModeBasis,
    SampledMode,
    check_same_grid,
    complete_basis,
    gram_schmidt,
    normalize,
    overlap,
)

logger = logging.getLogger(__name__)

DIFFERENCE_TOL = 1e-8
DUAL_PATH_RTOL = 1e-8
TWO_ZONE_TOL = 1e-10
LINEARIZATION_MIN_N0 = 100.0
RESIDUAL_TOL = 1e-12


def pixel_integrals(v0, layout):
    """Fraction of ``|v0|^2`` falling on each pixel."""
    grid = check_same_grid(v0, layout)
    weights = v0.intensity.ravel() * grid.cell_area
    return np.bincount(layout.pixel_of_cell.ravel(), weights=weights, minlength=layout.n_pixels)


@dataclass(frozen=True)
class DetectionMode:
    w1: SampledMode
    f: float
    is_difference: bool
    # <w1, v0>; real for real gains, proportional to the measurement mean
    mean_overlap: complex = 0j


def detection_mode(v0, layout, tol=DIFFERENCE_TOL):
    """Generalized flipped mode ``w1 = sigma_i v0 / f`` on pixel ``i``."""
    integrals = pixel_integrals(v0, layout)
    gains = layout.gains
    f2 = float(np.sum(gains ** 2 * integrals))
    if f2 <= 0:
        raise DegenerateMeasurement(
            "All gains vanish on the support of v0 (f = 0); the detection mode is undefined."
        )
    f = math.sqrt(f2)
    w1 = SampledMode(v0.grid, layout.gain_map() * v0.amplitude / f)
    signal = float(np.sum(gains * integrals))
    return DetectionMode(
        w1=w1,
        f=f,
        is_difference=abs(signal) <= tol,
        mean_overlap=overlap(w1, v0),
    )


def _check_dimensions(state, basis, layout):
    if state.dim != len(basis):
        raise InvalidParameter(f"State dimension {state.dim} does not match basis size {len(basis)}.")
    if len(basis):
        check_same_grid(basis[0], layout)


def _coefficients(v0, n0, basis, layout):
    # C_i = sum_j sigma_j int_{D_j} u_i^* A_psi with A_psi = sqrt(N0) v0
    weighted = SampledMode(v0.grid, layout.gain_map() * math.sqrt(n0) * v0.amplitude)
    return basis.coefficients(weighted)


def overlap_coefficients(state, basis, layout):
    """Generalized overlap integrals ``C_sigma^i`` of the mean field."""
    _check_dimensions(state, basis, layout)
    v0, n0 = mean_field_mode(state, basis)
    return _coefficients(v0, n0, basis, layout)


@dataclass(frozen=True)
class MeasurementReport:
    mean: float
    variance: float
    shot_noise: float
    sql_ratio: float
    detection_mode: DetectionMode
    n0: float
    method: str
    linearized: bool = True

    @property
    def f(self):
        return self.detection_mode.f

    def to_dict(self, export_path=None):
        return {
            "mean": self.mean,
            "variance": self.variance,
            "shot_noise": self.shot_noise,
            "sql_ratio": self.sql_ratio,
            "f": self.f,
            "is_difference": self.detection_mode.is_difference,
            "detection_mode_export_path": export_path,
        }


def _report(v0, n0, layout, detection, variance, method):
    integrals = pixel_integrals(v0, layout)
    shot_noise = detection.f ** 2 * n0
    linearized = n0 >= LINEARIZATION_MIN_N0
    if not linearized:
        logger.warning(
            "N0 = %.3g is below %.0f photons; the linearized noise formula may not hold.",
            n0, LINEARIZATION_MIN_N0,
        )
    return MeasurementReport(
        mean=n0 * float(np.sum(layout.gains * integrals)),
        variance=float(variance),
        shot_noise=shot_noise,
        sql_ratio=float(variance) / shot_noise,
        detection_mode=detection,
        n0=n0,
        method=method,
        linearized=linearized,
    )


def excess_noise(coefficients, state):
    """Normal-ordered part of the variance: 2 Re[C^T M^* C + C^T N C^*]."""
    n, m = state.normal_correlators()
    c = np.asarray(coefficients, dtype=complex)
    return 2.0 * float(np.real(c @ m.conj() @ c + c @ n @ c.conj()))


def variance_direct(state, basis, layout, tol=DIFFERENCE_TOL):
    """Variance from the correlators of the working basis.

    The vacuum term ``sum_i |C_i|^2`` is taken as ``N0 f^2`` directly, which is
    what the completeness relation gives on the untruncated basis.
    """
    _check_dimensions(state, basis, layout)
    v0, n0 = mean_field_mode(state, basis)
    detection = detection_mode(v0, layout, tol)
    coefficients = _coefficients(v0, n0, basis, layout)
    variance = n0 * detection.f ** 2 + excess_noise(coefficients, state)
    return _report(v0, n0, layout, detection, variance, method="direct")


@dataclass(frozen=True)
class DetectionFrame:
    """Basis {w0 or v0, w1, ...} and the state expressed in it.

    When ``w1`` leaves the span of the working basis, one vacuum mode holding
    the outside part of ``w1`` is appended before the change of basis.
    """
    unitary: np.ndarray
    state: GaussianState
    detection_slot: int
    mean_slot: int
    v0: SampledMode
    n0: float
    detection: DetectionMode
    residual: SampledMode = None
    columns: np.ndarray = field(default=None, repr=False)

    @property
    def augmented(self):
        return self.residual is not None

    def modes(self, basis):
        """Frame modes sampled on the grid, in frame order."""
        members = list(basis) + ([self.residual] if self.augmented else [])
        rows = np.stack([m.amplitude.ravel() for m in members])
        grid = self.v0.grid
        return [
            SampledMode(grid, (self.columns[:, k] @ rows).reshape(grid.shape))
            for k in range(self.columns.shape[1])
        ]

    def basis(self, basis):
        dim = self.columns.shape[1]
        return ModeBasis(
            self.modes(basis),
            ortho_tol=max(basis.ortho_tol, 1e-6) * max(1, dim),
            metadata={"kind": "detection_frame", "detection_slot": self.detection_slot},
        )


def _outside_part(w1, basis):
    vector = w1.amplitude.ravel()
    area = w1.grid.cell_area
    for _ in range(2):
        for u in basis:
            q = u.amplitude.ravel()
            vector = vector - np.vdot(q, vector) * area * q
    return SampledMode(w1.grid, vector.reshape(w1.grid.shape))


def detection_frame(state, basis, layout, tol=DIFFERENCE_TOL):
    _check_dimensions(state, basis, layout)
    v0, n0 = mean_field_mode(state, basis)
    detection = detection_mode(v0, layout, tol)

    w1 = basis.coefficients(detection.w1)
    mean_dir = state.mean / math.sqrt(n0)
    outside = 1.0 - float(np.vdot(w1, w1).real)
    residual = None
    work_state = state
    if outside > RESIDUAL_TOL:
        w1 = np.append(w1, math.sqrt(outside))
        mean_dir = np.append(mean_dir, 0.0)
        work_state = state.augmented(1)
        residual = normalize(_outside_part(detection.w1, basis))
    w1 = w1 / np.linalg.norm(w1)

    w0 = mean_dir - np.vdot(w1, mean_dir) * w1
    w0_norm = np.linalg.norm(w0)
    if w0_norm > 1e-10:
        columns = [w0 / w0_norm, w1]
        mean_slot, detection_slot = 0, 1
    else:
        # v0 and w1 coincide (uniform gains)
        columns = [w1]
        mean_slot, detection_slot = 0, 0
    q = complete_columns(columns, work_state.dim)
    unitary = q.conj().T
    return DetectionFrame(
        unitary=unitary,
        state=basis_change(work_state, unitary),
        detection_slot=detection_slot,
        mean_slot=mean_slot,
        v0=v0,
        n0=n0,
        detection=detection,
        residual=residual,
        columns=q,
    )


def variance_via_detection_mode(state, basis, layout, tol=DIFFERENCE_TOL):
    """Variance as ``f^2 N0 Var(X)`` of the detection-mode quadrature."""
    frame = detection_frame(state, basis, layout, tol)
    k = frame.detection_slot
    variance = frame.detection.f ** 2 * frame.n0 * frame.state.cov[2 * k, 2 * k]
    return _report(frame.v0, frame.n0, layout, frame.detection, variance, method="detection_mode")


@dataclass(frozen=True)
class DualPathResult:
    direct: MeasurementReport
    via_detection_mode: MeasurementReport
    relative_discrepancy: float
    agrees: bool


def dual_path(state, basis, layout, tol=DIFFERENCE_TOL, rtol=DUAL_PATH_RTOL):
    direct = variance_direct(state, basis, layout, tol)
    via = variance_via_detection_mode(state, basis, layout, tol)
    scale = max(abs(direct.variance), abs(via.variance), direct.shot_noise)
    discrepancy = abs(direct.variance - via.variance) / scale
    agrees = discrepancy <= rtol
    if not agrees:
        logger.error(
            "Dual-path variance mismatch: direct=%.12g detection_mode=%.12g (rel %.3e)",
            direct.variance, via.variance, discrepancy,
        )
    return DualPathResult(direct, via, discrepancy, agrees)


def inject_detection_squeezing(state, basis, layout, r, angle=0.0, tol=DIFFERENCE_TOL):
    """Rebuild the state in the detection frame with w1 squeezed.

    Returns the frame basis and the new state; the w1 slot keeps its mean and
    loses its correlations with the other modes.
    """
    frame = detection_frame(state, basis, layout, tol)
    squeezer = SqueezerSpec(frame.detection_slot, r, angle)
    new_state = frame.state.with_mode_block(frame.detection_slot, squeezer.block())
    return frame.basis(basis), new_state


@dataclass(frozen=True)
class MeasurementPlan:
    state: GaussianState
    basis: ModeBasis
    reports: list
    rank: int
    dependent_layouts: bool
    dropped: tuple = ()
    real_modes: bool = True

    def __iter__(self):
        # unpacks as (state, basis, reports)
        return iter((self.state, self.basis, self.reports))


def _real_up_to_phase(modes):
    peak = modes[0].amplitude.flat[np.argmax(np.abs(modes[0].amplitude))]
    phase = np.conj(peak) / abs(peak)
    return all(mode.scaled(phase).is_real() for mode in modes)


def multi_measurement_plan(v0, layouts, r, pool, n0=1e4, tol=DIFFERENCE_TOL, gs_tol=GS_TOL):
    """Squeezing plan beating the shot noise on several difference measurements.

    The flipped modes are orthonormalized against v0 and each other; every
    mode of that subspace receives squeezed vacuum along X.
    """
    layouts = list(layouts)
    if not layouts:
        raise InvalidParameter("A measurement plan needs at least one layout.")
    if n0 <= 0:
        raise InvalidParameter(f"N0 must be positive, got {n0}.")
    v0 = normalize(v0)
    flipped = []
    for layout in layouts:
        detection = detection_mode(v0, layout, tol)
        if not detection.is_difference:
            raise NotADifferenceMeasurement(detection.mean_overlap.real)
        flipped.append(detection.w1)

    subspace = gram_schmidt([v0] + flipped, tol=gs_tol)
    rank = len(subspace) - 1
    dropped = tuple(index - 1 for index in subspace.metadata["dropped"])
    dependent = rank < len(layouts)
    if dependent:
        logger.warning(
            "Flipped modes of layouts %s are linear combinations of the others; "
            "using the rank-%d independent subset.", list(dropped), rank,
        )

    real_modes = _real_up_to_phase([v0] + flipped)
    if not real_modes:
        logger.warning("Complex mode functions: the e^-2r squeezing bound is not guaranteed.")

    basis = complete_basis(subspace, pool, dimension=max(len(pool), len(subspace)))
    state = make_state(
        len(basis),
        coherent=[(0, math.sqrt(n0))],
        squeezers=[SqueezerSpec(k, r, 0.0) for k in range(1, rank + 1)],
    )
    reports = [variance_direct(state, basis, layout, tol) for layout in layouts]
    return MeasurementPlan(state, basis, reports, rank, dependent, dropped, real_modes)


@dataclass(frozen=True)
class TwoZoneDecomposition:
    i_plus: float
    i_minus: float
    alpha: float
    beta: float
    w0: SampledMode
    w1: SampledMode
    v0: SampledMode
    v1: SampledMode
    w1_v0_overlap: complex

    @property
    def f2(self):
        return self.i_plus + self.i_minus


def two_zone_decomposition(v0, layout, tol=TWO_ZONE_TOL):
    """Eigenbasis structure of a +1/-1 two-zone measurement with nonzero mean."""
    gains = sorted(layout.gains.tolist())
    if layout.n_pixels != 2 or gains != [-1.0, 1.0]:
        raise InvalidLayout(f"Two-zone decomposition needs two pixels with gains +1 and -1, got {layout.gains.tolist()}.")
    v0 = normalize(v0)
    plus = int(np.argmax(layout.gains))
    minus = 1 - plus
    integrals = pixel_integrals(v0, layout)
    i_plus, i_minus = float(integrals[plus]), float(integrals[minus])
    if i_plus <= 0 or i_minus <= 0:
        raise DegenerateMeasurement(
            f"Zone integrals i+={i_plus:.3e}, i-={i_minus:.3e}: w0 is undefined with an empty zone."
        )

    alpha = i_plus - i_minus
    beta = 2.0 * math.sqrt(i_plus * i_minus)
    on_plus = layout.pixel_mask(plus)
    w0 = SampledMode(
        v0.grid,
        np.where(on_plus, math.sqrt(i_minus / i_plus), math.sqrt(i_plus / i_minus)) * v0.amplitude,
    )
    v1 = SampledMode(v0.grid, np.where(on_plus, 1.0, -1.0) * w0.amplitude)
    w1 = SampledMode(v0.grid, layout.gain_map() * v0.amplitude)

    rebuilt = alpha * v0.amplitude + beta * v1.amplitude
    mismatch = float(np.max(np.abs(w1.amplitude - rebuilt)))
    if mismatch > tol * max(1.0, float(np.max(np.abs(w1.amplitude)))):
        raise FlipmodeError(f"Two-zone identity w1 = alpha v0 + beta v1 violated by {mismatch:.3e}.")

    return TwoZoneDecomposition(
        i_plus=i_plus,
        i_minus=i_minus,
        alpha=alpha,
        beta=beta,
        w0=w0,
        w1=w1,
        v0=v0,
        v1=v1,
        w1_v0_overlap=overlap(w1, v0),
    )


def two_zone_basis(decomposition, pool):
    """Eigenbasis {v0, v1, ...} completed from ``pool``."""
    partial = ModeBasis([decomposition.v0, decomposition.v1], ortho_tol=1e-8)
    return complete_basis(partial, pool, dimension=max(len(pool), 2))


def two_zone_variance_decomposition(state, decomposition, basis=None, tol=1e-6):
    """``f^2 N0 [a^2 Var X0 + b^2 Var X1 + 2ab Cov(X0, X1)]`` in the eigenbasis."""
    if state.dim < 2:
        raise BasisMismatchError("Two-zone decomposition needs a state with at least two modes.")
    if basis is not None:
        if len(basis) != state.dim:
            raise BasisMismatchError(f"Basis size {len(basis)} does not match state dimension {state.dim}.")
        for k, expected in ((0, decomposition.v0), (1, decomposition.v1)):
            projection = overlap(basis[k], expected)
            if abs(projection - 1.0) > tol:
                raise BasisMismatchError(f"Basis mode {k} is not the expected eigenbasis mode (overlap {projection:.6g}).")
    n0 = state.n0
    lead = state.mean[0]
    if abs(lead.imag) > tol * max(1.0, abs(lead)) or np.any(np.abs(state.mean[1:]) > tol * max(1.0, abs(lead))):
        raise BasisMismatchError("State mean is not (sqrt(N0), 0, ...); express it in the eigenbasis first.")

    a, b = decomposition.alpha, decomposition.beta
    cov = state.cov
    quadrature = a * a * cov[0, 0] + b * b * cov[2, 2] + 2 * a * b * cov[0, 2]
    return decomposition.f2 * n0 * float(quadrature)
