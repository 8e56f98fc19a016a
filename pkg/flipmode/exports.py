# flipmode/exports.py
"""Mode profiles, bases and states on disk.

Modes export as CSV (``x, y, re, im`` per cell, row-major) or as 8-bit PGM
intensity maps. Bases travel as ``.npz`` archives, states as JSON documents.
"""

import json
import logging
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidMode, InvalidParameter
from .gaussian_state import GaussianState, SqueezerSpec, make_state
from .modes import ORTHO_TOL, Grid, ModeBasis, SampledMode

logger = logging.getLogger(__name__)

CSV_HEADER = "x,y,re,im"


def export_mode_csv(mode, path):
    path = Path(path)
    x, y = mode.grid.mesh()
    amplitude = mode.amplitude
    table = np.column_stack([x.ravel(), y.ravel(), amplitude.real.ravel(), amplitude.imag.ravel()])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=CSV_HEADER, comments="")
    return path


def _axis_from_centers(values):
    centers = np.unique(values)
    if centers.size < 2:
        raise InvalidMode("A mode file needs at least two samples per axis.")
    width = (centers[-1] - centers[0]) * centers.size / (centers.size - 1)
    return centers.size, float(width)


def import_mode_csv(path):
    table = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    if table.shape[1] != 4:
        raise InvalidMode(f"'{path}' must have four columns ({CSV_HEADER}).")
    nx, width_x = _axis_from_centers(table[:, 0])
    ny, width_y = _axis_from_centers(table[:, 1])
    if table.shape[0] != nx * ny:
        raise InvalidMode(f"'{path}' holds {table.shape[0]} rows, expected {nx}x{ny}.")
    grid = Grid(nx=nx, ny=ny, width_x=width_x, width_y=width_y)
    amplitude = (table[:, 2] + 1j * table[:, 3]).reshape(grid.shape)
    return SampledMode(grid, amplitude)


def intensity_image(mode):
    """``|amp|^2`` scaled linearly to 0..255, top image row at largest y."""
    intensity = mode.intensity
    peak = float(intensity.max())
    scaled = np.zeros_like(intensity) if peak == 0 else intensity / peak * 255.0
    return np.rint(scaled).astype(np.uint8)[::-1, :]


def export_mode_pgm(mode, path):
    path = Path(path)
    Image.fromarray(intensity_image(mode)).save(path, format="PPM")
    return path


EXPORTERS = {
    "csv": export_mode_csv,
    "pgm": export_mode_pgm,
}


def export_modes(modes, directory, fmt="csv"):
    """Write ``{name: mode}`` profiles into ``directory``; returns the paths."""
    if fmt not in EXPORTERS:
        raise InvalidParameter(f"Unknown export format '{fmt}'; expected one of {sorted(EXPORTERS)}.")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, mode in modes.items():
        paths[name] = EXPORTERS[fmt](mode, directory / f"{name}.{fmt}")
        logger.debug("Exported %s to %s", name, paths[name])
    return paths


def save_basis(basis, path):
    path = Path(path)
    np.savez(
        path,
        amplitudes=np.stack([m.amplitude for m in basis]),
        width_x=basis.grid.width_x,
        width_y=basis.grid.width_y,
    )
    return path


def load_basis(path, ortho_tol=ORTHO_TOL):
    with np.load(Path(path)) as archive:
        amplitudes = np.asarray(archive["amplitudes"], dtype=complex)
        width_x = float(archive["width_x"])
        width_y = float(archive["width_y"])
    if amplitudes.ndim != 3:
        raise InvalidMode(f"'{path}': 'amplitudes' must have shape (modes, ny, nx).")
    grid = Grid(nx=amplitudes.shape[2], ny=amplitudes.shape[1], width_x=width_x, width_y=width_y)
    modes = [SampledMode(grid, a) for a in amplitudes]
    return ModeBasis(modes, ortho_tol=ortho_tol, metadata={"kind": "file", "path": str(path)})


def state_to_document(state, squeezers=()):
    return {
        "dim": state.dim,
        "mean": [[float(a.real), float(a.imag)] for a in state.mean],
        "squeezers": [
            {"mode": s.mode_index, "r": s.r, "angle": s.angle} for s in squeezers
        ],
        "cov": state.cov.tolist(),
    }


def state_from_document(document):
    """Build a state from ``{dim, mean, squeezers, cov?}``; ``cov`` overrides."""
    dim = int(document["dim"])
    mean = document.get("mean", [])
    if len(mean) not in (0, dim):
        raise InvalidParameter(f"'mean' has {len(mean)} entries for dimension {dim}.")
    coherent = [(k, complex(re, im)) for k, (re, im) in enumerate(mean) if re or im]
    squeezers = [
        SqueezerSpec(int(s["mode"]), float(s["r"]), float(s.get("angle", 0.0)))
        for s in document.get("squeezers", [])
    ]
    state = make_state(dim, coherent=coherent, squeezers=squeezers)
    if document.get("cov") is not None:
        state = GaussianState(state.mean, np.asarray(document["cov"], dtype=float))
    return state


def load_state(path):
    with open(Path(path), encoding="utf-8") as handle:
        return state_from_document(json.load(handle))


def save_state(state, path, squeezers=()):
    path = Path(path)
    path.write_text(json.dumps(state_to_document(state, squeezers), indent=2), encoding="utf-8")
    return path
