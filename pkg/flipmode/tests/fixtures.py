import json
import math
import tempfile
from pathlib import Path

import numpy as np
from scipy.stats import unitary_group

from flipmode.gaussian_state import SqueezerSpec, basis_change, make_state
from flipmode.modes import Grid, hermite_gauss_basis

N0 = 1e4
E_MINUS_2 = math.exp(-2.0)


def small_grid(n=64, width=8.0):
    return Grid(nx=n, ny=n, width_x=width, width_y=width)


def hg_basis(max_order=2, grid=None, waist=1.0):
    return hermite_gauss_basis(max_order, waist, grid or small_grid())


def coherent_state(dim, n0=N0):
    return make_state(dim, coherent=[(0, math.sqrt(n0))])


def random_state(dim, rng, n0=N0, max_r=1.0):
    """Coherent HG00 plus squeezers on random modes, mixed by a random unitary."""
    squeezed = rng.choice(dim, size=rng.integers(1, dim + 1), replace=False)
    squeezers = [SqueezerSpec(int(k), float(rng.uniform(0.1, max_r)), float(rng.uniform(0, math.pi))) for k in squeezed]
    state = make_state(dim, coherent=[(0, math.sqrt(n0))], squeezers=squeezers)
    return basis_change(state, unitary_group.rvs(dim, random_state=rng))


class ScenarioFiles:
    """Temporary directory holding scenario JSON files."""

    def __init__(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.root = Path(self._tmp.name)

    def write(self, name, config):
        path = self.root / name
        path.write_text(json.dumps(config), encoding="utf-8")
        return str(path)

    def cleanup(self):
        self._tmp.cleanup()


def scenario(**overrides):
    config = {
        "grid": {"nx": 64, "ny": 64, "width_x": 8.0, "width_y": 8.0},
        "basis": {"type": "hermite_gauss", "max_order": 2, "waist": 1.0},
        "state": {"coherent": [{"mode": 0, "re": 100.0, "im": 0.0}]},
        "layout": {"primitive": "half_x", "gains": [-1.0, 1.0]},
    }
    config.update(overrides)
    return config


def assert_relclose(actual, expected, rtol):
    np.testing.assert_allclose(actual, expected, rtol=rtol, atol=0)
