import json
import math
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.test import SimpleTestCase

from flipmode.exports import (
    export_mode_pgm,
    load_basis,
    load_state,
    save_basis,
    save_state,
    state_from_document,
)
from flipmode.gaussian_state import SqueezerSpec, make_state
from flipmode.layouts import from_mask, quadrants, save_label_mask
from flipmode.modes import hermite_gauss_mode

from .fixtures import hg_basis, scenario, small_grid


class ExportTests(SimpleTestCase):
    def setUp(self):
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.root = Path(tmp.name)

    def test_pgm_header_and_peak(self):
        grid = small_grid(n=32)
        path = export_mode_pgm(hermite_gauss_mode(1, 0, 1.0, grid), self.root / "hg10.pgm")
        data = path.read_bytes()
        self.assertTrue(data.startswith(b"P5"))
        self.assertIn(b"32 32", data[:20])
        self.assertIn(b"255", data[:20])

    def test_label_mask_reproduces_layout(self):
        grid = small_grid(n=32)
        layout = quadrants(grid, [1.0, -1.0, -1.0, 1.0])
        path = save_label_mask(layout, self.root / "quadrants.pgm")
        loaded = from_mask(grid, path, layout.gains)
        np.testing.assert_array_equal(loaded.pixel_of_cell, layout.pixel_of_cell)

    def test_state_document_with_squeezers(self):
        squeezers = [SqueezerSpec(1, 0.4, 0.2)]
        state = make_state(3, coherent=[(0, 5.0 + 1.0j)], squeezers=squeezers)
        path = save_state(state, self.root / "state.json", squeezers)
        document = json.loads(path.read_text())
        self.assertEqual(document["squeezers"], [{"mode": 1, "r": 0.4, "angle": 0.2}])
        self.assertTrue(load_state(path).allclose(state))

        without_cov = dict(document)
        del without_cov["cov"]
        self.assertTrue(state_from_document(without_cov).allclose(state))

    def test_file_basis_scenario(self):
        basis = hg_basis(max_order=1)
        save_basis(basis, self.root / "basis.npz")
        self.assertEqual(len(load_basis(self.root / "basis.npz")), 3)

        config = scenario(basis={"type": "file", "path": "basis.npz"})
        config_path = self.root / "file_basis.json"
        config_path.write_text(json.dumps(config))
        out = StringIO()
        call_command("analyze", str(config_path), stdout=out)
        report = json.loads(out.getvalue())
        self.assertTrue(math.isclose(report["sql_ratio"], 1.0, rel_tol=1e-9))
