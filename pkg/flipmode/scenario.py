# flipmode/scenario.py
"""Scenario files: validated configuration turned into objects and reports."""

import json
import logging
from contextlib import contextmanager
from functools import cached_property
from pathlib import Path

import numpy as np
from django.conf import settings

from . import layouts as layout_module
from .detection import (
    dual_path,
    detection_mode,
    inject_detection_squeezing,
    multi_measurement_plan,
    two_zone_decomposition,
)
from .errors import FlipmodeError, InvalidLayout
from .exports import export_modes, load_basis, load_state
from .gaussian_state import GaussianState, SqueezerSpec, degree, make_state, mean_field_mode
from .modes import Grid, hermite_gauss_basis
from .montecarlo import SimConfig, simulate_linearized, simulate_poisson
from .serializers import ScenarioSerializer, TolerancesSerializer, flatten_errors

logger = logging.getLogger(__name__)


class ScenarioError(FlipmodeError):
    """Configuration problem; ``messages`` name the offending keys."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


def _required(key):
    return ScenarioError([f"{key}: This field is required."])


@contextmanager
def _loading(key, path):
    """Report unreadable or malformed scenario files under their config key."""
    try:
        yield
    except ScenarioError:
        raise
    except (OSError, ValueError, KeyError, FlipmodeError) as exc:
        raise ScenarioError([f"{key}: cannot load '{path}' ({exc})."]) from exc


class Scenario:
    def __init__(self, raw, base_dir=".", seed=None):
        serializer = ScenarioSerializer(data=raw)
        if not serializer.is_valid():
            raise ScenarioError(flatten_errors(serializer.errors))
        self.raw = raw
        self.config = serializer.validated_data
        self.base_dir = Path(base_dir)
        self.seed_override = seed

    @classmethod
    def from_path(cls, path, seed=None):
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ScenarioError([f"config: cannot read '{path}' ({exc.strerror})."]) from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"config: invalid JSON at line {exc.lineno} ({exc.msg})."]) from exc
        if not isinstance(raw, dict):
            raise ScenarioError(["config: top level must be a JSON object."])
        return cls(raw, base_dir=path.parent, seed=seed)

    def _resolve(self, name):
        path = Path(name)
        return path if path.is_absolute() else self.base_dir / path

    @property
    def analysis(self):
        return self.config.get("analysis", {})

    @cached_property
    def tolerances(self):
        if "tolerances" in self.analysis:
            return self.analysis["tolerances"]
        defaults = TolerancesSerializer(data={})
        defaults.is_valid(raise_exception=True)
        return defaults.validated_data

    @property
    def seed(self):
        if self.seed_override is not None:
            return self.seed_override
        monte_carlo = self.analysis.get("monte_carlo") or {}
        return monte_carlo.get("seed", settings.FLIPMODE_DEFAULT_SEED)

    @cached_property
    def grid(self):
        return Grid(**self.config["grid"])

    @cached_property
    def basis(self):
        spec = self.config["basis"]
        if spec["type"] == "file":
            path = self._resolve(spec["path"])
            with _loading("basis.path", path):
                basis = load_basis(path, ortho_tol=self.tolerances["ortho_tol"])
            if not basis.grid.matches(self.grid):
                raise ScenarioError([f"basis.path: basis grid {basis.grid} does not match {self.grid}."])
            return basis
        return hermite_gauss_basis(
            spec["max_order"],
            spec["waist"],
            self.grid,
            center=tuple(spec.get("center", (0.0, 0.0))),
            ortho_tol=self.tolerances["ortho_tol"],
        )

    @cached_property
    def state(self):
        spec = self.config["state"]
        dim = len(self.basis)
        if spec.get("cov_file"):
            path = self._resolve(spec["cov_file"])
            if path.suffix == ".npy":
                prepared = make_state(dim, coherent=self._coherent(spec), squeezers=self._squeezers(spec))
                with _loading("state.cov_file", path):
                    return GaussianState(prepared.mean, np.load(path))
            with _loading("state.cov_file", path):
                state = load_state(path)
            if state.dim != dim:
                raise ScenarioError([f"state.cov_file: state has {state.dim} modes, basis has {dim}."])
            return state
        return make_state(dim, coherent=self._coherent(spec), squeezers=self._squeezers(spec))

    @staticmethod
    def _coherent(spec):
        return [(c["mode"], complex(c["re"], c["im"])) for c in spec.get("coherent", [])]

    @staticmethod
    def _squeezers(spec):
        return [SqueezerSpec(s["mode"], s["r"], s["angle"]) for s in spec.get("squeezers", [])]

    def build_layout(self, spec, key="layout"):
        gains = spec["gains"]
        if "mask_file" in spec:
            path = self._resolve(spec["mask_file"])
            with _loading(f"{key}.mask_file", path):
                return layout_module.from_mask(self.grid, path, gains)
        if spec["primitive"] == "annulus":
            return layout_module.annulus(self.grid, spec["r1"], spec["r2"], gains)
        return layout_module.PRIMITIVES[spec["primitive"]](self.grid, gains)

    @cached_property
    def layout(self):
        if "layout" not in self.config:
            raise _required("layout")
        try:
            return self.build_layout(self.config["layout"])
        except InvalidLayout as exc:
            raise ScenarioError([f"layout: {exc}"]) from exc

    @cached_property
    def layouts(self):
        if "layouts" not in self.config:
            raise _required("layouts")
        built = []
        for index, spec in enumerate(self.config["layouts"]):
            try:
                built.append(self.build_layout(spec, f"layouts.{index}"))
            except InvalidLayout as exc:
                raise ScenarioError([f"layouts.{index}: {exc}"]) from exc
        return built

    def measured(self):
        """Basis and state, with the detection squeezer applied when configured."""
        squeezer = self.config["state"].get("detection_squeezer")
        if not squeezer:
            return self.basis, self.state
        logger.info("Squeezing the detection mode with r=%g, angle=%g", squeezer["r"], squeezer["angle"])
        return inject_detection_squeezing(
            self.state, self.basis, self.layout, squeezer["r"], squeezer["angle"],
            tol=self.tolerances["difference_tol"],
        )

    def _envelope(self, command):
        return {"command": command, "seed": self.seed, "config": self.raw}

    # === Commands ===

    def analyze(self, export_dir=None, fmt=None, workers=None):
        """Returns ``(report, agrees)``."""
        tol = self.tolerances
        basis, state = self.measured()
        result = dual_path(state, basis, self.layout, tol["difference_tol"], tol["dual_path_rtol"])
        direct = result.direct

        export_path = None
        if fmt:
            w1 = direct.detection_mode.w1
            paths = export_modes({"detection_mode": w1}, export_dir or settings.FLIPMODE_EXPORT_DIR, fmt)
            export_path = str(paths["detection_mode"])

        report = self._envelope("analyze")
        report.update(direct.to_dict(export_path))
        report.update(
            n0=direct.n0,
            degree=degree(state, tol["rank_tol"]),
            linearized=direct.linearized,
            variance_via_detection_mode=result.via_detection_mode.variance,
            relative_discrepancy=result.relative_discrepancy,
            dual_path_agrees=result.agrees,
            monte_carlo=self.monte_carlo(state, basis, workers),
        )
        return report, result.agrees

    def monte_carlo(self, state, basis, workers=None):
        spec = self.analysis.get("monte_carlo")
        if not spec:
            return None
        cfg = SimConfig(n_samples=spec["n_samples"], seed=self.seed, shards=spec["shards"])
        workers = workers or settings.FLIPMODE_MC_WORKERS
        if spec["engine"] == "poisson":
            if degree(state, self.tolerances["rank_tol"]) > 1:
                logger.warning("Poisson sampling ignores the squeezed modes of this state.")
            v0, n0 = mean_field_mode(state, basis)
            result = simulate_poisson(v0, n0, self.layout, cfg, workers=workers)
        else:
            result = simulate_linearized(state, basis, self.layout, cfg, workers=workers)
        return {"engine": spec["engine"], **result.to_dict()}

    def degree_report(self):
        # the detection squeezer needs a layout to locate w1
        if self.config["state"].get("detection_squeezer") and "layout" not in self.config:
            raise ScenarioError(["layout: Required when state.detection_squeezer is set."])
        state = self.measured()[1]
        value = degree(state, self.tolerances["rank_tol"])
        report = self._envelope("degree")
        report.update(dim=state.dim, n0=state.n0, degree=value, single_mode=value <= 1)
        return report

    def multi_report(self):
        plan_spec = self.analysis.get("plan")
        if not plan_spec:
            raise _required("analysis.plan")
        tol = self.tolerances
        v0, n0 = mean_field_mode(self.state, self.basis)
        plan = multi_measurement_plan(
            v0, self.layouts, plan_spec["r"], self.basis, n0=n0,
            tol=tol["difference_tol"], gs_tol=tol["gs_tol"],
        )
        reports = []
        for layout, measurement in zip(self.layouts, plan.reports):
            entry = {"layout": layout.name}
            entry.update(measurement.to_dict())
            reports.append(entry)
        report = self._envelope("multi")
        report.update(
            r=plan_spec["r"],
            n0=n0,
            rank=plan.rank,
            plan_degree=degree(plan.state, tol["rank_tol"]),
            flags=self._plan_flags(plan),
            reports=reports,
        )
        return report

    @staticmethod
    def _plan_flags(plan):
        flags = []
        if plan.dependent_layouts:
            flags.append("dependent_layouts")
        if not plan.real_modes:
            flags.append("complex_modes")
        return flags

    def profiles(self):
        """Mode profiles worth plotting for this scenario's layout."""
        v0, _ = mean_field_mode(self.state, self.basis)
        layout = self.layout
        if layout.n_pixels == 2 and sorted(layout.gains.tolist()) == [-1.0, 1.0]:
            split = two_zone_decomposition(v0, layout)
            return {"v0": split.v0, "w0": split.w0, "w1": split.w1, "v1": split.v1}
        detection = detection_mode(v0, layout, self.tolerances["difference_tol"])
        return {"v0": v0, "w1": detection.w1}

    def export(self, directory=None, fmt="csv"):
        paths = export_modes(self.profiles(), directory or settings.FLIPMODE_EXPORT_DIR, fmt)
        report = self._envelope("export_modes")
        report.update(format=fmt, files={name: str(path) for name, path in paths.items()})
        return report
