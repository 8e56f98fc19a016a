# flipmode/serializers.py

from collections.abc import Mapping

from rest_framework import serializers
from rest_framework.settings import api_settings

from .detection import DIFFERENCE_TOL, DUAL_PATH_RTOL
from .gaussian_state import RANK_TOL
from .modes import GS_TOL, ORTHO_TOL


class StrictSerializer(serializers.Serializer):
    """Serializer that rejects keys it does not declare."""

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["Unknown field."] for key in unknown})
        return super().to_internal_value(data)


def flatten_errors(detail, prefix=""):
    """DRF error detail -> ``["layout.gains: This field is required.", ...]``."""
    if isinstance(detail, Mapping):
        messages = []
        for key, value in detail.items():
            if key == api_settings.NON_FIELD_ERRORS_KEY:
                path = prefix
            else:
                path = f"{prefix}.{key}" if prefix else str(key)
            messages.extend(flatten_errors(value, path))
        return messages
    if isinstance(detail, list):
        if all(isinstance(item, str) for item in detail):
            return [f"{prefix}: {item}" if prefix else str(item) for item in detail]
        messages = []
        for index, item in enumerate(detail):
            if item:
                messages.extend(flatten_errors(item, f"{prefix}.{index}" if prefix else str(index)))
        return messages
    return [f"{prefix}: {detail}" if prefix else str(detail)]


# === Scenario configuration ===

class GridSerializer(StrictSerializer):
    nx = serializers.IntegerField(min_value=2)
    ny = serializers.IntegerField(min_value=2)
    width_x = serializers.FloatField(min_value=0.0)
    width_y = serializers.FloatField(min_value=0.0)

    def validate(self, attrs):
        for name in ("width_x", "width_y"):
            if attrs[name] <= 0:
                raise serializers.ValidationError({name: ["Must be strictly positive."]})
        return attrs


class BasisSerializer(StrictSerializer):
    TYPES = ("hermite_gauss", "file")

    type = serializers.ChoiceField(choices=TYPES)
    max_order = serializers.IntegerField(min_value=0, required=False)
    waist = serializers.FloatField(required=False)
    center = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, required=False)
    path = serializers.CharField(required=False)

    def validate(self, attrs):
        if attrs["type"] == "hermite_gauss":
            missing = [name for name in ("max_order", "waist") if name not in attrs]
            if missing:
                raise serializers.ValidationError({name: ["Required for hermite_gauss bases."] for name in missing})
            if attrs["waist"] <= 0:
                raise serializers.ValidationError({"waist": ["Must be strictly positive."]})
        elif "path" not in attrs:
            raise serializers.ValidationError({"path": ["Required for file bases."]})
        return attrs


class CoherentSerializer(StrictSerializer):
    mode = serializers.IntegerField(min_value=0)
    re = serializers.FloatField()
    im = serializers.FloatField(default=0.0)


class SqueezerSerializer(StrictSerializer):
    mode = serializers.IntegerField(min_value=0)
    r = serializers.FloatField()
    angle = serializers.FloatField(default=0.0)


class DetectionSqueezerSerializer(StrictSerializer):
    r = serializers.FloatField()
    angle = serializers.FloatField(default=0.0)


class StateSerializer(StrictSerializer):
    coherent = CoherentSerializer(many=True, required=False)
    squeezers = SqueezerSerializer(many=True, required=False)
    cov_file = serializers.CharField(required=False, allow_null=True)
    detection_squeezer = DetectionSqueezerSerializer(required=False, allow_null=True)


class LayoutSerializer(StrictSerializer):
    PRIMITIVES = ("half_x", "half_y", "quadrants", "annulus")

    primitive = serializers.ChoiceField(choices=PRIMITIVES, required=False)
    mask_file = serializers.CharField(required=False)
    r1 = serializers.FloatField(required=False)
    r2 = serializers.FloatField(required=False)
    gains = serializers.ListField(child=serializers.FloatField(), min_length=1)

    def validate(self, attrs):
        if ("primitive" in attrs) == ("mask_file" in attrs):
            raise serializers.ValidationError("Give exactly one of 'primitive' or 'mask_file'.")
        if attrs.get("primitive") == "annulus":
            missing = [name for name in ("r1", "r2") if name not in attrs]
            if missing:
                raise serializers.ValidationError({name: ["Required for annulus layouts."] for name in missing})
        elif "r1" in attrs or "r2" in attrs:
            raise serializers.ValidationError("'r1'/'r2' only apply to annulus layouts.")
        return attrs


class TolerancesSerializer(StrictSerializer):
    ortho_tol = serializers.FloatField(min_value=0.0, default=ORTHO_TOL)
    gs_tol = serializers.FloatField(min_value=0.0, default=GS_TOL)
    rank_tol = serializers.FloatField(min_value=0.0, default=RANK_TOL)
    difference_tol = serializers.FloatField(min_value=0.0, default=DIFFERENCE_TOL)
    dual_path_rtol = serializers.FloatField(min_value=0.0, default=DUAL_PATH_RTOL)


class MonteCarloSerializer(StrictSerializer):
    ENGINES = ("linearized", "poisson")

    engine = serializers.ChoiceField(choices=ENGINES, default="linearized")
    n_samples = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, required=False)
    shards = serializers.IntegerField(min_value=1, default=1)


class PlanSerializer(StrictSerializer):
    r = serializers.FloatField()


class AnalysisSerializer(StrictSerializer):
    COMMANDS = ("analyze", "degree", "multi", "export_modes")

    commands = serializers.ListField(child=serializers.ChoiceField(choices=COMMANDS), required=False)
    tolerances = TolerancesSerializer(required=False)
    monte_carlo = MonteCarloSerializer(required=False, allow_null=True)
    plan = PlanSerializer(required=False)


class ScenarioSerializer(StrictSerializer):
    grid = GridSerializer()
    basis = BasisSerializer()
    state = StateSerializer()
    layout = LayoutSerializer(required=False)
    layouts = LayoutSerializer(many=True, required=False, allow_empty=False)
    analysis = AnalysisSerializer(required=False)


# === Reports (published schema, see docs/report_schema.md) ===

class MonteCarloReportSerializer(StrictSerializer):
    engine = serializers.ChoiceField(choices=MonteCarloSerializer.ENGINES)
    sample_mean = serializers.FloatField()
    sample_variance = serializers.FloatField(allow_null=True)
    stderr_variance = serializers.FloatField(allow_null=True)
    n_samples = serializers.IntegerField(min_value=1)
    seed = serializers.IntegerField(min_value=0)
    shards = serializers.IntegerField(min_value=1)
    flags = serializers.ListField(child=serializers.CharField())


class MeasurementSerializer(StrictSerializer):
    layout = serializers.CharField(required=False)
    mean = serializers.FloatField()
    variance = serializers.FloatField()
    shot_noise = serializers.FloatField()
    sql_ratio = serializers.FloatField()
    f = serializers.FloatField(min_value=0.0)
    is_difference = serializers.BooleanField()
    detection_mode_export_path = serializers.CharField(allow_null=True)


class ReportBaseSerializer(StrictSerializer):
    command = serializers.ChoiceField(choices=AnalysisSerializer.COMMANDS)
    seed = serializers.IntegerField(min_value=0)
    config = serializers.JSONField()


class AnalyzeReportSerializer(ReportBaseSerializer, MeasurementSerializer):
    n0 = serializers.FloatField(min_value=0.0)
    degree = serializers.IntegerField(min_value=0)
    linearized = serializers.BooleanField()
    variance_via_detection_mode = serializers.FloatField()
    relative_discrepancy = serializers.FloatField(min_value=0.0)
    dual_path_agrees = serializers.BooleanField()
    monte_carlo = MonteCarloReportSerializer(allow_null=True)


class DegreeReportSerializer(ReportBaseSerializer):
    dim = serializers.IntegerField(min_value=0)
    n0 = serializers.FloatField(min_value=0.0)
    degree = serializers.IntegerField(min_value=0)
    single_mode = serializers.BooleanField()


class MultiReportSerializer(ReportBaseSerializer):
    r = serializers.FloatField()
    n0 = serializers.FloatField(min_value=0.0)
    rank = serializers.IntegerField(min_value=0)
    plan_degree = serializers.IntegerField(min_value=0)
    flags = serializers.ListField(child=serializers.CharField())
    reports = MeasurementSerializer(many=True)


class ExportReportSerializer(ReportBaseSerializer):
    format = serializers.ChoiceField(choices=("csv", "pgm"))
    files = serializers.DictField(child=serializers.CharField())


REPORT_SERIALIZERS = {
    "analyze": AnalyzeReportSerializer,
    "degree": DegreeReportSerializer,
    "multi": MultiReportSerializer,
    "export_modes": ExportReportSerializer,
}
