from pathlib import Path

from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Mean, variance and SQL ratio of a multipixel measurement, cross-checked two ways."
    command_name = "analyze"

    def run(self, scenario, options):
        export_dir = Path(options["out"]).parent if options["out"] else None
        return scenario.analyze(export_dir=export_dir, fmt=options["format"])
