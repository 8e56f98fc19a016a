import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from flipmode.errors import DegeneratePhysicsError, FlipmodeError
from flipmode.scenario import Scenario, ScenarioError
from flipmode.serializers import REPORT_SERIALIZERS, flatten_errors

logger = logging.getLogger("flipmode")

EXIT_CONFIG = 1
EXIT_DEGENERATE = 2
EXIT_CROSS_CHECK = 3


class ScenarioCommand(BaseCommand):
    """Loads a scenario file, runs one analysis and writes its JSON report.

    Subclasses implement ``run(scenario, options)`` returning
    ``(report, ok)``; ``ok=False`` writes the report and exits with 3.
    """

    command_name = None
    formats = ("csv", "pgm")

    def add_arguments(self, parser):
        parser.add_argument("config_path", help="Scenario JSON file.")
        parser.add_argument("--out", help="Write the report here instead of stdout.")
        parser.add_argument("--format", choices=self.formats, help="Mode export format.")
        parser.add_argument("--seed", type=int, help="Override the Monte-Carlo seed.")
        parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level.")

    def handle(self, *args, **options):
        previous_level = logger.level
        if options["verbose"]:
            logger.setLevel(logging.DEBUG)
        try:
            self.execute_scenario(options)
        finally:
            logger.setLevel(previous_level)

    def execute_scenario(self, options):
        try:
            scenario = Scenario.from_path(options["config_path"], seed=options["seed"])
            listed = scenario.analysis.get("commands")
            if listed and self.command_name not in listed:
                logger.warning("'%s' is not among the scenario's analysis.commands %s", self.command_name, listed)
            report, ok = self.run(scenario, options)
        except ScenarioError as exc:
            raise CommandError(str(exc), returncode=EXIT_CONFIG) from exc
        except DegeneratePhysicsError as exc:
            raise CommandError(f"Degenerate physics: {exc}", returncode=EXIT_DEGENERATE) from exc
        except FlipmodeError as exc:
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=EXIT_CONFIG) from exc

        serializer = REPORT_SERIALIZERS[self.command_name](data=report)
        if not serializer.is_valid():
            raise CommandError(
                "Report failed schema validation: " + "; ".join(flatten_errors(serializer.errors)),
                returncode=EXIT_CROSS_CHECK,
            )
        self.write_report(report, options["out"])
        if not ok:
            raise CommandError("Internal cross-check failed; see the report.", returncode=EXIT_CROSS_CHECK)

    def write_report(self, report, out):
        text = json.dumps(report, indent=2, sort_keys=True)
        if out:
            path = Path(out)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text + "\n", encoding="utf-8")
            logger.info("Report written to %s", path)
        else:
            self.stdout.write(text)

    def run(self, scenario, options):
        raise NotImplementedError
