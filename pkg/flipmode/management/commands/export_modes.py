from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Export the mean-field, flipped and eigenbasis mode profiles."
    command_name = "export_modes"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--dir", help="Directory for the mode files (default FLIPMODE_EXPORT_DIR).")

    def run(self, scenario, options):
        return scenario.export(directory=options["dir"], fmt=options["format"] or "csv"), True
