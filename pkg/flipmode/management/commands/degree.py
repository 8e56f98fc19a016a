from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Number of modes needed to describe the scenario's state."
    command_name = "degree"

    def run(self, scenario, options):
        return scenario.degree_report(), True
