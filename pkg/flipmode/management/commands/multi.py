from ._base import ScenarioCommand


class Command(ScenarioCommand):
    help = "Squeezing plan that beats the shot noise on every listed difference measurement."
    command_name = "multi"

    def run(self, scenario, options):
        return scenario.multi_report(), True
