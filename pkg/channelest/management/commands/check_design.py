from django.core.management.base import BaseCommand, CommandError

from channelest.exceptions import ChannelEstimationError
from channelest.harness import check_designs

from ._config import load_spec


class Command(BaseCommand):
    help = "Check the training designs of a config against the estimators' rank conditions."

    def add_arguments(self, parser):
        parser.add_argument('config', help="Path of the experiment config file")

    def handle(self, *args, **options):
        spec, _ = load_spec(options['config'])
        try:
            checks = check_designs(spec)
        except ChannelEstimationError as exc:
            raise CommandError(str(exc)) from exc

        failed = 0
        for check in checks:
            style = self.style.SUCCESS if check.report.passed else self.style.ERROR
            for line in check.report.lines():
                self.stdout.write(style(f"{check.label}: {line}"))
            failed += not check.report.passed
        if failed:
            raise CommandError(f"{failed} of {len(checks)} designs are infeasible")
