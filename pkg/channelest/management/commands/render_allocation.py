from django.core.management.base import BaseCommand, CommandError

from channelest.exceptions import ChannelEstimationError
from channelest.harness import check_designs
from channelest.training import RANDOM, build_pattern, render_allocation, render_pattern

from ._config import load_spec


class Command(BaseCommand):
    help = "Print the slot x sub-carrier grid of every allocation a config selects."

    def add_arguments(self, parser):
        parser.add_argument('config', help="Path of the experiment config file")
        parser.add_argument('--pattern', action='store_true', help="Also print the reflection pattern matrix")

    def handle(self, *args, **options):
        spec, _ = load_spec(options['config'])
        try:
            checks = check_designs(spec)
        except ChannelEstimationError as exc:
            raise CommandError(str(exc)) from exc

        for check in checks:
            self.stdout.write(f"# {check.label}")
            self.stdout.write(render_allocation(check.allocation, check.config.tau))
            if options['pattern'] and check.pattern_kind != RANDOM:
                self.stdout.write(f"# {check.pattern_kind} pattern")
                self.stdout.write(render_pattern(build_pattern(check.pattern_kind, check.config.M)))
