from django.core.management.base import BaseCommand, CommandError

from channelest.exceptions import ChannelEstimationError
from channelest.training import k1_max, k2_max


class Command(BaseCommand):
    help = "Print the maximum number of users supported by SiUCE (K1) and SeUCE (K2)."

    def add_arguments(self, parser):
        parser.add_argument('--N', type=int, required=True, help="Number of sub-carriers")
        parser.add_argument('--M', type=int, required=True, help="Number of IRS sub-surfaces")
        parser.add_argument('--L', type=int, required=True, help="Channel length in taps")

    def handle(self, *args, **options):
        N, M, L = options['N'], options['M'], options['L']
        try:
            self.stdout.write(f"K1={k1_max(N, L)}")
            self.stdout.write(f"K2={k2_max(N, M, L)}")
        except ChannelEstimationError as exc:
            raise CommandError(str(exc)) from exc
