from django.core.management.base import BaseCommand, CommandError

from channelest.exceptions import ChannelEstimationError
from channelest.harness import run_p2_search
from channelest.training import render_allocation

from ._config import load_spec


def print_ranking(stdout, spec, top=10):
    result, heuristic, heuristic_objective = run_p2_search(spec)
    best = result.best
    stdout.write(f"evaluated {result.evaluated} allocations with {spec.n_samples} samples each")
    for index, candidate in enumerate(result.ranking[:top]):
        stdout.write(f"#{index + 1} objective={candidate.objective:.6g} cond(C_k)={candidate.condition:.3g}")
    stdout.write("best allocation:")
    stdout.write(render_allocation(best.allocation))
    gap = heuristic_objective / best.objective - 1 if best.objective else 0.0
    position = result.position(heuristic)
    rank = "unranked" if position is None else f"rank {position + 1}"
    stdout.write(f"two-step allocation: objective={heuristic_objective:.6g} ({gap:+.2%} vs best, {rank})")
    stdout.write(render_allocation(heuristic))


class Command(BaseCommand):
    help = "Exhaustively search non-reference pilot allocations for the smallest expected tr(D_k^-1)."

    def add_arguments(self, parser):
        parser.add_argument('config', help="Path of the experiment config file")
        parser.add_argument('--top', type=int, default=10, help="Number of ranked allocations to print")

    def handle(self, *args, **options):
        spec, _ = load_spec(options['config'])
        try:
            print_ranking(self.stdout, spec, top=options['top'])
        except ChannelEstimationError as exc:
            raise CommandError(str(exc)) from exc
