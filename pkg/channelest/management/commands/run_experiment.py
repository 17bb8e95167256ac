from django.core.management.base import BaseCommand, CommandError

from channelest.exceptions import ChannelEstimationError
from channelest.harness import (
    format_csv, format_summary, run_experiment, run_invariant_suite, write_csv, write_summary,
)
from channelest.models import ExperimentRun
from channelest.serializers import INVARIANT_SUITE, P2_SEARCH

from ._config import load_spec
from .search_p2 import print_ranking


class Command(BaseCommand):
    help = "Run the experiment described by a key = value config file and write its CSV report."

    def add_arguments(self, parser):
        parser.add_argument('config', help="Path of the experiment config file")
        parser.add_argument('--out', help="CSV output path (stdout when omitted)")
        parser.add_argument('--seed', type=int, help="Master seed, overrides the config")
        parser.add_argument('--trials', type=int, help="Trials per grid point, overrides the config")
        parser.add_argument('--threads', type=int, help="Worker threads for the trials of a grid point")
        parser.add_argument('--summary', help="Also write the plain-text invariant summary to this path")
        parser.add_argument('--no-save', action='store_true', help="Do not store the run in the database")

    def handle(self, *args, **options):
        spec, text = load_spec(options['config'])
        if options['seed'] is not None and not 0 <= options['seed'] < 2**64:
            raise CommandError("--seed must be an unsigned 64-bit integer")
        for name in ('trials', 'threads'):
            if options[name] is not None and options[name] < 1:
                raise CommandError(f"--{name} must be at least 1")
        spec = spec.with_overrides(seed=options['seed'], trials=options['trials'], threads=options['threads'])
        out = options['out'] or spec.out

        try:
            if spec.experiment == INVARIANT_SUITE:
                self._invariants(spec, options['summary'] or out)
                return
            if spec.experiment == P2_SEARCH:
                print_ranking(self.stdout, spec)
                return
            reports = run_experiment(spec, threads=options['threads'])
            if options['summary']:
                write_summary(run_invariant_suite(spec), options['summary'])
            if out:
                write_csv(reports, out)
                self.stdout.write(self.style.SUCCESS(f"wrote {len(reports)} rows to {out}"))
            else:
                self.stdout.write(format_csv(reports), ending='')
        except ChannelEstimationError as exc:
            raise CommandError(str(exc)) from exc

        if not options['no_save']:
            run = ExperimentRun.record(spec, reports, config_text=text)
            (self.stdout if out else self.stderr).write(f"stored run {run.id}")
        failed = [report for report in reports if report.failed]
        if failed:
            raise CommandError(f"{len(failed)} of {len(reports)} grid points failed: {failed[0].diagnostic}")

    def _invariants(self, spec, path):
        checks = run_invariant_suite(spec)
        if path:
            write_summary(checks, path)
        self.stdout.write(format_summary(checks), ending='')
        if not all(check.passed for check in checks):
            raise CommandError("invariant checks failed")
