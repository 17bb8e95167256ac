import os
import tempfile
from io import StringIO

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase
import pytest

from channelest.analysis import CSV_FIELDS
from channelest.harness import parse_csv, read_csv
from channelest.models import ExperimentRun

from .test_harness import MINIMAL_P2


class CommandTestMixin:
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmpdir.cleanup)

    def write_config(self, text, name='experiment.cfg'):
        path = os.path.join(self.tmpdir.name, name)
        with open(path, 'w') as handle:
            handle.write(text)
        return path

    def call(self, *args, **options):
        stdout = StringIO()
        call_command(*args, stdout=stdout, **options)
        return stdout.getvalue()


@pytest.mark.unit
class LimitsCommandTest(CommandTestMixin, TestCase):
    """User capacity printed from the command line"""

    def test_default_scenario(self):
        """Test the default dimensions print K1 and K2"""
        output = self.call('limits', '--N', '16', '--M', '8', '--L', '4')
        self.assertEqual(output.splitlines(), ['K1=4', 'K2=10'])

    def test_invalid_dimensions(self):
        """Test L above N is reported as a command error"""
        with self.assertRaises(CommandError):
            self.call('limits', '--N', '4', '--M', '1', '--L', '5')


@pytest.mark.unit
class DesignCommandTest(CommandTestMixin, TestCase):
    """Feasibility checks and allocation rendering"""

    def test_check_design_feasible(self):
        """Test the default design is reported feasible"""
        output = self.call('check_design', self.write_config(""))
        self.assertIn('K=4 siuce equispaced/dft: siuce: feasible', output)

    def test_check_design_infeasible(self):
        """Test a reference tone set shorter than L fails the check"""
        path = self.write_config("scheme = seuce\nref_tones = [0, 1, 2]\n")
        stdout = StringIO()
        with self.assertRaises(CommandError) as ctx:
            call_command('check_design', path, stdout=stdout)
        self.assertIn('infeasible', str(ctx.exception))
        self.assertIn('[pilot-count]', stdout.getvalue())

    def test_check_design_small_budget(self):
        """Test a per-user budget below M+L is a command error"""
        with self.assertRaises(CommandError):
            self.call('check_design', self.write_config("scheme = seuce\nzeta = 4\n"))

    def test_render_allocation(self):
        """Test the comb allocation renders one line per slot"""
        output = self.call('render_allocation', self.write_config(""), '--pattern')
        lines = output.splitlines()
        self.assertEqual(lines[0], '# K=4 siuce equispaced/dft')
        self.assertEqual(lines[1], ' '.join(['1', '2', '3', '4'] * 4))
        self.assertEqual(lines[9], lines[1])
        self.assertEqual(lines[10], '# dft pattern')

    def test_missing_config(self):
        """Test an unreadable config path is a command error"""
        with self.assertRaises(CommandError) as ctx:
            self.call('check_design', os.path.join(self.tmpdir.name, 'absent.cfg'))
        self.assertIn('could not read', str(ctx.exception))

    def test_invalid_config(self):
        """Test a config with an unknown key is a command error"""
        with self.assertRaises(CommandError) as ctx:
            self.call('render_allocation', self.write_config("snr = 10\n"))
        self.assertIn('invalid config', str(ctx.exception))


@pytest.mark.integration
class RunExperimentCommandTest(CommandTestMixin, TestCase):
    """Running experiments from config files"""

    def test_csv_to_stdout(self):
        """Test a sweep prints a CSV that reads back and reports the stored run on stderr"""
        stderr = StringIO()
        output = self.call('run_experiment', self.write_config("snr_db = [0, 10]\ntrials = 5\n"), stderr=stderr)
        lines = output.splitlines()
        self.assertEqual(lines[0], ",".join(CSV_FIELDS))
        self.assertEqual(len(lines), 3)
        self.assertEqual([report.snr_db for report in parse_csv(output)], [0.0, 10.0])
        run = ExperimentRun.objects.get()
        self.assertEqual(stderr.getvalue(), f"stored run {run.id}\n")
        self.assertEqual(run.reports.count(), 2)

    def test_csv_to_file_without_saving(self):
        """Test --out writes the file and --no-save skips the database"""
        out = os.path.join(self.tmpdir.name, 'result.csv')
        output = self.call('run_experiment', self.write_config("snr_db = 10\n"), out=out, trials=4, no_save=True)
        self.assertIn('wrote 1 rows', output)
        reports = read_csv(out)
        self.assertEqual(reports[0].trials, 4)
        self.assertEqual(ExperimentRun.objects.count(), 0)

    def test_seed_override(self):
        """Test --seed replaces the configured master seed"""
        output = self.call('run_experiment', self.write_config("snr_db = 10\ntrials = 3\n"), seed=11, no_save=True)
        self.assertEqual(output.splitlines()[1].split(',')[8], '11')

    def test_rejects_bad_trials(self):
        """Test a non-positive trial count is rejected"""
        with self.assertRaises(CommandError):
            self.call('run_experiment', self.write_config(""), trials=0)

    def test_invariant_suite(self):
        """Test the invariant experiment prints and writes its summary"""
        summary = os.path.join(self.tmpdir.name, 'summary.txt')
        config = self.write_config("experiment = invariant_suite\ntrials = 20\n")
        output = self.call('run_experiment', config, summary=summary)
        self.assertTrue(output.endswith('7/7 checks passed\n'))
        with open(summary) as handle:
            self.assertEqual(handle.read(), output)

    def test_p2_search(self):
        """Test the allocation search prints its ranking through either command"""
        path = self.write_config(MINIMAL_P2)
        for command in ('run_experiment', 'search_p2'):
            output = self.call(command, path)
            self.assertIn('evaluated 9 allocations', output)
            self.assertIn('two-step allocation:', output)
