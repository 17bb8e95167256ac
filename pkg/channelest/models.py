from django.db import models
from django.contrib.auth.models import User

from .analysis import MseReport


class ExperimentRun(models.Model):
    STATUS_CHOICES = [
        ('pending', 'Pending'),
        ('finished', 'Finished'),
        ('failed', 'Failed'),
    ]

    kind = models.CharField(max_length=50)
    scheme = models.CharField(max_length=20)
    allocation = models.TextField()
    pattern = models.CharField(max_length=20)
    # u64 seeds do not fit a signed BigIntegerField
    master_seed = models.CharField(max_length=20)
    trials = models.PositiveIntegerField()
    config_text = models.TextField(blank=True)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='pending')
    detail = models.TextField(blank=True)
    owner = models.ForeignKey(User, related_name='experiment_runs', on_delete=models.SET_NULL, null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    def __str__(self):
        return f"{self.kind} #{self.pk} ({self.status})"

    @classmethod
    def record(cls, spec, reports, config_text='', owner=None):
        """Persist a finished sweep together with one ReportRecord per report."""
        failed = [report for report in reports if report.failed]
        run = cls.objects.create(
            kind=spec.experiment,
            scheme=spec.scheme,
            allocation=','.join(allocation for allocation, _ in spec.designs),
            pattern=','.join(sorted({pattern for _, pattern in spec.designs})),
            master_seed=str(spec.seed),
            trials=spec.trials,
            config_text=config_text,
            status='failed' if reports and len(failed) == len(reports) else 'finished',
            detail='\n'.join(report.diagnostic for report in failed),
            owner=owner,
        )
        ReportRecord.objects.bulk_create(
            ReportRecord.from_report(run, position, report) for position, report in enumerate(reports)
        )
        return run


class ReportRecord(models.Model):
    run = models.ForeignKey(ExperimentRun, related_name='reports', on_delete=models.CASCADE)
    position = models.PositiveIntegerField()
    scheme = models.CharField(max_length=20)
    allocation = models.CharField(max_length=50)
    pattern = models.CharField(max_length=20)
    snr_db = models.FloatField(null=True, blank=True)
    kappa_db = models.FloatField(null=True, blank=True)
    K = models.PositiveIntegerField()
    trials = models.PositiveIntegerField()
    mse_empirical = models.FloatField(null=True, blank=True)
    mse_analytic = models.FloatField(null=True, blank=True)
    stderr = models.FloatField(null=True, blank=True)
    diagnostic = models.TextField(blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ['run', 'position']

    @classmethod
    def from_report(cls, run, position, report):
        return cls(
            run=run,
            position=position,
            scheme=report.scheme,
            allocation=report.allocation,
            pattern=report.pattern,
            snr_db=report.snr_db,
            kappa_db=report.kappa_db,
            K=report.K,
            trials=report.trials,
            mse_empirical=report.mse_empirical,
            mse_analytic=report.mse_analytic,
            stderr=report.stderr,
            diagnostic=report.diagnostic,
        )

    def to_report(self):
        return MseReport(
            experiment=self.run.kind,
            scheme=self.scheme,
            allocation=self.allocation,
            pattern=self.pattern,
            snr_db=self.snr_db,
            kappa_db=self.kappa_db,
            K=self.K,
            trials=self.trials,
            seed=int(self.run.master_seed),
            mse_empirical=self.mse_empirical,
            mse_analytic=self.mse_analytic,
            stderr=self.stderr,
            diagnostic=self.diagnostic,
        )
