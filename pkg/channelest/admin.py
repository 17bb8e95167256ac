from django.contrib import admin
from .models import ExperimentRun, ReportRecord


admin.site.register(ExperimentRun)
admin.site.register(ReportRecord)
