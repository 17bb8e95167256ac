# Generated by Django 5.2.5 on 2026-10-16 09:12

import django.db.models.deletion
from django.conf import settings
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
        migrations.swappable_dependency(settings.AUTH_USER_MODEL),
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(max_length=50)),
                ('scheme', models.CharField(max_length=20)),
                ('allocation', models.CharField(max_length=50)),
                ('pattern', models.CharField(max_length=20)),
                ('master_seed', models.CharField(max_length=20)),
                ('trials', models.PositiveIntegerField()),
                ('config_text', models.TextField(blank=True)),
                ('status', models.CharField(choices=[('pending', 'Pending'), ('finished', 'Finished'), ('failed', 'Failed')], default='pending', max_length=20)),
                ('detail', models.TextField(blank=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
                ('owner', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.SET_NULL, related_name='experiment_runs', to=settings.AUTH_USER_MODEL)),
            ],
        ),
        migrations.CreateModel(
            name='ReportRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('position', models.PositiveIntegerField()),
                ('scheme', models.CharField(max_length=20)),
                ('allocation', models.CharField(max_length=50)),
                ('pattern', models.CharField(max_length=20)),
                ('snr_db', models.FloatField(blank=True, null=True)),
                ('kappa_db', models.FloatField(blank=True, null=True)),
                ('K', models.PositiveIntegerField()),
                ('trials', models.PositiveIntegerField()),
                ('mse_empirical', models.FloatField(blank=True, null=True)),
                ('mse_analytic', models.FloatField(blank=True, null=True)),
                ('stderr', models.FloatField(blank=True, null=True)),
                ('diagnostic', models.TextField(blank=True)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='reports', to='channelest.experimentrun')),
            ],
            options={
                'ordering': ['run', 'position'],
            },
        ),
    ]
