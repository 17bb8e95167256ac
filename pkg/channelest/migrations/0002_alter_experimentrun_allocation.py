# Generated by Django 5.2.5 on 2026-10-16 14:05

from django.db import migrations, models


class Migration(migrations.Migration):

    dependencies = [
        ('channelest', '0001_initial'),
    ]

    operations = [
        migrations.AlterField(
            model_name='experimentrun',
            name='allocation',
            field=models.TextField(),
        ),
    ]
