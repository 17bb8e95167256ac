from django.apps import AppConfig


class ChannelestConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'channelest'
    verbose_name = 'IRS channel estimation'
