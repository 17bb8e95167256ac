"""ASGI entry point of the channel estimation API (``irsce.asgi.application``)."""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'irsce.settings')

application = get_asgi_application()
