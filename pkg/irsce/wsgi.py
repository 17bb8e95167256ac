"""WSGI entry point of the channel estimation API (``irsce.wsgi.application``)."""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'irsce.settings')

application = get_wsgi_application()
