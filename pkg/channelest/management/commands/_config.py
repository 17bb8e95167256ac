from pathlib import Path

from django.core.management.base import CommandError

from channelest.exceptions import ConfigError
from channelest.harness import parse_config


def load_spec(path):
    """Read and validate a config file, turning every failure into a CommandError."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CommandError(f"could not read {path}: {exc.strerror or exc}") from exc
    try:
        return parse_config(text), text
    except ConfigError as exc:
        raise CommandError(f"invalid config {path}: {exc}") from exc
