"""
PACE: prosody-aware codec encoder for voice conversion.
"""
from pace.config import settings, load_settings
from pace.logger import configure_logging, get_logger

__all__ = ["settings", "load_settings", "configure_logging", "get_logger"]
