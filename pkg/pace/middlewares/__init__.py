"""
Command middlewares.
"""
from pace.middlewares.context import LOCK_FILE, LockMiddleware, LoggingMiddleware, RegistryMiddleware

__all__ = ["LOCK_FILE", "LockMiddleware", "LoggingMiddleware", "RegistryMiddleware"]
