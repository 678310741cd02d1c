"""
Run and checkpoint registry.
"""
from pace.database.models import Base, Checkpoint, RunEvent, RunStatus, TrainingRun
from pace.database.session import close_db, get_engine, get_session, init_db

__all__ = [
    "Base",
    "Checkpoint",
    "RunEvent",
    "RunStatus",
    "TrainingRun",
    "close_db",
    "get_engine",
    "get_session",
    "init_db",
]
