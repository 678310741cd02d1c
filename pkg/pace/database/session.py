"""
Database session management and initialization.
"""
from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, Optional

from sqlalchemy import Engine, create_engine
from sqlalchemy.orm import Session, sessionmaker

from pace.config import settings
from pace.database.models import Base
from pace.logger import get_logger

logger = get_logger(__name__)

_engines: Dict[str, Engine] = {}
_session_makers: Dict[str, sessionmaker] = {}


def get_engine(url: Optional[str] = None) -> Engine:
    """Engine for `url` (default: the registry under the output directory), created once."""
    url = url or settings.database_url
    if url not in _engines:
        if url.startswith("sqlite:///"):
            Path(url.removeprefix("sqlite:///")).parent.mkdir(parents=True, exist_ok=True)
        _engines[url] = create_engine(url, echo=False, future=True)
        _session_makers[url] = sessionmaker(_engines[url], class_=Session, expire_on_commit=False)
    return _engines[url]


def init_db(url: Optional[str] = None) -> None:
    """Initialize database tables."""
    Base.metadata.create_all(get_engine(url))
    logger.debug("Registry initialized", url=url or settings.database_url)


def close_db() -> None:
    """Dispose of every engine."""
    for engine in _engines.values():
        engine.dispose()
    _engines.clear()
    _session_makers.clear()
    logger.debug("Registry connections closed")


@contextmanager
def get_session(url: Optional[str] = None) -> Iterator[Session]:
    """Session that commits on success and rolls back on error."""
    init_db(url)
    with _session_makers[url or settings.database_url]() as session:
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error("Registry session error", error=str(e))
            raise
