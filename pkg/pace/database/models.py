"""
Database models for the PACE run registry.
Records command runs, the checkpoints they produce and a per-run event history.
"""
from datetime import datetime
from enum import Enum as PyEnum
from typing import List, Optional

from sqlalchemy import DateTime, ForeignKey, Integer, String, Text
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, relationship
from sqlalchemy.sql import func


class RunStatus(str, PyEnum):
    """Lifecycle of one command run."""
    RUNNING = "RUNNING"
    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


class Base(DeclarativeBase):
    """Base class for all models."""
    pass


class TrainingRun(Base):
    """One invocation of a pipeline command."""
    __tablename__ = "training_runs"

    id: Mapped[str] = mapped_column(String(32), primary_key=True)
    command: Mapped[str] = mapped_column(String(50), nullable=False)
    variant: Mapped[Optional[str]] = mapped_column(String(50), nullable=True)
    seed: Mapped[int] = mapped_column(Integer, nullable=False)
    status: Mapped[str] = mapped_column(String(20), nullable=False, default=RunStatus.RUNNING.value)

    started_at: Mapped[datetime] = mapped_column(DateTime, nullable=False, server_default=func.now())
    finished_at: Mapped[Optional[datetime]] = mapped_column(DateTime, nullable=True)

    checkpoints: Mapped[List["Checkpoint"]] = relationship(
        "Checkpoint", back_populates="run", cascade="all, delete-orphan"
    )
    events: Mapped[List["RunEvent"]] = relationship(
        "RunEvent", back_populates="run", cascade="all, delete-orphan"
    )

    def __repr__(self) -> str:
        return f"<TrainingRun(id={self.id}, command={self.command}, status={self.status})>"


class Checkpoint(Base):
    """A PACK file on disk: stage 0 is the reference codec, 1..3 the PACE stages."""
    __tablename__ = "checkpoints"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[Optional[str]] = mapped_column(
        String(32), ForeignKey("training_runs.id"), nullable=True
    )
    variant: Mapped[str] = mapped_column(String(50), nullable=False)
    stage: Mapped[int] = mapped_column(Integer, nullable=False)
    steps: Mapped[int] = mapped_column(Integer, nullable=False)
    path: Mapped[str] = mapped_column(Text, nullable=False)
    fingerprint: Mapped[str] = mapped_column(String(64), nullable=False)
    created_at: Mapped[datetime] = mapped_column(DateTime, nullable=False, server_default=func.now())

    run: Mapped[Optional["TrainingRun"]] = relationship("TrainingRun", back_populates="checkpoints")

    def __repr__(self) -> str:
        return f"<Checkpoint(variant={self.variant}, stage={self.stage}, path={self.path})>"


class RunEvent(Base):
    """Timestamped event in a run's history."""
    __tablename__ = "run_events"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[str] = mapped_column(String(32), ForeignKey("training_runs.id"), nullable=False)
    action: Mapped[str] = mapped_column(String(100), nullable=False)
    details: Mapped[Optional[str]] = mapped_column(Text, nullable=True)
    ts: Mapped[datetime] = mapped_column(DateTime, nullable=False, server_default=func.now())

    run: Mapped["TrainingRun"] = relationship("TrainingRun", back_populates="events")

    def __repr__(self) -> str:
        return f"<RunEvent(run_id={self.run_id}, action={self.action})>"
