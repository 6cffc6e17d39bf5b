"""
Screening history store and utilities
"""

import json
import logging
from datetime import datetime, timezone

from sqlalchemy import DateTime, Integer, String, Text, create_engine
from sqlalchemy.orm import DeclarativeBase, Mapped, mapped_column, sessionmaker

from src.models import Ranking

logger = logging.getLogger(__name__)

Session = sessionmaker(expire_on_commit=False)


class Base(DeclarativeBase):
    pass


class ScreeningRecord(Base):
    """Model for one archived screening execution"""

    __tablename__ = "screening_records"

    id: Mapped[int] = mapped_column(Integer, primary_key=True)
    document_id: Mapped[str] = mapped_column(String(120), nullable=False)
    poi_id: Mapped[str] = mapped_column(String(120), nullable=False)
    metric: Mapped[str] = mapped_column(String(120), nullable=False)
    rule: Mapped[str] = mapped_column(String(40), nullable=False)
    runner: Mapped[str] = mapped_column(Text, nullable=False)
    runs_ok: Mapped[int] = mapped_column(Integer, default=0, nullable=False)
    runs_failed: Mapped[int] = mapped_column(Integer, default=0, nullable=False)
    ranking_json: Mapped[str] = mapped_column(Text, nullable=False)
    created_on: Mapped[datetime] = mapped_column(
        DateTime, default=lambda: datetime.now(timezone.utc), nullable=False
    )

    def __repr__(self):
        return f"<ScreeningRecord {self.document_id}/{self.poi_id} ({self.metric})>"

    def ranking(self) -> Ranking:
        return Ranking.model_validate_json(self.ranking_json)


def init_database(database_url: str) -> None:
    """Bind the session factory to a database and create tables"""
    engine = create_engine(database_url)
    Base.metadata.create_all(engine)
    Session.configure(bind=engine)


def save_screening_run(
    document_id: str,
    poi_id: str,
    ranking: Ranking,
    rule: str,
    runner: str,
    runs_ok: int,
    runs_failed: int,
) -> bool:
    """
    Archive the outcome of one screening execution

    Args:
        document_id: Id of the screened document
        poi_id: PoI whose factors were screened
        ranking: Ranking computed for the written-back metric
        rule: OAT rule used for the design
        runner: Runner specification as given on the command line
        runs_ok: Number of runs that completed
        runs_failed: Number of failed runs

    Returns:
        bool: True if saved successfully, False otherwise
    """
    session = Session()
    try:
        session.add(
            ScreeningRecord(
                document_id=document_id,
                poi_id=poi_id,
                metric=ranking.metric,
                rule=rule,
                runner=runner,
                runs_ok=runs_ok,
                runs_failed=runs_failed,
                ranking_json=ranking.model_dump_json(),
            )
        )
        session.commit()
        return True
    except Exception as e:
        session.rollback()
        logger.error("history save error: %s", e)
        return False
    finally:
        session.close()


def get_screening_history(limit: int = 20, document_id: str | None = None) -> list:
    """
    Get screening history, newest first

    Args:
        limit: Maximum number of records to return
        document_id: Optional document id to filter records

    Returns:
        list: List of dictionaries describing each screening run
    """
    session = Session()
    try:
        query = session.query(ScreeningRecord)
        if document_id is not None:
            query = query.filter_by(document_id=document_id)
        records = (
            query.order_by(ScreeningRecord.created_on.desc(), ScreeningRecord.id.desc())
            .limit(limit)
            .all()
        )
        history = []
        for record in records:
            entries = record.ranking().entries
            history.append(
                {
                    "document_id": record.document_id,
                    "poi_id": record.poi_id,
                    "metric": record.metric,
                    "rule": record.rule,
                    "runner": record.runner,
                    "runs_ok": record.runs_ok,
                    "runs_failed": record.runs_failed,
                    "top_factor": entries[0].param if entries else None,
                    "ranking": json.loads(record.ranking_json),
                    "created_on": record.created_on.strftime("%Y-%m-%d %H:%M"),
                }
            )
        return history
    except Exception as e:
        logger.error("history query error: %s", e)
        return []
    finally:
        session.close()


def clear_screening_history() -> int:
    """Delete every record; returns the number removed (0 on failure)"""
    session = Session()
    try:
        deleted = session.query(ScreeningRecord).delete()
        session.commit()
        return deleted
    except Exception as e:
        session.rollback()
        logger.error("history clear error: %s", e)
        return 0
    finally:
        session.close()
