from sqlalchemy import (
    Column,
    Integer,
    String,
    Float,
    DateTime,
    ForeignKey,
    JSON,
    CheckConstraint,
)
from sqlalchemy.orm import declarative_base, relationship
from datetime import datetime

Base = declarative_base()


class Run(Base):
    """
    One recorded CLI run (eval, segment or sweep) and its parameters.
    """
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    command = Column(String, nullable=False, index=True)
    classifier = Column(String, nullable=True)
    window = Column(Integer, nullable=True)
    seed = Column(Integer, nullable=True)
    payload_json = Column(JSON, nullable=False, default=dict)
    created_at = Column(DateTime, default=datetime.utcnow, nullable=False)

    efficiencies = relationship(
        "EfficiencyRecord", back_populates="run", cascade="all, delete-orphan", order_by="EfficiencyRecord.id"
    )


class EfficiencyRecord(Base):
    """
    One efficiency line (train, test or whole image) of a recorded run.
    """
    __tablename__ = "efficiency_records"
    __table_args__ = (
        CheckConstraint("correct >= 0 AND correct <= total", name="ck_correct_within_total"),
        CheckConstraint("total > 0", name="ck_total_positive"),
    )

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(Integer, ForeignKey("runs.id", ondelete="CASCADE"), nullable=False, index=True)
    split = Column(String, nullable=False)
    total = Column(Integer, nullable=False)
    correct = Column(Integer, nullable=False)
    efficiency = Column(Float, nullable=False)

    run = relationship("Run", back_populates="efficiencies")
