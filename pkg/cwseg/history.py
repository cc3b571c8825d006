"""
Recording and listing of run outcomes.
"""
import logging
from typing import Iterable, List, Optional

from sqlalchemy.orm import Session

from cwseg.models import EfficiencyRecord, Run
from cwseg.schemas import EfficiencyReport, RunSummary

logger = logging.getLogger(__name__)


def record_run(
    db: Session,
    command: str,
    reports: Iterable[EfficiencyReport],
    classifier: Optional[str] = None,
    window: Optional[int] = None,
    seed: Optional[int] = None,
    payload: Optional[dict] = None,
) -> Run:
    run = Run(command=command, classifier=classifier, window=window, seed=seed, payload_json=payload or {})
    for r in reports:
        run.efficiencies.append(EfficiencyRecord(
            split=r.split.value, total=r.total, correct=r.correct, efficiency=r.efficiency,
        ))
    try:
        db.add(run)
        db.commit()
        db.refresh(run)
    except Exception:
        db.rollback()
        logger.error("[runs] failed to record run", exc_info=True)
        raise
    logger.info(f"[runs] recorded {command} run id={run.id}")
    return run


def list_runs(db: Session, limit: int = 20) -> List[RunSummary]:
    runs = db.query(Run).order_by(Run.created_at.desc(), Run.id.desc()).limit(limit).all()
    return [
        RunSummary(
            id=run.id,
            command=run.command,
            classifier=run.classifier,
            window=run.window,
            seed=run.seed,
            created_at=run.created_at,
            efficiencies={rec.split: rec.efficiency for rec in run.efficiencies},
        )
        for run in runs
    ]


def format_runs(summaries: Iterable[RunSummary]) -> str:
    lines = ["id,created_at,command,classifier,window,seed,efficiencies"]
    for s in summaries:
        effs = " ".join(f"{k}={v:.2f}" for k, v in s.efficiencies.items())
        lines.append(
            f"{s.id},{s.created_at.isoformat(timespec='seconds')},{s.command},"
            f"{s.classifier or ''},{s.window if s.window is not None else ''},"
            f"{s.seed if s.seed is not None else ''},{effs}"
        )
    return "\n".join(lines) + "\n"
