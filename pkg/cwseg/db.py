from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker, Session
from typing import Iterator, Optional

from cwseg.models import Base
from cwseg.settings import get_settings


def make_engine(url: Optional[str] = None) -> Engine:
    return create_engine(
        url or get_settings().database_url,
        pool_pre_ping=True,
        echo=False,
    )


def make_session_factory(engine: Engine) -> sessionmaker:
    Base.metadata.create_all(engine)
    return sessionmaker(autocommit=False, autoflush=False, bind=engine)


def get_db(url: Optional[str] = None) -> Iterator[Session]:
    """One engine and session for the caller; both are released when the generator closes."""
    engine = make_engine(url)
    SessionLocal = make_session_factory(engine)
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()
        engine.dispose()
