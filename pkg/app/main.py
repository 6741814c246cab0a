from typing import Dict, Optional

from fastapi import FastAPI, Header, HTTPException
from pydantic import BaseModel
import logging

from app.config import settings
from app.errors import DataError
from app.services.translation import load_fixture_table

# Get logger (logging is configured by the entry point)
logger = logging.getLogger(__name__)

app = FastAPI(
    title="Fixture Translation Server",
    description="Serves recorded translations over the generic JSON adapter shape, for offline runs of the Http backend",
    version="1.0.0"
)

# wrapped source text -> translation
fixture_table: Dict[str, str] = {}


class TranslateRequest(BaseModel):
    text: str
    source: Optional[str] = None
    target: Optional[str] = None


class TranslateResponse(BaseModel):
    translation: str


def load_table(path: Optional[str] = None) -> int:
    """Replace the served table with the rows of a TSV fixture"""
    path = path or settings.FIXTURE_TABLE
    fixture_table.clear()
    if path:
        fixture_table.update(load_fixture_table(path))
    return len(fixture_table)


@app.on_event("startup")
async def startup_event():
    if not settings.FIXTURE_TABLE:
        logger.warning("FIXTURE_TABLE is not set; every translation request will return 404")
        return
    try:
        count = load_table()
    except DataError as e:
        logger.error(f"Could not load fixture table: {e}")
        raise
    logger.info(f"✓ Serving {count} fixture translations from {settings.FIXTURE_TABLE}")


def _check_key(authorization: Optional[str]) -> None:
    if not settings.FIXTURE_SERVER_API_KEY:
        return
    if authorization != f"Bearer {settings.FIXTURE_SERVER_API_KEY}":
        logger.warning("Rejected translation request with a missing or wrong API key")
        raise HTTPException(status_code=401, detail="Invalid API key")


@app.get("/health")
async def health_check():
    return {
        "status": "healthy",
        "fixture_rows": len(fixture_table),
        "api_key_required": bool(settings.FIXTURE_SERVER_API_KEY),
    }


@app.post("/translate", response_model=TranslateResponse)
async def translate(request: TranslateRequest, authorization: Optional[str] = Header(default=None)):
    """Return the recorded translation of the wrapped text"""
    _check_key(authorization)
    translation = fixture_table.get(request.text)
    if translation is None:
        logger.debug(f"No fixture for {request.text[:80]!r}")
        raise HTTPException(status_code=404, detail=f"No recorded translation for: {request.text[:80]}")
    return TranslateResponse(translation=translation)
