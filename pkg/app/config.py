import os
import logging
from typing import Optional
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

def setup_logging(level: Optional[str] = None):
    """Configure logging for the toolkit"""
    log_level = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    log_format = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    handlers = [logging.StreamHandler()]  # Console output
    log_file = os.getenv("LOG_FILE", "")
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode="a"))

    logging.basicConfig(
        level=getattr(logging, log_level, logging.INFO),
        format=log_format,
        handlers=handlers,
        force=True,
    )

    # Set specific log levels for external libraries
    logging.getLogger("openai").setLevel(logging.WARNING)
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("urllib3").setLevel(logging.WARNING)
    logging.getLogger("uvicorn.access").setLevel(logging.WARNING)

class Settings:
    """Toolkit settings loaded from environment variables."""

    # Logging Configuration
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: str = os.getenv("LOG_FILE", "")

    # Artifact locations
    CACHE_PATH: str = os.getenv("CACHE_PATH", ".cache/translations.jsonl")
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "out")

    # Backend call policy
    MAX_IN_FLIGHT: int = int(os.getenv("MAX_IN_FLIGHT", "4"))
    RETRY_ATTEMPTS: int = int(os.getenv("RETRY_ATTEMPTS", "4"))
    RETRY_BASE_DELAY: float = float(os.getenv("RETRY_BASE_DELAY", "1.0"))
    HTTP_TIMEOUT: float = float(os.getenv("HTTP_TIMEOUT", "30"))

    # OpenAI backend
    OPENAI_MODEL: str = os.getenv("OPENAI_MODEL", "gpt-4o-mini")

    # Fixture translation server
    FIXTURE_TABLE: str = os.getenv("FIXTURE_TABLE", "")
    FIXTURE_SERVER_API_KEY: Optional[str] = os.getenv("FIXTURE_SERVER_API_KEY")

settings = Settings()
