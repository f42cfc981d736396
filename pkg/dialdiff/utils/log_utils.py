# pragma: no cover
import logging
import os
import sys
from typing import Final

from rich.console import Console

# Console output (spinners, summaries, errors) goes to stderr; stdout is reserved for machine-readable output such
# as `show-config`.
CONSOLE: Final[Console] = Console(width=int(os.getenv("COLUMNS", 120)), stderr=True)
SPINNER: Final[str] = "dots2"

_LOG_FORMAT: Final[str] = "%(asctime)s %(levelname)s [%(name)s] %(message)s"
_LOG_DATE_FORMAT: Final[str] = "%Y-%m-%d %H:%M:%S"
# PIL logs every PNG chunk it parses at DEBUG.
_QUIET_LOGGERS: Final[tuple[str, ...]] = ("PIL",)


def configure_logging(level: str) -> None:
    """
    Installs a single stderr `StreamHandler` on the root logger at `level` for the duration of a dialdiff command.
    Loggers of chatty dependencies are capped at INFO.
    """
    handler = logging.StreamHandler(stream=sys.stderr)
    handler.setFormatter(logging.Formatter(fmt=_LOG_FORMAT, datefmt=_LOG_DATE_FORMAT))
    logging.basicConfig(level=level.upper(), handlers=[handler], force=True)
    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(logging.INFO, logging.getLogger().level))
