from dataclasses import dataclass
from datetime import UTC, datetime
from pathlib import Path

from dialdiff.config.app_settings import AppSettings

DEFAULT_RUNS_ROOT = Path("runs")


@dataclass(frozen=True)
class CliState:
    """Wrapper of global CLI settings, passed or inferred from the CLI options."""

    resolved_config_path: Path | None
    app_settings: AppSettings
    out_dir: Path | None = None

    def run_dir_for(self, command: str) -> Path:
        """`--out` when given, else a fresh `runs/<command>_<UTC timestamp>` directory."""
        if self.out_dir is not None:
            return self.out_dir
        return DEFAULT_RUNS_ROOT / f"{command}_{datetime.now(tz=UTC).strftime('%Y%m%dT%H%M%S')}"
