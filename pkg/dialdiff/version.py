import os
from functools import cache
from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as installed_version
from pathlib import Path
from tomllib import load as toml_load

_PYPROJECT_FILENAME = "pyproject.toml"


def _pyproject_path() -> Path:
    return Path(os.path.abspath(os.getenv("APP_DIR", "."))) / _PYPROJECT_FILENAME


@cache
def get_project_version() -> str:
    """
    dialdiff's version. A source checkout ($APP_DIR/pyproject.toml) wins, so a bumped version shows up without
    reinstalling; otherwise the installed distribution's metadata is used. "0+unknown" when neither exists.
    """
    pyproject = _pyproject_path()
    if pyproject.is_file():
        with pyproject.open("rb") as f:
            return str(toml_load(f)["project"]["version"])
    try:
        return installed_version("dialdiff")
    except PackageNotFoundError:
        return "0+unknown"
