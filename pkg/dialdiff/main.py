"""
CLI entrypoint for dialdiff. Usage: `dialdiff [GLOBAL OPTIONS] <command> [OPTIONS]`, e.g.
`dialdiff --config conf.yaml --seed 3 --strategy hash --out runs/hash train`.
"""

import json
import logging
from pathlib import Path
from typing import Any

import click
from rich.markup import escape

from dialdiff.config.app_settings import AppSettings, get_app_settings
from dialdiff.config.cli_state import CliState
from dialdiff.models.types import ConcatStrategy, KeepMode, SamplerName
from dialdiff.utils.constants import (
    DIALDIFF_CONFIG_ENVVAR,
    EXIT_DATA_ERROR,
    EXIT_NUMERICAL_FAILURE,
)
from dialdiff.utils.exceptions import AppConfigException, BackboneShapeException, DataException, NumericalException
from dialdiff.utils.log_utils import CONSOLE, configure_logging
from dialdiff.utils.parallel import apply_thread_cap
from dialdiff.version import get_project_version

_LOGGER = logging.getLogger(__name__)

_EXISTING_FILE = click.Path(exists=True, file_okay=True, dir_okay=False, resolve_path=True, path_type=Path)
_EXISTING_DIR = click.Path(exists=True, file_okay=False, dir_okay=True, resolve_path=True, path_type=Path)


class DialdiffGroup(click.Group):
    """Maps dialdiff's error families onto exit codes: 3 for bad data or config, 4 for numerical failures."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except (DataException, AppConfigException, BackboneShapeException) as ex:
            _LOGGER.debug("Data error", exc_info=True)
            CONSOLE.print(f"[bold red]error:[/bold red] {escape(str(ex))}")
            ctx.exit(EXIT_DATA_ERROR)
        except NumericalException as ex:
            _LOGGER.debug("Numerical failure", exc_info=True)
            CONSOLE.print(f"[bold red]numerical failure:[/bold red] {escape(str(ex))}")
            ctx.exit(EXIT_NUMERICAL_FAILURE)


def _settings_with_dataset(settings: AppSettings, dataset: str | None) -> AppSettings:
    if dataset is None:
        return settings
    return settings.model_copy(update={"data": settings.data.model_copy(update={"dataset": dataset})})


@click.version_option(version=get_project_version(), prog_name="dialdiff")
@click.group(cls=DialdiffGroup, help="dialdiff: dialog-conditioned image generation with joint-timestep diffusion.")
@click.option(
    "-c",
    "--config",
    required=False,
    envvar=DIALDIFF_CONFIG_ENVVAR,
    show_envvar=True,
    help="Path to a YAML/JSON dialdiff config, or to a run manifest whose config snapshot should be reused.",
    type=_EXISTING_FILE,
)
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Overrides the training and sampling seed.")
@click.option(
    "--strategy", type=click.Choice([s.value for s in ConcatStrategy]), default=None, help="Dialog concatenation."
)
@click.option("--keep", type=click.Choice([k.value for k in KeepMode]), default=None, help="Truncation end to keep.")
@click.option("--sampler", type=click.Choice([s.value for s in SamplerName]), default=None, help="Sampler to use.")
@click.option("--steps", type=click.IntRange(min=1), default=None, help="DPM-Solver step count.")
@click.option(
    "--out",
    type=click.Path(file_okay=False, dir_okay=True, path_type=Path),
    default=None,
    help="Run directory for the command's outputs. Defaults to runs/<command>_<timestamp>.",
)
@click.pass_context
def cli(
    ctx: click.Context,
    config: Path | None,
    seed: int | None,
    strategy: str | None,
    keep: str | None,
    sampler: str | None,
    steps: int | None,
    out: Path | None,
) -> None:
    """Top-level CLI group."""
    settings = get_app_settings(src_filepath=config)
    configure_logging(settings.log_level)
    apply_thread_cap()
    settings = settings.with_overrides(
        seed=seed,
        strategy=ConcatStrategy(strategy) if strategy else None,
        keep=KeepMode(keep) if keep else None,
        sampler=SamplerName(sampler) if sampler else None,
        steps=steps,
    )
    ctx.obj = CliState(resolved_config_path=config, app_settings=settings, out_dir=out)


@cli.command("show-config")
@click.pass_obj
def show_config(cli_state: CliState) -> None:
    """Print the resolved config, overrides included."""
    from dialdiff.actions import show_config_action

    click.echo(json.dumps(show_config_action(cli_state.app_settings), indent=2))


@cli.command()
@click.option("--dataset", default=None, help="`shapetalk`, a gen-data directory or a PhotoChat-format JSONL file.")
@click.pass_obj
def prep(cli_state: CliState, dataset: str | None) -> None:
    """Tokenize a corpus; report truncation rate, OOV rate and the token-length histogram."""
    from dialdiff.actions import prep_action

    prep_action(_settings_with_dataset(cli_state.app_settings, dataset), cli_state.run_dir_for("prep"))


@cli.command("gen-data")
@click.pass_obj
def gen_data(cli_state: CliState) -> None:
    """Write the ShapeTalk-lite train/test corpus."""
    from dialdiff.actions import gen_data_action

    gen_data_action(cli_state.app_settings, cli_state.run_dir_for("gen-data"))


@cli.command()
@click.option("--dataset", default=None, help="`shapetalk`, a gen-data directory or a PhotoChat-format JSONL file.")
@click.option("--resume", type=_EXISTING_FILE, default=None, help="Checkpoint to resume training from.")
@click.pass_obj
def train(cli_state: CliState, dataset: str | None, resume: Path | None) -> None:
    """Train the joint noise predictor."""
    from dialdiff.actions import train_action

    train_action(_settings_with_dataset(cli_state.app_settings, dataset), cli_state.run_dir_for("train"), resume)


@cli.command()
@click.option("--checkpoint", required=True, type=_EXISTING_FILE, help="Model checkpoint written by `train`.")
@click.option(
    "--dialogs",
    default="shapetalk",
    show_default=True,
    help="`shapetalk` (its test split), a gen-data directory (its test split) or a JSONL file of dialogs.",
)
@click.option("--grid", type=click.IntRange(min=0), default=0, help="Dialogs to put on a case-study sheet.")
@click.pass_obj
def sample(cli_state: CliState, checkpoint: Path, dialogs: str, grid: int) -> None:
    """Generate one image per dialog."""
    from dialdiff.actions import sample_action

    sample_action(checkpoint, dialogs, cli_state.app_settings, cli_state.run_dir_for("sample"), grid=grid)


@cli.command("eval")
@click.option("--real", "real_dir", required=True, type=_EXISTING_DIR, help="Image set of real images.")
@click.option("--generated", "gen_dir", required=True, type=_EXISTING_DIR, help="Image set written by `sample`.")
@click.option("--classifier", required=True, type=_EXISTING_FILE, help="Checkpoint from `train-classifier`.")
@click.option("--model-name", default="model", show_default=True, help="Value of the report's `model` column.")
@click.pass_obj
def eval_cmd(cli_state: CliState, real_dir: Path, gen_dir: Path, classifier: Path, model_name: str) -> None:
    """Score generated images with toy-FID and toy-IS, overall and per category."""
    from dialdiff.actions import eval_action

    eval_action(real_dir, gen_dir, classifier, cli_state.app_settings, cli_state.run_dir_for("eval"), model_name)


@cli.command()
@click.option("--classifier", type=_EXISTING_FILE, default=None, help="Shared classifier; trained fresh when omitted.")
@click.option("--grid", type=click.IntRange(min=0), default=4, show_default=True, help="Case-study sheet rows.")
@click.pass_obj
def ablate(cli_state: CliState, classifier: Path | None, grid: int) -> None:
    """Train and score one model per concatenation strategy against the untrained baseline."""
    from dialdiff.actions import ablate_action

    ablate_action(cli_state.app_settings, cli_state.run_dir_for("ablate"), classifier_ckpt=classifier, grid=grid)


@cli.command("train-classifier")
@click.pass_obj
def train_classifier(cli_state: CliState) -> None:
    """Fit and persist the evaluation classifier."""
    from dialdiff.actions import train_classifier_action

    train_classifier_action(cli_state.app_settings, cli_state.run_dir_for("train-classifier"))


if __name__ == "__main__":
    cli(prog_name="dialdiff")
