import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import ValidationError

from dialdiff.models.dialog_models import Dialog, DialogRecord
from dialdiff.utils.exceptions import DatasetFormatException, PreprocessingException

_LOGGER = logging.getLogger(__name__)


@dataclass
class LoadedCorpus:
    """Dialogs read from a JSONL dataset plus the records that were skipped, keyed by skip reason."""

    path: Path
    dialogs: list[Dialog] = field(default_factory=list)
    skipped_missing_image: int = 0
    skipped_no_context: int = 0
    skipped_invalid: int = 0

    @property
    def root(self) -> Path:
        return self.path.parent

    @property
    def num_skipped(self) -> int:
        return self.skipped_missing_image + self.skipped_no_context + self.skipped_invalid

    def image_path(self, dialog: Dialog) -> Path:
        return self.root / dialog.image_ref


def load_photochat(path: Path, check_images: bool = True) -> LoadedCorpus:
    """
    Reads a PhotoChat-format JSONL file. Only the turns before the shared image are kept. Records whose image file is
    missing (relative to the JSONL's directory) are skipped and counted, as are records with no turn before the
    image and records whose kept turns fail validation (a blank turn text); the latter are logged with their line
    number. A line that is not a valid record raises `DatasetFormatException` naming it.
    """
    if not path.is_file():
        raise DatasetFormatException(f"Dataset file not found: {path}")
    corpus = LoadedCorpus(path=path)
    with path.open(encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = DialogRecord.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as ex:
                raise DatasetFormatException(f"{path}: {ex}", line_number=line_number) from ex
            if check_images and not (corpus.root / record.image).is_file():
                corpus.skipped_missing_image += 1
                continue
            if not record.context_turns:
                corpus.skipped_no_context += 1
                continue
            try:
                corpus.dialogs.append(record.to_dialog(fallback_id=f"line-{line_number:06d}"))
            except (PreprocessingException, ValidationError) as ex:
                _LOGGER.warning(f"{path}:{line_number}: skipping invalid dialog: {ex}")
                corpus.skipped_invalid += 1
    if corpus.num_skipped:
        _LOGGER.warning(
            f"Skipped records in {path}: {corpus.skipped_missing_image} with a missing image, "
            f"{corpus.skipped_no_context} with no turn before the image, {corpus.skipped_invalid} invalid"
        )
    _LOGGER.info(f"Loaded {len(corpus.dialogs)} dialogs from {path}")
    return corpus


@dataclass(frozen=True)
class ConversionReport:
    written: int
    skipped_no_share: int
    reference_count: int | None

    @property
    def coverage(self) -> float | None:
        return self.written / self.reference_count if self.reference_count else None


def convert_photochat_export(
    export_path: Path, out_path: Path, image_pattern: str = "images/{photo_id}.png", reference_count: int | None = None
) -> ConversionReport:
    """
    Converts one split of the official PhotoChat JSON export (a list of dialogs with `dialogue` messages flagged by
    `share_photo`) into the JSONL schema. `image_turn` is the index of the first sharing message; dialogs that never
    share a photo are skipped. Image files are not touched: `image_pattern` names where they are expected.
    """
    try:
        export = json.loads(export_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as ex:
        raise DatasetFormatException(f"Cannot read PhotoChat export {export_path}: {ex}") from ex
    if not isinstance(export, list):
        raise DatasetFormatException(f"PhotoChat export {export_path} must hold a JSON list of dialogs.")
    written = skipped = 0
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8") as out:
        for position, item in enumerate(export):
            try:
                messages = item["dialogue"]
                share_at = next((i for i, m in enumerate(messages) if m.get("share_photo")), None)
                if share_at is None:
                    skipped += 1
                    continue
                record = {
                    "id": str(item.get("photo_id", position)),
                    "turns": [{"speaker": int(m["user_id"]), "text": m["message"]} for m in messages],
                    "image": image_pattern.format(photo_id=item.get("photo_id", position)),
                    "image_turn": share_at,
                }
            except (KeyError, TypeError, AttributeError, ValueError) as ex:
                raise DatasetFormatException(f"{export_path}: malformed dialog at index {position}: {ex}") from ex
            out.write(json.dumps(record) + "\n")
            written += 1
    report = ConversionReport(written=written, skipped_no_share=skipped, reference_count=reference_count)
    if reference_count:
        _LOGGER.info(f"Converted {written} dialogs, {written / reference_count:.1%} of the reference {reference_count}")
    return report
