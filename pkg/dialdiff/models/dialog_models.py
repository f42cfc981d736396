from typing import Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from dialdiff.utils.exceptions import PreprocessingException


class Turn(BaseModel):
    """A single dialog turn `c_k` and the interlocutor who wrote it."""

    model_config = ConfigDict(frozen=True, extra="forbid")
    speaker_id: int = Field(ge=0, le=1)
    text: str

    @field_validator("text")
    @classmethod
    def _text_not_blank(cls, value: str) -> str:
        if not value.strip():
            raise PreprocessingException("Turn text must be non-empty after whitespace trimming.")
        return value


class Dialog(BaseModel):
    """
    The K turns that precede the shared image, paired with that image. `sample_id` keys every artifact derived from
    the dialog (token rows, generated images, report rows).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")
    sample_id: str
    turns: tuple[Turn, ...]
    image_ref: str
    category: str | None = None
    color: str | None = None

    @model_validator(mode="after")
    def _turns_not_empty(self) -> Self:
        if len(self.turns) == 0:
            raise PreprocessingException(f"Dialog {self.sample_id} has no turns before its image.")
        return self

    @property
    def num_turns(self) -> int:
        return len(self.turns)


class TurnRecord(BaseModel):
    """A turn as stored in the JSONL dataset schema."""

    model_config = ConfigDict(frozen=True, extra="ignore")
    speaker: int = Field(ge=0, le=1)
    text: str


class DialogRecord(BaseModel):
    """
    One line of a JSONL dataset file:
    `{"turns":[{"speaker":0,"text":"..."}],"image":"relative/path.png","category":"optional"}`.

    The optional `image_turn` marks the index of the turn at which the image was shared; turns from that index on are
    dropped when converting to a `Dialog`. The optional `id` is used as sample id, falling back to the line number.
    `color` is set on synthetic samples only: the color the dialog asks for.
    """

    model_config = ConfigDict(frozen=True, extra="ignore")
    turns: list[TurnRecord]
    image: str = Field(min_length=1)
    category: str | None = None
    color: str | None = None
    id: str | None = None
    image_turn: int | None = Field(default=None, ge=0)

    @property
    def context_turns(self) -> list[TurnRecord]:
        return self.turns if self.image_turn is None else self.turns[: self.image_turn]

    def to_dialog(self, fallback_id: str) -> Dialog:
        kept = self.context_turns
        return Dialog(
            sample_id=self.id or fallback_id,
            turns=tuple(Turn(speaker_id=t.speaker, text=t.text) for t in kept),
            image_ref=self.image,
            category=self.category,
            color=self.color,
        )

    @classmethod
    def from_dialog(cls, dialog: Dialog) -> "DialogRecord":
        return cls(
            turns=[TurnRecord(speaker=t.speaker_id, text=t.text) for t in dialog.turns],
            image=dialog.image_ref,
            category=dialog.category,
            color=dialog.color,
            id=dialog.sample_id,
        )
