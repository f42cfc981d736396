from typing import Any


class AppConfigException(Exception):
    """Exception for invalid configuration errors."""

    pass


class DataException(Exception):
    """Root of every error caused by bad input data. The CLI maps these to exit code 3."""

    pass


class NumericalException(Exception):
    """Root of every numerical failure (non-finite losses, diverging samplers). The CLI maps these to exit code 4."""

    pass


class PreprocessingException(DataException):
    """Exception for dialogs that cannot be concatenated or tokenized."""

    pass


class VocabularyException(DataException):
    """Exception for invalid vocabularies or vocabulary files."""

    pass


class DatasetFormatException(DataException):
    """Exception for malformed dataset files. Names the offending line when one is known."""

    def __init__(self, msg: str, line_number: int | None = None):
        self.line_number = line_number
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{prefix}{msg}")


class ImageCodecException(DataException):
    """Exception for unreadable or unsupported image files."""

    pass


class CheckpointException(DataException):
    """Exception for corrupt checkpoints or checkpoints that do not match the expected config."""

    pass


class RunDirectoryException(DataException):
    """Exception for run directories that are locked by another writer or already hold a different run."""

    pass


class BackboneShapeException(ValueError):
    """Exception for inputs that violate the noise predictor's contract (tensor shapes, timestep range)."""

    pass


class TrainingException(NumericalException):
    """Exception raised when a training step produces a non-finite loss or gradient."""

    def __init__(self, step: int, diagnostics: dict[str, Any]):
        self.step = step
        self.diagnostics = diagnostics
        super().__init__(f"Non-finite training state at step {step}: {diagnostics}")


class SamplingException(NumericalException):
    """Exception raised when a sampler state becomes non-finite."""

    def __init__(self, step: int | float, sampler: str):
        self.step = step
        self.sampler = sampler
        super().__init__(f"{sampler} sampler produced a non-finite state at timestep {step}.")


class MetricsException(NumericalException):
    """Exception for invalid metric inputs (asymmetric covariances, NaNs, non-normalised probabilities)."""

    pass


class ClassifierRejectedException(MetricsException):
    """Raised when the evaluation classifier misses the held-out accuracy needed to serve as metric backbone."""

    def __init__(self, accuracy: float, required: float):
        self.accuracy = accuracy
        self.required = required
        super().__init__(f"Evaluation classifier held-out accuracy {accuracy:.4f} is below the required {required:.4f}")
