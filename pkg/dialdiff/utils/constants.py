from typing import Final

DIALDIFF_CONFIG_ENVVAR: Final[str] = "DIALDIFF_CONFIG"
DIALDIFF_THREADS_ENVVAR: Final[str] = "DIALDIFF_THREADS"

# Text budget of the frozen text encoder the conditioning mimics.
MAX_TOKENS: Final[int] = 77
TEXT_EMBED_DIM: Final[int] = 64

PAD_TOKEN: Final[str] = "<pad>"
UNK_TOKEN: Final[str] = "<unk>"
HASH_TOKEN: Final[str] = "#"
PER1_TOKEN: Final[str] = "[PER1]"
PER2_TOKEN: Final[str] = "[PER2]"
RESERVED_TOKENS: Final[tuple[str, ...]] = (PAD_TOKEN, UNK_TOKEN, HASH_TOKEN, PER1_TOKEN, PER2_TOKEN)
PAD_ID: Final[int] = 0
UNK_ID: Final[int] = 1

IMAGE_SIZE: Final[int] = 16
IMAGE_CHANNELS: Final[int] = 3
IMAGE_SUFFIXES: Final[frozenset[str]] = frozenset([".png", ".ppm"])

# Binary checkpoint format.
CHECKPOINT_MAGIC: Final[bytes] = b"DDIF"
CHECKPOINT_VERSION: Final[int] = 1
CHECKPOINT_KIND_MODEL: Final[str] = "joint_noise_predictor"
CHECKPOINT_KIND_CLASSIFIER: Final[str] = "eval_classifier"
OPTIM_TENSOR_PREFIX: Final[str] = "optim."

# Run directory layout.
MANIFEST_FILENAME: Final[str] = "manifest.json"
METRICS_LOG_FILENAME: Final[str] = "metrics.csv"
FAILURE_FILENAME: Final[str] = "failure.json"
LOCK_FILENAME: Final[str] = ".lock"
CHECKPOINT_DIRNAME: Final[str] = "checkpoints"
FINAL_CHECKPOINT_FILENAME: Final[str] = "final.ddif"
CLASSIFIER_CHECKPOINT_FILENAME: Final[str] = "classifier.ddif"
INDEX_FILENAME: Final[str] = "index.jsonl"
SPLIT_MANIFEST_FILENAME: Final[str] = "splits.json"
VOCAB_FILENAME: Final[str] = "vocab.txt"
TOKENS_FILENAME: Final[str] = "tokens.jsonl"
PREP_STATS_FILENAME: Final[str] = "prep_stats.json"
REPORT_JSON_FILENAME: Final[str] = "report.json"
REPORT_CSV_FILENAME: Final[str] = "report.csv"
ABLATION_CSV_FILENAME: Final[str] = "ablation.csv"
CASE_STUDY_FILENAME: Final[str] = "case_study.png"

# CLI exit codes.
EXIT_OK: Final[int] = 0
EXIT_USAGE: Final[int] = 2
EXIT_DATA_ERROR: Final[int] = 3
EXIT_NUMERICAL_FAILURE: Final[int] = 4

# Metric labels; the extractor is a toy classifier, never Inception-v3.
FID_LABEL: Final[str] = "toy-FID"
IS_LABEL: Final[str] = "toy-IS"
UNTRAINED_BASELINE_LABEL: Final[str] = "untrained-baseline"

# Counts of the PhotoChat release the converter reports against.
PHOTOCHAT_TRAIN_COUNT: Final[int] = 9843
PHOTOCHAT_TEST_COUNT: Final[int] = 963
