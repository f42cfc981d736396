from dialdiff.backbone.checkpoint import CheckpointContents, load_checkpoint, save_checkpoint
from dialdiff.backbone.embedding import FrozenTextEmbedding, embed_batch, embed_text
from dialdiff.backbone.network import JointNoisePredictor, ParamGradients, backward, forward, num_parameters

__all__ = [
    "CheckpointContents",
    "FrozenTextEmbedding",
    "JointNoisePredictor",
    "ParamGradients",
    "backward",
    "embed_batch",
    "embed_text",
    "forward",
    "load_checkpoint",
    "num_parameters",
    "save_checkpoint",
]
