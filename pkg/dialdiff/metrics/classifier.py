"""
Seed-pinned convolutional classifier over 16x16x3 images. Its penultimate activations are the feature space of toy-FID
and its softmax rows feed toy-IS; it is never Inception-v3, and reports label its metrics accordingly.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from dialdiff.backbone.checkpoint import load_checkpoint, load_into_module, save_checkpoint
from dialdiff.backbone.network import collect_gradients
from dialdiff.config.app_settings import EvalConfig, TrainConfig
from dialdiff.diffusion.optimizer import AdamWState, adamw_step
from dialdiff.metrics.frechet import FeatureSet
from dialdiff.models.scene import NUM_SCENE_CLASSES
from dialdiff.utils.constants import CHECKPOINT_KIND_CLASSIFIER, IMAGE_CHANNELS, IMAGE_SIZE
from dialdiff.utils.exceptions import CheckpointException, ClassifierRejectedException, MetricsException
from dialdiff.utils.parallel import parallel_map
from dialdiff.utils.seeding import derive_generator

_LOGGER = logging.getLogger(__name__)

_CHUNK_SIZE = 256


class EvalClassifier(nn.Module):
    def __init__(self, num_classes: int = NUM_SCENE_CLASSES, feature_dim: int = 32, seed: int = 0):
        super().__init__()
        self.num_classes = num_classes
        self.feature_dim = feature_dim
        self.conv1 = nn.Conv2d(IMAGE_CHANNELS, 16, kernel_size=3, padding=1)
        self.conv2 = nn.Conv2d(16, 32, kernel_size=3, padding=1)
        self.fc = nn.Linear(32 * (IMAGE_SIZE // 4) ** 2, feature_dim)
        self.out = nn.Linear(feature_dim, num_classes)
        self.to(torch.float64)
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for module in (self.conv1, self.conv2, self.fc, self.out):
                fan_in = module.weight[0].numel()
                module.weight.normal_(0.0, (2.0 / fan_in) ** 0.5, generator=generator)
                module.bias.zero_()

    def features(self, images: torch.Tensor) -> torch.Tensor:
        """Penultimate activations for images [N, H, W, C]."""
        h = images.to(torch.float64).permute(0, 3, 1, 2)
        h = F.max_pool2d(F.relu(self.conv1(h)), 2)
        h = F.max_pool2d(F.relu(self.conv2(h)), 2)
        return F.relu(self.fc(h.flatten(1)))

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.out(self.features(images))


def _clamped(images: torch.Tensor | np.ndarray) -> tuple[torch.Tensor, int]:
    tensor = torch.as_tensor(images, dtype=torch.float64)
    if tensor.ndim != 4 or tuple(tensor.shape[1:]) != (IMAGE_SIZE, IMAGE_SIZE, IMAGE_CHANNELS):
        raise MetricsException(f"Images must have shape [N, {IMAGE_SIZE}, {IMAGE_SIZE}, {IMAGE_CHANNELS}].")
    if not bool(torch.isfinite(tensor).all()):
        raise MetricsException("Images contain non-finite pixels.")
    out_of_range = int(((tensor < -1.0) | (tensor > 1.0)).sum().item())
    if out_of_range:
        _LOGGER.warning(f"Clamped {out_of_range} out-of-range pixels into [-1, 1] before classification.")
    return tensor.clamp(-1.0, 1.0), out_of_range


def _chunked(classifier: EvalClassifier, images: torch.Tensor, fn_name: str) -> torch.Tensor:
    chunks = list(torch.split(images, _CHUNK_SIZE))

    def _run(chunk: torch.Tensor) -> torch.Tensor:
        with torch.no_grad():
            return classifier.features(chunk) if fn_name == "features" else F.softmax(classifier(chunk), dim=1)

    return torch.cat(parallel_map(_run, chunks))


def extract_features(images: torch.Tensor | np.ndarray, classifier: EvalClassifier) -> FeatureSet:
    tensor, clamped = _clamped(images)
    return FeatureSet(features=_chunked(classifier, tensor, "features").numpy(), clamped_pixels=clamped)


def classify(images: torch.Tensor | np.ndarray, classifier: EvalClassifier) -> np.ndarray:
    """Softmax rows [N, C]."""
    tensor, _ = _clamped(images)
    return _chunked(classifier, tensor, "probs").numpy()


def accuracy(classifier: EvalClassifier, images: torch.Tensor, labels: torch.Tensor) -> float:
    predictions = np.argmax(classify(images, classifier), axis=1)
    return float(np.mean(predictions == labels.numpy()))


@dataclass(frozen=True)
class ClassifierFit:
    classifier: EvalClassifier
    holdout_accuracy: float


def train_classifier(
    images: torch.Tensor,
    labels: torch.Tensor,
    holdout_images: torch.Tensor,
    holdout_labels: torch.Tensor,
    config: EvalConfig,
) -> ClassifierFit:
    """
    Fits the classifier with cross-entropy and the project's AdamW (no weight decay, no warmup). Raises
    `ClassifierRejectedException` when held-out accuracy misses `config.min_accuracy`.
    """
    classifier = EvalClassifier(feature_dim=config.feature_dim, seed=config.classifier_seed)
    optim_config = TrainConfig(
        learning_rate=config.classifier_lr,
        weight_decay=0.0,
        adam_betas=(0.9, 0.999),
        warmup_steps=0,
        total_steps=config.classifier_steps,
        batch_size=config.classifier_batch_size,
        seed=config.classifier_seed,
    )
    params = dict(classifier.named_parameters())
    state = AdamWState.zeros_like(params)
    inputs = images.to(torch.float64).clamp(-1.0, 1.0)
    num_samples = inputs.shape[0]
    for step in range(1, config.classifier_steps + 1):
        generator = derive_generator(config.classifier_seed, step)
        idx = torch.randint(0, num_samples, (config.classifier_batch_size,), generator=generator)
        with torch.enable_grad():
            loss = F.cross_entropy(classifier(inputs[idx]), labels[idx])
            grads = collect_gradients(classifier, loss)
        adamw_step(params, grads, state, optim_config, step)
        if step % 100 == 0:
            _LOGGER.debug(f"classifier step {step}: loss={loss.item():.4f}")
    holdout_accuracy = accuracy(classifier, holdout_images, holdout_labels)
    _LOGGER.info(f"Evaluation classifier held-out accuracy: {holdout_accuracy:.4f}")
    if holdout_accuracy < config.min_accuracy:
        raise ClassifierRejectedException(accuracy=holdout_accuracy, required=config.min_accuracy)
    return ClassifierFit(classifier=classifier, holdout_accuracy=holdout_accuracy)


def save_classifier(path: Path, fit: ClassifierFit, config: EvalConfig) -> Path:
    header = {
        "kind": CHECKPOINT_KIND_CLASSIFIER,
        "num_classes": fit.classifier.num_classes,
        "feature_dim": fit.classifier.feature_dim,
        "holdout_accuracy": fit.holdout_accuracy,
        "eval": config.model_dump(mode="json"),
        "step": config.classifier_steps,
    }
    tensors = {name: p.detach() for name, p in fit.classifier.named_parameters()}
    return save_checkpoint(path, header, tensors)


def load_classifier(path: Path) -> EvalClassifier:
    contents = load_checkpoint(path)
    try:
        num_classes = int(contents.header["num_classes"])
        feature_dim = int(contents.header["feature_dim"])
    except (KeyError, TypeError, ValueError) as ex:
        raise CheckpointException(f"Classifier checkpoint {path} is missing its dimensions.") from ex
    classifier = EvalClassifier(num_classes=num_classes, feature_dim=feature_dim)
    load_into_module(contents, classifier, CHECKPOINT_KIND_CLASSIFIER)
    return classifier
