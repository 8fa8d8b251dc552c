"""Training: three sequential passes, one per sub-network.

Each pass freezes the other two nets and fits its own against the
recorded evaluations: the repair net learns tile classes of the repaired
layout from the unrepaired one (mean per-tile cross-entropy), the usage
net learns the normalized tile-usage distribution from the repaired
layout (KL divergence), and the score net learns objective plus
range-normalized measures from repaired layout and usage together
(mean squared error).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch.nn import functional as F

from .model import Surrogate, SurrogateSpec, build_model
from .protocol import TrainingSet, normalize_measures


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")


def kl_usage_loss(log_probs: torch.Tensor, target: torch.Tensor):
    """KL divergence from predicted to target tile distribution, averaged
    over the batch; zero exactly when they agree."""
    return F.kl_div(log_probs, target, reduction="batchmean")


def score_targets(data: TrainingSet) -> np.ndarray:
    """N x 3 regression targets: objective raw, measures scaled into
    [0, 1] by the dataset's measure ranges."""
    return np.column_stack([
        data.objective,
        normalize_measures(data.measures, data.measure_ranges),
    ]).astype(np.float32)


def _fit(net, inputs, target, loss_of, config: TrainConfig, seed: int):
    """One pass over one sub-network; returns the per-epoch loss curve."""
    params = list(net.parameters())
    optimizer = torch.optim.Adam(params, lr=config.learning_rate,
                                 betas=(config.beta1, config.beta2))
    n = inputs.shape[0]
    rng = torch.Generator().manual_seed(seed)
    curve = []
    for _ in range(config.epochs):
        order = torch.randperm(n, generator=rng)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss = loss_of(net(inputs[idx]), target[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total += loss.item() * len(idx)
        curve.append(total / n)
    return curve


def train(data: TrainingSet, config: TrainConfig = TrainConfig(),
          model: Surrogate = None):
    """Fit the three sub-networks sequentially; returns (model, curves).

    ``model`` continues training from existing weights when given and
    must match the data dims; otherwise a fresh model is built.  Curves
    map sub-network name to its per-epoch mean loss.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    _, channels, height, width = data.unrepaired.shape
    torch.manual_seed(config.seed)  # covers fresh-model initialization too
    if model is None:
        model = build_model(SurrogateSpec(height, width, channels))
    else:
        spec = model.spec
        if (spec.height, spec.width, spec.channels) != (height, width,
                                                        channels):
            raise ValueError(
                f"model dims {(spec.height, spec.width, spec.channels)} do "
                f"not match data dims {(height, width, channels)}")

    unrepaired = torch.from_numpy(np.ascontiguousarray(data.unrepaired))
    repaired = torch.from_numpy(np.ascontiguousarray(data.repaired))
    tile_classes = repaired.argmax(dim=1)
    usage = torch.from_numpy(np.ascontiguousarray(data.usage))
    scored = torch.from_numpy(score_targets(data))
    score_inputs = torch.cat(
        [repaired, usage.reshape(-1, 1, height, width)], dim=1)

    model.train()
    curves = {}
    passes = (
        ("repair", model.repair_net, unrepaired, tile_classes,
         lambda logits, t: F.cross_entropy(logits, t)),
        ("usage", model.usage_net, repaired, usage,
         lambda logits, t: kl_usage_loss(
             logits.flatten(1).log_softmax(dim=1), t)),
        ("score", model.score_net, score_inputs, scored,
         lambda out, t: F.mse_loss(out, t)),
    )
    for offset, (name, net, inputs, target, loss_of) in enumerate(passes):
        for p in model.parameters():
            p.requires_grad_(False)
        for p in net.parameters():
            p.requires_grad_(True)
        curves[name] = _fit(net, inputs, target, loss_of, config,
                            config.seed + offset)
    for p in model.parameters():
        p.requires_grad_(True)
    model.eval()
    return model, curves
