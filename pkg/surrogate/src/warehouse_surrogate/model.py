"""Model architecture: two dense per-tile nets and one regression head.

The repair net and the usage net share a shape: a 3x3 stem convolution,
two residual stages of two basic blocks each (the second stage doubles
the channel width through a 1x1 projection shortcut), and a 1x1 output
convolution.  Both preserve the H x W grid so their outputs are per
tile.  The score net downsamples with stride-2 4x4 convolutions that
double their channel count until the grid is at most 4 x 4, then
flattens into two fully-connected layers emitting (objective, measure 1,
measure 2).

Convolutions that feed a batch-normalization layer carry no bias; the
output convolutions and the fully-connected layers do.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

# channel order of the exchange encoding: shelf, endpoint, workstation,
# home, empty (grid tile types minus the solver-internal dummy source)
ONE_HOT_CHANNELS = 5


@dataclass(frozen=True)
class SurrogateSpec:
    """Architecture parameters; dims come from the layouts being scored.

    ``base_channels`` is the width of the first residual stage in the
    per-tile nets (the second stage doubles it), ``score_channels`` the
    width of the score net's first convolution, and ``score_hidden`` its
    fully-connected hidden width.
    """

    height: int
    width: int
    channels: int = ONE_HOT_CHANNELS
    base_channels: int = 49
    score_channels: int = 40
    score_hidden: int = 192

    def __post_init__(self):
        if self.height < 2 or self.width < 2:
            raise ValueError("grid dims must be at least 2x2")
        if min(self.channels, self.base_channels, self.score_channels,
               self.score_hidden) < 1:
            raise ValueError("channel and hidden widths must be positive")

    def parameter_count(self) -> int:
        return count_parameters(build_model(self))

    def layer_count(self) -> int:
        return count_layers(build_model(self))


class BasicBlock(nn.Module):
    """Two 3x3 convolutions with batch norm and a residual shortcut.

    When the block changes width the shortcut is a 1x1 projection
    convolution with its own batch norm, otherwise the identity.
    """

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_channels, out_channels, 3, padding=1,
                               bias=False)
        self.bn1 = nn.BatchNorm2d(out_channels)
        self.conv2 = nn.Conv2d(out_channels, out_channels, 3, padding=1,
                               bias=False)
        self.bn2 = nn.BatchNorm2d(out_channels)
        self.act = nn.LeakyReLU()
        if in_channels != out_channels:
            self.shortcut = nn.Sequential(
                nn.Conv2d(in_channels, out_channels, 1, bias=False),
                nn.BatchNorm2d(out_channels))
        else:
            self.shortcut = nn.Identity()

    def forward(self, x):
        out = self.act(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.act(out + self.shortcut(x))


class TileNet(nn.Module):
    """Grid-preserving net: stem, two residual stages, 1x1 output conv."""

    def __init__(self, in_channels: int, base_channels: int,
                 out_channels: int):
        super().__init__()
        wide = 2 * base_channels
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, base_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(base_channels),
            nn.LeakyReLU())
        self.stage1 = nn.Sequential(
            BasicBlock(base_channels, base_channels),
            BasicBlock(base_channels, base_channels))
        self.stage2 = nn.Sequential(
            BasicBlock(base_channels, wide),
            BasicBlock(wide, wide))
        self.head = nn.Conv2d(wide, out_channels, 1)

    def forward(self, x):
        return self.head(self.stage2(self.stage1(self.stem(x))))


def _halved(n: int) -> int:
    # spatial size after a 4x4 convolution with stride 2 and padding 1
    return (n - 2) // 2 + 1


class ScoreNet(nn.Module):
    """Downsampling regressor from (layout one-hot + usage) to 3 scalars."""

    def __init__(self, height: int, width: int, in_channels: int,
                 channels: int, hidden: int):
        super().__init__()
        convs = []
        h, w, cin, cout = height, width, in_channels, channels
        while h > 4 or w > 4:
            if min(h, w) < 2:
                raise ValueError(
                    f"grid {height}x{width} too narrow to downsample")
            convs += [nn.Conv2d(cin, cout, 4, stride=2, padding=1,
                                bias=False),
                      nn.BatchNorm2d(cout),
                      nn.LeakyReLU()]
            h, w, cin, cout = _halved(h), _halved(w), cout, 2 * cout
        self.convs = nn.Sequential(*convs)
        self.fc1 = nn.Linear(h * w * cin, hidden)
        self.act = nn.LeakyReLU()
        self.fc2 = nn.Linear(hidden, 3)

    def forward(self, x):
        out = self.convs(x).flatten(1)
        return self.fc2(self.act(self.fc1(out)))


class Surrogate(nn.Module):
    """The full three-net model over B x C x H x W layout tensors."""

    def __init__(self, spec: SurrogateSpec):
        super().__init__()
        self.spec = spec
        self.repair_net = TileNet(spec.channels, spec.base_channels,
                                  spec.channels)
        self.usage_net = TileNet(spec.channels, spec.base_channels, 1)
        self.score_net = ScoreNet(spec.height, spec.width, spec.channels + 1,
                                  spec.score_channels, spec.score_hidden)

    def predicted_layout(self, grids: torch.Tensor) -> torch.Tensor:
        """Hard one-hot repaired prediction (argmax over tile scores)."""
        logits = self.repair_net(grids)
        winners = logits.argmax(dim=1, keepdim=True)
        return torch.zeros_like(logits).scatter_(1, winners, 1.0)

    def predicted_usage(self, repaired: torch.Tensor) -> torch.Tensor:
        """Tile-usage distribution over the grid; each map sums to 1."""
        logits = self.usage_net(repaired)
        b, _, h, w = logits.shape
        return logits.reshape(b, h * w).softmax(dim=1).reshape(b, 1, h, w)

    def forward(self, grids: torch.Tensor):
        """Chained inference: repair, usage of the repaired prediction,
        then scores from their concatenation.

        Returns (repaired one-hot B x C x H x W, usage B x 1 x H x W,
        scores B x 3).  Score measures are in normalized units; the
        checkpoint's measure ranges map them back.
        """
        repaired = self.predicted_layout(grids)
        usage = self.predicted_usage(repaired)
        scores = self.score_net(torch.cat([repaired, usage], dim=1))
        return repaired, usage, scores


def build_model(spec: SurrogateSpec) -> Surrogate:
    return Surrogate(spec)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def count_layers(model: nn.Module) -> int:
    """Convolutional, batch-normalization, and fully-connected layers."""
    return sum(isinstance(m, (nn.Conv2d, nn.BatchNorm2d, nn.Linear))
               for m in model.modules())
