"""Image-to-image generators behind a common forward contract.

Two reference CNNs are provided: a residual encoder-decoder and a U-Net.
Both map a 3-channel input to a 1-channel output of the same spatial
size, with a logistic output so values lie in (0, 1). Any module obeying
that contract can be dropped into the training loop.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import torch
import torch.nn as nn

from .errors import InvalidConfig, ShapeMismatch

ARCHS = ("resnet_encdec", "unet")


@dataclass
class GeneratorConfig:
    arch: str = "resnet_encdec"
    in_channels: int = 3
    out_channels: int = 1
    base_width: int = 16
    depth: int = 3
    n_res_blocks: int = 4

    def validate(self) -> None:
        if self.arch not in ARCHS:
            raise InvalidConfig(f"unknown generator arch {self.arch!r}")
        if self.in_channels < 1 or self.out_channels < 1:
            raise InvalidConfig("channel counts must be >= 1")
        if self.depth < 1 or self.base_width < 1 or self.n_res_blocks < 0:
            raise InvalidConfig("depth/base_width must be >= 1, n_res_blocks >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(**d)


def init_weights(module: nn.Module) -> None:
    """Gaussian(0, 0.02) init for conv/linear weights, zero biases."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            nn.init.normal_(m.weight, 0.0, 0.02)
            if m.bias is not None:
                nn.init.zeros_(m.bias)


def _norm(ch: int) -> nn.Module:
    return nn.InstanceNorm2d(ch, affine=False)


class ResBlock(nn.Module):
    def __init__(self, ch: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(ch, ch, 3, padding=1), _norm(ch), nn.ReLU(inplace=True),
            nn.Conv2d(ch, ch, 3, padding=1), _norm(ch),
        )

    def forward(self, x):
        return x + self.body(x)


class ResnetEncDec(nn.Module):
    """Stem conv, stride-2 encoder, residual bottleneck, mirrored decoder."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        w = cfg.base_width
        self.stem = nn.Sequential(
            nn.Conv2d(cfg.in_channels, w, 7, padding=3), _norm(w), nn.ReLU(inplace=True)
        )
        downs = []
        for _ in range(cfg.depth):
            downs += [nn.Conv2d(w, 2 * w, 3, stride=2, padding=1), _norm(2 * w), nn.ReLU(inplace=True)]
            w *= 2
        self.down = nn.Sequential(*downs)
        self.blocks = nn.Sequential(*[ResBlock(w) for _ in range(cfg.n_res_blocks)])
        ups = []
        for _ in range(cfg.depth):
            ups += [
                nn.ConvTranspose2d(w, w // 2, 3, stride=2, padding=1, output_padding=1),
                _norm(w // 2), nn.ReLU(inplace=True),
            ]
            w //= 2
        self.up = nn.Sequential(*ups)
        self.head = nn.Conv2d(w, cfg.out_channels, 7, padding=3)

    def forward(self, x):
        h = self.stem(x)
        h = self.down(h)
        h = self.blocks(h)
        h = self.up(h)
        return torch.sigmoid(self.head(h))


class DoubleConv(nn.Module):
    def __init__(self, cin: int, cout: int):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(cin, cout, 3, padding=1), _norm(cout), nn.ReLU(inplace=True),
            nn.Conv2d(cout, cout, 3, padding=1), _norm(cout), nn.ReLU(inplace=True),
        )

    def forward(self, x):
        return self.body(x)


class UNet(nn.Module):
    """Classic contracting/expanding U-Net with skip concatenations."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        w = cfg.base_width
        widths = [w * 2**i for i in range(cfg.depth + 1)]
        self.inc = DoubleConv(cfg.in_channels, widths[0])
        self.downs = nn.ModuleList(
            DoubleConv(widths[i], widths[i + 1]) for i in range(cfg.depth)
        )
        self.pool = nn.MaxPool2d(2)
        self.upconvs = nn.ModuleList(
            nn.ConvTranspose2d(widths[i + 1], widths[i], 2, stride=2)
            for i in reversed(range(cfg.depth))
        )
        self.updecs = nn.ModuleList(
            DoubleConv(2 * widths[i], widths[i]) for i in reversed(range(cfg.depth))
        )
        self.head = nn.Conv2d(widths[0], cfg.out_channels, 1)

    def forward(self, x):
        skips = [self.inc(x)]
        for down in self.downs:
            skips.append(down(self.pool(skips[-1])))
        h = skips.pop()
        for upc, dec in zip(self.upconvs, self.updecs):
            h = upc(h)
            h = dec(torch.cat([skips.pop(), h], dim=1))
        return torch.sigmoid(self.head(h))


def build_generator(
    cfg: GeneratorConfig, seed: int, input_hw: tuple[int, int] | None = None
) -> nn.Module:
    """Construct and deterministically initialize a generator.

    When input_hw is given, rejects geometries whose sides are not
    divisible by 2**depth.
    """
    cfg.validate()
    if input_hw is not None:
        check_input_geometry(cfg, *input_hw)
    torch.manual_seed(seed)
    net = ResnetEncDec(cfg) if cfg.arch == "resnet_encdec" else UNet(cfg)
    init_weights(net)
    net.gen_config = cfg
    return net


def check_input_geometry(cfg: GeneratorConfig, h: int, w: int) -> None:
    d = 2**cfg.depth
    if h % d or w % d:
        raise InvalidConfig(
            f"input {h}x{w} not divisible by 2**depth={d} for arch {cfg.arch}"
        )


def generator_forward(net: nn.Module, x: torch.Tensor) -> torch.Tensor:
    """Run the generator on a (B, C, H, W) batch with shape checking."""
    cfg: GeneratorConfig = net.gen_config
    if x.dim() != 4 or x.shape[1] != cfg.in_channels:
        raise ShapeMismatch(
            f"expected (B, {cfg.in_channels}, H, W), got {tuple(x.shape)}"
        )
    d = 2**cfg.depth
    if x.shape[2] % d or x.shape[3] % d:
        raise ShapeMismatch(f"spatial dims {tuple(x.shape[2:])} not divisible by {d}")
    return net(x)


def param_count(params) -> int:
    """Total number of scalar parameters in a module or parameter iterable."""
    if isinstance(params, nn.Module):
        params = params.parameters()
    return sum(int(p.numel()) for p in params)
