"""Adversarial training with attention feedback, plus inference.

Each step: infuse every input with its cached attention map (residual
Hadamard product, so an absent map is the identity), generate, update
the discriminator on real vs detached fake, aggregate the fake pass's
attention maps into fresh per-sample caches, then update the generator
on the re-scored fake with an L1 term. All state, including optimizer
moments and the attention cache, serializes into a checkpoint so a run
can resume bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from .aggregation import (
    AadModel,
    ENSEMBLE_MODES,
    aad_forward,
    aad_scores,
    aggregate_attention,
    build_aad,
    crop_batch,
)
from .attention import AdConfig
from .checkpoint import Checkpoint, save_checkpoint
from .data import (
    DatasetManifest,
    MultimodalSample,
    RoiRect,
    apply_adc_mode,
    load_samples,
    make_batches,
)
from .errors import (
    ConfigGeometryMismatch,
    EmptyDataset,
    InvalidConfig,
    NonFiniteLoss,
    ShapeMismatch,
)
from .generator import GeneratorConfig, build_generator, generator_forward

_SCORE_EPS = 1e-7
PHASES = ("early", "late")


@dataclass
class TrainConfig:
    target_phase: str = "early"
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epochs: int = 30
    batch_size: int = 4
    lambda_l1: float = 10.0
    ensemble: str = "embed"
    seed: int = 0
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    ad: AdConfig = field(default_factory=AdConfig)
    infer_refinements: int = 1
    adc: str = "on"

    def validate(self) -> None:
        if self.target_phase not in PHASES:
            raise InvalidConfig(f"target_phase must be one of {PHASES}")
        if not self.lr > 0:
            raise InvalidConfig("lr must be > 0")
        if not (0 <= self.beta1 < self.beta2 < 1):
            raise InvalidConfig("need 0 <= beta1 < beta2 < 1")
        if self.lambda_l1 < 0:
            raise InvalidConfig("lambda_l1 must be >= 0")
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfig("epochs and batch_size must be >= 1")
        if self.ensemble not in ENSEMBLE_MODES:
            raise InvalidConfig(f"ensemble must be one of {ENSEMBLE_MODES}")
        if self.infer_refinements < 0:
            raise InvalidConfig("infer_refinements must be >= 0")
        if self.adc not in ("on", "off"):
            raise InvalidConfig("adc must be 'on' or 'off'")
        self.generator.validate()
        self.ad.validate()

    def to_dict(self) -> dict:
        return {
            "target_phase": self.target_phase,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lambda_l1": self.lambda_l1,
            "ensemble": self.ensemble,
            "seed": self.seed,
            "generator": self.generator.to_dict(),
            "ad": self.ad.to_dict(),
            "infer_refinements": self.infer_refinements,
            "adc": self.adc,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d.pop("geometry", None)
        d["generator"] = GeneratorConfig.from_dict(d["generator"])
        d["ad"] = AdConfig.from_dict(d["ad"])
        return cls(**d)


class Adam:
    """Bias-corrected Adam over an explicit parameter list.

    Hand-rolled so the first/second moments are plain tensors that
    serialize into checkpoints and restore bit-exactly.
    """

    def __init__(self, params, lr: float, beta1: float, beta2: float, eps: float = 1e-8):
        self.params = list(params)
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [torch.zeros_like(p) for p in self.params]
        self.v = [torch.zeros_like(p) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    @torch.no_grad()
    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.b1**self.t
        bc2 = 1.0 - self.b2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            m.mul_(self.b1).add_(g, alpha=1.0 - self.b1)
            v.mul_(self.b2).addcmul_(g, g, value=1.0 - self.b2)
            p.addcdiv_(m / bc1, (v / bc2).sqrt_().add_(self.eps), value=-self.lr)


@dataclass
class TrainState:
    gen: nn.Module
    aad: AadModel
    opt_g: Adam
    opt_d: Adam
    cache: dict[str, torch.Tensor]
    step: int
    last_stats: dict
    config_echo: dict


def rhp_infuse(x, m_x):
    """Residual Hadamard product: (m_x + 1) * x, map broadcast over channels.

    Works on numpy arrays and torch tensors alike; a zero map returns x
    bit-exactly.
    """
    if x.shape[-2:] != m_x.shape[-2:]:
        raise ShapeMismatch(
            f"input {tuple(x.shape)} and map {tuple(m_x.shape)} spatial dims differ"
        )
    if m_x.shape[-3] != 1:
        raise ShapeMismatch(f"map must be single-channel, got {tuple(m_x.shape)}")
    return (m_x + 1.0) * x


def _as_scores(s) -> torch.Tensor:
    t = s if isinstance(s, torch.Tensor) else torch.as_tensor(np.asarray(s, dtype=np.float64))
    return t.clamp(_SCORE_EPS, 1.0 - _SCORE_EPS)


def d_loss(scores_real, scores_fake) -> torch.Tensor:
    """Discriminator objective: -E[log D(y)] - E[log(1 - D(y_hat))]."""
    r = _as_scores(scores_real)
    f = _as_scores(scores_fake)
    return -torch.log(r).mean() - torch.log1p(-f).mean()


def g_loss(scores_fake, y_hat, y, lambda_l1: float):
    """Generator objective: non-saturating adversarial term plus weighted L1.

    Returns (total, adv_part, l1_part) with total = adv + lambda_l1 * l1.
    """
    if y_hat.shape != y.shape:
        raise ShapeMismatch(f"prediction {tuple(y_hat.shape)} vs target {tuple(y.shape)}")
    f = _as_scores(scores_fake)
    adv = -torch.log(f).mean()
    l1 = (y_hat - y).abs().mean()
    return adv + lambda_l1 * l1, adv, l1


def _gen_param_names(gen: nn.Module):
    return [("gen/" + n.replace(".", "/"), p) for n, p in gen.named_parameters()]


_AAD_HEADS = {"global_block": "global", "local_block": "local"}


def _aad_param_names(aad: AadModel):
    out = []
    for n, p in aad.named_parameters():
        parts = n.split(".")
        parts[0] = _AAD_HEADS.get(parts[0], parts[0])
        out.append(("aad/" + "/".join(parts), p))
    return out


def init_state(cfg: TrainConfig, geometry: dict) -> TrainState:
    """Fresh models, optimizers, and an empty attention cache."""
    cfg.validate()
    gen = build_generator(cfg.generator, cfg.seed)
    aad = build_aad(cfg.ad, cfg.seed + 1)
    opt_g = Adam([p for _, p in _gen_param_names(gen)], cfg.lr, cfg.beta1, cfg.beta2)
    opt_d = Adam([p for _, p in _aad_param_names(aad)], cfg.lr, cfg.beta1, cfg.beta2)
    echo = cfg.to_dict()
    echo["geometry"] = dict(geometry)
    return TrainState(gen, aad, opt_g, opt_d, {}, 0, {}, echo)


def _check_finite(value: torch.Tensor, name: str, step: int) -> None:
    if not bool(torch.isfinite(value)):
        raise NonFiniteLoss(f"{name} is {float(value.detach())} at step {step}")


def _roi_crops(y: torch.Tensor, rois: list[RoiRect]) -> torch.Tensor:
    return torch.cat([crop_batch(y[i : i + 1], roi) for i, roi in enumerate(rois)])


def train_step(state: TrainState, batch: list[MultimodalSample], cfg: TrainConfig):
    """One alternating optimization step over a batch; returns the stats row."""
    if not batch:
        raise EmptyDataset("empty batch")
    shape0 = batch[0].x.shape
    for s in batch[1:]:
        if s.x.shape != shape0:
            raise ShapeMismatch(f"sample {s.id} shape {s.x.shape} != {shape0}")
    _, h, w = shape0
    rois = [s.roi for s in batch]

    x = torch.stack([torch.from_numpy(apply_adc_mode(s.x, cfg.adc)) for s in batch])
    y = torch.stack([torch.from_numpy(s.target(cfg.target_phase)) for s in batch])
    zero = torch.zeros(1, h, w)
    m_x = torch.stack([state.cache.get(s.id, zero) for s in batch])

    x_prime = rhp_infuse(x, m_x)
    y_hat = generator_forward(state.gen, x_prime)

    # discriminator update on real vs detached fake
    state.opt_d.zero_grad()
    state.opt_g.zero_grad()
    fake = y_hat.detach()
    out_real = aad_scores(state.aad, y, _roi_crops(y, rois))
    out_fake = aad_scores(state.aad, fake, _roi_crops(fake, rois))
    d = d_loss(out_real.score, out_fake.score)
    _check_finite(d, "d_loss", state.step)
    d.backward()
    state.opt_d.step()

    # refresh the per-sample attention cache from the fake pass
    with torch.no_grad():
        new_maps = []
        for i, s in enumerate(batch):
            m_new = aggregate_attention(
                out_fake.m_global[i].detach(),
                out_fake.m_local[i].detach(),
                s.roi,
                (h, w),
                cfg.ensemble,
            )
            state.cache[s.id] = m_new.clone()
            new_maps.append(m_new)
        mean_mx = float(torch.stack(new_maps).mean())

    # generator update on the re-scored fake
    state.opt_d.zero_grad()
    state.opt_g.zero_grad()
    out_g = aad_scores(state.aad, y_hat, _roi_crops(y_hat, rois))
    total, adv, l1 = g_loss(out_g.score, y_hat, y, cfg.lambda_l1)
    _check_finite(total, "g_loss", state.step)
    total.backward()
    state.opt_g.step()

    state.step += 1
    stats = {
        "step": state.step,
        "d_loss": float(d.detach()),
        "g_adv": float(adv.detach()),
        "g_l1": float(l1.detach()),
        "mean_mx": mean_mx,
    }
    state.last_stats = {k: v for k, v in stats.items() if k != "step"}
    return stats


def check_geometry(cfg: TrainConfig, geometry: dict) -> None:
    h, w = geometry["h"], geometry["w"]
    rh, rw = geometry["roi_h"], geometry["roi_w"]
    dg = 2**cfg.generator.depth
    da = 2**cfg.ad.att_depth
    if h % dg or w % dg:
        raise ConfigGeometryMismatch(f"{h}x{w} not divisible by 2**depth={dg}")
    if h % da or w % da or rh % da or rw % da:
        raise ConfigGeometryMismatch(
            f"image {h}x{w} / roi {rh}x{rw} not divisible by 2**att_depth={da}"
        )
    if cfg.generator.in_channels != 3 or cfg.generator.out_channels != 1:
        raise ConfigGeometryMismatch("generator must map 3 channels to 1")
    if cfg.ad.in_channels != 1:
        raise ConfigGeometryMismatch("discriminator blocks take 1-channel images")


def state_to_checkpoint(state: TrainState) -> Checkpoint:
    arrays: dict[str, np.ndarray] = {}
    for name, p in _gen_param_names(state.gen) + _aad_param_names(state.aad):
        arrays[name] = p.detach().numpy().copy()
    for opt, names in (
        (state.opt_g, _gen_param_names(state.gen)),
        (state.opt_d, _aad_param_names(state.aad)),
    ):
        for (name, _), m, v in zip(names, opt.m, opt.v):
            arrays[f"opt/{name}/m1"] = m.numpy().copy()
            arrays[f"opt/{name}/m2"] = v.numpy().copy()
    for sid, m in state.cache.items():
        arrays[f"cache/{sid}"] = m.numpy().copy()
    return Checkpoint(
        config=state.config_echo,
        step=state.step,
        metrics=dict(state.last_stats),
        arrays=arrays,
    )


def _load_group(module_names, ckpt: Checkpoint, opt: Adam | None) -> None:
    for i, (name, p) in enumerate(module_names):
        if name not in ckpt.arrays:
            raise InvalidConfig(f"checkpoint missing array {name!r}")
        arr = ckpt.arrays[name]
        if tuple(arr.shape) != tuple(p.shape):
            raise ShapeMismatch(f"{name}: checkpoint {arr.shape} vs model {tuple(p.shape)}")
        with torch.no_grad():
            p.copy_(torch.from_numpy(arr))
        if opt is not None:
            m1 = ckpt.arrays.get(f"opt/{name}/m1")
            m2 = ckpt.arrays.get(f"opt/{name}/m2")
            if m1 is not None:
                opt.m[i] = torch.from_numpy(m1.copy())
            if m2 is not None:
                opt.v[i] = torch.from_numpy(m2.copy())


def state_from_checkpoint(ckpt: Checkpoint) -> TrainState:
    """Rebuild a full training state; resuming reproduces the original run."""
    cfg = TrainConfig.from_dict(ckpt.config)
    state = init_state(cfg, ckpt.config.get("geometry", {}))
    _load_group(_gen_param_names(state.gen), ckpt, state.opt_g)
    _load_group(_aad_param_names(state.aad), ckpt, state.opt_d)
    state.opt_g.t = ckpt.step
    state.opt_d.t = ckpt.step
    state.cache = {
        sid: torch.from_numpy(arr.copy()) for sid, arr in ckpt.group("cache").items()
    }
    state.step = ckpt.step
    state.last_stats = dict(ckpt.metrics)
    state.config_echo = dict(ckpt.config)
    return state


def init_checkpoint(cfg: TrainConfig, geometry: dict) -> Checkpoint:
    """Untrained checkpoint: freshly initialized weights at step 0."""
    return state_to_checkpoint(init_state(cfg, geometry))


def train(
    cfg: TrainConfig,
    manifest: DatasetManifest,
    out_dir: str | Path | None = None,
    log_fn=None,
    resume_from: Checkpoint | None = None,
    checkpoint_every: int = 10,
) -> Checkpoint:
    """Run the full training loop and return the final checkpoint.

    With out_dir set, writes checkpoint.aadc there (plus periodic epoch
    checkpoints every checkpoint_every epochs).
    """
    cfg.validate()
    if len(manifest) == 0:
        raise EmptyDataset("manifest has no samples")
    check_geometry(cfg, manifest.geometry)
    samples = {s.id: s for s in load_samples(manifest)}

    state = state_from_checkpoint(resume_from) if resume_from else init_state(cfg, manifest.geometry)
    n_batches = math.ceil(len(manifest) / cfg.batch_size)
    total_steps = cfg.epochs * n_batches
    if state.step > total_steps:
        raise InvalidConfig(f"checkpoint step {state.step} beyond {total_steps} steps")
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    start_epoch = state.step // n_batches
    offset = state.step % n_batches
    for epoch in range(start_epoch, cfg.epochs):
        batches = make_batches(manifest, cfg.batch_size, cfg.seed, shuffle=True, epoch=epoch)
        skip = offset if epoch == start_epoch else 0
        for ids in batches[skip:]:
            stats = train_step(state, [samples[i] for i in ids], cfg)
            if log_fn is not None:
                log_fn(stats)
        if (
            out is not None
            and checkpoint_every
            and (epoch + 1) % checkpoint_every == 0
            and epoch + 1 < cfg.epochs
        ):
            save_checkpoint(state_to_checkpoint(state), out / f"checkpoint_ep{epoch + 1:04d}.aadc")

    ckpt = state_to_checkpoint(state)
    if out is not None:
        save_checkpoint(ckpt, out / "checkpoint.aadc")
    return ckpt


class Runtime:
    """Generator and discriminator rebuilt from a checkpoint, for inference."""

    def __init__(self, ckpt: Checkpoint):
        state = state_from_checkpoint(ckpt)
        self.cfg = TrainConfig.from_dict(ckpt.config)
        self.gen = state.gen
        self.aad = state.aad
        self.geometry = ckpt.config.get("geometry")


def infer_with_map(
    ckpt: Checkpoint | Runtime, x: np.ndarray, roi: RoiRect, k: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Synthesize a response image; returns (prediction, final attention map).

    A bootstrap generation with the identity infusion is refined k times
    by feeding the discriminator's aggregated attention map back into
    the input. k = 0 is the raw generator output (the map is all zero).
    """
    rt = ckpt if isinstance(ckpt, Runtime) else Runtime(ckpt)
    cfg = rt.cfg
    k = cfg.infer_refinements if k is None else k
    if k < 0:
        raise InvalidConfig("k must be >= 0")
    arr = np.asarray(x, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[0] != cfg.generator.in_channels:
        raise ShapeMismatch(
            f"expected ({cfg.generator.in_channels}, H, W), got {arr.shape}"
        )
    arr = apply_adc_mode(arr, cfg.adc)
    xt = torch.from_numpy(arr).unsqueeze(0)
    h, w = arr.shape[1], arr.shape[2]
    with torch.no_grad():
        y_hat = generator_forward(rt.gen, xt)
        m = torch.zeros(1, 1, h, w)
        for _ in range(k):
            out = aad_forward(rt.aad, y_hat, roi)
            m = aggregate_attention(out.m_global, out.m_local, roi, (h, w), cfg.ensemble)
            y_hat = generator_forward(rt.gen, rhp_infuse(xt, m))
    return y_hat[0].numpy().copy(), m[0].numpy().copy()


def infer(
    ckpt: Checkpoint | Runtime, x: np.ndarray, roi: RoiRect, k: int | None = None
) -> np.ndarray:
    """Synthesize a (1, H, W) response image from a (3, H, W) input."""
    return infer_with_map(ckpt, x, roi, k)[0]
