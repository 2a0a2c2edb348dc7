"""Conditional glyph GAN: architecture, training loop, checkpointing, sampling.

The controlling condition is a nonnegative weight vector over the whole
character vocabulary, summing to one. Training always uses one-hot conditions
(the real class labels); weighted multi-character mixtures only appear at
inference, which is why both networks consume the condition through a learned
linear embedding of the full vector rather than a class-index lookup.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .corpus import Vocabulary

CONDITION_SUM_TOL = 1e-6


class GanError(Exception):
    pass


class TrainingDiverged(GanError):
    """Raised when a loss goes non-finite; carries a diagnostic checkpoint."""

    def __init__(self, message: str, checkpoint: "Checkpoint"):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass(frozen=True)
class ConditionVector:
    """Normalized per-character weights steering the generator."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1:
            raise ValueError("condition weights must be a 1-d vector")
        if (w < 0).any():
            raise ValueError("condition weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > CONDITION_SUM_TOL:
            raise ValueError(f"condition weights must sum to 1, got {w.sum()}")

    def __len__(self) -> int:
        return len(self.weights)


def build_condition(selected: list[tuple[int, float]], vocabulary_size: int) -> ConditionVector:
    """Normalize (class_index, weight) pairs into a full condition vector.

    Invariant under positive scaling of the weights; indices must be distinct
    and in range, weights nonnegative and not all zero.
    """
    if not 1 <= len(selected) <= vocabulary_size:
        raise ValueError(f"need between 1 and {vocabulary_size} selections")
    indices = [i for i, _ in selected]
    weights = np.asarray([w for _, w in selected], dtype=np.float64)
    if len(set(indices)) != len(indices):
        raise ValueError("class indices must be distinct")
    for i in indices:
        if not 0 <= i < vocabulary_size:
            raise ValueError(f"class index {i} out of range [0, {vocabulary_size})")
    if (weights < 0).any():
        raise ValueError("weights must be nonnegative")
    total = float(weights.sum())
    if total <= 0:
        raise ValueError("weights must not be all zero")
    vec = np.zeros(vocabulary_size, dtype=np.float64)
    for i, w in zip(indices, weights):
        vec[i] = w / total
    return ConditionVector(weights=vec)


@dataclass(frozen=True)
class GanConfig:
    image_side: int = 64
    z_dim: int = 128
    condition_embed_dim: int = 32
    base_channels: int = 64
    learning_rate_gen: float = 2e-4
    learning_rate_disc: float = 2e-4
    adam_betas: tuple[float, float] = (0.5, 0.999)
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    label_smoothing: float = 0.9

    def __post_init__(self):
        for name in ("image_side", "z_dim", "condition_embed_dim", "base_channels",
                     "batch_size", "epochs"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.image_side not in (32, 64, 128):
            raise ValueError("image_side must be one of 32, 64, 128")


class Generator(nn.Module):
    def __init__(self, config: GanConfig, num_classes: int):
        super().__init__()
        nf = config.base_channels
        self.init_side = config.image_side // 8
        self.nf = nf
        self.cond_embed = nn.Linear(num_classes, config.condition_embed_dim)
        self.fc = nn.Linear(config.z_dim + config.condition_embed_dim,
                            nf * 4 * self.init_side * self.init_side)
        self.net = nn.Sequential(
            nn.BatchNorm2d(nf * 4),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(nf * 4, nf * 2, 4, stride=2, padding=1),
            nn.BatchNorm2d(nf * 2),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(nf * 2, nf, 4, stride=2, padding=1),
            nn.BatchNorm2d(nf),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(nf, 1, 4, stride=2, padding=1),
            nn.Tanh(),
        )

    def forward(self, z: torch.Tensor, condition: torch.Tensor) -> torch.Tensor:
        c = self.cond_embed(condition)
        h = self.fc(torch.cat([z, c], dim=1))
        h = h.view(-1, self.nf * 4, self.init_side, self.init_side)
        # tanh output remapped to [0, 1]: white background 1.0, dark ink low
        return (self.net(h) + 1.0) / 2.0


class Discriminator(nn.Module):
    """Condition enters as spatially tiled extra input channels, which gives
    the generator a much stronger condition-consistency gradient than
    late-stage concatenation. A second head predicts the class of the image,
    used as an auxiliary loss; without it the generator mode-collapses to a
    condition-independent output at small data scale."""

    def __init__(self, config: GanConfig, num_classes: int):
        super().__init__()
        nf = config.base_channels
        side = config.image_side // 8
        self.cond_embed = nn.Linear(num_classes, config.condition_embed_dim)
        self.conv = nn.Sequential(
            nn.Conv2d(1 + config.condition_embed_dim, nf, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(nf, nf * 2, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(nf * 2, nf * 4, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
        )
        self.fc = nn.Linear(nf * 4 * side * side, 1)
        self.class_head = nn.Linear(nf * 4 * side * side, num_classes)

    def forward(self, x: torch.Tensor,
                condition: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        c = self.cond_embed(condition)
        c_map = c[:, :, None, None].expand(-1, -1, x.shape[2], x.shape[3])
        h = self.conv(torch.cat([x, c_map], dim=1)).flatten(1)
        return self.fc(h).squeeze(1), self.class_head(h)


@dataclass
class Checkpoint:
    """Immutable trained model state bound to a vocabulary ordering."""

    config: GanConfig
    num_classes: int
    vocabulary_fingerprint: str
    epoch: int
    generator_state: dict = field(repr=False, default_factory=dict)
    discriminator_state: dict = field(repr=False, default_factory=dict)
    loss_history: list[tuple[float, float]] = field(default_factory=list)

    _generator: Generator | None = field(default=None, repr=False, compare=False)

    def generator(self) -> Generator:
        if self._generator is None:
            gen = Generator(self.config, self.num_classes)
            gen.load_state_dict(self.generator_state)
            gen.eval()
            self._generator = gen
        return self._generator

    def save(self, path: str | Path) -> None:
        """Write a single archive: parameter blobs plus a JSON sidecar."""
        meta = {
            "config": _config_to_json(self.config),
            "num_classes": self.num_classes,
            "vocabulary_fingerprint": self.vocabulary_fingerprint,
            "epoch": self.epoch,
            "loss_history": self.loss_history,
        }
        with zipfile.ZipFile(path, "w") as zf:
            zf.writestr("meta.json", json.dumps(meta))
            for name, state in (("generator.pt", self.generator_state),
                                ("discriminator.pt", self.discriminator_state)):
                buf = io.BytesIO()
                torch.save(state, buf)
                zf.writestr(name, buf.getvalue())

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        with zipfile.ZipFile(path, "r") as zf:
            meta = json.loads(zf.read("meta.json"))
            gen_state = torch.load(io.BytesIO(zf.read("generator.pt")), weights_only=True)
            disc_state = torch.load(io.BytesIO(zf.read("discriminator.pt")), weights_only=True)
        return cls(
            config=_config_from_json(meta["config"]),
            num_classes=meta["num_classes"],
            vocabulary_fingerprint=meta["vocabulary_fingerprint"],
            epoch=meta["epoch"],
            generator_state=gen_state,
            discriminator_state=disc_state,
            loss_history=[tuple(x) for x in meta["loss_history"]],
        )


def _config_to_json(config: GanConfig) -> dict:
    d = asdict(config)
    d["adam_betas"] = list(d["adam_betas"])
    return d


def _config_from_json(d: dict) -> GanConfig:
    d = dict(d)
    d["adam_betas"] = tuple(d["adam_betas"])
    return GanConfig(**d)


def noise_sequence(seed: int, n: int, z_dim: int) -> np.ndarray:
    """Deterministic standard-normal noise rows; prefix-stable in n."""
    rng = np.random.RandomState(seed)
    return rng.standard_normal((n, z_dim))


def generate(checkpoint: Checkpoint, condition: ConditionVector,
             noise: np.ndarray) -> np.ndarray:
    """One glyph image from (condition, noise); pure and deterministic."""
    return generate_many(checkpoint, condition, np.asarray(noise)[None, :])[0]


def generate_many(checkpoint: Checkpoint, condition: ConditionVector,
                  noise: np.ndarray) -> np.ndarray:
    if len(condition) != checkpoint.num_classes:
        raise GanError(
            f"condition length {len(condition)} != checkpoint classes {checkpoint.num_classes}")
    noise = np.asarray(noise, dtype=np.float64)
    if noise.ndim != 2 or noise.shape[1] != checkpoint.config.z_dim:
        raise GanError(f"noise must be (n, {checkpoint.config.z_dim}), got {noise.shape}")
    gen = checkpoint.generator()
    z = torch.from_numpy(noise).float()
    c = torch.from_numpy(condition.weights).float().expand(len(noise), -1)
    with torch.no_grad():
        out = gen(z, c)
    imgs = out.squeeze(1).numpy().astype(np.float64)
    return np.clip(imgs, 0.0, 1.0)


def generate_batch(checkpoint: Checkpoint, condition: ConditionVector,
                   n: int, seed: int) -> list[np.ndarray]:
    """n images with a noise sequence derived deterministically from seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    noise = noise_sequence(seed, n, checkpoint.config.z_dim)
    return list(generate_many(checkpoint, condition, noise))


def train(batch_source: Callable[[int], Iterable[tuple[np.ndarray, np.ndarray]]],
          config: GanConfig, vocabulary: Vocabulary,
          callback: Callable[[int, float, float], None] | None = None) -> Checkpoint:
    """Train the conditional GAN.

    ``batch_source(epoch)`` yields (image-batch HxW in [0,1], class-index-batch)
    pairs covering the train split once. Real labels are smoothed; conditions
    during training are one-hot vectors of the real labels.
    """
    if vocabulary.size == 0:
        raise ValueError("vocabulary is empty")
    num_classes = vocabulary.size
    torch.manual_seed(config.seed)

    gen = Generator(config, num_classes)
    disc = Discriminator(config, num_classes)
    opt_g = torch.optim.Adam(gen.parameters(), lr=config.learning_rate_gen,
                             betas=config.adam_betas)
    opt_d = torch.optim.Adam(disc.parameters(), lr=config.learning_rate_disc,
                             betas=config.adam_betas)

    loss_history: list[tuple[float, float]] = []

    def snapshot(epoch: int) -> Checkpoint:
        return Checkpoint(
            config=config,
            num_classes=num_classes,
            vocabulary_fingerprint=vocabulary.fingerprint(),
            epoch=epoch,
            generator_state={k: v.detach().clone() for k, v in gen.state_dict().items()},
            discriminator_state={k: v.detach().clone() for k, v in disc.state_dict().items()},
            loss_history=list(loss_history),
        )

    for epoch in range(config.epochs):
        g_losses, d_losses = [], []
        for images, labels in batch_source(epoch):
            x = torch.from_numpy(images).float().unsqueeze(1)
            cond = F.one_hot(torch.from_numpy(labels), num_classes).float()
            bsz = x.shape[0]

            # discriminator step
            z = torch.randn(bsz, config.z_dim)
            with torch.no_grad():
                fake = gen(z, cond)
            real_logits, real_class = disc(x, cond)
            fake_logits, _ = disc(fake, cond)
            # real images paired with wrong conditions count as fake too,
            # forcing the discriminator to check condition consistency
            mismatch_logits, _ = disc(x, cond.roll(1, dims=0))
            real_target = torch.full((bsz,), config.label_smoothing)
            labels_t = torch.from_numpy(labels)
            d_loss = (F.binary_cross_entropy_with_logits(real_logits, real_target)
                      + F.binary_cross_entropy_with_logits(fake_logits, torch.zeros(bsz))
                      + F.binary_cross_entropy_with_logits(
                          mismatch_logits, torch.zeros(bsz))
                      + F.cross_entropy(real_class, labels_t))
            opt_d.zero_grad()
            d_loss.backward()
            opt_d.step()

            # generator step (non-saturating, plus auxiliary class loss)
            z = torch.randn(bsz, config.z_dim)
            fake = gen(z, cond)
            adv_logits, fake_class = disc(fake, cond)
            g_loss = (F.binary_cross_entropy_with_logits(adv_logits, torch.ones(bsz))
                      + F.cross_entropy(fake_class, labels_t))
            opt_g.zero_grad()
            g_loss.backward()
            opt_g.step()

            g_losses.append(float(g_loss.detach()))
            d_losses.append(float(d_loss.detach()))
            if not (np.isfinite(g_losses[-1]) and np.isfinite(d_losses[-1])):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}", snapshot(epoch))

        epoch_g = float(np.mean(g_losses)) if g_losses else float("nan")
        epoch_d = float(np.mean(d_losses)) if d_losses else float("nan")
        loss_history.append((epoch_g, epoch_d))
        if callback is not None:
            callback(epoch, epoch_g, epoch_d)

    gen.eval()
    disc.eval()
    return snapshot(config.epochs)
