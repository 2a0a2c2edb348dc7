"""Aesthetic post-processing: background denoising, key-color palette
extraction from the dish photo, painterly recoloring, and optional style
transfer behind an adapter registry.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import ndimage

log = logging.getLogger(__name__)

PROPORTION_TOL = 1e-6
MAX_PALETTE = 16


class AestheticsError(Exception):
    pass


# ---------------------------------------------------------------------------
# denoising

def denoise(glyph: np.ndarray, threshold_percentile: float = 75.0,
            min_blob_area: int = 16) -> np.ndarray:
    """Clean the background: whiten light pixels, drop small ink specks.

    The threshold sits at the (100 - threshold_percentile)th percentile of
    background-side pixel values (>= 0.5); everything lighter becomes pure
    white. Connected ink components smaller than ``min_blob_area`` are
    removed, except the largest component, which is always preserved.
    Idempotent for fixed parameters.
    """
    if not 0 < threshold_percentile < 100:
        raise ValueError("threshold_percentile must be in (0, 100)")
    img = np.asarray(glyph, dtype=np.float64)
    if img.min() < 0 or img.max() > 1:
        raise ValueError("glyph values must lie in [0, 1]")

    background_side = img[img >= 0.5]
    if background_side.size == 0:
        log.warning("denoise: no background-side pixels; returning input unchanged")
        return img.copy()

    threshold = np.percentile(background_side, 100.0 - threshold_percentile)
    out = img.copy()
    out[out > threshold] = 1.0

    ink = out < 1.0
    labels, n_components = ndimage.label(ink, structure=np.ones((3, 3)))
    if n_components > 0:
        areas = ndimage.sum_labels(np.ones_like(out), labels, index=range(1, n_components + 1))
        largest = int(np.argmax(areas)) + 1
        for comp in range(1, n_components + 1):
            if comp != largest and areas[comp - 1] < min_blob_area:
                out[labels == comp] = 1.0
    return out


# ---------------------------------------------------------------------------
# palette extraction

@dataclass(frozen=True)
class Palette:
    """Key colors ordered by descending pixel share."""

    colors: tuple[tuple[int, int, int], ...]
    proportions: tuple[float, ...]
    warning: str | None = None

    def __post_init__(self):
        if not 1 <= len(self.colors) <= MAX_PALETTE:
            raise ValueError(f"palette must hold 1..{MAX_PALETTE} colors")
        if len(self.proportions) != len(self.colors):
            raise ValueError("colors and proportions must align")
        props = np.asarray(self.proportions)
        if (props < 0).any() or abs(props.sum() - 1.0) > PROPORTION_TOL:
            raise ValueError("proportions must be nonnegative and sum to 1")
        if any(props[i] < props[i + 1] for i in range(len(props) - 1)):
            raise ValueError("palette must be ordered by descending proportion")

    @property
    def dominant(self) -> tuple[int, int, int]:
        return self.colors[0]


def _kmeans_pp_init(pixels: np.ndarray, k: int, rng: np.random.RandomState) -> np.ndarray:
    centers = [pixels[rng.randint(len(pixels))]]
    for _ in range(1, k):
        d2 = np.min(
            ((pixels[:, None, :] - np.asarray(centers)[None, :, :]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(pixels[rng.randint(len(pixels))])
            continue
        centers.append(pixels[rng.choice(len(pixels), p=d2 / total)])
    return np.asarray(centers, dtype=np.float64)


def extract_palette(dish_image: np.ndarray, k: int, seed: int = 0,
                    max_iter: int = 100, move_tol: float = 0.5) -> Palette:
    """Seeded k-means over RGB pixels; proportions are cluster shares.

    If the image holds fewer distinct colors than k, the palette is just
    those colors, flagged with a warning.
    """
    if not 1 <= k <= MAX_PALETTE:
        raise ValueError(f"k must be in [1, {MAX_PALETTE}]")
    img = np.asarray(dish_image)
    if img.size == 0:
        raise ValueError("dish image is empty")
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected HxWx3 RGB image, got shape {img.shape}")
    pixels = img.reshape(-1, 3).astype(np.float64)

    distinct = np.unique(pixels, axis=0)
    if len(distinct) < k:
        counts = np.array([
            (pixels == c).all(axis=1).sum() for c in distinct], dtype=np.float64)
        order = np.lexsort((distinct[:, 0], distinct[:, 1], distinct[:, 2], -counts))
        shares = counts[order] / counts.sum()
        return Palette(
            colors=tuple(tuple(int(round(v)) for v in distinct[i]) for i in order),
            proportions=tuple(shares),
            warning=f"only {len(distinct)} distinct colors for k={k}",
        )

    rng = np.random.RandomState(seed)
    centers = _kmeans_pp_init(pixels, k, rng)
    assignment = np.zeros(len(pixels), dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((pixels[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
        assignment = d2.argmin(axis=1)
        new_centers = centers.copy()
        for j in range(k):
            members = pixels[assignment == j]
            if len(members) == 0:
                # revive empty cluster at the farthest pixel
                new_centers[j] = pixels[d2.min(axis=1).argmax()]
            else:
                new_centers[j] = members.mean(axis=0)
        movement = np.linalg.norm(new_centers - centers, axis=1).max()
        centers = new_centers
        if movement < move_tol:
            break

    d2 = ((pixels[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
    assignment = d2.argmin(axis=1)
    counts = np.bincount(assignment, minlength=k).astype(np.float64)
    order = np.argsort(-counts, kind="stable")
    shares = counts[order] / counts.sum()
    return Palette(
        colors=tuple(tuple(int(round(v)) for v in np.clip(centers[i], 0, 255))
                     for i in order),
        proportions=tuple(shares),
    )

DEFAULT_PALETTE = Palette(
    colors=((40, 40, 48), (170, 60, 50), (210, 170, 110), (90, 110, 130), (230, 220, 205)),
    proportions=(0.4, 0.25, 0.15, 0.12, 0.08),
)


# ---------------------------------------------------------------------------
# painterly recoloring

BACKGROUND_WHITE = (255, 255, 255)
INK_CUTOFF = 0.99  # pixels at/above this are treated as background


def recolor(glyph: np.ndarray, palette: Palette, seed: int = 0,
            jitter: float = 0.0,
            background: tuple[int, int, int] = BACKGROUND_WHITE) -> np.ndarray:
    """Map ink intensity bands to palette colors, darkest band to the
    dominant color, with optional seeded per-pixel chroma jitter."""
    img = np.asarray(glyph, dtype=np.float64)
    if img.min() < 0 or img.max() > 1:
        raise ValueError("glyph values must lie in [0, 1]")
    h, w = img.shape
    out = np.empty((h, w, 3), dtype=np.float64)
    out[:] = background

    ink_mask = img < INK_CUTOFF
    if ink_mask.any():
        vals = img[ink_mask]
        vmin, vmax = vals.min(), vals.max()
        m = len(palette.colors)
        if vmax > vmin:
            t = (vals - vmin) / (vmax - vmin)
            bins = np.minimum((t * m).astype(int), m - 1)
        else:
            bins = np.zeros(len(vals), dtype=int)
        colors = np.asarray(palette.colors, dtype=np.float64)
        out[ink_mask] = colors[bins]
        if jitter > 0:
            rng = np.random.RandomState(seed)
            noise = rng.uniform(-jitter, jitter, size=(int(ink_mask.sum()), 3)) * 255.0
            out[ink_mask] = out[ink_mask] + noise

    return np.clip(np.round(out), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# style transfer adapters

@dataclass(frozen=True)
class StyleSample:
    style_id: str
    reference_image: np.ndarray = field(repr=False)
    display_name: str = ""


class StyleRegistry:
    """Styles plus the adapter that applies each of them.

    The built-in "stub" adapter shifts the image's mean color toward the
    style reference; heavier neural adapters can be registered under other
    names without touching callers.
    """

    def __init__(self):
        self._styles: dict[str, StyleSample] = {}
        self._style_adapter: dict[str, str] = {}
        self._adapters: dict[str, "StyleAdapter"] = {"stub": MeanColorShiftAdapter()}

    def register_adapter(self, name: str, adapter: "StyleAdapter") -> None:
        self._adapters[name] = adapter

    def register(self, style: StyleSample, adapter: str = "stub") -> None:
        if style.style_id in self._styles:
            raise AestheticsError(f"duplicate style_id {style.style_id!r}")
        if adapter not in self._adapters:
            raise AestheticsError(f"unknown adapter {adapter!r}")
        self._styles[style.style_id] = style
        self._style_adapter[style.style_id] = adapter

    def get(self, style_id: str) -> StyleSample:
        if style_id not in self._styles:
            raise AestheticsError(
                f"unknown style {style_id!r}; available: {sorted(self._styles)}")
        return self._styles[style_id]

    def list(self) -> list[StyleSample]:
        return [self._styles[k] for k in sorted(self._styles)]

    def apply(self, image: np.ndarray, style_id: str, strength: float) -> np.ndarray:
        style = self.get(style_id)
        adapter = self._adapters[self._style_adapter[style_id]]
        return apply_style(image, style, strength, adapter=adapter)

    @classmethod
    def from_directory(cls, styles_dir: str | Path) -> "StyleRegistry":
        """Load `<style_id>.{png,jpg}` files described by a styles.json manifest."""
        styles_dir = Path(styles_dir)
        registry = cls()
        manifest_path = styles_dir / "styles.json"
        if not manifest_path.exists():
            raise AestheticsError(f"missing styles manifest: {manifest_path}")
        for entry in json.loads(manifest_path.read_text()):
            image_path = None
            for ext in (".png", ".jpg", ".jpeg"):
                p = styles_dir / f"{entry['style_id']}{ext}"
                if p.exists():
                    image_path = p
                    break
            if image_path is None:
                raise AestheticsError(f"no reference image for style {entry['style_id']!r}")
            with Image.open(image_path) as im:
                ref = np.asarray(im.convert("RGB"))
            registry.register(
                StyleSample(style_id=entry["style_id"], reference_image=ref,
                            display_name=entry.get("display_name", entry["style_id"])),
                adapter=entry.get("adapter", "stub"),
            )
        return registry


class StyleAdapter:
    def stylize(self, image: np.ndarray, style: StyleSample, strength: float) -> np.ndarray:
        raise NotImplementedError


class MeanColorShiftAdapter(StyleAdapter):
    """Identity-plus-palette-shift stub: blends the image mean toward the
    style reference mean by ``strength``."""

    def stylize(self, image: np.ndarray, style: StyleSample, strength: float) -> np.ndarray:
        img = image.astype(np.float64)
        style_mean = style.reference_image.reshape(-1, 3).mean(axis=0)
        img_mean = img.reshape(-1, 3).mean(axis=0)
        deviation = img - img_mean
        # per-channel contrast keeping the recentered image inside [0, 255],
        # so the full-strength mean matches the style mean without clipping
        contrast = np.ones(3)
        for ch in range(3):
            d = deviation[..., ch]
            lo, hi = d.min(), d.max()
            if lo < 0:
                contrast[ch] = min(contrast[ch], style_mean[ch] / -lo)
            if hi > 0:
                contrast[ch] = min(contrast[ch], (255.0 - style_mean[ch]) / hi)
        recentered = style_mean + deviation * contrast
        out = (1.0 - strength) * img + strength * recentered
        return np.clip(np.round(out), 0, 255).astype(np.uint8)


def apply_style(image: np.ndarray, style: StyleSample, strength: float,
                adapter: StyleAdapter | None = None) -> np.ndarray:
    """Stylize at the given strength; strength 0 returns the input unchanged."""
    if not 0 <= strength <= 1:
        raise ValueError("strength must be in [0, 1]")
    image = np.asarray(image)
    if strength == 0:
        return image.copy()
    if adapter is None:
        adapter = MeanColorShiftAdapter()
    out = adapter.stylize(image, style, strength)
    if out.shape != image.shape:
        raise AestheticsError("style adapter changed image dimensions")
    return out


def default_style_registry(seed: int = 7) -> StyleRegistry:
    """Procedurally built reference styles so the pipeline ships hermetic."""
    rng = np.random.RandomState(seed)
    registry = StyleRegistry()

    def field_image(rows: list[tuple[int, int, int]]) -> np.ndarray:
        img = np.zeros((96, 96, 3), dtype=np.uint8)
        band = 96 // len(rows)
        for i, color in enumerate(rows):
            img[i * band:(i + 1) * band if i < len(rows) - 1 else 96] = color
        return img

    registry.register(StyleSample(
        "color-field", field_image([(180, 40, 30), (120, 20, 25), (40, 10, 15)]),
        "Color Field"))
    registry.register(StyleSample(
        "slate", field_image([(60, 65, 75), (110, 115, 125), (200, 200, 205)]),
        "Slate"))
    drip = np.full((96, 96, 3), 235, dtype=np.uint8)
    for _ in range(60):
        x, y = rng.randint(0, 96, size=2)
        c = rng.randint(0, 120, size=3)
        drip[max(0, y - 8):y + 8, x:x + 2] = c
    registry.register(StyleSample("gesture", drip, "Gesture"))
    return registry
