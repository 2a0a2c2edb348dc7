"""End-to-end orchestration: text -> condition -> candidates -> curation ->
aesthetics -> composition, plus the configuration shared by CLI and service.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import aesthetics, composer, corpus, curation, gan, textmap

ENV_PREFIX = "CALLIG_"


class ValidationError(Exception):
    """Invalid request field; carries the field name for API error bodies."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


@dataclass
class StudioConfig:
    checkpoint_path: str = ""
    vocab_path: str = ""
    styles_dir: str = ""
    data_dir: str = ""
    host: str = "127.0.0.1"
    port: int = 8000
    max_upload_bytes: int = 8 * 1024 * 1024
    candidates: int = 50
    group_size: int = 10
    canvas_size: tuple[int, int] = (512, 512)

    @classmethod
    def load(cls, path: str | Path | None = None, env: dict | None = None) -> "StudioConfig":
        """Read key=value configuration, then apply CALLIG_* env overrides."""
        values: dict[str, str] = {}
        if path is not None:
            for line in Path(path).read_text().splitlines():
                line = line.split("#", 1)[0].strip()
                if not line or "=" not in line:
                    continue
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip().strip("\"'")
        env = os.environ if env is None else env
        for key, value in env.items():
            if key.startswith(ENV_PREFIX):
                values[key[len(ENV_PREFIX):].lower()] = value

        config = cls()
        for key, value in values.items():
            if not hasattr(config, key):
                continue
            current = getattr(config, key)
            if key == "canvas_size":
                w, _, h = value.lower().partition("x")
                setattr(config, key, (int(w), int(h)))
            elif isinstance(current, int):
                setattr(config, key, int(value))
            else:
                setattr(config, key, value)
        return config


@dataclass
class GenerationRequest:
    """One artwork request; a recorded (request, seed) pair re-renders
    byte-identically."""

    text: str
    dish_image: np.ndarray | None = None
    palette_k: int = 5
    whitespace_ratio: float = 0.3
    style_id: str | None = None
    style_strength: float = 0.7
    weights: list[float] | None = None
    seed: int | None = None
    caption: str | None = None
    logo_id: str | None = None

    def validate(self) -> None:
        if not isinstance(self.text, str) or not self.text:
            raise ValidationError("text", "must be a nonempty string")
        if not 1 <= self.palette_k <= 16:
            raise ValidationError("palette_k", "must be in [1, 16]")
        if not 0 <= self.whitespace_ratio <= 0.9:
            raise ValidationError("whitespace_ratio", "must be in [0, 0.9]")
        if not 0 <= self.style_strength <= 1:
            raise ValidationError("style_strength", "must be in [0, 1]")
        if self.weights is not None:
            if len(self.weights) != 5:
                raise ValidationError("weights", "must have length 5")
            if any(w < 0 for w in self.weights):
                raise ValidationError("weights", "must be nonnegative")
            if sum(self.weights) <= 0:
                raise ValidationError("weights", "must not be all zero")
        if self.seed is not None and not isinstance(self.seed, int):
            raise ValidationError("seed", "must be an integer")

    def normalized(self, fallback_seed: int) -> "GenerationRequest":
        self.validate()
        return replace(self, seed=self.seed if self.seed is not None else fallback_seed)

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "has_dish_image": self.dish_image is not None,
            "palette_k": self.palette_k,
            "whitespace_ratio": self.whitespace_ratio,
            "style_id": self.style_id,
            "style_strength": self.style_strength,
            "weights": self.weights,
            "seed": self.seed,
            "caption": self.caption,
            "logo_id": self.logo_id,
        }


@dataclass
class PipelineResult:
    composition: composer.ArtworkComposition
    characters: list[dict]
    scores: list[float]
    chosen_index: int
    palette: aesthetics.Palette
    seed: int


class Studio:
    """Loaded pipeline state: checkpoint, vocabulary, reference glyphs,
    embedding provider, styles. Immutable after construction; safe to share
    across request handler threads."""

    def __init__(self, checkpoint: gan.Checkpoint, vocabulary: corpus.Vocabulary,
                 reference_by_character: dict[str, list[np.ndarray]],
                 provider: textmap.EmbeddingProvider | None = None,
                 styles: aesthetics.StyleRegistry | None = None,
                 extractor: curation.FeatureExtractor | None = None,
                 config: StudioConfig | None = None,
                 logos: dict[str, np.ndarray] | None = None):
        if checkpoint.vocabulary_fingerprint != vocabulary.fingerprint():
            raise ValueError("checkpoint was trained against a different vocabulary")
        self.checkpoint = checkpoint
        self.vocabulary = vocabulary
        self.reference_by_character = reference_by_character
        self.provider = provider or textmap.HashEmbeddingProvider()
        self.styles = styles or aesthetics.default_style_registry()
        self.extractor = extractor or curation.RandomConvFeatures()
        self.config = config or StudioConfig()
        self.logos = logos or {}

    @classmethod
    def from_config(cls, config: StudioConfig) -> "Studio":
        checkpoint = gan.Checkpoint.load(config.checkpoint_path)
        vocabulary = corpus.Vocabulary.load(config.vocab_path)
        manifest = corpus.scan_corpus(config.data_dir)
        reference = corpus.load_split_images(
            manifest, vocabulary, checkpoint.config.image_side, split="holdout")
        styles = (aesthetics.StyleRegistry.from_directory(config.styles_dir)
                  if config.styles_dir else aesthetics.default_style_registry())
        logos = {}
        logos_dir = Path(config.data_dir) / "logos" if config.data_dir else None
        if logos_dir and logos_dir.is_dir():
            from PIL import Image
            for p in sorted(logos_dir.iterdir()):
                if p.suffix.lower() in corpus.IMAGE_EXTENSIONS:
                    with Image.open(p) as im:
                        logos[p.stem] = np.asarray(im.convert("RGB"))
        return cls(checkpoint, vocabulary, reference, styles=styles,
                   config=config, logos=logos)

    def _reference_images(self, characters: list[str]) -> list[np.ndarray]:
        images = []
        for ch in characters:
            images.extend(self.reference_by_character.get(ch, []))
        if len(images) < 2:  # thin holdout for the chosen chars: widen to all
            images = [img for imgs in self.reference_by_character.values() for img in imgs]
        if len(images) < 2:
            raise RuntimeError("not enough holdout reference images for curation")
        return images

    def run(self, request: GenerationRequest) -> PipelineResult:
        request = request.normalized(fallback_seed=int.from_bytes(os.urandom(4), "big"))
        seed = request.seed
        cfg = self.config
        k = min(5, self.vocabulary.size)

        top = textmap.top_k_characters(request.text, self.provider, self.vocabulary, k)
        weights = request.weights[:len(top)] if request.weights else [1.0] * len(top)
        condition = gan.build_condition(
            [(s.class_index, w) for s, w in zip(top, weights)], self.vocabulary.size)

        candidates = gan.generate_batch(self.checkpoint, condition, cfg.candidates, seed)
        reference = self._reference_images([s.character for s in top])
        group = min(cfg.group_size, len(candidates))
        curated = curation.curate(candidates, reference, self.extractor, group_size=group)

        glyph = aesthetics.denoise(curated.chosen_image)
        if request.dish_image is not None:
            palette = aesthetics.extract_palette(request.dish_image, request.palette_k,
                                                 seed=seed)
        else:
            palette = aesthetics.DEFAULT_PALETTE
        art = aesthetics.recolor(glyph, palette, seed=seed, jitter=0.03)
        if request.style_id:
            art = self.styles.apply(art, request.style_id, request.style_strength)

        logo = self.logos.get(request.logo_id) if request.logo_id else None
        if request.logo_id and logo is None:
            raise ValidationError("logo_id", f"unknown logo {request.logo_id!r}")
        caption = request.caption or ""
        spec = composer.layout(cfg.canvas_size, request.whitespace_ratio,
                               has_caption=bool(caption), has_logo=logo is not None,
                               seed=seed)
        comp = composer.render(spec, art, caption=caption, logo=logo)
        comp.metadata.update({
            "seed": seed,
            "style_id": request.style_id,
            "characters": [s.character for s in top],
            "palette": [list(c) for c in palette.colors],
            "chosen_index": curated.chosen_index,
            "extractor_id": curated.extractor_id,
        })
        return PipelineResult(
            composition=comp,
            characters=[
                {"character": s.character, "class_index": s.class_index,
                 "similarity": s.similarity} for s in top],
            scores=curated.scores,
            chosen_index=curated.chosen_index,
            palette=palette,
            seed=seed,
        )
