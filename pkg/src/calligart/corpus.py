"""Calligraphy image corpus: scanning, vocabulary selection, preprocessing, batching.

Dataset layout on disk is one subdirectory per character, the directory name
being the character itself, containing image files:

    <root>/<character>/<anything>.{jpg,png}
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)

IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png"}

#: Fraction of each character's images reserved as a holdout split, used as
#: the real reference distribution for curation.
HOLDOUT_FRACTION = 0.1


class CorpusError(Exception):
    """Fatal corpus-level failure (missing root, empty dataset, ...)."""


@dataclass(frozen=True)
class GlyphRecord:
    """One calligraphy image: a single character plus provenance.

    ``image`` is a 2-d float array in [0, 1], white background (1.0), dark ink.
    """

    character: str
    calligrapher: str
    image: np.ndarray
    source_path: str

    def __post_init__(self):
        if len(self.character) != 1:
            raise ValueError(f"character must be a single codepoint, got {self.character!r}")
        if self.image.ndim != 2:
            raise ValueError(f"image must be single-channel 2-d, got shape {self.image.shape}")
        if self.image.size and (self.image.min() < 0.0 or self.image.max() > 1.0):
            raise ValueError("image values must lie in [0, 1]")


@dataclass(frozen=True)
class Vocabulary:
    """Ordered character vocabulary with dense class indices.

    Entries are (character, class_index, image_count) ordered by descending
    image_count, ties broken by ascending codepoint, so class indices are
    reproducible across runs.
    """

    entries: tuple[tuple[str, int, int], ...]

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def characters(self) -> tuple[str, ...]:
        return tuple(e[0] for e in self.entries)

    def class_index(self, character: str) -> int:
        for ch, idx, _ in self.entries:
            if ch == character:
                return idx
        raise KeyError(character)

    def fingerprint(self) -> str:
        """Hash binding the vocabulary ordering, for checkpoint/cache keys."""
        payload = "\n".join(f"{ch}\t{idx}\t{n}" for ch, idx, n in self.entries)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def to_json(self) -> str:
        return json.dumps(
            {"entries": [[ch, idx, n] for ch, idx, n in self.entries]},
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        data = json.loads(text)
        return cls(entries=tuple((ch, idx, n) for ch, idx, n in data["entries"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass
class DatasetManifest:
    """Census of a scanned corpus plus a deterministic train/holdout split."""

    total_images: int
    distinct_characters: int
    per_character_counts: dict[str, int]
    split_assignments: dict[str, str] = field(default_factory=dict)
    paths_by_character: dict[str, list[str]] = field(default_factory=dict)

    def train_paths(self, character: str) -> list[str]:
        return [p for p in self.paths_by_character.get(character, [])
                if self.split_assignments.get(p) == "train"]

    def holdout_paths(self, character: str) -> list[str]:
        return [p for p in self.paths_by_character.get(character, [])
                if self.split_assignments.get(p) == "holdout"]

    def to_json(self) -> str:
        return json.dumps(
            {
                "total_images": self.total_images,
                "distinct_characters": self.distinct_characters,
                "per_character_counts": self.per_character_counts,
                "splits": self.split_assignments,
            },
            ensure_ascii=False,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        data = json.loads(text)
        paths_by_character: dict[str, list[str]] = {}
        for p in data["splits"]:
            ch = Path(p).parent.name
            paths_by_character.setdefault(ch, []).append(p)
        for paths in paths_by_character.values():
            paths.sort()
        return cls(
            total_images=data["total_images"],
            distinct_characters=data["distinct_characters"],
            per_character_counts=data["per_character_counts"],
            split_assignments=data["splits"],
            paths_by_character=paths_by_character,
        )

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _assign_split(source_path: str) -> str:
    """Deterministic 10% holdout by hash of the source path."""
    digest = hashlib.sha256(source_path.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:4], "big") % 100
    return "holdout" if bucket < int(HOLDOUT_FRACTION * 100) else "train"


def scan_corpus(root: str | Path) -> DatasetManifest:
    """Walk the dataset tree and build a manifest.

    Unreadable entries are logged and skipped; a missing root or a tree with
    zero images is fatal.
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"dataset root does not exist: {root}")

    per_character_counts: dict[str, int] = {}
    paths_by_character: dict[str, list[str]] = {}
    splits: dict[str, str] = {}
    total = 0

    for char_dir in sorted(root.iterdir()):
        if not char_dir.is_dir():
            continue
        character = char_dir.name
        if len(character) != 1:
            log.warning("skipping directory %r: name is not a single character", character)
            continue
        paths = sorted(
            str(p) for p in char_dir.iterdir()
            if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
        )
        if not paths:
            continue
        per_character_counts[character] = len(paths)
        paths_by_character[character] = paths
        for p in paths:
            splits[p] = _assign_split(p)
        total += len(paths)

    if total == 0:
        raise CorpusError(f"zero images found under {root}")

    return DatasetManifest(
        total_images=total,
        distinct_characters=len(per_character_counts),
        per_character_counts=per_character_counts,
        split_assignments=splits,
        paths_by_character=paths_by_character,
    )


def select_vocabulary(manifest: DatasetManifest, min_images: int, max_size: int) -> Vocabulary:
    """Pick characters with strictly more than ``min_images`` images.

    Ordering is descending image count, ties by ascending codepoint, truncated
    to ``max_size``; class indices follow that order.
    """
    if min_images < 1:
        raise ValueError("min_images must be >= 1")
    if max_size < 1:
        raise ValueError("max_size must be >= 1")

    qualifying = [
        (ch, n) for ch, n in manifest.per_character_counts.items() if n > min_images
    ]
    if not qualifying:
        raise CorpusError(f"no character has more than {min_images} images")

    qualifying.sort(key=lambda item: (-item[1], item[0]))
    qualifying = qualifying[:max_size]
    entries = tuple((ch, idx, n) for idx, (ch, n) in enumerate(qualifying))
    return Vocabulary(entries=entries)


def load_glyph(path: str | Path, character: str | None = None,
               calligrapher: str = "unknown") -> GlyphRecord:
    """Load one image file as a normalized grayscale GlyphRecord."""
    path = Path(path)
    with Image.open(path) as im:
        gray = im.convert("L")
        arr = np.asarray(gray, dtype=np.float64) / 255.0
    return GlyphRecord(
        character=character if character is not None else path.parent.name,
        calligrapher=calligrapher,
        image=arr,
        source_path=str(path),
    )


def preprocess_glyph(record: GlyphRecord, side: int) -> GlyphRecord:
    """Resize to side x side, preserving aspect ratio by padding with white.

    Idempotent for inputs that already conform.
    """
    if side not in (32, 64, 128):
        raise ValueError(f"side must be one of 32, 64, 128; got {side}")
    img = record.image
    if img.size == 0:
        raise ValueError(f"empty image: {record.source_path}")

    h, w = img.shape
    if (h, w) == (side, side):
        return record

    scale = side / max(h, w)
    new_h = max(1, round(h * scale))
    new_w = max(1, round(w * scale))
    pil = Image.fromarray(np.clip(img * 255.0, 0, 255).astype(np.uint8), mode="L")
    pil = pil.resize((new_w, new_h), Image.BILINEAR)
    resized = np.asarray(pil, dtype=np.float64) / 255.0

    canvas = np.ones((side, side), dtype=np.float64)
    top = (side - new_h) // 2
    left = (side - new_w) // 2
    canvas[top:top + new_h, left:left + new_w] = resized
    return GlyphRecord(
        character=record.character,
        calligrapher=record.calligrapher,
        image=canvas,
        source_path=record.source_path,
    )


def load_split_images(manifest: DatasetManifest, vocabulary: Vocabulary,
                      side: int, split: str = "holdout") -> dict[str, list[np.ndarray]]:
    """Preprocessed images of the given split, grouped by character."""
    out: dict[str, list[np.ndarray]] = {}
    for ch, _, _ in vocabulary.entries:
        paths = (manifest.holdout_paths(ch) if split == "holdout"
                 else manifest.train_paths(ch))
        images = []
        for p in paths:
            try:
                rec = preprocess_glyph(load_glyph(p, character=ch), side)
            except Exception as exc:  # corrupt file: skip, keep going
                log.warning("skipping %s: %s", p, exc)
                continue
            images.append(rec.image)
        if images:
            out[ch] = images
    return out


def batches(manifest: DatasetManifest, vocabulary: Vocabulary, batch_size: int,
            seed: int, side: int = 64) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """One epoch of (image-batch, class-index-batch) pairs over the train split.

    Order is a seeded permutation of every train image of every vocabulary
    character; each image appears exactly once per epoch.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")

    index: list[tuple[str, int, str]] = []
    for ch, class_idx, _ in vocabulary.entries:
        for p in manifest.train_paths(ch):
            index.append((ch, class_idx, p))

    rng = np.random.RandomState(seed)
    order = rng.permutation(len(index))

    buf_images: list[np.ndarray] = []
    buf_labels: list[int] = []
    for i in order:
        ch, class_idx, path = index[i]
        try:
            rec = preprocess_glyph(load_glyph(path, character=ch), side)
        except Exception as exc:
            log.warning("skipping %s: %s", path, exc)
            continue
        buf_images.append(rec.image)
        buf_labels.append(class_idx)
        if len(buf_images) == batch_size:
            yield np.stack(buf_images), np.asarray(buf_labels, dtype=np.int64)
            buf_images, buf_labels = [], []
    if buf_images:
        yield np.stack(buf_images), np.asarray(buf_labels, dtype=np.int64)
