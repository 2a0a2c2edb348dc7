from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthglyphs import CHARACTERS, build_corpus  # noqa: E402

from calligart import corpus, gan  # noqa: E402


@pytest.fixture(scope="session")
def toy_corpus_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("toy_corpus")
    return build_corpus(root, CHARACTERS, per_char=30, side=32)


@pytest.fixture(scope="session")
def toy_manifest(toy_corpus_dir):
    return corpus.scan_corpus(toy_corpus_dir)


@pytest.fixture(scope="session")
def toy_vocab(toy_manifest):
    return corpus.select_vocabulary(toy_manifest, min_images=25, max_size=10)


@pytest.fixture(scope="session")
def cached_batches(toy_manifest, toy_vocab):
    """In-memory epoch batches so repeated training runs skip file IO."""
    cache: dict[int, list] = {}

    def source(epoch: int):
        if epoch not in cache:
            cache[epoch] = list(
                corpus.batches(toy_manifest, toy_vocab, 32, 100 + epoch, side=32))
        return cache[epoch]

    return source


TOY_GAN_CONFIG = gan.GanConfig(
    image_side=32, z_dim=64, condition_embed_dim=16, base_channels=32,
    batch_size=32, epochs=8, seed=11)


@pytest.fixture(scope="session")
def toy_checkpoint(cached_batches, toy_vocab):
    """Briefly trained checkpoint: good enough for plumbing tests; the
    acceptance suite trains its own longer runs."""
    return gan.train(cached_batches, TOY_GAN_CONFIG, toy_vocab)


@pytest.fixture(scope="session")
def toy_checkpoint_path(toy_checkpoint, toy_vocab, tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("ckpt")
    path = root / "toy.ckpt"
    toy_checkpoint.save(path)
    toy_vocab.save(root / "toy.vocab.json")
    return path


@pytest.fixture(scope="session")
def toy_vocab_path(toy_checkpoint_path) -> Path:
    return toy_checkpoint_path.parent / "toy.vocab.json"


@pytest.fixture(scope="session")
def toy_studio(toy_checkpoint, toy_vocab, toy_manifest):
    from calligart.pipeline import Studio, StudioConfig

    reference = corpus.load_split_images(toy_manifest, toy_vocab, 32, split="holdout")
    return Studio(toy_checkpoint, toy_vocab, reference,
                  config=StudioConfig(candidates=12, group_size=6,
                                      canvas_size=(256, 256)))
