"""Start a throwaway artwork service for frontend tests.

Builds a tiny synthetic glyph corpus, trains the GAN for a couple of epochs
(quality is irrelevant here; the HTTP contract is what the frontend tests),
and serves on the requested port. Everything lives under --workdir.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
from PIL import Image


def build_corpus(root: Path, characters: str, per_char: int, side: int) -> None:
    for char in characters:
        char_dir = root / char
        char_dir.mkdir(parents=True, exist_ok=True)
        layout = np.random.RandomState(ord(char))
        strokes = [(layout.randint(2, side - 2, size=4)) for _ in range(4)]
        for i in range(per_char):
            rng = np.random.RandomState(ord(char) * 1000 + i)
            img = np.full((side, side), 255, dtype=np.uint8)
            for x0, y0, x1, y1 in strokes:
                jx, jy = rng.randint(-1, 2, size=2)
                steps = max(abs(x1 - x0), abs(y1 - y0), 1)
                for t in np.linspace(0.0, 1.0, steps * 2):
                    x = int(round(x0 + (x1 - x0) * t)) + jx
                    y = int(round(y0 + (y1 - y0) * t)) + jy
                    img[max(0, min(side - 1, y)), max(0, min(side - 1, x))] = 0
            Image.fromarray(img).save(char_dir / f"{ord(char)}_{i:03d}.png")


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--epochs", type=int, default=2)
    args = parser.parse_args()

    import uvicorn

    from calligart import corpus, gan
    from calligart.pipeline import Studio, StudioConfig
    from calligart.service import ArtworkStore, create_app

    workdir = Path(args.workdir)
    data_dir = workdir / "glyphs"
    build_corpus(data_dir, "一二三四五六七八九十", per_char=30, side=32)

    manifest = corpus.scan_corpus(data_dir)
    vocabulary = corpus.select_vocabulary(manifest, min_images=25, max_size=10)
    config = gan.GanConfig(image_side=32, z_dim=64, condition_embed_dim=16,
                           base_channels=32, batch_size=32,
                           epochs=args.epochs, seed=0)

    def batch_source(epoch: int):
        return corpus.batches(manifest, vocabulary, 32, 100 + epoch, side=32)

    checkpoint = gan.train(batch_source, config, vocabulary)
    reference = corpus.load_split_images(manifest, vocabulary, 32, split="holdout")
    studio = Studio(checkpoint, vocabulary, reference,
                    config=StudioConfig(candidates=8, group_size=4,
                                        canvas_size=(256, 256)))
    store = ArtworkStore(workdir / "store")
    app = create_app(studio, store)
    print("DEV_SERVICE_READY", flush=True)
    uvicorn.run(app, host="127.0.0.1", port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
