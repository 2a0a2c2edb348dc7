"""Command-line entry point wrapping every pipeline stage.

JSON goes to stdout, diagnostics to stderr. Exit codes: 0 success, 1 usage
error, 2 runtime error.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

from . import aesthetics, composer, corpus, curation, gan, textmap
from .pipeline import GenerationRequest, Studio, StudioConfig


def _emit(obj) -> None:
    click.echo(json.dumps(obj, ensure_ascii=False, indent=2))


def _load_rgb(path: str) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def _studio(config_path: str | None, ckpt: str | None, vocab: str | None,
            data: str | None) -> Studio:
    if config_path:
        return Studio.from_config(StudioConfig.load(config_path))
    if not (ckpt and vocab and data):
        raise click.UsageError("need --config or all of --ckpt/--vocab/--data")
    config = StudioConfig(checkpoint_path=ckpt, vocab_path=vocab, data_dir=data)
    return Studio.from_config(config)


@click.group()
@click.option("--verbose", is_flag=True, default=False)
def cli(verbose: bool):
    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if verbose else logging.WARNING)


@cli.command()
@click.option("--data", "data_root", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default=None)
def scan(data_root, out_path):
    """Scan a dataset tree and print its manifest."""
    manifest = corpus.scan_corpus(data_root)
    if out_path:
        manifest.save(out_path)
    _emit({"total_images": manifest.total_images,
           "distinct_characters": manifest.distinct_characters})


@cli.command()
@click.option("--data", "data_root", required=True, type=click.Path(exists=True))
@click.option("--vocab-size", default=1000, show_default=True)
@click.option("--min-images", default=25, show_default=True)
@click.option("--side", default=64, show_default=True)
@click.option("--epochs", default=10, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--z-dim", default=128, show_default=True)
@click.option("--base-channels", default=64, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--vocab-out", type=click.Path(), default=None,
              help="defaults to <out>.vocab.json")
def train(data_root, vocab_size, min_images, side, epochs, batch_size, z_dim,
          base_channels, seed, out_path, vocab_out):
    """Train the conditional glyph GAN and write a checkpoint."""
    manifest = corpus.scan_corpus(data_root)
    vocabulary = corpus.select_vocabulary(manifest, min_images, vocab_size)
    config = gan.GanConfig(image_side=side, z_dim=z_dim, base_channels=base_channels,
                           batch_size=batch_size, epochs=epochs, seed=seed)

    def batch_source(epoch: int):
        return corpus.batches(manifest, vocabulary, batch_size, seed + epoch, side=side)

    def log_epoch(epoch, g_loss, d_loss):
        print(f"epoch {epoch}: g_loss={g_loss:.4f} d_loss={d_loss:.4f}",
              file=sys.stderr)

    checkpoint = gan.train(batch_source, config, vocabulary, callback=log_epoch)
    checkpoint.save(out_path)
    vocab_path = vocab_out or f"{out_path}.vocab.json"
    vocabulary.save(vocab_path)
    _emit({"checkpoint": str(out_path), "vocab": str(vocab_path),
           "epochs": checkpoint.epoch, "classes": vocabulary.size})


@cli.command("map-text")
@click.option("--text", required=True)
@click.option("--k", default=5, show_default=True)
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--provider", "provider_id", default="hash-64", show_default=True)
def map_text(text, k, vocab_path, provider_id):
    """Rank vocabulary characters against the text."""
    vocabulary = corpus.Vocabulary.load(vocab_path)
    provider = _provider(provider_id)
    scores = textmap.top_k_characters(text, provider, vocabulary, k)
    _emit([{"character": s.character, "class_index": s.class_index,
            "similarity": s.similarity} for s in scores])


def _provider(provider_id: str) -> textmap.EmbeddingProvider:
    if provider_id.startswith("hash-"):
        return textmap.HashEmbeddingProvider(int(provider_id.split("-", 1)[1]))
    raise click.UsageError(f"unknown provider {provider_id!r}")


@cli.command()
@click.option("--ckpt", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--text", required=True)
@click.option("--n", default=1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
def generate(ckpt, vocab_path, text, n, seed, out_dir):
    """Generate raw glyph samples for a text condition."""
    checkpoint = gan.Checkpoint.load(ckpt)
    vocabulary = corpus.Vocabulary.load(vocab_path)
    condition = textmap.text_to_condition(
        text, textmap.HashEmbeddingProvider(), vocabulary, k=min(5, vocabulary.size))
    images = gan.generate_batch(checkpoint, condition, n, seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, img in enumerate(images):
        p = out / f"glyph_{seed}_{i:03d}.png"
        Image.fromarray((img * 255).round().astype(np.uint8)).save(p)
        paths.append(str(p))
    _emit({"images": paths})


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--ckpt", type=click.Path(exists=True), default=None)
@click.option("--vocab", type=click.Path(exists=True), default=None)
@click.option("--data", type=click.Path(exists=True), default=None)
@click.option("--text", required=True)
@click.option("--n", default=50, show_default=True)
@click.option("--group", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def curate(config_path, ckpt, vocab, data, text, n, group, seed, out_path):
    """Generate n candidates and keep the lowest-scoring one."""
    studio = _studio(config_path, ckpt, vocab, data)
    condition = textmap.text_to_condition(
        text, studio.provider, studio.vocabulary, k=min(5, studio.vocabulary.size))
    candidates = gan.generate_batch(studio.checkpoint, condition, n, seed)
    top = textmap.top_k_characters(text, studio.provider, studio.vocabulary,
                                   k=min(5, studio.vocabulary.size))
    reference = studio._reference_images([s.character for s in top])
    result = curation.curate(candidates, reference, studio.extractor,
                             group_size=min(group, n))
    if out_path:
        Image.fromarray((result.chosen_image * 255).round().astype(np.uint8)).save(out_path)
    _emit({"chosen_index": result.chosen_index, "scores": result.scores,
           "extractor_id": result.extractor_id})


@cli.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--dish", "dish_path", type=click.Path(exists=True), default=None)
@click.option("--k", default=5, show_default=True)
@click.option("--style", "style_id", default=None)
@click.option("--strength", default=0.7, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def stylize(in_path, dish_path, k, style_id, strength, seed, out_path):
    """Denoise, recolor with dish key colors, and optionally style-transfer."""
    with Image.open(in_path) as im:
        glyph = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    glyph = aesthetics.denoise(glyph)
    if dish_path:
        palette = aesthetics.extract_palette(_load_rgb(dish_path), k, seed=seed)
    else:
        palette = aesthetics.DEFAULT_PALETTE
    art = aesthetics.recolor(glyph, palette, seed=seed, jitter=0.03)
    if style_id:
        art = aesthetics.default_style_registry().apply(art, style_id, strength)
    Image.fromarray(art).save(out_path)
    _emit({"out": out_path, "palette": [list(c) for c in palette.colors]})


@cli.command()
@click.option("--art", "art_path", required=True, type=click.Path(exists=True))
@click.option("--caption", default="")
@click.option("--logo", "logo_path", type=click.Path(exists=True), default=None)
@click.option("--ratio", default=0.3, show_default=True)
@click.option("--size", default="1024x1024", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def compose(art_path, caption, logo_path, ratio, size, seed, out_path):
    """Compose the final canvas from artwork, caption, and logo."""
    w, _, h = size.lower().partition("x")
    art = _load_rgb(art_path)
    logo = _load_rgb(logo_path) if logo_path else None
    spec = composer.layout((int(w), int(h)), ratio, has_caption=bool(caption),
                           has_logo=logo is not None, seed=seed)
    comp = composer.render(spec, art, caption=caption, logo=logo)
    comp.save(out_path)
    _emit({"out": out_path, "layout": spec.to_dict(),
           "warnings": comp.metadata.get("warnings", [])})


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--ckpt", type=click.Path(exists=True), default=None)
@click.option("--vocab", type=click.Path(exists=True), default=None)
@click.option("--data", type=click.Path(exists=True), default=None)
@click.option("--text", required=True)
@click.option("--dish", "dish_path", type=click.Path(exists=True), default=None)
@click.option("--caption", default=None)
@click.option("--style", "style_id", default=None)
@click.option("--strength", default=0.7, show_default=True)
@click.option("--ratio", default=0.3, show_default=True)
@click.option("--palette-k", default=5, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def pipeline(config_path, ckpt, vocab, data, text, dish_path, caption, style_id,
             strength, ratio, palette_k, seed, out_path):
    """Run the whole pipeline: text (+ dish image) to final PNG."""
    studio = _studio(config_path, ckpt, vocab, data)
    request = GenerationRequest(
        text=text,
        dish_image=_load_rgb(dish_path) if dish_path else None,
        palette_k=palette_k,
        whitespace_ratio=ratio,
        style_id=style_id,
        style_strength=strength,
        caption=caption,
        seed=seed,
    )
    result = studio.run(request)
    result.composition.save(out_path)
    _emit({
        "out": out_path,
        "seed": result.seed,
        "characters": result.characters,
        "chosen_index": result.chosen_index,
        "scores_summary": {
            "n": len(result.scores),
            "min": min(result.scores),
            "max": max(result.scores),
        },
    })


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--static-dir", type=click.Path(), default=None)
def serve(config_path, host, port, static_dir):
    """Start the HTTP service."""
    import uvicorn

    from .service import ArtworkStore, create_app

    config = StudioConfig.load(config_path)
    studio = Studio.from_config(config)
    store = ArtworkStore(Path(config.data_dir or ".") / "artwork_store")
    app = create_app(studio, store, static_dir=static_dir)
    uvicorn.run(app, host=host or config.host, port=port or config.port)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        print("aborted", file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
