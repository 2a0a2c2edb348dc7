"""Final artwork composition: place the stylized glyph, a caption, and an
optional logo on a canvas with a controlled white-space ratio.

The layout is a deterministic rule table, not an optimizer. The occupied
content block is the canvas scaled by sqrt(1 - whitespace_ratio) per axis and
partitioned exactly between the elements, so the area budget holds by
construction; the seed selects the block's anchor position and, when both
caption and logo are present, which side each sits on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

MIN_CANVAS = 256
MIN_BLOCK = 40  # below this the caption/logo rows fall under legible size
AREA_TOLERANCE = 0.02


class LayoutError(Exception):
    pass


@dataclass(frozen=True)
class PlacedElement:
    kind: str  # artwork | caption | logo
    box: tuple[int, int, int, int]  # x, y, w, h
    content_ref: str = ""

    def __post_init__(self):
        if self.kind not in ("artwork", "caption", "logo"):
            raise ValueError(f"unknown element kind {self.kind!r}")
        x, y, w, h = self.box
        if w <= 0 or h <= 0:
            raise ValueError("element box must have positive size")

    @property
    def area(self) -> int:
        return self.box[2] * self.box[3]


@dataclass(frozen=True)
class LayoutSpec:
    canvas_size: tuple[int, int]
    whitespace_ratio: float
    elements: tuple[PlacedElement, ...]
    background_color: tuple[int, int, int] = (255, 255, 255)

    def __post_init__(self):
        if not 0 <= self.whitespace_ratio <= 0.9:
            raise ValueError("whitespace_ratio must be in [0, 0.9]")
        if sum(1 for e in self.elements if e.kind == "artwork") != 1:
            raise ValueError("exactly one artwork element required")
        w, h = self.canvas_size
        for e in self.elements:
            x, y, ew, eh = e.box
            if x < 0 or y < 0 or x + ew > w or y + eh > h:
                raise ValueError(f"element {e.kind} out of canvas: {e.box}")
        for i, a in enumerate(self.elements):
            for b in self.elements[i + 1:]:
                if _overlap(a.box, b.box):
                    raise ValueError(f"elements overlap: {a.kind} and {b.kind}")

    def element(self, kind: str) -> PlacedElement | None:
        for e in self.elements:
            if e.kind == kind:
                return e
        return None

    def to_dict(self) -> dict:
        return {
            "canvas_size": list(self.canvas_size),
            "whitespace_ratio": self.whitespace_ratio,
            "background_color": list(self.background_color),
            "elements": [
                {"kind": e.kind, "box": list(e.box), "content_ref": e.content_ref}
                for e in self.elements
            ],
        }


def _overlap(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    return ax < bx + bw and bx < ax + aw and ay < by + bh and by < ay + ah


#: Anchor rule table: (horizontal, vertical) position of the content block
#: inside the canvas, each in {0: start, 1: center, 2: end}.
_ANCHORS = [(1, 1), (0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (0, 2), (1, 2), (2, 2)]


def _place(outer: int, inner: int, mode: int) -> int:
    if mode == 0:
        return 0
    if mode == 1:
        return (outer - inner) // 2
    return outer - inner


def layout(canvas_size: tuple[int, int], whitespace_ratio: float,
           has_caption: bool, has_logo: bool, seed: int = 0) -> LayoutSpec:
    """Deterministic layout hitting the white-space budget within +-2%."""
    w, h = canvas_size
    if w < MIN_CANVAS or h < MIN_CANVAS:
        raise LayoutError(f"canvas must be at least {MIN_CANVAS}x{MIN_CANVAS}")
    if not 0 <= whitespace_ratio <= 0.9:
        raise LayoutError("whitespace_ratio must be in [0, 0.9]")

    scale = np.sqrt(1.0 - whitespace_ratio)
    bw, bh = round(w * scale), round(h * scale)
    if min(bw, bh) < MIN_BLOCK:
        feasible = 1.0 - (MIN_BLOCK / min(w, h)) ** 2
        raise LayoutError(
            f"whitespace_ratio {whitespace_ratio} infeasible for {w}x{h}; "
            f"maximum feasible ratio is {feasible:.3f}")

    anchor_h, anchor_v = _ANCHORS[seed % len(_ANCHORS)]
    bx = _place(w, bw, anchor_h)
    by = _place(h, bh, anchor_v)

    elements: list[PlacedElement] = []
    if has_caption and has_logo:
        art_h = round(0.8 * bh)
        row_h = bh - art_h
        cap_w = round(0.6 * bw)
        logo_w = bw - cap_w
        swap = (seed // len(_ANCHORS)) % 2 == 1
        cap_x, logo_x = (bx + logo_w, bx) if swap else (bx, bx + cap_w)
        elements = [
            PlacedElement("artwork", (bx, by, bw, art_h)),
            PlacedElement("caption", (cap_x, by + art_h, cap_w, row_h)),
            PlacedElement("logo", (logo_x, by + art_h, logo_w, row_h)),
        ]
    elif has_caption or has_logo:
        art_h = round(0.85 * bh)
        row_h = bh - art_h
        kind = "caption" if has_caption else "logo"
        elements = [
            PlacedElement("artwork", (bx, by, bw, art_h)),
            PlacedElement(kind, (bx, by + art_h, bw, row_h)),
        ]
    else:
        elements = [PlacedElement("artwork", (bx, by, bw, bh))]

    return LayoutSpec(
        canvas_size=(w, h),
        whitespace_ratio=whitespace_ratio,
        elements=tuple(elements),
    )


@dataclass
class ArtworkComposition:
    spec: LayoutSpec
    rendered: np.ndarray = field(repr=False)
    metadata: dict = field(default_factory=dict)

    def save(self, png_path: str | Path, sidecar: bool = True) -> None:
        png_path = Path(png_path)
        Image.fromarray(self.rendered).save(png_path, format="PNG")
        if sidecar:
            side = {"layout": self.spec.to_dict(), "metadata": self.metadata}
            png_path.with_suffix(".json").write_text(
                json.dumps(side, ensure_ascii=False, indent=2))


def _paste_letterboxed(canvas: np.ndarray, box: tuple[int, int, int, int],
                       image: np.ndarray) -> None:
    x, y, w, h = box
    src = Image.fromarray(image if image.ndim == 3 else
                          np.stack([image] * 3, axis=-1))
    scale = min(w / src.width, h / src.height)
    nw, nh = max(1, round(src.width * scale)), max(1, round(src.height * scale))
    resized = np.asarray(src.resize((nw, nh), Image.BILINEAR))
    ox = x + (w - nw) // 2
    oy = y + (h - nh) // 2
    canvas[oy:oy + nh, ox:ox + nw] = resized


def render(spec: LayoutSpec, artwork: np.ndarray, caption: str = "",
           logo: np.ndarray | None = None,
           caption_color: tuple[int, int, int] = (30, 30, 30)) -> ArtworkComposition:
    """Rasterize the composition. Pixels outside element boxes stay exactly
    the background color; rendering is deterministic."""
    if artwork.size == 0:
        raise ValueError("artwork is empty")
    w, h = spec.canvas_size
    canvas = np.empty((h, w, 3), dtype=np.uint8)
    canvas[:] = spec.background_color
    warnings: list[str] = []

    _paste_letterboxed(canvas, spec.element("artwork").box, artwork)

    cap_el = spec.element("caption")
    if cap_el is not None and caption:
        x, y, cw, ch = cap_el.box
        patch = Image.fromarray(canvas[y:y + ch, x:x + cw])
        draw = ImageDraw.Draw(patch)
        font = ImageFont.load_default()
        text = caption
        if draw.textlength(text, font=font) > cw:
            while text and draw.textlength(text + "…", font=font) > cw:
                text = text[:-1]
            text += "…"
            warnings.append("caption truncated")
        bbox = draw.textbbox((0, 0), text, font=font)
        tx = (cw - (bbox[2] - bbox[0])) // 2
        ty = (ch - (bbox[3] - bbox[1])) // 2
        draw.text((tx, ty), text, fill=caption_color, font=font)
        canvas[y:y + ch, x:x + cw] = np.asarray(patch)

    logo_el = spec.element("logo")
    if logo_el is not None and logo is not None:
        _paste_letterboxed(canvas, logo_el.box, logo)

    return ArtworkComposition(spec=spec, rendered=canvas,
                              metadata={"warnings": warnings})
