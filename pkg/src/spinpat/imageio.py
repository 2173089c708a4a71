"""Binary image files.

Two formats are read:

- ASCII grid: one row per line of ``0``/``1`` characters.  Blank lines and
  lines starting with ``#`` are ignored; spaces inside a row are allowed.
- Plain PBM (``P1``): header ``P1``, then width and height, then the bits.
  ``#`` starts a comment that runs to the end of the line.

Files are written as ASCII grids unless the suffix is ``.pbm``.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .recognition import RecognitionError, as_image


class ImageFormatError(RecognitionError):
    pass


def parse_grid(text: str) -> np.ndarray:
    rows = []
    for n, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].replace(" ", "").replace("\t", "")
        if not s:
            continue
        if set(s) - {"0", "1"}:
            raise ImageFormatError(f"line {n}: only '0' and '1' are allowed, got {line.strip()!r}")
        rows.append([int(c) for c in s])
    if not rows:
        raise ImageFormatError("empty image")
    if len({len(r) for r in rows}) != 1:
        raise ImageFormatError("rows have different lengths")
    return np.array(rows, dtype=np.uint8)


def format_grid(image) -> str:
    img = as_image(image)
    return "\n".join("".join(str(int(v)) for v in row) for row in img) + "\n"


def parse_pbm(text: str) -> np.ndarray:
    toks = []
    for line in text.splitlines():
        toks.extend(line.split("#", 1)[0].split())
    if not toks or toks[0] != "P1":
        raise ImageFormatError("not a plain PBM file (magic 'P1' missing)")
    try:
        w, h = int(toks[1]), int(toks[2])
    except (IndexError, ValueError) as exc:
        raise ImageFormatError("PBM header needs width and height") from exc
    # bits may be run together without whitespace
    bits = "".join(toks[3:])
    if set(bits) - {"0", "1"}:
        raise ImageFormatError("PBM raster must contain only 0 and 1")
    if len(bits) != w * h:
        raise ImageFormatError(f"PBM raster has {len(bits)} bits, expected {w * h}")
    return np.array([int(c) for c in bits], dtype=np.uint8).reshape(h, w)


def format_pbm(image) -> str:
    img = as_image(image)
    h, w = img.shape
    body = "\n".join(" ".join(str(int(v)) for v in row) for row in img)
    return f"P1\n{w} {h}\n{body}\n"


def read_image(path) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ImageFormatError(f"cannot read image {path}: {exc}") from exc
    if text.lstrip().startswith("P1"):
        return parse_pbm(text)
    return parse_grid(text)


def write_image(path, image) -> None:
    path = Path(path)
    path.write_text(format_pbm(image) if path.suffix.lower() == ".pbm" else format_grid(image))
