"""Grayscale image I/O, synthetic corruption, test images and PSNR."""

from __future__ import annotations

import math
import re
from pathlib import Path

import numpy as np

MAX_PIXELS = 1 << 28


class ImageFormatError(ValueError):
    pass


# -- I/O ---------------------------------------------------------------------

_TOKEN = re.compile(rb"(?:\s|#[^\n]*(?:\n|$))*([^\s#]+)")


def _pgm_header(data: bytes):
    fields, pos = [], 0
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError("truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    return fields, pos


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _pgm_header(data)
    if magic not in (b"P2", b"P5"):
        raise ImageFormatError(f"{path}: not a grayscale PGM (magic {magic!r})")
    try:
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise ImageFormatError(f"{path}: malformed PGM header") from None
    if width < 1 or height < 1 or width * height > MAX_PIXELS:
        raise ImageFormatError(f"{path}: unsupported dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise ImageFormatError(f"{path}: only 8-bit PGM is supported (maxval {maxval})")
    n = width * height
    if magic == b"P5":
        raw = data[pos + 1: pos + 1 + n]
        if len(raw) != n:
            raise ImageFormatError(f"{path}: expected {n} bytes of pixel data, got {len(raw)}")
        pixels = np.frombuffer(raw, dtype=np.uint8)
    else:
        pixels = np.array(data[pos:].split()[:n], dtype=np.int64)
        if pixels.size != n or pixels.max(initial=0) > maxval or pixels.min(initial=0) < 0:
            raise ImageFormatError(f"{path}: bad ASCII pixel data")
    return pixels.reshape(height, width).astype(float) / maxval


def _to_bytes(u) -> np.ndarray:
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    return np.floor(u * 255.0 + 0.5).astype(np.uint8)


def write_pgm(u, path, ascii: bool = False):
    b = _to_bytes(u)
    h, w = b.shape
    with open(path, "wb") as fh:
        if ascii:
            fh.write(f"P2\n{w} {h}\n255\n".encode())
            for row in b:
                fh.write((" ".join(str(int(x)) for x in row) + "\n").encode())
        else:
            fh.write(f"P5\n{w} {h}\n255\n".encode())
            fh.write(b.tobytes())


def load_image(path) -> np.ndarray:
    """Read an 8-bit grayscale PGM or PNG into a float image in [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    if path.suffix.lower() == ".png":
        try:
            from PIL import Image
        except ImportError:  # Pillow is optional
            raise ImageFormatError("reading PNG needs Pillow") from None
        with Image.open(path) as im:
            if im.mode not in ("L", "1", "P"):
                raise ImageFormatError(f"{path}: expected 8-bit grayscale PNG, got mode {im.mode}")
            return np.asarray(im.convert("L"), dtype=float) / 255.0
    return read_pgm(path)


def save_image(u, path):
    """Clamp to [0, 1], scale to 8 bits (round half up) and write PGM or PNG."""
    path = Path(path)
    if path.suffix.lower() == ".png":
        from PIL import Image

        Image.fromarray(_to_bytes(u), mode="L").save(path)
    else:
        write_pgm(u, path)


def load_mask(path) -> np.ndarray:
    """Boolean mask from an image file; any nonzero pixel is missing."""
    return load_image(path) > 0


# -- corruption ----------------------------------------------------------------

def add_salt_pepper(u, density: float, seed: int) -> np.ndarray:
    """Corrupt exactly ``floor(density * pixels)`` distinct pixels.

    The first half (rounded up) of the seeded selection becomes 1, the rest 0.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    out = np.array(u, dtype=float)
    k = int(math.floor(density * out.size))
    idx = np.random.default_rng(seed).choice(out.size, size=k, replace=False)
    flat = out.reshape(-1)
    salt = (k + 1) // 2
    flat[idx[:salt]] = 1.0
    flat[idx[salt:]] = 0.0
    return out


def add_gaussian(u, mean: float, var: float, seed: int) -> np.ndarray:
    """Additive Gaussian noise; the result is not clamped."""
    if var < 0:
        raise ValueError(f"variance must be nonnegative, got {var}")
    u = np.asarray(u, dtype=float)
    rng = np.random.default_rng(seed)
    return u + rng.normal(mean, math.sqrt(var), size=u.shape)


def psnr(u, reference) -> float:
    """Peak signal-to-noise ratio in dB for peak value 1."""
    mse = float(np.mean((np.asarray(u, dtype=float) - np.asarray(reference, dtype=float)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


# -- synthetic data -------------------------------------------------------------

def synthetic_image(n: int = 64) -> np.ndarray:
    """Piecewise-constant test image: a square, a disk and a triangle."""
    y, x = np.mgrid[0:n, 0:n] / n
    img = np.full((n, n), 0.1)
    img[(x > 0.12) & (x < 0.45) & (y > 0.12) & (y < 0.45)] = 0.6
    img[(x - 0.68) ** 2 + (y - 0.32) ** 2 < 0.17 ** 2] = 0.9
    img[(y > 0.58) & (y < 0.9) & (np.abs(x - 0.45) < (y - 0.58) * 0.9)] = 0.35
    img[(x > 0.7) & (x < 0.9) & (y > 0.62) & (y < 0.88)] = 0.6
    return img


def two_disk_image(n: int = 64, inside: float = 0.6, outside: float = 0.1):
    """Two disks of intensity ``inside`` on ``outside``; returns (image, truth)."""
    y, x = np.mgrid[0:n, 0:n] / n
    truth = ((x - 0.3) ** 2 + (y - 0.35) ** 2 < 0.18 ** 2) | ((x - 0.68) ** 2 + (y - 0.65) ** 2 < 0.2 ** 2)
    return np.where(truth, inside, outside), truth.astype(float)


# 5x3 bitmap glyphs for a text-like inpainting mask
_GLYPHS = {
    "T": ["111", "010", "010", "010", "010"],
    "E": ["111", "100", "110", "100", "111"],
    "X": ["101", "101", "010", "101", "101"],
    "V": ["101", "101", "101", "101", "010"],
    "D": ["110", "101", "101", "101", "110"],
    "A": ["010", "101", "111", "101", "101"],
    "L": ["100", "100", "100", "100", "111"],
}


def text_mask(shape, text: str = "TV DD TEXT", scale: int = 1, line_gap: int = 3) -> np.ndarray:
    """Boolean mask of repeated block-letter text lines covering the image."""
    rows, cols = shape
    mask = np.zeros((rows, cols), dtype=bool)
    gh, gw = 5 * scale, 3 * scale
    r = 1
    line = 0
    while r + gh <= rows:
        c = 1 + (line % 2) * 2 * scale
        for ch in (text + " ") * (cols // (gw + scale) + 1):
            if c + gw > cols:
                break
            glyph = _GLYPHS.get(ch)
            if glyph is not None:
                bits = np.array([[b == "1" for b in row] for row in glyph])
                mask[r:r + gh, c:c + gw] |= np.kron(bits, np.ones((scale, scale), dtype=bool))
            c += gw + scale
        r += gh + line_gap
        line += 1
    return mask
