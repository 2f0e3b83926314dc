"""Binary PGM/PPM I/O and patch-grid renderings of token masks."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .tensor_io import FormatError, IndexMask

KEPT = 255
PRUNED = 128


def parse_grid(spec: str) -> tuple:
    """``"24x24"`` -> ``(24, 24)`` as (width, height)."""
    try:
        w, h = spec.lower().split("x")
        w, h = int(w), int(h)
    except ValueError:
        raise ValueError(f"grid must look like WxH, got {spec!r}") from None
    if w < 1 or h < 1:
        raise ValueError(f"grid dimensions must be positive, got {spec!r}")
    return w, h


def mask_image(mask: IndexMask, width: int, height: int) -> np.ndarray:
    """One pixel per patch, row-major: kept patches white, pruned grey."""
    if width * height != mask.total:
        raise ValueError(f"grid {width}x{height} has {width * height} cells but mask covers {mask.total} tokens")
    img = np.full(mask.total, PRUNED, dtype=np.uint8)
    img[list(mask.kept)] = KEPT
    return img.reshape(height, width)


def overlay_mask(image: np.ndarray, mask: IndexMask, width: int, height: int) -> np.ndarray:
    """Grey out the pixels of pruned patches, keep the rest of ``image`` as is."""
    if width * height != mask.total:
        raise ValueError(f"grid {width}x{height} has {width * height} cells but mask covers {mask.total} tokens")
    ih, iw = image.shape[:2]
    if iw % width or ih % height:
        raise ValueError(f"image {iw}x{ih} does not divide into a {width}x{height} grid")
    ph, pw = ih // height, iw // width
    keep = mask.to_bool().reshape(height, width)
    pixel_keep = np.repeat(np.repeat(keep, ph, axis=0), pw, axis=1)
    out = image.copy()
    out[~pixel_keep] = PRUNED
    return out


def encode_pnm(img: np.ndarray) -> bytes:
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError("only 8-bit images are supported")
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"unsupported image shape {img.shape}")
    h, w = img.shape[:2]
    return magic + b"\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img).tobytes()


def write_pnm(img: np.ndarray, path) -> None:
    Path(path).write_bytes(encode_pnm(img))


def _tokens(buf: bytes, pos: int, count: int):
    out = []
    while len(out) < count:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"truncated header at byte {pos}")
        out.append(buf[start:pos])
    return out, pos + 1  # exactly one whitespace byte ends the header


def read_pnm(path) -> np.ndarray:
    """Read a binary P5 (grey) or P6 (RGB) image with maxval 255."""
    buf = Path(path).read_bytes()
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: not a binary PGM/PPM (magic {magic!r} at byte 0)")
    (w, h, maxval), pos = _tokens(buf, 2, 3)
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    channels = 1 if magic == b"P5" else 3
    need = w * h * channels
    if len(buf) - pos < need:
        raise FormatError(f"{path}: pixel data at byte {pos} has {len(buf) - pos} bytes, need {need}")
    data = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    return data.reshape(h, w) if channels == 1 else data.reshape(h, w, 3)
