"""Minimal PGM (portable graymap) reader and writer, P2 and P5, maxval <= 255."""

from __future__ import annotations

import numpy as np


class PGMError(ValueError):
    pass


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Return ``(image, maxval)`` with ``image`` a 2-D uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    # header: magic, width, height, maxval; '#' comments allowed between tokens
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise PGMError(f"{path}: truncated header")
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"{path}: unsupported magic {magic!r}, expected P2 or P5")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PGMError(f"{path}: bad header values {tokens[1:]}") from None
    if w < 1 or h < 1 or not 0 < maxval <= 255:
        raise PGMError(f"{path}: need positive size and 0 < maxval <= 255")
    if magic == b"P5":
        body = data[pos + 1 : pos + 1 + w * h]
        if len(body) != w * h:
            raise PGMError(f"{path}: expected {w * h} pixel bytes, got {len(body)}")
        img = np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()
    else:
        vals = data[pos:].split()
        if len(vals) != w * h:
            raise PGMError(f"{path}: expected {w * h} pixel values, got {len(vals)}")
        img = np.array([int(v) for v in vals], dtype=np.int64).reshape(h, w)
        if img.min() < 0 or img.max() > maxval:
            raise PGMError(f"{path}: pixel values outside [0, {maxval}]")
        img = img.astype(np.uint8)
    if img.max() > maxval:
        raise PGMError(f"{path}: pixel values exceed maxval {maxval}")
    return img, maxval


def write_pgm(path, image, maxval: int = 255, binary: bool = True) -> None:
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("image must be 2-D")
    img = np.clip(np.round(img), 0, maxval).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        if binary:
            fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
            fh.write(img.tobytes())
        else:
            fh.write(f"P2\n{w} {h}\n{maxval}\n".encode())
            for row in img:
                fh.write((" ".join(map(str, row.tolist())) + "\n").encode())
