"""Binary PPM (P6, maxval 255) reader/writer.

P6 keeps frames bit-exact for golden-file comparisons and is trivial to
parse on the dashboard side.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ValidationError


def encode_ppm(image: np.ndarray) -> bytes:
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise ValidationError("expected an HxWx3 uint8 image")
    h, w = image.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + image.tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":  # comment runs to end of line
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
        if len(fields) == 4:
            pos += 1  # single whitespace byte after maxval
    if fields[0] != b"P6":
        raise ValidationError("not a binary PPM (P6) file")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValidationError("only maxval 255 is supported")
    raster = data[pos:pos + w * h * 3]
    if len(raster) != w * h * 3:
        raise ValidationError("truncated PPM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w, 3).copy()


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    Path(path).write_bytes(encode_ppm(image))


def read_ppm(path: str | Path) -> np.ndarray:
    return decode_ppm(Path(path).read_bytes())
