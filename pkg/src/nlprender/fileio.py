"""Image file ingestion and emission: PFM, Radiance HDR (read-only), PNG.

PFM and HDR values are linear; PNG code values are drive levels decoded
through a :class:`DisplayModel`. Color is collapsed with Rec. 709 weights.
"""

from __future__ import annotations

import io
import re
from pathlib import Path

import numpy as np

from .core import DisplayModel, LuminanceImage, as_array, decode_from_display, encode_for_display, to_grayscale
from .errors import ConfigurationError, FormatError

FORMATS = ("pfm", "hdr", "png")
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
_EXT = {".pfm": "pfm", ".hdr": "hdr", ".pic": "hdr", ".rgbe": "hdr", ".png": "png"}


def detect_format(path, hint: str | None = None) -> str:
    """Format from ``hint``, else magic bytes, else the file extension."""
    if hint is not None:
        hint = hint.lower()
        if hint not in FORMATS:
            raise ConfigurationError(f"unknown image format {hint!r}; choose from {', '.join(FORMATS)}")
        return hint
    path = Path(path)
    if path.exists():
        with open(path, "rb") as fh:
            head = fh.read(10)
        if head[:2] in (b"Pf", b"PF") and head[2:3].isspace():
            return "pfm"
        if head.startswith(b"#?"):
            return "hdr"
        if head.startswith(PNG_MAGIC):
            return "png"
    fmt = _EXT.get(path.suffix.lower())
    if fmt is None:
        if path.exists():
            raise FormatError(f"{path}: unrecognized file signature", 0)
        raise ConfigurationError(f"{path}: cannot infer image format from extension")
    return fmt


# ---------------------------------------------------------------------------
# PFM


def _pfm_tokens(buf: bytes, count: int):
    """First ``count`` whitespace-separated header tokens and the data offset."""
    tokens = []
    pos = 0
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise FormatError("truncated PFM header", pos)
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace():
            pos += 1
        tokens.append((buf[start:pos], start))
    if pos >= n:
        raise FormatError("truncated PFM header", pos)
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_pfm(buf: bytes) -> np.ndarray:
    """Decode PFM bytes to float64, rows top to bottom (``(H, W)`` or ``(H, W, 3)``)."""
    tokens, data_off = _pfm_tokens(buf, 4)
    (magic, _), (w_tok, w_off), (h_tok, h_off), (s_tok, s_off) = tokens
    if magic == b"Pf":
        channels = 1
    elif magic == b"PF":
        channels = 3
    else:
        raise FormatError(f"bad PFM magic {magic!r}", 0)
    dims = []
    for tok, off in ((w_tok, w_off), (h_tok, h_off)):
        if not tok.isdigit() or int(tok) < 1:
            raise FormatError(f"bad PFM dimension {tok!r}", off)
        dims.append(int(tok))
    width, height = dims
    try:
        scale = float(s_tok)
    except ValueError:
        raise FormatError(f"bad PFM scale {s_tok!r}", s_off) from None
    if scale == 0.0 or not np.isfinite(scale):
        raise FormatError("PFM scale must be finite and nonzero", s_off)
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    need = width * height * channels * 4
    have = len(buf) - data_off
    if have < need:
        raise FormatError(f"truncated PFM raster: need {need} bytes, have {have}", len(buf))
    arr = np.frombuffer(buf, dtype=dtype, count=width * height * channels, offset=data_off)
    arr = arr.reshape(height, width, channels)[::-1].astype(np.float64)
    return arr[..., 0] if channels == 1 else arr


def encode_pfm(arr) -> bytes:
    """Little-endian PFM bytes, grayscale for 2-D input and color for ``(H, W, 3)``."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        magic = b"Pf"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = b"PF"
    else:
        raise ConfigurationError(f"cannot store array of shape {arr.shape} as PFM")
    h, w = arr.shape[:2]
    header = b"%s\n%d %d\n-1.0\n" % (magic, w, h)
    return header + np.ascontiguousarray(arr[::-1], dtype="<f4").tobytes()


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pfm(fh.read())


def write_pfm(path, arr) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pfm(arr))


# ---------------------------------------------------------------------------
# Radiance HDR

_RES_RE = re.compile(rb"^-Y (\d+) \+X (\d+)$")


def rgbe_to_float(rgbe: np.ndarray) -> np.ndarray:
    """``(m + 0.5) / 256 * 2**(e - 128)`` per channel; ``e == 0`` is black."""
    rgbe = np.asarray(rgbe, dtype=np.uint8)
    m = rgbe[..., :3].astype(np.float64)
    e = rgbe[..., 3].astype(np.int32)
    f = np.ldexp(1.0, e - 128 - 8)[..., None]
    out = (m + 0.5) * f
    out[e == 0] = 0.0
    return out


def _rle_scanline(buf: bytes, pos: int, width: int) -> tuple[np.ndarray, int]:
    line = np.empty((4, width), dtype=np.uint8)
    n = len(buf)
    for c in range(4):
        x = 0
        while x < width:
            if pos >= n:
                raise FormatError("truncated run-length scanline", pos)
            count = buf[pos]
            pos += 1
            if count > 128:
                count -= 128
                if x + count > width or pos >= n:
                    raise FormatError("bad run length in scanline", pos - 1)
                line[c, x : x + count] = buf[pos]
                pos += 1
            else:
                if count == 0 or x + count > width:
                    raise FormatError("bad literal count in scanline", pos - 1)
                if pos + count > n:
                    raise FormatError("truncated run-length scanline", n)
                line[c, x : x + count] = np.frombuffer(buf, np.uint8, count, pos)
                pos += count
            x += count
    return line.T, pos


def decode_hdr(buf: bytes) -> np.ndarray:
    """Decode Radiance RGBE bytes to linear float64 RGB, shape ``(H, W, 3)``."""
    if not buf.startswith(b"#?"):
        raise FormatError("missing Radiance '#?' signature", 0)
    pos = 0
    exposure = 1.0
    fmt_seen = False
    while True:
        end = buf.find(b"\n", pos)
        if end < 0:
            raise FormatError("truncated Radiance header", len(buf))
        line = buf[pos:end].rstrip(b"\r")
        if not line and pos > 0:
            pos = end + 1
            break
        if line.startswith(b"FORMAT="):
            if line != b"FORMAT=32-bit_rle_rgbe":
                raise FormatError(f"unsupported pixel format {line[7:]!r}", pos)
            fmt_seen = True
        elif line.startswith(b"EXPOSURE="):
            try:
                exposure *= float(line[9:])
            except ValueError:
                raise FormatError("bad EXPOSURE value", pos) from None
            if not (np.isfinite(exposure) and exposure > 0):
                raise FormatError("EXPOSURE must be positive", pos)
        pos = end + 1
    if not fmt_seen:
        raise FormatError("missing FORMAT line", pos)
    end = buf.find(b"\n", pos)
    if end < 0:
        raise FormatError("missing resolution line", pos)
    match = _RES_RE.match(buf[pos:end].rstrip(b"\r"))
    if match is None:
        raise FormatError("unsupported resolution line (only '-Y H +X W')", pos)
    height, width = int(match.group(1)), int(match.group(2))
    if height < 1 or width < 1:
        raise FormatError("empty image", pos)
    pos = end + 1

    out = np.empty((height, width, 4), dtype=np.uint8)
    n = len(buf)
    for y in range(height):
        if 8 <= width <= 0x7FFF and pos + 4 <= n and buf[pos] == 2 and buf[pos + 1] == 2 and buf[pos + 2] < 128:
            if (buf[pos + 2] << 8 | buf[pos + 3]) != width:
                raise FormatError("scanline width mismatch", pos)
            out[y], pos = _rle_scanline(buf, pos + 4, width)
        else:
            need = 4 * width
            if pos + need > n:
                raise FormatError("truncated flat scanline", n)
            out[y] = np.frombuffer(buf, np.uint8, need, pos).reshape(width, 4)
            pos += need
    return rgbe_to_float(out) / exposure


def read_hdr(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_hdr(fh.read())


def encode_hdr_flat(rgb) -> bytes:
    """Uncompressed RGBE bytes (used to build test fixtures)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim == 2:
        rgb = np.repeat(rgb[..., None], 3, axis=2)
    h, w = rgb.shape[:2]
    peak = rgb.max(axis=2)
    mant, exp = np.frexp(peak)
    scale = np.where(peak > 1e-32, mant * 256.0 / np.where(peak > 0, peak, 1.0), 0.0)
    rgbe = np.zeros((h, w, 4), dtype=np.uint8)
    rgbe[..., :3] = np.clip(np.floor(rgb * scale[..., None]), 0, 255)
    rgbe[..., 3] = np.where(peak > 1e-32, exp + 128, 0)
    header = b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y %d +X %d\n" % (h, w)
    return header + rgbe.tobytes()


# ---------------------------------------------------------------------------
# PNG


def decode_png(buf: bytes) -> tuple[np.ndarray, int]:
    """Code values (``(H, W)`` or ``(H, W, 3)``) and the maximum code."""
    from PIL import Image, UnidentifiedImageError

    if not buf.startswith(PNG_MAGIC):
        raise FormatError("missing PNG signature", 0)
    try:
        with Image.open(io.BytesIO(buf)) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.int64)
                r_max = 65535
            elif mode == "L":
                arr = np.asarray(im)
                r_max = 255
            elif mode == "1":
                arr = np.asarray(im.convert("L"))
                r_max = 255
            else:
                arr = np.asarray(im.convert("RGB"))
                r_max = 255
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise FormatError(f"cannot decode PNG: {exc}", len(buf)) from None
    return arr.astype(np.float64), r_max


def encode_png(codes: np.ndarray, bits: int) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    if bits == 8:
        Image.fromarray(codes.astype(np.uint8), mode="L").save(buf, format="PNG")
    else:
        Image.fromarray(codes.astype(np.uint16)).save(buf, format="PNG")
    return buf.getvalue()


def quantize(v: np.ndarray, bits: int) -> np.ndarray:
    """Drive values in [0, 1] to integer codes, rounding halves up."""
    top = (1 << bits) - 1
    return np.floor(np.asarray(v) * top + 0.5).astype(np.int64).clip(0, top)


# ---------------------------------------------------------------------------
# public entry points


def read_linear(path, fmt: str | None = None) -> np.ndarray:
    """Linear grayscale values of a PFM or HDR file (no calibration applied)."""
    fmt = detect_format(path, fmt)
    if fmt == "pfm":
        return to_grayscale(read_pfm(path))
    if fmt == "hdr":
        return to_grayscale(read_hdr(path))
    raise ConfigurationError(f"{path}: PNG stores display codes, not linear values")


def read_codes(path) -> tuple[np.ndarray, int]:
    """Grayscale PNG code values (Rec. 709 weights on color) and the maximum code."""
    with open(path, "rb") as fh:
        codes, r_max = decode_png(fh.read())
    return to_grayscale(codes), r_max


def load_image(path, fmt: str | None = None, display: DisplayModel | None = None) -> LuminanceImage:
    """Luminance image from a file.

    PFM/HDR values are returned as-is (cd/m^2 when calibrated). PNG drive
    values are decoded per channel through ``display`` before the color
    collapse.
    """
    fmt = detect_format(path, fmt)
    if fmt != "png":
        return LuminanceImage(read_linear(path, fmt))
    display = DisplayModel() if display is None else display
    with open(path, "rb") as fh:
        codes, r_max = decode_png(fh.read())
    lum = decode_from_display(codes / r_max, display).data
    return LuminanceImage(to_grayscale(lum))


def save_image(img, path, fmt: str | None = None, display: DisplayModel | None = None, bits: int = 8) -> None:
    """Write luminances: PFM losslessly (float32), PNG via the display encoding."""
    fmt = detect_format(path, fmt) if fmt is not None else _EXT.get(Path(path).suffix.lower())
    if fmt is None:
        raise ConfigurationError(f"{path}: cannot infer image format from extension")
    arr = as_array(img)
    if fmt == "pfm":
        write_pfm(path, arr)
    elif fmt == "png":
        if bits not in (8, 16):
            raise ConfigurationError(f"PNG bit depth must be 8 or 16, got {bits}")
        v = encode_for_display(arr, DisplayModel() if display is None else display)
        data = encode_png(quantize(v, bits), bits)
        with open(path, "wb") as fh:
            fh.write(data)
    else:
        raise ConfigurationError("Radiance HDR output is not supported; use PFM")
