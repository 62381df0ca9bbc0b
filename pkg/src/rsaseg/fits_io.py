"""Minimal FITS support: a single 2-D primary HDU, plus PGM output.

Only what an astronomical image needs is handled: fixed-format header cards
in 2880-byte blocks, BITPIX in {8, 16, 32, -32, -64}, NAXIS = 2, and the
BSCALE/BZERO linear scaling.  Files are written as 32-bit IEEE floats.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    MalformedCard,
    MissingSimple,
    TruncatedData,
    UnsupportedBitpix,
    UnsupportedNaxis,
)

BLOCK = 2880
CARD = 80

_DTYPES = {
    8: np.dtype(">u1"),
    16: np.dtype(">i2"),
    32: np.dtype(">i4"),
    -32: np.dtype(">f4"),
    -64: np.dtype(">f8"),
}
_STRUCTURAL = {"SIMPLE", "BITPIX", "NAXIS", "NAXIS1", "NAXIS2", "BSCALE", "BZERO", "END"}


@dataclass
class FitsHeader:
    bitpix: int
    naxis1: int
    naxis2: int
    bscale: float = 1.0
    bzero: float = 0.0
    naxis: int = 2
    extra_cards: list = field(default_factory=list)
    blank: int | None = None

    def get(self, key, default=None):
        """Look up the value of a preserved non-structural card."""
        for card in self.extra_cards:
            k, value = _split_card(card)
            if k == key:
                return _parse_value(value, card)
        return default


@dataclass
class RawImage:
    header: FitsHeader
    data: np.ndarray
    # number of NaN / BLANK pixels replaced by the image minimum on read
    replaced: int = 0

    @property
    def shape(self):
        return self.data.shape

    @classmethod
    def from_array(cls, data) -> "RawImage":
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"expected a 2-D image, got shape {data.shape}")
        rows, cols = data.shape
        return cls(FitsHeader(bitpix=-32, naxis1=cols, naxis2=rows), data)


def _split_card(card: str):
    key = card[:8].strip()
    if card[8:10] == "= ":
        return key, card[10:]
    return key, None


def _parse_value(text, card):
    if text is None:
        return None
    text = text.strip()
    if text.startswith("'"):
        # quoted string; '' is an escaped quote
        out, k = [], 1
        while k < len(text):
            ch = text[k]
            if ch == "'":
                if text[k + 1:k + 2] == "'":
                    out.append("'")
                    k += 2
                    continue
                return "".join(out).rstrip()
            out.append(ch)
            k += 1
        raise MalformedCard(f"unterminated string in card {card.rstrip()!r}")
    value = text.split("/", 1)[0].strip()
    if value == "T":
        return True
    if value == "F":
        return False
    if value == "":
        return None
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value.replace("D", "E"))
    except ValueError:
        raise MalformedCard(f"cannot parse value in card {card.rstrip()!r}") from None


def _read_cards(buf: bytes):
    """Collect ``(offset, card)`` pairs up to END and the padded header length."""
    cards = []
    offset = 0
    while True:
        if offset + BLOCK > len(buf):
            raise TruncatedData(f"header not terminated by END before byte offset {len(buf)}")
        block = buf[offset:offset + BLOCK]
        for k in range(BLOCK // CARD):
            raw = block[k * CARD:(k + 1) * CARD]
            try:
                card = raw.decode("ascii")
            except UnicodeDecodeError:
                raise MalformedCard(f"non-ASCII header card at byte offset {offset + k * CARD}") from None
            if card[:8].rstrip() == "END":
                return cards, offset + BLOCK
            cards.append((offset + k * CARD, card))
        offset += BLOCK


def _required_int(values, key):
    if key not in values:
        raise MalformedCard(f"required card {key} is missing")
    offset, value = values[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise MalformedCard(f"card {key} at byte offset {offset} must be an integer, got {value!r}")
    return value


def read_fits(data) -> RawImage:
    """Parse the primary HDU of a FITS byte stream (or file path)."""
    if isinstance(data, (str, Path)):
        data = Path(data).read_bytes()
    buf = bytes(data)
    if len(buf) < BLOCK:
        raise TruncatedData(f"stream of {len(buf)} bytes is shorter than one {BLOCK}-byte block")
    if buf[:8] != b"SIMPLE  ":
        raise MissingSimple("first card at byte offset 0 is not SIMPLE")

    cards, header_len = _read_cards(buf)
    values = {}
    extra = []
    for offset, card in cards:
        key, text = _split_card(card)
        if key in _STRUCTURAL:
            values[key] = (offset, _parse_value(text, card))
        else:
            extra.append(card)

    if values["SIMPLE"][1] is not True:
        raise MissingSimple("SIMPLE card at byte offset 0 is not T")
    bitpix = _required_int(values, "BITPIX")
    if bitpix not in _DTYPES:
        raise UnsupportedBitpix(f"BITPIX = {bitpix} at byte offset {values['BITPIX'][0]} is not supported")
    naxis = _required_int(values, "NAXIS")
    if naxis != 2:
        raise UnsupportedNaxis(f"NAXIS = {naxis} at byte offset {values['NAXIS'][0]}; only 2-D images are read")
    cols = _required_int(values, "NAXIS1")
    rows = _required_int(values, "NAXIS2")
    if cols <= 0 or rows <= 0:
        raise MalformedCard(f"image axes NAXIS1={cols}, NAXIS2={rows} must be positive")

    def _real(key, default):
        if key not in values:
            return default
        offset, v = values[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MalformedCard(f"card {key} at byte offset {offset} is not numeric")
        return float(v)

    header = FitsHeader(
        bitpix=bitpix,
        naxis1=cols,
        naxis2=rows,
        bscale=_real("BSCALE", 1.0),
        bzero=_real("BZERO", 0.0),
        extra_cards=extra,
    )
    blank = header.get("BLANK")
    if bitpix > 0 and isinstance(blank, int):
        header.blank = blank

    dtype = _DTYPES[bitpix]
    nbytes = rows * cols * dtype.itemsize
    end = header_len + nbytes
    if end > len(buf):
        raise TruncatedData(
            f"data area needs {nbytes} bytes from offset {header_len}, stream ends at {len(buf)}"
        )
    stored = np.frombuffer(buf, dtype=dtype, count=rows * cols, offset=header_len).reshape(rows, cols)
    padded_end = header_len + BLOCK * math.ceil(nbytes / BLOCK)
    if header.get("EXTEND") is True and len(buf) > padded_end:
        warnings.warn("FITS extensions after the primary HDU are ignored", stacklevel=2)

    bad = ~np.isfinite(stored) if bitpix < 0 else np.zeros(stored.shape, dtype=bool)
    if header.blank is not None:
        bad |= stored == header.blank
    physical = header.bzero + header.bscale * stored.astype(np.float64)
    replaced = int(bad.sum())
    if replaced:
        good = physical[~bad]
        fill = good.min() if good.size else 0.0
        physical = np.where(bad, fill, physical)
    return RawImage(header, physical, replaced)


def _card(key, value, comment=""):
    if isinstance(value, bool):
        text = "T" if value else "F"
    elif isinstance(value, int):
        text = str(value)
    else:
        text = repr(float(value)).upper()
    card = f"{key:<8}= {text:>20}"
    if comment:
        card += f" / {comment}"
    return card[:CARD].ljust(CARD)


def write_fits(img, path=None) -> bytes:
    """Serialise ``img`` (RawImage or 2-D array) as a BITPIX=-32 FITS file."""
    data = img.data if isinstance(img, RawImage) else np.asarray(img, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {data.shape}")
    rows, cols = data.shape
    cards = [
        _card("SIMPLE", True, "conforms to FITS standard"),
        _card("BITPIX", -32, "32-bit IEEE floating point"),
        _card("NAXIS", 2),
        _card("NAXIS1", cols),
        _card("NAXIS2", rows),
        _card("BSCALE", 1.0),
        _card("BZERO", 0.0),
    ]
    if isinstance(img, RawImage):
        for card in img.header.extra_cards:
            key = card[:8].strip()
            if key not in _STRUCTURAL and key not in ("EXTEND", "BLANK"):
                cards.append(card[:CARD].ljust(CARD))
    cards.append("END".ljust(CARD))
    header = "".join(cards).encode("ascii")
    header += b" " * (-len(header) % BLOCK)
    body = np.ascontiguousarray(data, dtype=">f4").tobytes()
    body += b"\0" * (-len(body) % BLOCK)
    out = header + body
    if path is not None:
        Path(path).write_bytes(out)
    return out


def write_pgm(f, path) -> None:
    """Write a binary P5 graymap, mapping [min, max] linearly onto [0, 255]."""
    values = np.asarray(f.values if hasattr(f, "values") else f, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi > lo:
        scaled = np.rint((values - lo) * (255.0 / (hi - lo)))
    else:
        scaled = np.zeros_like(values)
    pixels = np.clip(scaled, 0, 255).astype(np.uint8)
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
