"""Synthetic star fields with known ground truth.

Noise is drawn from a counter-based generator: every pixel hashes
``(seed, stream, pixel index)`` through SplitMix64, so the value at a pixel
does not depend on traversal order, array layout or platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import ConfigError
from .fits_io import RawImage

__all__ = ["Source", "PhantomSpec", "generate", "iou", "splitmix64", "uniform_stream", "load_phantom_spec"]

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


@dataclass(frozen=True)
class Source:
    x: float  # column coordinate, in pixels
    y: float  # row coordinate, in pixels
    amplitude: float
    radius: float  # Gaussian sigma, in pixels

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ConfigError(f"source amplitude must be positive, got {self.amplitude}")
        if not self.radius > 0:
            raise ConfigError(f"source radius must be positive, got {self.radius}")


@dataclass(frozen=True)
class PhantomSpec:
    rows: int
    cols: int
    sources: tuple = ()
    background: float = 0.0
    noise: str = "none"  # "none", "gaussian" or "poisson"
    # sigma for gaussian noise, photons per unit intensity for poisson
    noise_level: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 3 or self.cols < 3:
            raise ConfigError("phantom needs at least 3x3 pixels")
        if self.noise not in ("none", "gaussian", "poisson"):
            raise ConfigError(f"unknown noise model {self.noise!r}")
        if self.noise != "none" and not self.noise_level > 0:
            raise ConfigError("noise_level must be positive when noise is enabled")
        object.__setattr__(self, "sources", tuple(
            s if isinstance(s, Source) else Source(**s) for s in self.sources
        ))

    def scaled(self, factor: float) -> "PhantomSpec":
        """Same scene with every amplitude multiplied by ``factor``."""
        sources = tuple(Source(s.x, s.y, s.amplitude * factor, s.radius) for s in self.sources)
        return PhantomSpec(self.rows, self.cols, sources, self.background, self.noise,
                           self.noise_level, self.seed)

    def to_dict(self):
        d = asdict(self)
        d["sources"] = [asdict(s) for s in self.sources]
        return d


def load_phantom_spec(path) -> PhantomSpec:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"phantom spec file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"phantom spec {path} is not valid JSON: {exc}") from None
    allowed = {"rows", "cols", "sources", "background", "noise", "noise_level", "seed"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown phantom keys in {path}: {sorted(unknown)}")
    try:
        return PhantomSpec(**raw)
    except TypeError as exc:
        raise ConfigError(f"bad phantom spec {path}: {exc}") from None


def splitmix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser applied elementwise to ``uint64`` counters."""
    with np.errstate(over="ignore"):
        z = (np.asarray(x, dtype=np.uint64) + _GOLDEN) & _MASK64
        z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
        return z ^ (z >> np.uint64(31))


def uniform_stream(seed: int, stream: int, n: int) -> np.ndarray:
    """``n`` uniforms in the open interval (0, 1) for one named stream."""
    with np.errstate(over="ignore"):
        key = splitmix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
        key = splitmix64(key ^ np.uint64(stream))
        bits = splitmix64(key + np.arange(n, dtype=np.uint64) * _GOLDEN)
    # top 53 bits, offset by half an ulp to stay away from 0 and 1
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) / 2.0 ** 53


def _source_profile(src: Source, x, y):
    return src.amplitude * np.exp(-((x - src.x) ** 2 + (y - src.y) ** 2) / (2.0 * src.radius ** 2))


def generate(spec: PhantomSpec):
    """Render the phantom; returns ``(RawImage, [truth mask per source])``.

    A truth mask holds the pixels where the noiseless source reaches at least
    ``amplitude * exp(-2)``, i.e. within two radii of its centre.
    """
    y, x = np.indices((spec.rows, spec.cols), dtype=np.float64)
    clean = np.full((spec.rows, spec.cols), float(spec.background))
    masks = []
    for src in spec.sources:
        profile = _source_profile(src, x, y)
        clean += profile
        masks.append(profile >= src.amplitude * math.exp(-2.0))

    n = spec.rows * spec.cols
    if spec.noise == "gaussian":
        u1 = uniform_stream(spec.seed, 1, n)
        u2 = uniform_stream(spec.seed, 2, n)
        normal = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)
        image = clean + spec.noise_level * normal.reshape(clean.shape)
    elif spec.noise == "poisson":
        lam = np.maximum(clean, 0.0) * spec.noise_level
        u = uniform_stream(spec.seed, 3, n).reshape(clean.shape)
        image = stats.poisson.ppf(u, lam) / spec.noise_level
    else:
        image = clean
    return RawImage.from_array(image), masks


def iou(mask_a, mask_b) -> float:
    a = np.asarray(mask_a, dtype=bool)
    b = np.asarray(mask_b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)
