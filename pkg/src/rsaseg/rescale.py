"""Gray-level normalisation and rescaling of dark astronomical images.

``r1`` and ``r2`` brighten every tone; ``r3`` darkens tones below a
threshold ``tau`` and brightens those above it, with ``tau`` usually picked
by Otsu's method on the normalised image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstantImage, DomainError
from .fits_io import RawImage
from .grid import ScalarField

__all__ = [
    "RescaleSpec",
    "minmax_normalize",
    "r1",
    "r2",
    "r3",
    "otsu_threshold",
    "apply_rescale",
    "N_BINS",
]

N_BINS = 256
KINDS = ("none", "r1", "r2", "r3")


@dataclass(frozen=True)
class RescaleSpec:
    kind: str = "r3"
    alpha: float = 0.25
    beta: int = 8
    # None means "derive with Otsu"
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"rescale kind must be one of {KINDS}, got {self.kind!r}")
        if not 0 < self.alpha <= 1:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if int(self.beta) != self.beta or self.beta < 1:
            raise DomainError(f"beta must be a positive integer, got {self.beta}")
        if self.tau is not None and not 0 <= self.tau < 1:
            raise DomainError(f"tau must lie in [0, 1), got {self.tau}")


def _unit_interval(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr >= 0.0) | ~(arr <= 1.0)):
        raise DomainError(f"{name} is defined on [0, 1] only")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def minmax_normalize(img, dx: float = 0.1) -> ScalarField:
    """Map the raw image affinely onto [0, 1]."""
    data = img.data if isinstance(img, RawImage) else np.asarray(img, dtype=np.float64)
    lo, hi = data.min(), data.max()
    if not hi > lo:
        raise ConstantImage(f"image is constant ({lo}); min-max normalisation is undefined")
    scaled = (data - lo) / (hi - lo)
    return ScalarField(scaled, dx)


def r1(x, alpha):
    """Power-law rescaling ``x**alpha``."""
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    arr = _unit_interval(x, "r1")
    return _out(np.power(arr, alpha), x)


def r2(x, alpha):
    """Logarithmic rescaling ``(ln(1 + x) / ln 2)**alpha``."""
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    arr = _unit_interval(x, "r2")
    base = np.log1p(arr) / np.log(2.0)
    # log1p(1)/log(2) can land one ulp away from 1
    base = np.where(arr == 1.0, 1.0, np.minimum(base, 1.0))
    return _out(np.power(base, alpha), x)


def r3(x, beta, tau):
    """Threshold rescaling with fixed points 0, ``tau`` and 1.

    Below ``tau`` the tone follows ``x**beta / tau**(beta - 1)``, above it
    ``(x - tau)**(1/beta) / (1 - tau)**(1/beta - 1) + tau``.  With
    ``tau == 0`` only the upper branch remains, i.e. ``x**(1/beta)``.
    """
    if int(beta) != beta or beta < 1:
        raise DomainError(f"beta must be a positive integer, got {beta}")
    if not 0 <= tau < 1:
        raise DomainError(f"tau must lie in [0, 1), got {tau}")
    arr = _unit_interval(x, "r3")
    inv = 1.0 / beta
    # ratio form: tau**(beta - 1) underflows long before the result does
    upper = (1.0 - tau) * np.power(np.maximum(arr - tau, 0.0) / (1.0 - tau), inv) + tau
    if tau > 0:
        lower = tau * np.power(np.minimum(arr / tau, 1.0), beta)
        out = np.where(arr < tau, lower, upper)
    else:
        out = upper
    out = np.where(arr == 1.0, 1.0, np.minimum(out, 1.0))
    return _out(out, x)


def histogram_bins(values) -> np.ndarray:
    """Bin index in ``0..255`` for each value of [0, 1]; 1.0 joins the top bin."""
    v = np.asarray(values, dtype=np.float64)
    return np.minimum((v * N_BINS).astype(np.int64), N_BINS - 1)


def otsu_threshold(f) -> float:
    """Otsu threshold on a 256-bin histogram of values in [0, 1].

    Split ``k`` puts bins ``0..k-1`` in the dark class and returns
    ``tau = k / 256``.  The between-class variance is compared exactly in
    integer arithmetic, so empty bins produce genuine ties, and ties go to
    the smallest ``k``.
    """
    values = f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=np.float64)
    _unit_interval(values, "otsu_threshold")
    counts = np.bincount(histogram_bins(values).ravel(), minlength=N_BINS)
    n_total = int(counts.sum())
    s_total = int(np.dot(np.arange(N_BINS), counts))
    n0 = s0 = 0
    best_k, best_num, best_den = None, 0, 1
    for k in range(1, N_BINS):
        n0 += int(counts[k - 1])
        s0 += (k - 1) * int(counts[k - 1])
        n1 = n_total - n0
        if n0 == 0 or n1 == 0:
            continue
        # w0*w1*(mu0 - mu1)**2 * N**2 == (s0*N - S*n0)**2 / (n0*n1)
        num = (s0 * n_total - s_total * n0) ** 2
        den = n0 * n1
        if best_k is None or num * best_den > best_num * den:
            best_k, best_num, best_den = k, num, den
    if best_k is None:
        raise ConstantImage("all values fall into a single histogram bin; no threshold exists")
    return best_k / N_BINS


def apply_rescale(f: ScalarField, spec: RescaleSpec):
    """Apply ``spec`` elementwise; returns the new field and the tau used."""
    values = np.clip(f.values, 0.0, 1.0)
    if spec.kind == "none":
        return f, None
    if spec.kind == "r1":
        return f.replace(r1(values, spec.alpha)), None
    if spec.kind == "r2":
        return f.replace(r2(values, spec.alpha)), None
    tau = spec.tau if spec.tau is not None else otsu_threshold(values)
    return f.replace(r3(values, spec.beta, tau)), tau
