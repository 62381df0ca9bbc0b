"""Uniform-grid scalar fields with Neumann ghosting.

Node ``(i, j)`` (0-based row, column) sits at ``x = j * dx``, ``y = i * dx``,
which is the 1-based ``((j-1)dx, (i-1)dx)`` convention shifted to 0-based
indices.  The x direction runs along columns (axis 1), y along rows (axis 0).

Homogeneous Neumann conditions are realised by mirror ghosts: the ghost at
index ``-1`` copies index ``0`` and the ghost at ``n`` copies ``n - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "ScalarField",
    "StencilSample",
    "Derivatives",
    "BilinearPlan",
    "neumann_pad",
    "neumann_sample",
    "diff_ops",
    "derivatives",
    "bilinear_interp",
]

# relative distance under which a query coordinate is snapped onto a node
_SNAP = 1e-9


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A 2-D field of finite reals on a uniform grid of spacing ``dx``."""

    values: np.ndarray
    dx: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"ScalarField needs a 2-D array, got shape {values.shape}")
        if values.shape[0] < 3 or values.shape[1] < 3:
            raise ValueError(f"ScalarField needs at least 3x3 nodes, got {values.shape}")
        if not self.dx > 0:
            raise ValueError(f"grid spacing must be positive, got {self.dx}")
        if not np.all(np.isfinite(values)):
            raise ValueError("ScalarField values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dx", float(self.dx))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def replace(self, values) -> "ScalarField":
        return ScalarField(values, self.dx)

    def coords(self):
        """Return ``(x, y)`` coordinate arrays of every node."""
        y, x = np.indices(self.shape, dtype=np.float64)
        return x * self.dx, y * self.dx

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


class StencilSample(NamedTuple):
    center: float
    east: float       # (i, j+1)
    west: float       # (i, j-1)
    north: float      # (i+1, j)
    south: float      # (i-1, j)
    northeast: float  # (i+1, j+1)
    northwest: float  # (i+1, j-1)
    southeast: float  # (i-1, j+1)
    southwest: float  # (i-1, j-1)


class Derivatives(NamedTuple):
    dpx: np.ndarray
    dmx: np.ndarray
    dpy: np.ndarray
    dmy: np.ndarray
    dcx: np.ndarray
    dcy: np.ndarray
    d2x: np.ndarray
    d2y: np.ndarray
    dxy: np.ndarray


def _as_array(f):
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=np.float64)


def neumann_pad(values: np.ndarray) -> np.ndarray:
    """Pad by one ghost ring that mirrors the boundary nodes."""
    return np.pad(values, 1, mode="edge")


def neumann_sample(f, i: int, j: int) -> StencilSample:
    """Nine-point neighbourhood of node ``(i, j)`` with reflected ghosts."""
    v = _as_array(f)
    rows, cols = v.shape
    if not (0 <= i < rows and 0 <= j < cols):
        raise IndexError(f"node ({i}, {j}) outside a {rows}x{cols} grid")

    def at(ii, jj):
        ii = min(max(ii, 0), rows - 1)
        jj = min(max(jj, 0), cols - 1)
        return float(v[ii, jj])

    return StencilSample(
        center=at(i, j),
        east=at(i, j + 1),
        west=at(i, j - 1),
        north=at(i + 1, j),
        south=at(i - 1, j),
        northeast=at(i + 1, j + 1),
        northwest=at(i + 1, j - 1),
        southeast=at(i - 1, j + 1),
        southwest=at(i - 1, j - 1),
    )


def derivatives(values: np.ndarray, dx: float) -> Derivatives:
    """All finite-difference operators on every node at once.

    One-sided differences are first order, centred ones second order.
    Boundary nodes use mirror ghosts, so e.g. ``dmx`` vanishes on column 0.
    """
    p = neumann_pad(np.asarray(values, dtype=np.float64))
    c = p[1:-1, 1:-1]
    e, w = p[1:-1, 2:], p[1:-1, :-2]
    n, s = p[2:, 1:-1], p[:-2, 1:-1]
    ne, nw = p[2:, 2:], p[2:, :-2]
    se, sw = p[:-2, 2:], p[:-2, :-2]
    dx2 = dx * dx
    return Derivatives(
        dpx=(e - c) / dx,
        dmx=(c - w) / dx,
        dpy=(n - c) / dx,
        dmy=(c - s) / dx,
        dcx=(e - w) / (2 * dx),
        dcy=(n - s) / (2 * dx),
        d2x=(e - 2 * c + w) / dx2,
        d2y=(n - 2 * c + s) / dx2,
        dxy=(ne - nw - se + sw) / (4 * dx2),
    )


def diff_ops(f: ScalarField, i: int, j: int) -> Derivatives:
    """Finite-difference operators at a single node, returned as floats."""
    s = neumann_sample(f, i, j)
    dx = f.dx
    dx2 = dx * dx
    return Derivatives(
        dpx=(s.east - s.center) / dx,
        dmx=(s.center - s.west) / dx,
        dpy=(s.north - s.center) / dx,
        dmy=(s.center - s.south) / dx,
        dcx=(s.east - s.west) / (2 * dx),
        dcy=(s.north - s.south) / (2 * dx),
        d2x=(s.east - 2 * s.center + s.west) / dx2,
        d2y=(s.north - 2 * s.center + s.south) / dx2,
        dxy=(s.northeast - s.northwest - s.southeast + s.southwest) / (4 * dx2),
    )


class BilinearPlan:
    """Precomputed bilinear interpolation at fixed query points.

    Building the plan resolves cell indices and weights once; ``apply`` can
    then be called on any field of the same shape.  Queries outside the node
    hull are clamped onto it, which agrees with the Neumann extension.
    """

    def __init__(self, shape, dx, x, y):
        rows, cols = shape
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        sx = np.clip(x / dx, 0.0, cols - 1.0)
        sy = np.clip(y / dx, 0.0, rows - 1.0)
        # snap round-off so node coordinates hit stored values exactly
        rx, ry = np.rint(sx), np.rint(sy)
        sx = np.where(np.abs(sx - rx) <= _SNAP * np.maximum(1.0, rx), rx, sx)
        sy = np.where(np.abs(sy - ry) <= _SNAP * np.maximum(1.0, ry), ry, sy)
        j0 = np.minimum(np.floor(sx).astype(np.intp), cols - 2)
        i0 = np.minimum(np.floor(sy).astype(np.intp), rows - 2)
        self.tx = sx - j0
        self.ty = sy - i0
        self.idx00 = i0 * cols + j0
        self.shape = (rows, cols)

    def apply(self, values) -> np.ndarray:
        flat = np.asarray(values, dtype=np.float64).ravel()
        cols = self.shape[1]
        k = self.idx00
        f00, f01 = flat[k], flat[k + 1]
        f10, f11 = flat[k + cols], flat[k + cols + 1]
        tx, ty = self.tx, self.ty
        bottom = (1.0 - tx) * f00 + tx * f01
        top = (1.0 - tx) * f10 + tx * f11
        return (1.0 - ty) * bottom + ty * top


def bilinear_interp(f: ScalarField, x, y):
    """Interpolate ``f`` at ``(x, y)``; scalars in, scalar out."""
    plan = BilinearPlan(f.shape, f.dx, x, y)
    out = plan.apply(f.values)
    return float(out) if out.ndim == 0 else out
