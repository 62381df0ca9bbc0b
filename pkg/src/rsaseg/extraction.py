"""Objects left inside the contracted front, as a labelled catalog."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .fits_io import RawImage
from .grid import ScalarField

__all__ = ["SourceRecord", "SegmentCatalog", "object_mask", "label_components", "render_segmented"]

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class SourceRecord:
    label: int
    area: int
    centroid: tuple  # (x, y) in grid coordinates
    bbox: tuple  # (imin, imax, jmin, jmax), inclusive node indices
    mean_intensity: float | None

    def as_dict(self):
        return {
            "label": self.label,
            "area": self.area,
            "centroid": list(self.centroid),
            "bbox": list(self.bbox),
            "mean_intensity": self.mean_intensity,
        }


@dataclass
class SegmentCatalog:
    objects: list
    labels: np.ndarray  # 0 = background, 1..K = object
    discarded: int = 0  # mask pixels dropped by the area cut
    dx: float = 1.0

    def __len__(self):
        return len(self.objects)

    def to_json(self) -> str:
        return json.dumps([o.as_dict() for o in self.objects], indent=2)


def object_mask(final, eps_front: float | None = None) -> np.ndarray:
    """Nodes where the final representation is non-negative.

    ``eps_front`` is accepted for symmetry with the stopping rule but does not
    change the mask: the band ``|v| <= eps_front`` is the front, not the object.
    """
    values = final.v.values if hasattr(final, "v") else np.asarray(final)
    return values >= 0


def label_components(mask, min_area: int = 3, original=None, dx: float = 1.0) -> SegmentCatalog:
    """4-connected components of ``mask``, numbered in raster order.

    Components smaller than ``min_area`` pixels are dropped and the rest
    renumbered ``1..K``.  When ``original`` (raw physical values) is given,
    each record carries the mean of those values over its pixels.
    """
    mask = np.asarray(mask, dtype=bool)
    raw, count = ndimage.label(mask, structure=_FOUR_CONNECTED)
    if original is not None:
        data = original.data if isinstance(original, RawImage) else np.asarray(original, dtype=np.float64)
        if data.shape != mask.shape:
            raise ValueError(f"original image shape {data.shape} does not match mask {mask.shape}")
    else:
        data = None

    # ndimage.label already numbers components by first pixel in raster order
    labels = np.zeros(mask.shape, dtype=np.int32)
    objects = []
    discarded = 0
    slices = ndimage.find_objects(raw)
    for old, sl in enumerate(slices, start=1):
        member = raw[sl] == old
        area = int(member.sum())
        if area < min_area:
            discarded += area
            continue
        new = len(objects) + 1
        labels[sl][member] = new
        ii, jj = np.nonzero(member)
        ii = ii + sl[0].start
        jj = jj + sl[1].start
        mean = float(data[ii, jj].mean()) if data is not None else None
        objects.append(SourceRecord(
            label=new,
            area=area,
            centroid=(float(jj.mean() * dx), float(ii.mean() * dx)),
            bbox=(int(ii.min()), int(ii.max()), int(jj.min()), int(jj.max())),
            mean_intensity=mean,
        ))
    return SegmentCatalog(objects, labels, discarded, dx)


def render_segmented(catalog: SegmentCatalog, original) -> ScalarField:
    """Paint every object with the mean original value over its pixels."""
    data = original.data if isinstance(original, RawImage) else np.asarray(original, dtype=np.float64)
    out = np.zeros(catalog.labels.shape, dtype=np.float64)
    for obj in catalog.objects:
        member = catalog.labels == obj.label
        out[member] = data[member].mean()
    return ScalarField(out, catalog.dx)
