"""The four-step segmentation pipeline, independent of any file layout."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .extraction import SegmentCatalog, label_components, object_mask
from .filtering import FilterSpec, run_filter
from .fits_io import RawImage
from .grid import ScalarField
from .levelset import EdgeField, EvolveResult, LevelSetConfig, build_edge_field, evolve, initial_front
from .rescale import RescaleSpec, apply_rescale, minmax_normalize

__all__ = ["Segmentation", "segment"]


@dataclass
class Segmentation:
    normalized: ScalarField
    rescaled: ScalarField
    filtered: ScalarField
    edge: EdgeField
    evolution: EvolveResult
    catalog: SegmentCatalog
    tau: float | None


def segment(raw: RawImage, rescale: RescaleSpec = RescaleSpec(), filt: FilterSpec = FilterSpec(),
            levelset: LevelSetConfig = LevelSetConfig(), order: str = "rsa", dx: float = 0.1,
            min_area: int = 3, on_step: Callable | None = None) -> Segmentation:
    """Normalise, rescale, filter, evolve the front and extract objects.

    ``order="rsa"`` rescales before filtering (Otsu runs on the normalised
    image); ``order="filter-first"`` filters the normalised image first and
    rescales the filtered result.
    """
    normalized = minmax_normalize(raw, dx)
    if order == "rsa":
        rescaled, tau = apply_rescale(normalized, rescale)
        filtered = run_filter(rescaled, filt)
    elif order == "filter-first":
        smoothed = run_filter(normalized, filt)
        # filtering keeps values in [0, 1] under the CFL bound
        rescaled, tau = apply_rescale(smoothed, rescale)
        filtered = rescaled
    else:
        raise ValueError(f"unknown pipeline order {order!r}")

    edge = build_edge_field(filtered, levelset.edge, levelset.p, levelset.c2)
    start = initial_front(raw.shape[0], raw.shape[1], dx)
    result = evolve(start, edge, levelset, on_step=on_step)
    eps_front = levelset.front_tolerance(dx)
    catalog = label_components(object_mask(result.final, eps_front), min_area, raw, dx)
    return Segmentation(normalized, rescaled, filtered, edge, result, catalog, tau)
