"""Segmentation of astronomical images by intensity rescaling and level sets."""

from .errors import (
    CflViolation,
    ConfigError,
    ConstantImage,
    DegenerateRange,
    DomainError,
    FitsError,
    RSAError,
)
from .extraction import SegmentCatalog, label_components, object_mask, render_segmented
from .filtering import FilterSpec, heat_step, pm_step, run_filter
from .fits_io import FitsHeader, RawImage, read_fits, write_fits, write_pgm
from .grid import ScalarField, bilinear_interp, diff_ops, neumann_sample
from .levelset import (
    EdgeField,
    FrontState,
    LevelSetConfig,
    build_edge_field,
    check_stop,
    evolve,
    fd1_step,
    fd2_step,
    initial_front,
    sl1_step,
    sl2_step,
)
from .phantom import PhantomSpec, Source, generate, iou
from .pipeline import Segmentation, segment
from .rescale import RescaleSpec, minmax_normalize, otsu_threshold, r1, r2, r3

__version__ = "0.1.0"
