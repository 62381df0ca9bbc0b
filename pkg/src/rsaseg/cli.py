"""Command-line driver: configuration, artifact writing and exit codes.

Configuration comes from built-in defaults, then an optional ``key=value``
file (``--config``), then command-line flags, each layer overriding the
previous one.  Keys in the file are the flag names without the leading
dashes; ``-`` and ``_`` are interchangeable.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import ConfigError, RSAError
from .extraction import render_segmented
from .filtering import FilterSpec
from .fits_io import read_fits, write_fits, write_pgm
from .levelset import LevelSetConfig
from .phantom import PhantomSpec, generate, load_phantom_spec
from .pipeline import segment
from .rescale import RescaleSpec

__all__ = ["PipelineConfig", "parse_config", "read_config_file", "run_pipeline", "execute", "main"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TMAX = 2

_FILTER_KINDS = {"none": "none", "gaussian": "gaussian", "pm": "perona_malik"}
_EDGE_KINDS = {"g1": "g1", "g2t": "g2tilde"}


def _choice(*options):
    def convert(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return convert


def _optional_float(text):
    return None if str(text).lower() in ("", "none", "otsu") else float(text)


# key -> (converter, default, help)
OPTIONS = {
    "input": (str, None, "FITS image to segment"),
    "phantom": (str, None, "JSON phantom description to generate and segment"),
    "rescale": (_choice("none", "r1", "r2", "r3"), "r3", "gray-level rescaling"),
    "alpha": (float, 0.25, "exponent of r1/r2, in (0, 1]"),
    "beta": (int, 8, "exponent of r3, a positive integer"),
    "tau": (_optional_float, None, "r3 threshold; default is Otsu's"),
    "filter": (_choice(*_FILTER_KINDS), "gaussian", "denoising filter"),
    "filter_iters": (int, None, "filter iterations (default 5 gaussian, 15 pm)"),
    "filter_dt": (float, 1e-4, "filter time step"),
    "mu": (float, 30.0, "Perona-Malik contrast parameter"),
    "diffusivity": (_choice("f1", "f2"), "f2", "Perona-Malik diffusivity"),
    "scheme": (_choice("fd1", "fd2", "sl1", "sl2"), "fd1", "front evolution scheme"),
    "edge": (_choice(*_EDGE_KINDS), "g2t", "edge detector"),
    "p": (float, 2.0, "exponent of g1"),
    "c2": (float, 0.8, "shift of the g2 detector, in [0, 1)"),
    "nu": (float, 1e-4, "curvature weight of fd2/sl2"),
    "dt": (_optional_float, None, "scheme time step (default dx/4, dx^2 or dx)"),
    "switch_c": (float, 1.0, "constant C of the degenerate switch |Dc| <= C dx^s"),
    "switch_s": (float, 1.0, "exponent s of the degenerate switch"),
    "degenerate": (_choice("centered", "literal"), "centered", "degenerate curvature branch"),
    "sl_directions": (int, 16, "unit-ball directions sampled by sl1/sl2"),
    "eps": (float, 1e-3, "stopping tolerance"),
    "eps_front": (_optional_float, None, "front band half-width (default dx)"),
    "tmax": (float, 50.0, "final time if the front never settles"),
    "dx": (float, 0.1, "grid spacing"),
    "order": (_choice("rsa", "filter-first"), "rsa", "rescale then filter, or the reverse"),
    "min_area": (int, 3, "smallest object kept, in pixels"),
    "snapshot_every": (int, 0, "write front_NNNN.csv every k steps (0 = never)"),
    "out": (str, "rsa_out", "output directory"),
    "seed": (int, None, "override the phantom seed"),
}


@dataclass
class PipelineConfig:
    input: str | None = None
    phantom: str | None = None
    rescale: RescaleSpec = field(default_factory=RescaleSpec)
    filter: FilterSpec = field(default_factory=FilterSpec)
    levelset: LevelSetConfig = field(default_factory=LevelSetConfig)
    order: str = "rsa"
    dx: float = 0.1
    min_area: int = 3
    snapshot_every: int = 0
    out: str = "rsa_out"
    seed: int | None = None

    def to_dict(self):
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="rsaseg", description="Segment astronomical images by rescaling and level sets.",
                     argument_default=argparse.SUPPRESS)
    parser.add_argument("--config", help="key=value configuration file")
    for key, (_, default, text) in OPTIONS.items():
        suffix = "" if default is None else f" (default: {default})"
        parser.add_argument("--" + key.replace("_", "-"), dest=key, help=text + suffix)
    return parser


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    values = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def parse_config(argv=None) -> PipelineConfig:
    """Build the effective configuration from flags and an optional file."""
    args = vars(_build_parser().parse_args(argv))
    raw = {}
    if "config" in args:
        raw.update(read_config_file(args.pop("config")))
    raw.update(args)

    values = {}
    for key, (convert, default, _) in OPTIONS.items():
        if key in raw and raw[key] is not None:
            try:
                values[key] = convert(raw[key])
            except ValueError as exc:
                raise ConfigError(f"invalid value for {key}: {raw[key]!r} ({exc})") from None
        else:
            values[key] = default

    if (values["input"] is None) == (values["phantom"] is None):
        raise ConfigError("exactly one of --input or --phantom is required")

    filter_kind = _FILTER_KINDS[values["filter"]]
    iters = values["filter_iters"]
    if iters is None:
        iters = 15 if filter_kind == "perona_malik" else 5
    try:
        return PipelineConfig(
            input=values["input"],
            phantom=values["phantom"],
            rescale=RescaleSpec(values["rescale"], values["alpha"], values["beta"], values["tau"]),
            filter=FilterSpec(filter_kind, iters, values["filter_dt"], values["mu"], values["diffusivity"]),
            levelset=LevelSetConfig(
                scheme=values["scheme"],
                edge=_EDGE_KINDS[values["edge"]],
                p=values["p"],
                c2=values["c2"],
                nu=values["nu"],
                dt=values["dt"],
                C=values["switch_c"],
                s=values["switch_s"],
                eps_front=values["eps_front"],
                eps=values["eps"],
                t_max=values["tmax"],
                sl_directions=values["sl_directions"],
                degenerate=values["degenerate"],
            ),
            order=values["order"],
            dx=_positive(values["dx"], "dx"),
            min_area=_non_negative(values["min_area"], "min_area"),
            snapshot_every=_non_negative(values["snapshot_every"], "snapshot_every"),
            out=values["out"],
            seed=values["seed"],
        )
    except RSAError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from None


def _positive(value, key):
    if not value > 0:
        raise ConfigError(f"{key} must be positive, got {value}")
    return value


def _non_negative(value, key):
    if value < 0:
        raise ConfigError(f"{key} must be >= 0, got {value}")
    return value


def _write_front_csv(path, state):
    dx = state.v.dx
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "t", "x", "y"])
        for i, j in state.front_nodes:
            writer.writerow([state.n, repr(float(state.t)), repr(float(j * dx)), repr(float(i * dx))])


def _load_input(cfg: PipelineConfig, out: Path):
    if cfg.input is not None:
        path = Path(cfg.input)
        if not path.is_file():
            raise ConfigError(f"input file not found: {path}")
        return read_fits(path.read_bytes()), {"input": str(path)}
    spec = load_phantom_spec(cfg.phantom)
    if cfg.seed is not None:
        spec = PhantomSpec(**{**spec.to_dict(), "seed": cfg.seed})
    image, _ = generate(spec)
    # round-trip through the FITS writer and reader like any other input
    blob = write_fits(image, out / "phantom.fits")
    return read_fits(blob), {"phantom": spec.to_dict()}


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Run every step and write the artifacts into ``cfg.out``; return the report."""
    return execute(cfg)[0]


def execute(cfg: PipelineConfig):
    """Like :func:`run_pipeline` but also return the in-memory ``Segmentation``."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    raw, source = _load_input(cfg, out)

    def snapshot(state, check):
        if cfg.snapshot_every and state.n % cfg.snapshot_every == 0:
            _write_front_csv(out / f"front_{state.n:04d}.csv", state)

    seg = segment(raw, cfg.rescale, cfg.filter, cfg.levelset, cfg.order, cfg.dx, cfg.min_area,
                  on_step=snapshot if cfg.snapshot_every else None)

    write_pgm(seg.rescaled, out / "rescaled.pgm")
    write_pgm(seg.filtered, out / "filtered.pgm")
    write_pgm(render_segmented(seg.catalog, raw), out / "segmented.pgm")
    (out / "catalog.json").write_text(seg.catalog.to_json() + "\n")
    _write_front_csv(out / "front_final.csv", seg.evolution.final)

    evo = seg.evolution
    parameters = cfg.to_dict()
    parameters["levelset"]["dt"] = cfg.levelset.time_step(cfg.dx)
    parameters["levelset"]["eps_front"] = cfg.levelset.front_tolerance(cfg.dx)
    parameters["rescale"]["tau"] = seg.tau
    report = {
        "status": evo.status,
        "t": evo.final.t,
        "steps": evo.final.n,
        "objects": len(seg.catalog),
        "final_residual": evo.trace[-1]["residual"] if evo.trace else None,
        "otsu_tau": seg.tau if cfg.rescale.tau is None else None,
        "replaced_pixels": raw.replaced,
        "edge": {"kind": seg.edge.kind, "param": seg.edge.param, "m": seg.edge.m, "M": seg.edge.M},
        "source": source,
        "parameters": parameters,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report, seg


def exit_code(status: str) -> int:
    return EXIT_TMAX if status == "t_max_reached" else EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        report = run_pipeline(cfg)
    except RSAError as exc:
        print(f"rsaseg: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"rsaseg: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"{report['status']}: {report['objects']} objects at t={report['t']:.4g} "
          f"after {report['steps']} steps -> {cfg.out}")
    return exit_code(report["status"])


if __name__ == "__main__":
    sys.exit(main())
