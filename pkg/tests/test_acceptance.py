"""One test per acceptance criterion, each at its stated tolerance and time budget.

Every test records all of its checks before failing, and the terminal
summary prints one PASS/FAIL line per criterion.
"""

import json
import struct
import time

import numpy as np
import pytest
from scipy.stats import qmc

from conftest import circle_state, mean_zero_radius, three_source_phantom
from oracles import build, otsu_oracle, simple_header
from rsaseg.cli import execute, main, parse_config
from rsaseg.errors import CflViolation
from rsaseg.filtering import heat_step, pm_step
from rsaseg.fits_io import read_fits, write_fits
from rsaseg.grid import ScalarField
from rsaseg.levelset import FrontState, LevelSetConfig, evolve, fd1_step, fd2_step, sl1_step, sl2_step
from rsaseg.phantom import generate, iou
from rsaseg.rescale import otsu_threshold, r1, r2, r3


def quasi_random(n=100_000, seed=0):
    x = qmc.Halton(d=1, scramble=True, seed=seed).random(n).ravel()
    return np.sort(x[(x > 0) & (x < 1)])


def write_phantom(path, spec):
    path.write_text(json.dumps(spec.to_dict()))
    return path


def run_cli(tmp_path, name, spec, *flags):
    out = tmp_path / name
    phantom = write_phantom(tmp_path / f"{name}.json", spec)
    code = main(["--phantom", str(phantom), "--out", str(out), *flags])
    return code, out


@pytest.mark.criterion(1, "rescaling axioms")
def test_rescaling_axioms(criterion):
    start = time.perf_counter()
    x = quasi_random()
    not_increasing, not_above, worst_end = [], [], 0.0
    for alpha in (0.1, 0.25, 0.5, 0.9):
        for name, r in (("r1", r1), ("r2", r2)):
            y = r(x, alpha)
            if not np.all(np.diff(y) > 0):
                not_increasing.append(f"{name}(a={alpha})")
            if not np.all(y > x):
                not_above.append(f"{name}(a={alpha})")
            worst_end = max(worst_end, abs(r(0.0, alpha)), abs(r(1.0, alpha) - 1.0))
    criterion.check(not not_increasing, f"r1/r2 strictly increasing (violations: {not_increasing or 'none'})")
    criterion.check(not not_above, f"r1/r2 above identity (violations: {not_above or 'none'})")
    criterion.check(worst_end <= 1e-12, f"endpoint error {worst_end:.1e} <= 1e-12")
    bad_pattern, worst_gap = [], 0.0
    for tau in (0.2, 0.5, 0.8):
        for beta in (2, 4, 8):
            y = r3(x, beta, tau)
            below, above = x < tau, x > tau
            if not (np.all(y[below] < x[below]) and np.all(y[above] > x[above])):
                bad_pattern.append(f"b={beta},t={tau}")
            gap = max(abs(r3(np.nextafter(tau, 0.0), beta, tau) - tau), abs(r3(tau, beta, tau) - tau))
            worst_gap = max(worst_gap, gap)
    criterion.check(not bad_pattern, f"r3 sign pattern on 9 (beta, tau) pairs (violations: {bad_pattern or 'none'})")
    criterion.check(worst_gap <= 1e-9, f"r3 continuity gap at tau {worst_gap:.1e}")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 1.0, f"runtime {elapsed:.2f}s < 1s")
    criterion.finish()


@pytest.mark.criterion(2, "limit behaviour")
def test_limit_behaviour(criterion):
    start = time.perf_counter()
    x = quasi_random()
    dev = np.max(np.abs(r1(x, 0.999) - x))
    criterion.check(dev <= 1e-2, f"max|r1(x;0.999)-x| = {dev:.2e} <= 1e-2")
    for tau in (0.2, 0.5, 0.8):
        far = np.abs(x - tau) > 0.05
        step = np.where(x < tau, 0.0, 1.0)
        dev = np.max(np.abs(r3(x, 64, tau) - step)[far])
        criterion.check(dev <= 1e-6, f"r3(b=64, t={tau}) vs step: {dev:.2e} <= 1e-6")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 1.0, f"runtime {elapsed:.2f}s < 1s")
    criterion.finish()


@pytest.mark.criterion(3, "Otsu exhaustive oracle")
def test_otsu_oracle(criterion):
    rng = np.random.default_rng(2024)
    images = []
    for k in range(200):
        shape = k % 4
        if shape == 0:
            img = rng.random((64, 64))
        elif shape == 1:
            img = rng.random((64, 64)) ** rng.uniform(0.2, 5.0)
        elif shape == 2:
            lo, hi = np.sort(rng.random(2))
            img = np.where(rng.random((64, 64)) < rng.uniform(0.1, 0.9), lo, hi)
            img = np.clip(img + rng.normal(0, 0.05, img.shape), 0, 1)
        else:
            levels = rng.choice(256, size=rng.integers(2, 6), replace=False) / 256
            img = rng.choice(levels, size=(64, 64))
        images.append(img)
    expected = [otsu_oracle(img) for img in images]
    start = time.perf_counter()
    got = [otsu_threshold(img) for img in images]
    elapsed = time.perf_counter() - start
    mismatches = sum(a != b for a, b in zip(got, expected))
    criterion.check(mismatches == 0, f"{mismatches}/200 images disagree with the oracle")
    criterion.check(elapsed < 5.0, f"runtime {elapsed:.2f}s < 5s")
    criterion.finish()


@pytest.mark.criterion(4, "filtering")
def test_filtering(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    dx = 0.1
    dt = dx * dx / 4
    f = ScalarField(rng.random((128, 128)), dx)
    total, lo, hi = f.values.sum(), f.values.min(), f.values.max()
    worst_sum = worst_pm = 0.0
    bounded = True
    for _ in range(100):
        nxt = heat_step(f, dt)
        worst_pm = max(worst_pm, np.max(np.abs(pm_step(f, dt, 1e6).values - nxt.values)))
        f = nxt
        worst_sum = max(worst_sum, abs(f.values.sum() - total) / abs(total))
        bounded &= bool(f.values.min() >= lo and f.values.max() <= hi)
    criterion.check(worst_sum <= 1e-9, f"relative sum drift {worst_sum:.1e} <= 1e-9")
    criterion.check(bounded, "min/max bounds kept over 100 steps")
    criterion.check(worst_pm <= 1e-8, f"PM(mu=1e6) vs heat {worst_pm:.1e} <= 1e-8")
    try:
        heat_step(f, dt * 1.01)
        raised = False
    except CflViolation:
        raised = True
    criterion.check(raised, "CflViolation above dx^2/4")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 5.0, f"runtime {elapsed:.2f}s < 5s")
    criterion.finish()


@pytest.mark.criterion(5, "eikonal benchmark")
def test_eikonal(criterion):
    start = time.perf_counter()
    dx, r0 = 0.1, 6.0
    center = (199 * dx / 2, 199 * dx / 2)
    g = np.ones((200, 200))
    for name, dt, step in (("FD1", dx / 4, lambda s: fd1_step(s, g, dx / 4)),
                           ("SL1", dx, lambda s: sl1_step(s, g, dx))):
        s = circle_state(n=200, dx=dx, radius=r0)
        for target in (1, 2, 3):
            while s.n < round(target / dt):
                s = step(s)
            err = abs(mean_zero_radius(s, center) - (r0 - s.t))
            criterion.check(err <= 1.5 * dx, f"{name} t={target}: |R-(R0-t)| = {err:.3f}")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 60.0, f"runtime {elapsed:.1f}s < 60s")
    criterion.finish()


@pytest.mark.criterion(6, "scheme degeneracy")
def test_scheme_degeneracy(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    same_fd = same_sl = 0
    for _ in range(50):
        shape = tuple(rng.integers(8, 40, size=2))
        s = FrontState(ScalarField(rng.normal(size=shape), 0.1), eps_front=0.1)
        g = rng.random(shape)
        same_fd += np.array_equal(fd2_step(s, g, 0.01, 0.0).v.values, fd1_step(s, g, 0.01).v.values)
        same_sl += np.array_equal(sl2_step(s, g, 0.1, 0.0).v.values, sl1_step(s, g, 0.1).v.values)
    criterion.check(same_fd == 50, f"fd2(nu=0) == fd1 on {same_fd}/50")
    criterion.check(same_sl == 50, f"sl2(nu=0) == sl1 on {same_sl}/50")
    drift = 0.0
    for value in (-1.3, 0.0, 0.25, 7.0):
        c = FrontState(ScalarField(np.full((16, 16), value), 0.1), eps_front=0.1)
        ones = np.ones((16, 16))
        drift = max(drift,
                    np.max(np.abs(fd2_step(c, ones, 0.01, 0.5, degenerate="centered").v.values - value)),
                    np.max(np.abs(sl2_step(c, ones, 0.1, 0.5, degenerate="centered").v.values - value)))
    criterion.check(drift <= 1e-12, f"centered branch constant drift {drift:.1e}")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 10.0, f"runtime {elapsed:.2f}s < 10s")
    criterion.finish()


@pytest.mark.slow
@pytest.mark.criterion(7, "end-to-end phantom")
def test_end_to_end_phantom(criterion, tmp_path):
    start = time.perf_counter()
    spec = three_source_phantom()
    phantom = write_phantom(tmp_path / "e2e.json", spec)
    report, seg = execute(parse_config(["--phantom", str(phantom), "--out", str(tmp_path / "e2e")]))
    elapsed = time.perf_counter() - start
    catalog = json.loads((tmp_path / "e2e" / "catalog.json").read_text())
    criterion.check(report["status"] == "converged", f"status {report['status']}")
    criterion.check(len(catalog) == 3, f"{len(catalog)} objects == 3")
    _, truth = generate(spec)
    for src, mask in zip(spec.sources, truth):
        best = max((iou(seg.catalog.labels == o["label"], mask) for o in catalog), default=0.0)
        criterion.check(best >= 0.8, f"IoU(A={src.amplitude}) = {best:.3f} >= 0.8")
    criterion.check(elapsed < 120.0, f"runtime {elapsed:.1f}s < 120s")
    criterion.finish()


@pytest.mark.slow
@pytest.mark.criterion(8, "rescaling necessity")
def test_rescaling_necessity(criterion, tmp_path):
    start = time.perf_counter()
    base = three_source_phantom()
    spec = base.scaled(0.02 / max(s.amplitude for s in base.sources))
    for scheme in ("fd1", "sl1"):
        counts = {}
        for kind in ("none", "r3"):
            _, out = run_cli(tmp_path, f"{scheme}_{kind}", spec, "--scheme", scheme, "--rescale", kind)
            counts[kind] = json.loads((out / "report.json").read_text())["objects"]
        criterion.check(counts["none"] < counts["r3"],
                        f"{scheme}: {counts['none']} objects without rescaling < {counts['r3']} with r3")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 240.0, f"runtime {elapsed:.1f}s < 240s")
    criterion.finish()


@pytest.mark.criterion(9, "FITS")
def test_fits(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(9)
    exact = 0
    lengths_ok = True
    for _ in range(100):
        shape = tuple(rng.integers(1, 90, size=2))
        data = (rng.normal(size=shape) * 10.0 ** rng.integers(-20, 20)).astype(np.float32)
        blob = write_fits(data)
        lengths_ok &= len(blob) % 2880 == 0
        back = read_fits(blob).data
        exact += back.astype(np.float32).tobytes() == data.tobytes()
    criterion.check(exact == 100, f"{exact}/100 float32 round trips bit-exact")
    criterion.check(lengths_ok, "every written file is a multiple of 2880 bytes")
    blob = build(simple_header(16, 3, 2, "BZERO   =                32768"),
                 struct.pack(">6h", -3, 0, 1, -32768, 32767, 7))
    decoded = read_fits(blob).data.tolist()
    criterion.check(decoded == [[32765.0, 32768.0, 32769.0], [0.0, 65535.0, 32775.0]],
                    "BITPIX=16/BZERO=32768 decodes to the hand-computed values")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 5.0, f"runtime {elapsed:.2f}s < 5s")
    criterion.finish()


@pytest.mark.criterion(10, "stopping criterion")
def test_stopping(criterion):
    start = time.perf_counter()
    s = circle_state(n=60, radius=2.0)
    for scheme in ("fd1", "fd2", "sl1", "sl2"):
        res = evolve(s, np.zeros(s.v.shape), LevelSetConfig(scheme=scheme))
        criterion.check(res.status == "converged" and res.final.n == 1,
                        f"{scheme} g=0: {res.status} after {res.final.n} step(s)")
    far = FrontState(ScalarField(np.full((30, 30), 3.0), 0.1), eps_front=0.1)
    res = evolve(far, np.ones((30, 30)), LevelSetConfig())
    criterion.check(res.status == "front_vanished", f"front-free field: {res.status}")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 1.0, f"runtime {elapsed:.2f}s < 1s")
    criterion.finish()


@pytest.mark.slow
@pytest.mark.criterion(11, "determinism")
def test_determinism(criterion, tmp_path):
    start = time.perf_counter()
    spec = three_source_phantom()
    snapshots = []
    for _ in range(2):
        _, out = run_cli(tmp_path, "det", spec)
        report = json.loads((out / "report.json").read_text())
        report.pop("timestamp")
        snapshots.append(((out / "catalog.json").read_bytes(), json.dumps(report, sort_keys=True)))
    criterion.check(snapshots[0][0] == snapshots[1][0], "catalog.json byte-identical")
    criterion.check(snapshots[0][1] == snapshots[1][1], "report.json identical apart from the timestamp")
    elapsed = time.perf_counter() - start
    criterion.check(elapsed < 240.0, f"runtime {elapsed:.1f}s < 240s")
    criterion.finish()
