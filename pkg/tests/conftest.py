"""Shared fixtures: natural-image corpus, synthetic planes, and a summary
hook that prints one line per acceptance criterion at the end of the run."""

import re

import numpy as np
import pytest
from skimage import data as skdata

import ilc

NATURAL_NAMES = (
    "camera", "coins", "moon", "text", "page", "brick", "grass",
    "gravel", "cell", "astronaut", "coffee", "chelsea", "rocket",
)


def _luma(img):
    if img.ndim == 3:
        img = 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
    return img.astype(np.uint16)


def _center_crop(img, size):
    h, w = img.shape
    y0, x0 = (h - size) // 2, (w - size) // 2
    return img[y0:y0 + size, x0:x0 + size].copy()


@pytest.fixture(scope="session")
def natural_corpus():
    """13 grayscale 128x128 crops of bundled photographs."""
    planes = [ilc.Plane(_center_crop(_luma(getattr(skdata, n)()), 128))
              for n in NATURAL_NAMES]
    return ilc.Corpus(planes, list(NATURAL_NAMES))


@pytest.fixture(scope="session")
def natural_report(natural_corpus):
    """One full benchmark over the natural corpus, shared by the
    trend/mode/size/timing criteria."""
    return ilc.run_benchmark(natural_corpus)


def _ar_texture(rng, size, vmax=255):
    """Smooth autoregressive texture: each pixel leans on its causal
    neighbors plus noise, which gives every directional mode work to do."""
    img = np.empty((size, size), np.int64)
    img[0, :] = rng.integers(vmax // 3, 2 * vmax // 3, size)
    img[:, 0] = rng.integers(vmax // 3, 2 * vmax // 3, size)
    for y in range(1, size):
        row_prev = img[y - 1]
        for x in range(1, size):
            base = (2 * img[y, x - 1] + row_prev[x] + row_prev[x - 1]) // 4
            img[y, x] = base + rng.integers(-5, 6)
    return np.clip(img, 0, vmax).astype(np.uint16)


@pytest.fixture(scope="session")
def textured_plane():
    return ilc.Plane(_ar_texture(np.random.default_rng(42), 64))


@pytest.fixture(scope="session")
def textured_corpus():
    rng = np.random.default_rng(7)
    planes = [ilc.Plane(_ar_texture(rng, 48)) for _ in range(3)]
    return ilc.Corpus(planes, ["tex0", "tex1", "tex2"])


@pytest.fixture(scope="session")
def synthetic_planes():
    """(label, Plane) pairs covering constants, ramps, noise and odd sizes."""
    rng = np.random.default_rng(2024)
    ramp = np.arange(64, dtype=np.uint16)
    pairs = [
        ("constant_mid", ilc.Plane(np.full((64, 64), 128, np.uint16))),
        ("constant_zero", ilc.Plane(np.zeros((32, 32), np.uint16))),
        ("ramp_h", ilc.Plane(np.tile(ramp * 4, (64, 1)))),
        ("ramp_v", ilc.Plane(np.tile((ramp * 4)[:, None], (1, 64)))),
        ("ramp_diag", ilc.Plane(
            ((ramp[None, :] + ramp[:, None]) * 2).astype(np.uint16))),
        ("noise8", ilc.Plane(
            rng.integers(0, 256, (64, 64)).astype(np.uint16))),
        ("noise10", ilc.Plane(
            rng.integers(0, 1024, (32, 32)).astype(np.uint16), 10)),
        ("odd_size", ilc.Plane(
            rng.integers(0, 256, (37, 53)).astype(np.uint16))),
        ("stripes", ilc.Plane(
            np.tile(np.array([40, 200], np.uint16), (32, 16)))),
        ("texture", ilc.Plane(_ar_texture(np.random.default_rng(5), 48))),
    ]
    return pairs


# ---------------------------------------------------------------------------
# Acceptance criterion reporting
# ---------------------------------------------------------------------------

_CRITERION_RE = re.compile(r"test_criterion_(\d+)")
_criterion_desc = {}
_criterion_outcome = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = _CRITERION_RE.search(item.name)
        if m:
            doc = (item.function.__doc__ or "").strip().splitlines()
            _criterion_desc[int(m.group(1))] = doc[0] if doc else item.name


def pytest_runtest_logreport(report):
    m = _CRITERION_RE.search(report.nodeid)
    if not m:
        return
    num = int(m.group(1))
    if report.when == "call":
        _criterion_outcome[num] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and not report.passed:
        _criterion_outcome[num] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criterion_outcome:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(_criterion_outcome):
        desc = _criterion_desc.get(num, "")
        terminalreporter.write_line(
            f"criterion {num:2d}: {_criterion_outcome[num]}  {desc}"
        )
