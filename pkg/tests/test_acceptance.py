"""Acceptance criteria, one pass/fail line each.

Under pytest the lines are printed together at the end of the run; run
``python3 tests/test_acceptance.py`` to print them as each check finishes.
"""

from __future__ import annotations

import math
import os
import shutil
import sys
import tempfile
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from tdaharq.channel import ChannelSpec, power_normalize, rayleigh_gain, realized_snr_db, slot_rng, transmit
from tdaharq.cli import ExperimentConfig, run_calibrate, run_extract, run_sweep
from tdaharq.codec import CodecBudget, DctCodec
from tdaharq.cubical import compute_persistence
from tdaharq.detector import calibrate
from tdaharq.filtration import FiltrationMap, default_filtrations, grayscale_filtration
from tdaharq.harq import HarqConfig, combine, run_session
from tdaharq.imageio import binarize
from tdaharq.oracles import betti_mismatches, bottleneck_distance
from tdaharq.synthetic import synthetic_corpus, write_corpus
from tdaharq.tda import FULL_FEATURES, SELECTED_FEATURES, TdaEncoder

ENCODER = TdaEncoder()
BUDGET = CodecBudget.from_rate(32, 32, 1 / 3)


@lru_cache(maxsize=None)
def calibration():
    corpus = synthetic_corpus(60, seed=2024)
    features = np.array([ENCODER.features(img) for img in corpus])
    model = calibrate(corpus, BUDGET, ChannelSpec("awgn", 10.0, seed=2024), encoder=ENCODER,
                      codec=DctCodec(), features=features)
    return corpus, features, model


# lines collected here are printed by the terminal-summary hook in conftest.py
REPORT_LINES: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'} | {title} | {detail}"
    REPORT_LINES.append(line)
    if __name__ == "__main__":
        print(line, flush=True)
    assert ok, line


# 1 -----------------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    ok, notes = True, []
    for g in ((0.0, 1.0, 2.0, 3.0), (12.0, 40.5, 77.0, 201.25)):
        # corners g(0), edge midpoints g(1), centre g(3)
        grid = np.array([[g[0], g[1], g[0]], [g[1], g[3], g[1]], [g[0], g[1], g[0]]])
        pd = compute_persistence(grayscale_filtration(grid))
        h1 = pd.sorted_intervals(1)
        h0 = pd.sorted_intervals(0)
        ok &= h1 == [(g[1], g[3], False)]
        ok &= h0 == [(g[0], g[1], False)] * 3 + [(g[0], g[3], True)]
        ok &= pd.betti(0, g[0]) == 4 and pd.betti(0, g[0] - 1e-9) == 0 and pd.betti(0, g[1]) == 1
        notes.append(f"H1={h1}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    return ok, f"{'; '.join(notes)}; {elapsed * 1e3:.1f} ms"


# 2 -----------------------------------------------------------------------------

def _filtrations_of_mask(mask, gray):
    return [grayscale_filtration(gray)] + default_filtrations(mask)


def criterion_2():
    t0 = time.perf_counter()
    checked, mismatches = 0, 0
    for bits in range(512):
        mask = np.array([(bits >> i) & 1 for i in range(9)], bool).reshape(3, 3)
        for fm in _filtrations_of_mask(mask, mask * 255.0):
            mismatches += len(betti_mismatches(fm, compute_persistence(fm)))
            checked += 1
    rng = np.random.default_rng(2)
    for _ in range(500):
        gray = rng.uniform(0, 255, (4, 4))
        for fm in _filtrations_of_mask(binarize(gray, 128), gray):
            mismatches += len(betti_mismatches(fm, compute_persistence(fm)))
            checked += 1
    elapsed = time.perf_counter() - t0
    return mismatches == 0 and elapsed < 60, f"{checked} diagrams, {mismatches} mismatched levels, {elapsed:.1f} s"


# 3 -----------------------------------------------------------------------------

def criterion_3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = -math.inf
    for _ in range(200):
        f = rng.uniform(0, 10, (8, 8))
        pd_f = compute_persistence(FiltrationMap(f, f.max()))
        for eps in (0.5, 1.0, 2.0):
            delta = rng.uniform(-eps, eps, f.shape)
            delta.flat[rng.integers(f.size)] = eps * rng.choice([-1, 1])
            g = f + delta
            pd_g = compute_persistence(FiltrationMap(g, g.max()))
            for q in (0, 1):
                worst = max(worst, bottleneck_distance(pd_f, pd_g, q) - eps)
    elapsed = time.perf_counter() - t0
    return worst <= 1e-9 and elapsed < 120, f"max(d_B - eps) = {worst:.3g}, {elapsed:.1f} s"


# 4 -----------------------------------------------------------------------------

def criterion_4():
    corpus, features, model = calibration()
    n_full = ENCODER.encode(corpus[0]).values.size
    sub = model.mask.apply(features)
    corr = np.abs(np.corrcoef(sub, rowvar=False))
    worst = corr[~np.eye(len(model.mask), dtype=bool)].max()
    ok = n_full == FULL_FEATURES == 476 and len(model.mask) == SELECTED_FEATURES == 28
    ok &= len(set(model.mask.indices)) == 28 and worst <= model.mask.bound + 1e-12
    return ok, f"{n_full} features, {len(model.mask)} selected, max |corr| {worst:.4f} <= bound {model.mask.bound:.4f}"


# 5 -----------------------------------------------------------------------------

def criterion_5():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(10_000):
        k = int(rng.integers(1, 256))
        scale = 10.0 ** rng.uniform(-6, 6)
        x = scale * (rng.normal(size=k) + 1j * rng.normal(size=k))
        y = power_normalize(x)
        worst = max(worst, abs(np.sum(np.abs(y) ** 2) - k) / k)
    return worst <= 1e-12, f"max relative error {worst:.2e} over 10^4 blocks"


# 6 -----------------------------------------------------------------------------

def criterion_6():
    rng = np.random.default_rng(6)
    n = 10 ** 6
    y = power_normalize(rng.normal(size=n) + 1j * rng.normal(size=n))
    errors = []
    for i, snr in enumerate((0.0, 3.0, 10.0, 20.0)):
        out, _ = transmit(y, ChannelSpec("awgn", snr), slot_rng(6, i))
        errors.append(abs(realized_snr_db(y, out - y) - snr))
    gains = np.abs([rayleigh_gain(slot_rng(66, i)) for i in range(10 ** 5)])
    p = stats.kstest(gains, stats.rayleigh(scale=1 / math.sqrt(2)).cdf).pvalue
    ok = max(errors) < 0.1 and p > 0.01
    return ok, f"max SNR error {max(errors):.4f} dB; Rayleigh KS p = {p:.3f}"


# 7 -----------------------------------------------------------------------------

def criterion_7():
    rng = np.random.default_rng(7)
    n = 10 ** 5
    y = power_normalize(rng.normal(size=n) + 1j * rng.normal(size=n))
    spec = ChannelSpec("awgn", 3.0)
    buffer, ratios = [], []
    for j in (1, 2, 3):
        buffer.append(transmit(y, spec, slot_rng(7, j)))
        residual = combine(buffer) - y
        ratios.append(np.mean(np.abs(residual) ** 2) / (spec.noise_variance / j))
    var_ok = all(abs(r - 1) <= 0.05 for r in ratios)

    _, _, model = calibration()
    corpus = synthetic_corpus(200, seed=77)
    cfg = HarqConfig(ChannelSpec("awgn", 3.0, seed=77), BUDGET, n_max=3, chi=-1.0)
    psnrs = np.array([run_session(img, cfg, model, encoder=ENCODER, key=(i,)).psnr for i, img in enumerate(corpus)])
    means = psnrs.mean(axis=0)
    psnr_ok = bool(np.all(np.diff(means) >= 0))
    return var_ok and psnr_ok, (f"residual/(sigma^2/j) = {', '.join(f'{r:.4f}' for r in ratios)}; "
                                f"mean PSNR by attempt = {', '.join(f'{m:.2f}' for m in means)} dB")


# 8 -----------------------------------------------------------------------------

def criterion_8():
    _, _, model = calibration()
    corpus = synthetic_corpus(30, seed=88)
    attempts = {"calibrated": [], "inf": [], "neg": []}
    for i, img in enumerate(corpus):
        for snr in (0.0, 10.0):
            for kind in ("awgn", "rayleigh"):
                spec = ChannelSpec(kind, snr, seed=88)
                feats = ENCODER.features(img)
                for label, chi in (("calibrated", None), ("inf", math.inf), ("neg", -1.0)):
                    res = run_session(img, HarqConfig(spec, BUDGET, 3, chi), model, encoder=ENCODER,
                                      key=(i,), features=feats)
                    attempts[label].append(res.attempts)
    ok = max(attempts["calibrated"]) <= 3 and set(attempts["inf"]) == {1} and set(attempts["neg"]) == {3}
    return ok, (f"{len(attempts['calibrated'])} sessions: max attempts {max(attempts['calibrated'])}; "
                f"chi=inf -> {sorted(set(attempts['inf']))}; chi=-1 -> {sorted(set(attempts['neg']))}")


# 9 -----------------------------------------------------------------------------

def criterion_9():
    _, _, model = calibration()
    corpus = synthetic_corpus(50, seed=99)
    snrs = (0.0, 3.0, 10.0, 20.0)
    xs, ds = [], []
    for i, img in enumerate(corpus):
        feats = ENCODER.features(img)
        for snr in snrs:
            cfg = HarqConfig(ChannelSpec("awgn", snr, seed=99), BUDGET, n_max=1, chi=math.inf)
            res = run_session(img, cfg, model, encoder=ENCODER, key=(i,), features=feats)
            xs.append(snr)
            ds.append(res.distance[0])
    xs, ds = np.array(xs), np.array(ds)
    means = [ds[xs == s].mean() for s in snrs]
    tau, p = stats.kendalltau(xs, ds, alternative="less")
    var = float(np.var(ds))
    ok = all(a > b for a, b in zip(means, means[1:])) and p < 0.01 and var > 1e-4
    return ok, (f"mean distance {', '.join(f'{m:.3f}' for m in means)} at {snrs} dB; "
                f"Kendall tau {tau:.3f}, p = {p:.2e}; variance {var:.3f}")


# 10 ----------------------------------------------------------------------------

def criterion_10():
    img = synthetic_corpus(1, seed=10)[0]
    ENCODER.features(img)
    times = []
    for _ in range(30):
        t0 = time.perf_counter()
        ENCODER.features(img)
        times.append(time.perf_counter() - t0)
    single = float(np.median(times))

    workers = os.cpu_count() or 1
    with tempfile.TemporaryDirectory() as tmp:
        write_corpus(Path(tmp) / "corpus", 1000, seed=10)
        cfg = ExperimentConfig(seed=10, corpus=str(Path(tmp) / "corpus"), out=str(Path(tmp) / "out"),
                               workers=workers)
        t0 = time.perf_counter()
        run_extract(cfg)
        batch = time.perf_counter() - t0
        rows = (Path(tmp) / "out/features.csv").read_text().count("\n") - 2
    ok = single < 0.050 and batch < 20.0 and rows == 1000
    return ok, f"one image {single * 1e3:.1f} ms (median of 30); 1000 images {batch:.1f} s with {workers} worker(s)"


# 11 ----------------------------------------------------------------------------

def criterion_11():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        write_corpus(tmp / "corpus", 50, seed=11)
        write_corpus(tmp / "small", 4, seed=12)
        out = tmp / "out"
        base = dict(seed=11, corpus=str(tmp / "corpus"), out=str(out), snr_db=(3.0, 10.0),
                    channels=("awgn", "rayleigh"), compression_dims=(16, 32))
        outputs = []
        # same config twice, the second time with a worker pool
        for workers in (1, 2):
            shutil.rmtree(out, ignore_errors=True)
            run_extract(ExperimentConfig(**base, workers=workers))
            run_calibrate(ExperimentConfig(**base, workers=workers))
            run_sweep(ExperimentConfig(**{**base, "corpus": str(tmp / "small")}, workers=workers))
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    names = sorted(outputs[0])
    same = outputs[0] == outputs[1]
    return same, f"{len(names)} files byte-identical across reruns: {', '.join(names)}"


CRITERIA = [
    (1, "worked 3x3 example", criterion_1),
    (2, "oracle equivalence", criterion_2),
    (3, "bottleneck stability", criterion_3),
    (4, "feature dimensionality", criterion_4),
    (5, "power constraint", criterion_5),
    (6, "channel calibration", criterion_6),
    (7, "HARQ combining gain", criterion_7),
    (8, "protocol bounds", criterion_8),
    (9, "detector responsiveness", criterion_9),
    (10, "performance budget", criterion_10),
    (11, "determinism", criterion_11),
]


@pytest.mark.parametrize("number, title, check", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_acceptance(number, title, check):
    try:
        ok, detail = check()
    except Exception as exc:
        ok, detail = False, f"raised {exc!r}"
    report(number, title, ok, detail)


if __name__ == "__main__":
    failures = 0
    for number, title, check in CRITERIA:
        try:
            report(number, title, *check())
        except AssertionError:
            failures += 1
    sys.exit(1 if failures else 0)
