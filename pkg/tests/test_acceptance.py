"""Acceptance suite: one test per criterion, each reporting a single verdict line."""

import os
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, central_difference
from kcnat.denoise import DenoiseConfig, denoise, psnr
from kcnat.gsm import GsmSpec, corrupt_subband, gsm_texture, verify_lemma1, verify_lemma2
from kcnat.image import save_pgm, save_raw_f32
from kcnat.kc import dataset_kc_summary, kc_loss, kc_report
from kcnat.stats import estimate_noise_sigma, kurtosis, kurtosis_gradient
from kcnat.wavelet import dwt2_adjoint, dwt2_forward, get_kernel

pytestmark = pytest.mark.acceptance


def verdict(tag, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def rel_err(analytic, numeric):
    return float(np.max(np.abs(analytic - numeric)) / np.max(np.abs(numeric)))


def two_scale(noise_sigma2=0.0):
    return GsmSpec(8, (0.5, 1.5), (0.5, 0.5), noise_sigma2=noise_sigma2)


def test_criterion_1_lemma1():
    t0 = time.perf_counter()
    rec = verify_lemma1(two_scale(), 10 ** 6, 10, seed=0, tolerance=0.05)
    elapsed = time.perf_counter() - t0
    ok = rec.max_abs_error <= 0.05 and rec.spread < 0.05 and elapsed < 30
    verdict(1, ok, f"theory={rec.theory:.4f} max|err|={rec.max_abs_error:.4f} "
                   f"spread={rec.spread:.4f} time={elapsed:.1f}s")


def test_criterion_2_lemma2():
    t0 = time.perf_counter()
    parts, ok = [], True
    for s2 in (0.25, 1.0, 4.0):
        rec = verify_lemma2(two_scale(s2), 10 ** 6, seed=0, tolerance=0.1)
        ok &= rec.relative_error < 0.1
        parts.append(f"s2={s2}: pred={rec.predicted:.4f} emp={rec.empirical_mean:.4f} "
                     f"rel={rec.relative_error:.3f}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    verdict(2, ok, "; ".join(parts) + f"; time={elapsed:.1f}s")


def test_criterion_3_gradients():
    t0 = time.perf_counter()
    worst_vec = worst_pipe = 0.0
    for seed in range(20):
        img = np.random.default_rng(seed).standard_normal((32, 32))
        worst_vec = max(worst_vec, rel_err(kurtosis_gradient(img.ravel()),
                                           central_difference(kurtosis, img.ravel())))
        worst_pipe = max(worst_pipe, rel_err(
            kc_loss(img).gradient,
            central_difference(lambda x: kc_report(x).deviation, img)))
    elapsed = time.perf_counter() - t0
    ok = worst_vec < 1e-5 and worst_pipe < 1e-4 and elapsed < 60
    verdict(3, ok, f"vector rel={worst_vec:.2e} pipeline rel={worst_pipe:.2e} "
                   f"time={elapsed:.1f}s")


def test_criterion_4_dwt_exactness():
    # integer pixels keep the hand arithmetic exact in floating point
    haar_ok = True
    for a, b, c, d in [(1, 2, 3, 4), (0, 255, 128, 64), (7, -3, 12, 5)]:
        p = dwt2_forward(np.array([[a, b], [c, d]], dtype=float), get_kernel("haar"))
        haar_ok &= bool(p.LL[0, 0] == (a + b + c + d) / 2 and p.HL[0, 0] == (a - b + c - d) / 2
                        and p.LH[0, 0] == (a + b - c - d) / 2
                        and p.HH[0, 0] == (a - b - c + d) / 2)
    worst_parseval = worst_adjoint = 0.0
    for name in ("haar", "db2", "db3", "db4"):
        k = get_kernel(name)
        for seed in range(100):
            r = np.random.default_rng(seed)
            x = r.standard_normal((32, 32))
            planes = dwt2_forward(x, k)
            e_in = np.sum(x ** 2)
            worst_parseval = max(worst_parseval,
                                 abs(sum(np.sum(q ** 2) for q in planes) - e_in) / e_in)
            cs = [r.standard_normal((16, 16)) for _ in range(4)]
            lhs = sum(np.sum(q * cc) for q, cc in zip(planes, cs))
            rhs = np.sum(x * dwt2_adjoint(cs, k, 32, 32))
            worst_adjoint = max(worst_adjoint, abs(lhs - rhs) / abs(lhs))
    ok = haar_ok and worst_parseval < 1e-8 and worst_adjoint < 1e-10
    verdict(4, ok, f"haar exact={haar_ok} parseval rel={worst_parseval:.1e} "
                   f"adjoint rel={worst_adjoint:.1e}")


@pytest.fixture(scope="module")
def denoise_runs():
    t0 = time.perf_counter()
    runs = []
    for seed in range(20):
        clean = gsm_texture((128, 128), seed=seed)
        noisy = clean + np.random.default_rng(10_000 + seed).normal(0, 0.1, clean.shape)
        trace = denoise(noisy, DenoiseConfig(max_iters=400), ground_truth=clean)
        runs.append((psnr(noisy, clean), trace.final.psnr,
                     trace.initial.deviation, trace.final.deviation))
    return runs, time.perf_counter() - t0


def test_criterion_5a_psnr_improves(denoise_runs):
    runs, elapsed = denoise_runs
    wins = sum(after > before for before, after, _, _ in runs)
    mean_delta = np.mean([after - before for before, after, _, _ in runs])
    verdict("5a", wins >= 18 and elapsed < 300,
            f"PSNR improved on {wins}/20 (need >=18), mean change {mean_delta:+.4f} dB, "
            f"time={elapsed:.0f}s")


def test_criterion_5b_deviation_not_increased(denoise_runs):
    runs, elapsed = denoise_runs
    held = sum(final <= initial for _, _, initial, final in runs)
    mean_init = np.mean([r[2] for r in runs])
    mean_final = np.mean([r[3] for r in runs])
    verdict("5b", held == 20 and elapsed < 300,
            f"final deviation <= initial on {held}/20 "
            f"(mean {mean_init:.3f} -> {mean_final:.3f}), time={elapsed:.0f}s")


def test_criterion_6_noise_estimator():
    sigmas = (0.02, 0.05, 0.1, 0.2)
    worst, monotone = 0.0, True
    for seed in range(10):
        est = []
        for i, s in enumerate(sigmas):
            img = np.random.default_rng([seed, i]).normal(0, s, (256, 256))
            est.append(estimate_noise_sigma(img).sigma)
            worst = max(worst, abs(est[-1] - s) / s)
        monotone &= all(x < y for x, y in zip(est, est[1:]))
    verdict(6, worst < 0.05 and monotone,
            f"worst relative error {worst:.4f} (need <0.05), monotone={monotone}")


def test_criterion_7_spread_separation():
    clean, corrupted = [], []
    for seed in range(100):
        img = gsm_texture((128, 128), seed=seed)
        clean.append(img)
        noisy = img + np.random.default_rng(20_000 + seed).normal(0, 0.05, img.shape)
        corrupted.append(corrupt_subband(noisy, seed=30_000 + seed)[0])
    mean_clean = dataset_kc_summary(clean).mean_deviation
    mean_corrupt = dataset_kc_summary(corrupted).mean_deviation
    gauss = dataset_kc_summary(
        [np.random.default_rng(40_000 + s).standard_normal((256, 256)) for s in range(100)])
    ok = mean_clean < mean_corrupt and gauss.mean_deviation < 0.3
    verdict(7, ok, f"GSM mean deviation {mean_clean:.3f} < corrupted {mean_corrupt:.3f}; "
                   f"Gaussian mean deviation {gauss.mean_deviation:.3f} (need <0.3)")


def test_criterion_8_cli_determinism(tmp_path):
    r = np.random.default_rng(0)
    save_pgm(tmp_path / "a.pgm", np.clip(r.normal(0.5, 0.1, (64, 64)), 0, 1))
    clean = gsm_texture((64, 64), seed=1)
    save_raw_f32(tmp_path / "clean.f32", clean)
    save_raw_f32(tmp_path / "noisy.f32", clean + r.normal(0, 0.1, clean.shape))
    (tmp_path / "spec.json").write_text(
        '{"dimension": 8, "mixing": {"values": [0.5, 1.5], "probs": [0.5, 0.5]}, '
        '"covariance": "identity", "noise_sigma2": 1.0}')
    commands = {
        "analyze": ["analyze", "a.pgm", "noisy.f32", "--shape", "64x64", "--seed", "7"],
        "verify-1": ["verify", "--lemma", "1", "--spec", "spec.json", "--samples", "100000",
                     "--seed", "7"],
        "verify-2": ["verify", "--lemma", "2", "--spec", "spec.json", "--samples", "100000",
                     "--seed", "7"],
        "noise": ["noise", "a.pgm", "--seed", "7"],
        "denoise": ["denoise", "noisy.f32", "--shape", "64x64", "-o", "out.f32",
                    "--ground-truth", "clean.f32", "--max-iters", "40", "--seed", "7"],
        "loss": ["loss", "a.pgm", "--seed", "7"],
    }
    env = {**os.environ, "PYTHONHASHSEED": "random"}
    differing = []
    for name, argv in commands.items():
        outs = [subprocess.run([sys.executable, "-m", "kcnat", *argv], cwd=tmp_path,
                               capture_output=True, env=env) for _ in range(2)]
        same = (outs[0].stdout == outs[1].stdout
                and outs[0].returncode == outs[1].returncode)
        if not same or not outs[0].stdout:
            differing.append(name)
    verdict(8, not differing,
            f"{len(commands) - len(differing)}/{len(commands)} commands byte-identical"
            + (f" (differ: {', '.join(differing)})" if differing else ""))
