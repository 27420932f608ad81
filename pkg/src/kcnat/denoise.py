"""Gradient-descent denoising with the KC loss.

Minimizes ``fidelity_weight * mean((x - y)**2) + lambda_kc * KC(x)`` from the
noisy observation ``y`` with plain fixed-step gradient descent.
"""

import csv
from dataclasses import dataclass, field, asdict

import numpy as np

from ._validation import check_image, check_same_shape, check_scalar
from .exceptions import DivergenceError, NonFiniteError
from .kc import kc_loss, reconstruction_loss_gradient
from .wavelet import FilterBank

__all__ = ["DenoiseConfig", "TraceEntry", "DenoiseTrace", "denoise", "psnr",
           "image_snr", "PSNR_CAP"]

PSNR_CAP = 99.0


def psnr(candidate, reference, peak=1.0):
    """Peak signal-to-noise ratio in dB, capped at 99 for identical images."""
    candidate = check_image(candidate, name="candidate", min_size=1)
    reference = check_image(reference, name="reference", min_size=1)
    check_same_shape(candidate, reference)
    check_scalar(peak, "peak", min_val=0.0, include_min=False)
    mse = np.mean((candidate - reference) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * np.log10(peak * peak / mse)))


def image_snr(candidate, reference):
    """``var(candidate) / var(candidate - reference)``; inf when they match."""
    resid = np.var(np.asarray(candidate) - np.asarray(reference))
    if resid == 0:
        return float("inf")
    return float(np.var(candidate) / resid)


@dataclass(frozen=True)
class DenoiseConfig:
    bank: FilterBank = field(default_factory=FilterBank)
    lambda_kc: float = 1.0
    step_size: float = 1e-2
    max_iters: int = 400
    fidelity_weight: float = 1.0
    seed: int = 0
    log_every: int = 10

    def __post_init__(self):
        check_scalar(self.lambda_kc, "lambda_kc", min_val=0.0)
        check_scalar(self.step_size, "step_size", min_val=0.0, include_min=False)
        check_scalar(self.max_iters, "max_iters", int, min_val=1)
        check_scalar(self.fidelity_weight, "fidelity_weight", min_val=0.0)
        check_scalar(self.seed, "seed", int)
        check_scalar(self.log_every, "log_every", int, min_val=1)


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    objective: float
    kc_loss: float
    fidelity: float
    deviation: float
    snr: float = None
    psnr: float = None
    argmax_subband: str = None
    argmin_subband: str = None


@dataclass
class DenoiseTrace:
    entries: list
    final_image: np.ndarray = field(repr=False)

    @property
    def initial(self):
        return self.entries[0]

    @property
    def final(self):
        return self.entries[-1]

    def write_csv(self, path):
        cols = list(TraceEntry.__dataclass_fields__)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for e in self.entries:
                row = asdict(e)
                writer.writerow(["" if row[c] is None else
                                 (f"{row[c]:.9g}" if isinstance(row[c], float) else row[c])
                                 for c in cols])


def _evaluate(x, noisy, config, ground_truth, iteration):
    with np.errstate(over="ignore", invalid="ignore"):
        fidelity = float(np.mean((x - noisy) ** 2)) if np.all(np.isfinite(x)) else np.inf
    if not np.isfinite(fidelity):
        return None, None
    try:
        lg = kc_loss(x, config.bank)
    except NonFiniteError:
        return None, None
    objective = config.fidelity_weight * fidelity + config.lambda_kc * lg.loss
    snr = psnr_val = None
    if ground_truth is not None:
        snr = image_snr(x, ground_truth)
        psnr_val = psnr(x, ground_truth)
    entry = TraceEntry(iteration=iteration, objective=objective, kc_loss=lg.loss,
                       fidelity=fidelity, deviation=lg.loss, snr=snr, psnr=psnr_val,
                       argmax_subband=lg.argmax_subband, argmin_subband=lg.argmin_subband)
    return entry, lg


def denoise(noisy, config=None, ground_truth=None):
    """Run KC-regularized gradient descent starting from ``noisy``.

    Logs iteration 0, every ``log_every``-th iteration and the final one.
    Raises :class:`DivergenceError` (carrying the partial trace) as soon as
    the iterate or objective becomes non-finite.
    """
    config = DenoiseConfig() if config is None else config
    noisy = check_image(noisy, name="noisy")
    if ground_truth is not None:
        ground_truth = check_image(ground_truth, name="ground_truth")
        check_same_shape(noisy, ground_truth, ("noisy", "ground_truth"))

    x = noisy.copy()
    entries = []
    for it in range(config.max_iters + 1):
        entry, lg = _evaluate(x, noisy, config, ground_truth, it)
        if entry is None or not np.isfinite(entry.objective):
            raise DivergenceError(f"objective became non-finite at iteration {it}",
                                  iteration=it,
                                  trace=DenoiseTrace(entries=entries, final_image=x))
        if it % config.log_every == 0 or it == config.max_iters:
            entries.append(entry)
        if it == config.max_iters:
            break
        grad = (config.fidelity_weight * reconstruction_loss_gradient(x, noisy)
                + config.lambda_kc * lg.gradient)
        x = x - config.step_size * grad
    return DenoiseTrace(entries=entries, final_image=x)
