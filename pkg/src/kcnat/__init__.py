"""Kurtosis concentration of natural images.

Wavelet-subband kurtosis analysis, the KC loss with its exact gradient,
Gaussian-scale-mixture checks, wavelet noise estimation and a KC denoiser.
"""

__version__ = "0.1.0"

from .denoise import DenoiseConfig, DenoiseTrace, denoise, psnr
from .estimators import KCDenoiser, KurtosisConcentration, WaveletNoiseEstimator
from .gsm import (GsmSpec, gsm_texture, sample_gsm,
                  theoretical_projection_kurtosis, verify_lemma1, verify_lemma2)
from .image import load_pgm, load_raw_f32, save_pgm, save_raw_f32, to_grayscale_normalized
from .kc import dataset_kc_summary, kc_loss, kc_report, reconstruction_loss
from .stats import estimate_noise_sigma, kurtosis, kurtosis_gradient, moments, snr
from .wavelet import FilterBank, FilterKernel, decompose, dwt2_adjoint, dwt2_forward, get_kernel

__all__ = [
    "DenoiseConfig", "DenoiseTrace", "denoise", "psnr",
    "KCDenoiser", "KurtosisConcentration", "WaveletNoiseEstimator",
    "GsmSpec", "gsm_texture", "sample_gsm", "theoretical_projection_kurtosis",
    "verify_lemma1", "verify_lemma2",
    "load_pgm", "load_raw_f32", "save_pgm", "save_raw_f32", "to_grayscale_normalized",
    "dataset_kc_summary", "kc_loss", "kc_report", "reconstruction_loss",
    "estimate_noise_sigma", "kurtosis", "kurtosis_gradient", "moments", "snr",
    "FilterBank", "FilterKernel", "decompose", "dwt2_adjoint", "dwt2_forward", "get_kernel",
]
