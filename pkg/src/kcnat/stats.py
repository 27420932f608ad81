"""Sample moments, kurtosis and its gradient, SNR, and wavelet noise estimation.

All moments are population moments (divisor N).
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_image
from .exceptions import DegenerateVarianceError, NonFiniteError, ValidationError
from .wavelet import dwt2_forward, get_kernel

__all__ = ["MomentSummary", "NoiseEstimate", "moments", "kurtosis",
           "kurtosis_gradient", "snr", "estimate_noise_sigma",
           "MAD_TO_SIGMA", "DEGENERATE_REL_VAR"]

MAD_TO_SIGMA = 0.6745
# variance below this fraction of the mean square counts as degenerate
DEGENERATE_REL_VAR = 1e-12


@dataclass(frozen=True)
class MomentSummary:
    count: int
    mean: float
    variance: float
    fourth_central_moment: float


@dataclass(frozen=True)
class NoiseEstimate:
    sigma: float
    kernel_used: str = "haar"
    subband_used: str = "HH"


def moments(values):
    """Population mean, variance and fourth central moment."""
    c = np.asarray(values, dtype=np.float64).ravel()
    if c.size == 0:
        raise ValidationError("moments of an empty sequence")
    d = c - c.mean()
    d2 = d * d
    return MomentSummary(count=c.size, mean=float(c.mean()),
                         variance=float(d2.mean()),
                         fourth_central_moment=float((d2 * d2).mean()))


def _centered(values):
    c = np.asarray(values, dtype=np.float64).ravel()
    if c.size < 4:
        raise ValidationError(f"kurtosis needs at least 4 values, got {c.size}")
    if not np.all(np.isfinite(c)):
        raise NonFiniteError("kurtosis input contains non-finite values")
    with np.errstate(over="ignore", invalid="ignore"):
        d = c - c.mean()
        m2 = np.mean(d * d)
        m4 = np.mean((d * d) ** 2)
        m2_cubed = m2 * m2 * m2
    if not (np.isfinite(m2) and np.isfinite(m4) and np.isfinite(m2_cubed)):
        raise NonFiniteError("moments overflow float64")
    if not m2 > DEGENERATE_REL_VAR * np.mean(c * c):
        raise DegenerateVarianceError(
            f"variance {m2:.3g} is degenerate relative to mean square {np.mean(c * c):.3g}")
    return d, m2


def kurtosis(values):
    """Excess kurtosis ``mu4 / sigma**4 - 3`` (zero for a Gaussian).

    >>> kurtosis([1.0, -1.0, 1.0, -1.0])
    -2.0
    """
    d, m2 = _centered(values)
    d2 = d * d
    return float(np.mean(d2 * d2) / (m2 * m2) - 3.0)


def kurtosis_gradient(values):
    """Gradient of :func:`kurtosis` with respect to every input value.

    Writing ``d = c - mean(c)``, ``m2 = mean(d**2)``, ``m4 = mean(d**4)``::

        dk/dc_i = 4 / (N m2**2) * (d_i**3 - mean(d**3)) - 4 m4 / (N m2**3) * d_i

    The result is returned with the input's shape.
    """
    arr = np.asarray(values, dtype=np.float64)
    d, m2 = _centered(arr)
    n = d.size
    s = np.sqrt(m2)
    # standardized form keeps every term O(sqrt(n)) whatever the input scale
    u = d / s
    u3 = u * u * u
    grad = 4.0 / (n * s) * (u3 - u3.mean() - np.mean(u3 * u) * u)
    return grad.reshape(arr.shape)


def snr(signal_plus_noise_variance, noise_variance):
    """Ratio of observed variance to noise variance."""
    if not noise_variance > 0:
        raise ValidationError(f"noise variance must be positive, got {noise_variance}")
    return float(signal_plus_noise_variance) / float(noise_variance)


def estimate_noise_sigma(img):
    """Estimate white-noise sigma as ``median(|HH|) / 0.6745`` on one Haar level."""
    img = check_image(img)
    hh = dwt2_forward(img, get_kernel("haar")).HH
    return NoiseEstimate(sigma=float(np.median(np.abs(hh)) / MAD_TO_SIGMA))
