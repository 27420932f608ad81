"""scikit-learn compatible wrappers.

``X`` is a batch of grayscale images: a single 2-D array, a 3-D stack, or a
list of 2-D arrays of possibly different sizes.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_image_batch, check_scalar
from .denoise import DenoiseConfig, denoise
from .exceptions import DegenerateVarianceError
from .kc import kc_report
from .stats import estimate_noise_sigma, kurtosis
from .wavelet import DEFAULT_KERNELS, FilterBank, FilterKernel, decompose, get_kernel


def _make_bank(kernels, include_ll):
    if isinstance(kernels, str):
        kernels = [k.strip() for k in kernels.split(",") if k.strip()]
    ks = tuple(k if isinstance(k, FilterKernel) else get_kernel(k) for k in kernels)
    return FilterBank(ks, bool(include_ll))


def _like_input(X, outputs):
    """Return outputs shaped like the input container."""
    if isinstance(X, np.ndarray):
        return outputs[0] if X.ndim == 2 else np.stack(outputs)
    return outputs


class KurtosisConcentration(TransformerMixin, BaseEstimator):
    """Map each image to the kurtosis of its wavelet subbands.

    Parameters
    ----------
    kernels : sequence of str or FilterKernel, default=("haar", "db2", "db3", "db4")
        Wavelet kernels, applied in order.
    include_ll : bool, default=False
        Whether the lowpass (LL) planes are included.

    Attributes
    ----------
    bank_ : FilterBank
    feature_names_ : list of str
        Subband identifiers such as ``"db2.HL"``, one per output column.

    Degenerate (constant) subbands produce NaN in :meth:`transform`.
    """

    def __init__(self, kernels=DEFAULT_KERNELS, include_ll=False):
        self.kernels = kernels
        self.include_ll = include_ll

    def fit(self, X=None, y=None):
        if X is not None:
            check_image_batch(X)
        self.bank_ = _make_bank(self.kernels, self.include_ll)
        self.feature_names_ = self.bank_.subband_ids()
        return self

    def transform(self, X):
        check_is_fitted(self, "bank_")
        rows = []
        for img in check_image_batch(X):
            row = []
            for _, _, plane in decompose(img, self.bank_).items(self.bank_.include_ll):
                try:
                    row.append(kurtosis(plane))
                except DegenerateVarianceError:
                    row.append(np.nan)
            rows.append(row)
        return np.array(rows)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "bank_")
        return np.array(self.feature_names_, dtype=object)

    def reports(self, X):
        check_is_fitted(self, "bank_")
        return [kc_report(img, self.bank_) for img in check_image_batch(X)]

    def deviation(self, X):
        """KC deviation (max - min subband kurtosis) of every image."""
        return np.array([r.deviation for r in self.reports(X)])


class KCDenoiser(TransformerMixin, BaseEstimator):
    """Denoise images by gradient descent on fidelity plus KC loss.

    The estimator is stateless: ``fit`` only validates hyperparameters.
    After ``transform`` the per-image optimization traces are kept in
    ``traces_``.
    """

    def __init__(self, lambda_kc=1.0, step_size=1e-2, max_iters=400,
                 fidelity_weight=1.0, kernels=DEFAULT_KERNELS, include_ll=False,
                 log_every=10, seed=0):
        self.lambda_kc = lambda_kc
        self.step_size = step_size
        self.max_iters = max_iters
        self.fidelity_weight = fidelity_weight
        self.kernels = kernels
        self.include_ll = include_ll
        self.log_every = log_every
        self.seed = seed

    def fit(self, X=None, y=None):
        self.config_ = DenoiseConfig(
            bank=_make_bank(self.kernels, self.include_ll), lambda_kc=self.lambda_kc,
            step_size=self.step_size, max_iters=self.max_iters,
            fidelity_weight=self.fidelity_weight, seed=self.seed,
            log_every=self.log_every)
        return self

    def transform(self, X, ground_truth=None):
        check_is_fitted(self, "config_")
        images = check_image_batch(X)
        refs = [None] * len(images) if ground_truth is None else check_image_batch(ground_truth)
        self.traces_ = [denoise(img, self.config_, ref) for img, ref in zip(images, refs)]
        return _like_input(X, [t.final_image for t in self.traces_])


class WaveletNoiseEstimator(BaseEstimator):
    """Predict the white-noise standard deviation of each image.

    Uses the median absolute Haar HH coefficient divided by ``mad_constant``.
    """

    def __init__(self, mad_constant=0.6745):
        self.mad_constant = mad_constant

    def fit(self, X=None, y=None):
        check_scalar(self.mad_constant, "mad_constant", min_val=0.0, include_min=False)
        self.fitted_ = True
        return self

    def predict(self, X):
        check_is_fitted(self, "fitted_")
        scale = 0.6745 / self.mad_constant
        return np.array([estimate_noise_sigma(img).sigma * scale
                         for img in check_image_batch(X)])
