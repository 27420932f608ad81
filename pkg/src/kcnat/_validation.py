"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np

from .exceptions import NonFiniteError, ValidationError


def check_image(img, name="image", min_size=2):
    """Validate a grayscale image and return it as a float64 2-D array.

    The returned array is always a fresh copy, so callers may keep it without
    worrying about later mutation of the input.
    """
    arr = np.array(img, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    h, w = arr.shape
    if h < min_size or w < min_size:
        raise ValidationError(
            f"{name} must be at least {min_size}x{min_size}, got {h}x{w}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf values")
    return arr


def check_image_batch(X, name="X"):
    """Return a list of validated images.

    Accepts a single 2-D image, a 3-D array stacked along axis 0, or any
    iterable of 2-D images (sizes may differ).
    """
    if isinstance(X, np.ndarray):
        if X.ndim == 2:
            return [check_image(X, name=name)]
        if X.ndim == 3:
            return [check_image(x, name=f"{name}[{i}]") for i, x in enumerate(X)]
        raise ValidationError(f"{name} must be 2-D or 3-D, got {X.ndim}-D")
    images = [check_image(x, name=f"{name}[{i}]") for i, x in enumerate(X)]
    if not images:
        raise ValidationError(f"{name} is empty")
    return images


def check_same_shape(a, b, names=("candidate", "reference")):
    if a.shape != b.shape:
        raise ValidationError(
            f"{names[0]} shape {a.shape} does not match {names[1]} shape {b.shape}")


def check_scalar(x, name, target_type=numbers.Real, min_val=None, max_val=None,
                 include_min=True):
    """Check a scalar parameter's type and range, returning it unchanged."""
    if isinstance(x, bool) or not isinstance(x, target_type):
        raise ValidationError(f"{name} must be {target_type.__name__}, got {type(x).__name__}")
    if not np.isfinite(x):
        raise ValidationError(f"{name} must be finite, got {x}")
    if min_val is not None:
        if include_min and x < min_val:
            raise ValidationError(f"{name} must be >= {min_val}, got {x}")
        if not include_min and x <= min_val:
            raise ValidationError(f"{name} must be > {min_val}, got {x}")
    if max_val is not None and x > max_val:
        raise ValidationError(f"{name} must be <= {max_val}, got {x}")
    return x
