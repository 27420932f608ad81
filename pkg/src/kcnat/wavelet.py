"""Single-level separable 2-D DWT with periodic extension and its exact adjoint.

Analysis convention, per 1-D pass over a signal ``x`` of even length ``N``::

    low[k]  = sum_n lowpass[n]  * x[(2k + n) mod N]
    high[k] = sum_n highpass[n] * x[(2k + n) mod N]

with ``highpass[n] = (-1)**n * lowpass[L - 1 - n]``. The 2-D transform runs
this along rows (axis 1) and then along columns (axis 0). Plane labels name
the row filter first: ``LH`` is lowpass along rows and highpass along columns.
Odd-sized inputs get one replicated row/column appended before the transform,
and that padding is part of the linear map whose adjoint we return.
"""

from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple

import numpy as np

from ._validation import check_image
from .exceptions import KernelTooLongError, ValidationError

__all__ = ["FilterKernel", "FilterBank", "SubbandSet", "DWTPlanes",
           "daubechies_lowpass", "get_kernel", "builtin_kernel_names",
           "parse_filter_table", "load_filter_table", "dwt2_forward",
           "dwt2_adjoint", "decompose", "PLANE_LABELS", "DEFAULT_KERNELS"]

PLANE_LABELS = ("LL", "LH", "HL", "HH")
DEFAULT_KERNELS = ("haar", "db2", "db3", "db4")
_ORTHO_TOL = 1e-10


def daubechies_lowpass(order):
    """Lowpass filter of the Daubechies wavelet with ``order`` vanishing moments.

    Built by spectral factorization: the roots of the half-band polynomial
    ``P(y) = sum_k C(order-1+k, k) y**k`` are mapped back to the z-plane and
    the root of each reciprocal pair lying outside the unit circle is kept,
    which gives the minimum-phase (extremal phase) solution. The result has
    length ``2 * order`` and sums to sqrt(2).
    """
    if order < 1:
        raise ValidationError(f"Daubechies order must be >= 1, got {order}")
    if order == 1:
        return np.full(2, 1.0 / np.sqrt(2.0))
    poly = [comb(order - 1 + k, k) for k in range(order)][::-1]
    y_roots = np.roots(poly)
    q = np.poly1d([1.0])
    for y in y_roots:
        part = 2.0 * np.sqrt(y * (y - 1.0))
        const = 1.0 - 2.0 * y
        z = const + part
        if abs(z) < 1.0:
            z = const - part
        q = q * np.poly1d([1.0, -z])
    h = np.poly1d([1.0, 1.0]) ** order * np.real(q)
    h = h.c[::-1]
    return h / h.sum() * np.sqrt(2.0)


def _quadrature_mirror(lowpass):
    lowpass = np.asarray(lowpass, dtype=np.float64)
    signs = np.where(np.arange(lowpass.size) % 2 == 0, 1.0, -1.0)
    return signs * lowpass[::-1]


@dataclass(frozen=True)
class FilterKernel:
    """An orthonormal two-channel filter pair.

    ``highpass`` is derived from ``lowpass`` when omitted. Orthonormality
    (unit energy and orthogonality under even shifts) is checked on creation.
    """

    name: str
    lowpass: tuple
    highpass: tuple = None

    def __post_init__(self):
        lo = np.asarray(self.lowpass, dtype=np.float64).ravel()
        hi = (_quadrature_mirror(lo) if self.highpass is None
              else np.asarray(self.highpass, dtype=np.float64).ravel())
        object.__setattr__(self, "lowpass", tuple(float(v) for v in lo))
        object.__setattr__(self, "highpass", tuple(float(v) for v in hi))
        if lo.size != hi.size:
            raise ValidationError(f"{self.name}: lowpass/highpass length differ")
        if lo.size < 2 or lo.size % 2:
            raise ValidationError(f"{self.name}: filter length must be even and >= 2")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValidationError(f"{self.name}: non-finite coefficient")
        L = lo.size
        for shift in range(0, L, 2):
            a, b = lo[shift:], hi[shift:]
            want = 1.0 if shift == 0 else 0.0
            if (abs(np.dot(lo[:L - shift], a) - want) > _ORTHO_TOL
                    or abs(np.dot(hi[:L - shift], b) - want) > _ORTHO_TOL
                    or abs(np.dot(lo[:L - shift], b)) > _ORTHO_TOL
                    or abs(np.dot(hi[:L - shift], a)) > _ORTHO_TOL):
                raise ValidationError(f"{self.name}: filters are not orthonormal "
                                      f"(shift {shift})")

    def __len__(self):
        return len(self.lowpass)

    @property
    def lo(self):
        return np.asarray(self.lowpass)

    @property
    def hi(self):
        return np.asarray(self.highpass)


_BUILTIN_ORDERS = {"haar": 1, **{f"db{p}": p for p in range(1, 9)}}
_KERNEL_CACHE = {}


def builtin_kernel_names():
    return tuple(_BUILTIN_ORDERS)


def get_kernel(name):
    """Return a built-in kernel (``haar``, ``db1`` .. ``db8``)."""
    if name not in _BUILTIN_ORDERS:
        raise ValidationError(f"unknown kernel {name!r}; built-ins are "
                              f"{', '.join(_BUILTIN_ORDERS)}")
    if name not in _KERNEL_CACHE:
        _KERNEL_CACHE[name] = FilterKernel(name, daubechies_lowpass(_BUILTIN_ORDERS[name]))
    return _KERNEL_CACHE[name]


def parse_filter_table(text):
    """Parse a plain-text filter table.

    One kernel per line: a name followed by lowpass coefficients separated by
    whitespace or commas. Blank lines and ``#`` comments are ignored.
    """
    kernels = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        name, *coeffs = line.split()
        try:
            values = [float(c) for c in coeffs]
        except ValueError:
            raise ValidationError(f"line {lineno}: bad coefficient in {line!r}") from None
        kernels.append(FilterKernel(name, values))
    if not kernels:
        raise ValidationError("filter table defines no kernels")
    return kernels


def load_filter_table(path):
    with open(path, encoding="utf-8") as fh:
        return parse_filter_table(fh.read())


@dataclass(frozen=True)
class FilterBank:
    """Ordered kernels plus whether LL planes count toward kurtosis statistics."""

    kernels: tuple = field(default_factory=lambda: tuple(get_kernel(n) for n in DEFAULT_KERNELS))
    include_ll: bool = False

    def __post_init__(self):
        kernels = tuple(get_kernel(k) if isinstance(k, str) else k for k in self.kernels)
        object.__setattr__(self, "kernels", kernels)
        if not kernels:
            raise ValidationError("a filter bank needs at least one kernel")
        names = [k.name for k in kernels]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate kernel names in bank: {names}")

    @classmethod
    def from_names(cls, names, include_ll=False):
        if isinstance(names, str):
            names = [n.strip() for n in names.split(",") if n.strip()]
        return cls(tuple(get_kernel(n) for n in names), include_ll)

    @property
    def names(self):
        return tuple(k.name for k in self.kernels)

    @property
    def labels(self):
        return PLANE_LABELS if self.include_ll else PLANE_LABELS[1:]

    @property
    def n_subbands(self):
        return len(self.kernels) * len(self.labels)

    def subband_ids(self):
        """Included subband identifiers, e.g. ``"db2.HL"``, in report order."""
        return [f"{k.name}.{lab}" for k in self.kernels for lab in self.labels]


class DWTPlanes(NamedTuple):
    LL: np.ndarray
    LH: np.ndarray
    HL: np.ndarray
    HH: np.ndarray


def _padded_shape(shape):
    h, w = shape
    return h + h % 2, w + w % 2


def _pad(img):
    h, w = img.shape
    if h % 2:
        img = np.vstack([img, img[-1:, :]])
    if w % 2:
        img = np.hstack([img, img[:, -1:]])
    return img


def _analyze(x, filt, axis, zero_dc=False):
    """Periodic filter-and-decimate along ``axis``.

    With ``zero_dc`` the taps act on differences ``x[2k+n] - x[2k]``, the same
    map for a zero-sum filter but one that sends constants to exactly 0.
    """
    n = x.shape[axis]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(filt.size)[None, :]) % n
    taken = np.take(x, idx, axis=axis)
    if zero_dc:
        ref = np.take(taken, [0], axis=axis + 1)
        taken = taken - ref
    # taken has the (K, L) block in place of ``axis``; contract L with the filter
    return np.tensordot(taken, filt, axes=([axis + 1], [0]))


def _synthesize(c, filt, axis, n, zero_dc=False):
    """Exact transpose of ``_analyze``."""
    k = np.arange(c.shape[axis])
    shape = list(c.shape)
    shape[axis] = n
    out = np.zeros(shape)
    taps = list(enumerate(filt))
    if zero_dc:
        taps = [(0, -float(np.sum(filt[1:])))] + taps[1:]
    for tap, f in taps:
        idx = (2 * k + tap) % n
        if axis == 0:
            out[idx, :] += f * c
        else:
            out[:, idx] += f * c
    return out


_HAAR = 1.0 / np.sqrt(2.0)


def _is_haar(kernel):
    return (len(kernel) == 2
            and np.allclose(kernel.lo, [_HAAR, _HAAR], rtol=0, atol=1e-15)
            and np.allclose(kernel.hi, [_HAAR, -_HAAR], rtol=0, atol=1e-15))


def _haar_forward(x):
    a, b = x[0::2, 0::2], x[0::2, 1::2]
    c, d = x[1::2, 0::2], x[1::2, 1::2]
    return DWTPlanes(LL=((a + b) + (c + d)) * 0.5, LH=((a + b) - (c + d)) * 0.5,
                     HL=((a - b) + (c - d)) * 0.5, HH=((a - b) - (c - d)) * 0.5)


def _haar_adjoint(ll, lh, hl, hh):
    x = np.empty((2 * ll.shape[0], 2 * ll.shape[1]))
    s, t = ll + lh, ll - lh
    u, v = hl + hh, hl - hh
    x[0::2, 0::2] = (s + u) * 0.5
    x[0::2, 1::2] = (s - u) * 0.5
    x[1::2, 0::2] = (t + v) * 0.5
    x[1::2, 1::2] = (t - v) * 0.5
    return x


def _check_kernel_fits(kernel, padded):
    if len(kernel) > min(padded):
        raise KernelTooLongError(
            f"kernel {kernel.name} (length {len(kernel)}) is longer than the "
            f"padded image side {min(padded)}")


def dwt2_forward(img, kernel):
    """One level of the 2-D DWT; returns planes ``(LL, LH, HL, HH)``.

    >>> planes = dwt2_forward(np.array([[1.0, 2.0], [3.0, 4.0]]), get_kernel("haar"))
    >>> float(planes.LL[0, 0]), float(planes.HL[0, 0])
    (5.0, -1.0)
    """
    if isinstance(kernel, str):
        kernel = get_kernel(kernel)
    x = _pad(check_image(img))
    _check_kernel_fits(kernel, x.shape)
    if _is_haar(kernel):
        return _haar_forward(x)
    lo, hi = kernel.lo, kernel.hi
    row_lo = _analyze(x, lo, axis=1)
    row_hi = _analyze(x, hi, axis=1, zero_dc=True)
    return DWTPlanes(
        LL=_analyze(row_lo, lo, axis=0),
        LH=_analyze(row_lo, hi, axis=0, zero_dc=True),
        HL=_analyze(row_hi, lo, axis=0),
        HH=_analyze(row_hi, hi, axis=0, zero_dc=True),
    )


def dwt2_adjoint(planes, kernel, out_h, out_w):
    """Apply the transpose of ``dwt2_forward`` for an ``out_h x out_w`` input.

    ``planes`` is any 4-sequence ordered LL, LH, HL, HH; ``None`` entries are
    treated as zero planes. For orthonormal kernels on even-sized images this
    is the inverse transform.
    """
    if isinstance(kernel, str):
        kernel = get_kernel(kernel)
    ph, pw = _padded_shape((out_h, out_w))
    _check_kernel_fits(kernel, (ph, pw))
    if len(planes) != 4:
        raise ValidationError(f"expected 4 planes, got {len(planes)}")
    want = (ph // 2, pw // 2)
    arrs = []
    for label, p in zip(PLANE_LABELS, planes):
        if p is None:
            p = np.zeros(want)
        p = np.asarray(p, dtype=np.float64)
        if p.shape != want:
            raise ValidationError(
                f"{label} plane has shape {p.shape}, expected {want} for a "
                f"{out_h}x{out_w} output")
        arrs.append(p)
    ll, lh, hl, hh = arrs
    if _is_haar(kernel):
        x = _haar_adjoint(ll, lh, hl, hh)
    else:
        lo, hi = kernel.lo, kernel.hi
        row_lo = _synthesize(ll, lo, 0, ph) + _synthesize(lh, hi, 0, ph, zero_dc=True)
        row_hi = _synthesize(hl, lo, 0, ph) + _synthesize(hh, hi, 0, ph, zero_dc=True)
        x = (_synthesize(row_lo, lo, 1, pw)
             + _synthesize(row_hi, hi, 1, pw, zero_dc=True))
    if pw != out_w:
        x[:, out_w - 1] += x[:, out_w]
        x = x[:, :out_w]
    if ph != out_h:
        x[out_h - 1, :] += x[out_h, :]
        x = x[:out_h, :]
    return x


@dataclass(frozen=True)
class SubbandSet:
    """All DWT planes of one image under one bank.

    ``planes`` maps kernel name to its ``DWTPlanes``; iteration order follows
    the bank.
    """

    planes: dict
    source_shape: tuple
    bank: FilterBank

    @property
    def padded_shape(self):
        return _padded_shape(self.source_shape)

    def items(self, include_ll=None):
        """Yield ``(kernel_name, label, plane)`` in deterministic order."""
        if include_ll is None:
            include_ll = True
        labels = PLANE_LABELS if include_ll else PLANE_LABELS[1:]
        for name in self.bank.names:
            p = self.planes[name]
            for lab in labels:
                yield name, lab, getattr(p, lab)

    def __getitem__(self, key):
        name, _, label = key.partition(".")
        return getattr(self.planes[name], label)

    def energy(self):
        return {n: float(sum(np.sum(q ** 2) for q in self.planes[n])) for n in self.bank.names}


def decompose(img, bank=None):
    """Apply ``dwt2_forward`` for every kernel in ``bank`` (bank order)."""
    if bank is None:
        bank = FilterBank()
    img = check_image(img)
    planes = {k.name: dwt2_forward(img, k) for k in bank.kernels}
    return SubbandSet(planes=planes, source_shape=img.shape, bank=bank)
