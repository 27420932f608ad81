"""Kurtosis-concentration report and loss.

Natural images keep nearly the same kurtosis across their band-pass wavelet
subbands. The KC loss of an image is the spread ``max - min`` of those subband
kurtoses; :func:`kc_loss` returns it together with its exact pixel gradient.
"""

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._validation import check_image, check_same_shape
from .exceptions import (DegenerateVarianceError, EmptyReportError,
                         InsufficientSubbandsError, KCError)
from .stats import kurtosis, kurtosis_gradient
from .wavelet import PLANE_LABELS, FilterBank, decompose, dwt2_adjoint

__all__ = ["SubbandKurtosis", "KurtosisReport", "LossGrad", "DatasetKCSummary",
           "kc_report", "kc_loss", "reconstruction_loss",
           "reconstruction_loss_gradient", "dataset_kc_summary", "box_stats",
           "subband_rows", "write_subband_csv", "write_boxplot_csv"]


class SubbandKurtosis(NamedTuple):
    kernel: str
    plane: str
    kurtosis: float

    @property
    def subband_id(self):
        return f"{self.kernel}.{self.plane}"


def box_stats(values):
    """Tukey box-plot statistics: quartiles plus 1.5 IQR whiskers."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    inside_lo = v[v >= q1 - 1.5 * iqr]
    inside_hi = v[v <= q3 + 1.5 * iqr]
    return {
        "min": float(v[0]), "q1": float(q1), "median": float(med),
        "q3": float(q3), "max": float(v[-1]),
        "whisker_low": float(inside_lo[0]), "whisker_high": float(inside_hi[-1]),
    }


@dataclass(frozen=True)
class KurtosisReport:
    """Per-subband kurtoses of one image and their spread."""

    entries: tuple
    excluded_subbands: tuple
    max_kurtosis: float
    min_kurtosis: float
    deviation: float
    quartiles: tuple
    argmax_subband: str
    argmin_subband: str

    def values(self):
        return np.array([e.kurtosis for e in self.entries])

    def to_dict(self):
        return {
            "subbands": [{"kernel": e.kernel, "plane": e.plane, "kurtosis": e.kurtosis}
                         for e in self.entries],
            "excluded_subbands": list(self.excluded_subbands),
            "max_kurtosis": self.max_kurtosis,
            "min_kurtosis": self.min_kurtosis,
            "deviation": self.deviation,
            "quartiles": {"q1": self.quartiles[0], "median": self.quartiles[1],
                          "q3": self.quartiles[2]},
            "argmax_subband": self.argmax_subband,
            "argmin_subband": self.argmin_subband,
        }


def _subband_kurtoses(subbands, bank):
    entries, excluded = [], []
    for name, label, plane in subbands.items(include_ll=bank.include_ll):
        try:
            entries.append(SubbandKurtosis(name, label, kurtosis(plane)))
        except DegenerateVarianceError:
            excluded.append(f"{name}.{label}")
    return entries, excluded


def _build_report(entries, excluded):
    if not entries:
        raise EmptyReportError(
            f"all {len(excluded)} subbands are degenerate; nothing to report")
    vals = np.array([e.kurtosis for e in entries])
    imax, imin = int(np.argmax(vals)), int(np.argmin(vals))
    q1, med, q3 = np.percentile(vals, [25, 50, 75])
    return KurtosisReport(
        entries=tuple(entries), excluded_subbands=tuple(excluded),
        max_kurtosis=float(vals[imax]), min_kurtosis=float(vals[imin]),
        deviation=float(vals[imax] - vals[imin]),
        quartiles=(float(q1), float(med), float(q3)),
        argmax_subband=entries[imax].subband_id,
        argmin_subband=entries[imin].subband_id,
    )


def kc_report(img, bank=None):
    """Decompose ``img`` and summarize the kurtosis of each included subband.

    Degenerate (near-constant) subbands are listed in ``excluded_subbands``
    instead of failing the report.
    """
    bank = FilterBank() if bank is None else bank
    subbands = decompose(img, bank)
    return _build_report(*_subband_kurtoses(subbands, bank))


@dataclass(frozen=True)
class LossGrad:
    loss: float
    gradient: np.ndarray = field(repr=False)
    argmax_subband: str
    argmin_subband: str


def kc_loss(img, bank=None):
    """KC loss ``max_i kurt(g_i) - min_i kurt(g_i)`` and its pixel gradient.

    The max/min are differentiated as subgradients: only the selected planes
    (lowest index on ties) contribute, and their kurtosis gradients are pulled
    back to pixel space through the DWT adjoint.
    """
    bank = FilterBank() if bank is None else bank
    img = check_image(img)
    subbands = decompose(img, bank)
    entries, excluded = _subband_kurtoses(subbands, bank)
    if len(entries) < 2:
        raise InsufficientSubbandsError(
            f"KC loss needs at least 2 non-degenerate subbands, got {len(entries)}")
    report = _build_report(entries, excluded)

    plane_grads = {}
    for sid, sign in ((report.argmax_subband, 1.0), (report.argmin_subband, -1.0)):
        kernel_name, _, label = sid.partition(".")
        slots = plane_grads.setdefault(kernel_name, [None] * 4)
        g = sign * kurtosis_gradient(subbands[sid])
        i = PLANE_LABELS.index(label)
        slots[i] = g if slots[i] is None else slots[i] + g

    h, w = img.shape
    kernels = {k.name: k for k in bank.kernels}
    grad = np.zeros_like(img)
    for kernel_name, slots in plane_grads.items():
        grad += dwt2_adjoint(slots, kernels[kernel_name], h, w)
    return LossGrad(loss=report.deviation, gradient=grad,
                    argmax_subband=report.argmax_subband,
                    argmin_subband=report.argmin_subband)


def reconstruction_loss(x, target):
    """Mean squared error between an image and its target."""
    x, target = check_image(x), check_image(target, name="target")
    check_same_shape(x, target, ("x", "target"))
    return float(np.mean((x - target) ** 2))


def reconstruction_loss_gradient(x, target):
    x, target = np.asarray(x, dtype=np.float64), np.asarray(target, dtype=np.float64)
    return 2.0 * (x - target) / x.size


@dataclass
class DatasetKCSummary:
    """KC statistics over a collection of images, in input order."""

    image_ids: list
    reports: list
    failures: list
    deviations: np.ndarray
    mean_deviation: float
    median_deviation: float
    quartiles: tuple

    @property
    def n_ok(self):
        return len(self.deviations)

    def boxplot_records(self):
        """One box per successfully analyzed image, over its subband kurtoses."""
        out = []
        for image_id, rep in zip(self.image_ids, self.reports):
            if rep is None:
                continue
            out.append({"image_id": image_id, **box_stats(rep.values()),
                        "deviation": rep.deviation})
        return out

    def to_dict(self):
        return {
            "n_images": len(self.image_ids),
            "n_ok": self.n_ok,
            "failures": [{"image_id": i, "error": msg} for i, msg in self.failures],
            "deviations": [float(d) for d in self.deviations],
            "mean_deviation": self.mean_deviation,
            "median_deviation": self.median_deviation,
            "quartiles": {"q1": self.quartiles[0], "median": self.quartiles[1],
                          "q3": self.quartiles[2]},
        }


def dataset_kc_summary(images, bank=None, image_ids=None):
    """Run :func:`kc_report` on every image and aggregate the deviations.

    ``images`` may contain callables that return an image, which lets callers
    defer file loading so that read errors are recorded like any other
    per-image failure.
    """
    bank = FilterBank() if bank is None else bank
    images = list(images)
    if not images:
        raise KCError("dataset_kc_summary needs at least one image")
    if image_ids is None:
        image_ids = [str(i) for i in range(len(images))]
    reports, failures, devs = [], [], []
    for image_id, img in zip(image_ids, images):
        try:
            if callable(img):
                img = img()
            rep = kc_report(img, bank)
        except (KCError, ValueError, OSError) as exc:
            failures.append((image_id, f"{type(exc).__name__}: {exc}"))
            reports.append(None)
            continue
        reports.append(rep)
        devs.append(rep.deviation)
    if not devs:
        raise EmptyReportError(f"all {len(images)} images failed: {failures[0][1]}")
    devs = np.array(devs)
    q1, med, q3 = np.percentile(devs, [25, 50, 75])
    return DatasetKCSummary(
        image_ids=list(image_ids), reports=reports, failures=failures,
        deviations=devs, mean_deviation=float(devs.mean()),
        median_deviation=float(med), quartiles=(float(q1), float(med), float(q3)))


def subband_rows(image_id, report):
    return [(image_id, e.kernel, e.plane, e.kurtosis) for e in report.entries]


def write_subband_csv(path, rows, fmt="{:.9g}"):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "kernel", "plane", "kurtosis"])
        for image_id, kernel, plane, k in rows:
            writer.writerow([image_id, kernel, plane, fmt.format(k)])


def write_boxplot_csv(path, records, fmt="{:.9g}"):
    cols = ["image_id", "min", "whisker_low", "q1", "median", "q3",
            "whisker_high", "max", "deviation"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for rec in records:
            writer.writerow([rec["image_id"]] + [fmt.format(rec[c]) for c in cols[1:]])
