"""Fitting of every parameter the pipeline consumes, plus lux bookkeeping.

All fits operate on linear-radiance measurements: a color-chart capture
for the CCM, gray patches for white balance, and a flat field for the
lens shading map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .fileio import atomic_write_bytes, read_pfm, write_pfm
from .hdr_core import RadianceImage, luminance

# 24-patch reference chart, linear RGB in [0, 1]. Derived from the classic
# 24-patch chart's nominal sRGB coordinates, linearized.
_CHART_SRGB8 = np.array([
    [115, 82, 68], [194, 150, 130], [98, 122, 157], [87, 108, 67],
    [133, 128, 177], [103, 189, 170], [214, 126, 44], [80, 91, 166],
    [193, 90, 99], [94, 60, 108], [157, 188, 64], [224, 163, 46],
    [56, 61, 150], [70, 148, 73], [175, 54, 60], [231, 199, 31],
    [187, 86, 149], [8, 133, 161], [243, 243, 242], [200, 200, 200],
    [160, 160, 160], [122, 122, 121], [85, 85, 85], [52, 52, 52],
], dtype=np.float64)


def _srgb_to_linear(c):
    c = c / 255.0
    return np.where(c <= 0.04045, c / 12.92, np.power((c + 0.055) / 1.055, 2.4))


CHART24_REFERENCE_LINEAR = _srgb_to_linear(_CHART_SRGB8)
CHART24_GRAY_ROWS = slice(18, 24)  # the six neutral patches


@dataclass(frozen=True)
class CalibrationProfile:
    """All pipeline parameters: CCM, WB gains, shading map, transfer, exposure."""

    ccm: np.ndarray = field(default_factory=lambda: np.eye(3, dtype=np.float32))
    wb_gains: np.ndarray = field(default_factory=lambda: np.ones(3, dtype=np.float32))
    shading_map: np.ndarray | None = None
    transfer_kind: str = "srgb"
    transfer_gamma: float = 2.2
    exposure: float = 1.0

    def __post_init__(self):
        ccm = np.asarray(self.ccm, dtype=np.float32)
        if ccm.shape != (3, 3):
            raise ValidationError(f"CCM must be 3x3, got {ccm.shape}")
        gains = np.asarray(self.wb_gains, dtype=np.float32)
        if gains.shape != (3,) or gains.min() <= 0:
            raise ValidationError("wb_gains must be 3 positive multipliers")
        if gains[1] != 1.0:
            raise ValidationError("green gain must be 1.0 (green-normalized convention)")
        if self.exposure <= 0:
            raise ValidationError("exposure must be > 0")
        if self.transfer_kind not in ("srgb", "power"):
            raise ValidationError(f"unknown transfer kind: {self.transfer_kind!r}")
        if self.transfer_gamma <= 0:
            raise ValidationError("transfer gamma must be > 0")
        shading = self.shading_map
        if shading is not None:
            shading = np.asarray(shading, dtype=np.float32)
            if shading.ndim != 2:
                raise ValidationError("shading map must be a 2-D gain image")
            if shading.min() <= 0:
                raise ValidationError("shading gains must be > 0")
        object.__setattr__(self, "ccm", ccm)
        object.__setattr__(self, "wb_gains", gains)
        object.__setattr__(self, "shading_map", shading)

    def save(self, path) -> None:
        """JSON profile; the shading map goes to a companion PFM next to it."""
        path = Path(path)
        doc = {
            "ccm": [[float(v) for v in row] for row in self.ccm],
            "wb_gains": [float(v) for v in self.wb_gains],
            "transfer": {"kind": self.transfer_kind, "gamma": float(self.transfer_gamma)},
            "exposure": float(self.exposure),
            "shading_map": None,
        }
        if self.shading_map is not None:
            shading_name = path.stem + ".shading.pfm"
            write_pfm(path.parent / shading_name, RadianceImage(self.shading_map))
            doc["shading_map"] = shading_name
        payload = json.dumps(doc, sort_keys=True, indent=2).encode() + b"\n"
        atomic_write_bytes(path, payload)

    @classmethod
    def load(cls, path) -> "CalibrationProfile":
        path = Path(path)
        doc = json.loads(path.read_text())
        shading = None
        if doc.get("shading_map"):
            shading = read_pfm(path.parent / doc["shading_map"]).data[:, :, 0]
        return cls(
            ccm=np.asarray(doc["ccm"], dtype=np.float32),
            wb_gains=np.asarray(doc["wb_gains"], dtype=np.float32),
            shading_map=shading,
            transfer_kind=doc["transfer"]["kind"],
            transfer_gamma=float(doc["transfer"].get("gamma", 2.2)),
            exposure=float(doc["exposure"]),
        )


@dataclass(frozen=True)
class LuxMeasurement:
    """Four directions x three repeats at one location."""

    readings: tuple
    location_tag: str = ""

    def __post_init__(self):
        readings = tuple(float(r) for r in self.readings)
        if len(readings) != 12:
            raise ValidationError(f"expected 12 lux readings (4 directions x 3 repeats), got {len(readings)}")
        if min(readings) < 0:
            raise ValidationError("lux readings must be >= 0")
        object.__setattr__(self, "readings", readings)


def fit_ccm(measured, reference) -> np.ndarray:
    """Least-squares 3x3 matrix M minimizing sum ||M m_i - r_i||^2."""
    measured = np.asarray(measured, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if measured.ndim != 2 or measured.shape[1] != 3 or measured.shape != reference.shape:
        raise ValidationError("measured and reference must be matching (N, 3) arrays")
    if measured.shape[0] < 3:
        raise ValidationError("need at least 3 patches to fit a CCM")
    if np.linalg.matrix_rank(measured) < 3:
        raise ValidationError("measured patches are rank-deficient; cannot fit a CCM")
    solution, *_ = np.linalg.lstsq(measured, reference, rcond=None)
    return solution.T


def fit_white_balance(gray_patches) -> np.ndarray:
    """Green-normalized gains (Gmean/Rmean, 1, Gmean/Bmean)."""
    patches = np.asarray(gray_patches, dtype=np.float64)
    if patches.ndim == 1:
        patches = patches[None, :]
    if patches.ndim != 2 or patches.shape[1] != 3 or patches.shape[0] < 1:
        raise ValidationError("gray patches must be a non-empty (N, 3) array")
    means = patches.mean(axis=0)
    if means.min() <= 0:
        raise ValidationError("gray patch channel means must be > 0")
    return np.array([means[1] / means[0], 1.0, means[1] / means[2]], dtype=np.float64)


def fit_shading_map(flat_field: RadianceImage, smoothing_radius: int = 8) -> np.ndarray:
    """Per-pixel gain: smoothed center value over the smoothed flat field.

    Box smoothing suppresses per-pixel noise before the ratio; radius 0
    skips smoothing entirely (useful on noiseless synthetic fields).
    """
    if smoothing_radius < 0:
        raise ValidationError("smoothing_radius must be >= 0")
    if flat_field.channels == 3:
        flat = luminance(flat_field).data[:, :, 0]
    else:
        flat = flat_field.data[:, :, 0]
    flat = flat.astype(np.float64)
    if smoothing_radius > 0:
        flat = ndimage.uniform_filter(flat, size=2 * smoothing_radius + 1, mode="reflect")
    if flat.min() <= 0:
        raise ValidationError("flat field must be strictly positive after smoothing")
    center = flat[flat.shape[0] // 2, flat.shape[1] // 2]
    return (center / flat).astype(np.float32)


def average_lux(measurement: LuxMeasurement) -> float:
    """Arithmetic mean over the 12 readings."""
    return float(np.mean(measurement.readings))


def fit_profile_from_chart(measured_chart, reference_chart=None, gray_rows=CHART24_GRAY_ROWS,
                           flat_field: RadianceImage | None = None,
                           smoothing_radius: int = 8, exposure: float = 1.0,
                           transfer_kind: str = "srgb", transfer_gamma: float = 2.2) -> CalibrationProfile:
    """Convenience fit of a full profile from one chart capture.

    White balance is fitted first from the chart's gray patches; the CCM
    is then fitted on the white-balanced measurements so the two stages
    compose the way the pipeline applies them.
    """
    measured = np.asarray(measured_chart, dtype=np.float64)
    reference = CHART24_REFERENCE_LINEAR if reference_chart is None else np.asarray(reference_chart, dtype=np.float64)
    gains = fit_white_balance(measured[gray_rows])
    balanced = measured * gains[None, :]
    ccm = fit_ccm(balanced, reference)
    shading = None
    if flat_field is not None:
        shading = fit_shading_map(flat_field, smoothing_radius)
    return CalibrationProfile(
        ccm=ccm.astype(np.float32),
        wb_gains=gains.astype(np.float32),
        shading_map=shading,
        transfer_kind=transfer_kind,
        transfer_gamma=transfer_gamma,
        exposure=exposure,
    )
