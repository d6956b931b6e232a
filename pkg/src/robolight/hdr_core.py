"""Core pixel-buffer types and the luminance/histogram primitives.

Two image domains exist side by side and are never mixed implicitly:

* linear relative radiance (float32, unbounded above, >= 0), and
* gamma-encoded 8-bit display values.

Histograms carry a ``domain_tag`` so downstream comparisons cannot
accidentally pair a linear histogram with an encoded one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DOMAIN_LINEAR = "linear-radiance"
DOMAIN_ENCODED = "encoded-8bit"


@dataclass(frozen=True)
class RadianceImage:
    """Linear relative-radiance buffer, shape (height, width, channels) float32.

    Values are proportional to scene radiance; no transfer curve applied.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValidationError(f"radiance buffer must be HxWx1 or HxWx3, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr, dtype=np.float32)
        if not np.all(np.isfinite(arr)):
            raise ValidationError("radiance values must be finite")
        if arr.min(initial=0.0) < 0.0:
            raise ValidationError("radiance values must be >= 0")
        object.__setattr__(self, "data", arr)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class LdrImage:
    """Gamma-encoded 8-bit RGB buffer, shape (height, width, 3) uint8."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValidationError(f"LDR buffer must be HxWx3, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValidationError(f"LDR buffer must be uint8, got {arr.dtype}")
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return 3


@dataclass(frozen=True)
class LuminanceHistogram:
    counts: np.ndarray
    lo: float
    hi: float
    domain_tag: str

    def __post_init__(self):
        counts = np.ascontiguousarray(np.asarray(self.counts), dtype=np.int64)
        if counts.ndim != 1 or counts.size < 1:
            raise ValidationError("histogram counts must be a non-empty 1-D array")
        if counts.min() < 0:
            raise ValidationError("histogram counts must be non-negative")
        if not self.lo < self.hi:
            raise ValidationError("histogram range must satisfy lo < hi")
        if self.domain_tag not in (DOMAIN_LINEAR, DOMAIN_ENCODED):
            raise ValidationError(f"unknown histogram domain tag: {self.domain_tag!r}")
        object.__setattr__(self, "counts", counts)

    @property
    def bin_count(self) -> int:
        return int(self.counts.size)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def normalized(self) -> np.ndarray:
        total = self.counts.sum()
        if total == 0:
            return np.zeros_like(self.counts, dtype=np.float64)
        return self.counts.astype(np.float64) / total


def luminance(img: RadianceImage | LdrImage):
    """Rec. 709 luminance, Y = 0.2126 R + 0.7152 G + 0.0722 B.

    Applied in whichever domain the input lives in. Returns a
    single-channel RadianceImage for radiance input, or a 2-D float32
    array of encoded-domain values in [0, 255] for LDR input.
    """
    if isinstance(img, (RadianceImage, LdrImage)):
        if img.channels != 3:
            raise ValidationError("luminance requires a 3-channel image")
        data = img.data
    else:
        raise ValidationError(f"unsupported image type: {type(img).__name__}")
    r = data[:, :, 0].astype(np.float64)
    g = data[:, :, 1].astype(np.float64)
    b = data[:, :, 2].astype(np.float64)
    # Folded form keeps Y == c exact when R == G == B == c (the three
    # weights do not sum to 1.0 exactly in binary floating point).
    y = (g + 0.2126 * (r - g) + 0.0722 * (b - g)).astype(np.float32)
    if isinstance(img, RadianceImage):
        return RadianceImage(np.maximum(y, 0.0))
    return y


def histogram(img, bins: int, lo: float, hi: float,
              domain_tag: str | None = None) -> LuminanceHistogram:
    """Histogram a single-channel image over [lo, hi).

    Pixel p lands in bin floor((p - lo) / (hi - lo) * bins), clamped into
    [0, bins - 1] so out-of-range pixels are counted rather than dropped
    and the counts always sum to the pixel count.
    """
    if isinstance(img, RadianceImage):
        if img.channels != 1:
            raise ValidationError("histogram requires a single-channel image")
        values = img.data[:, :, 0]
        tag = domain_tag or DOMAIN_LINEAR
    else:
        values = np.asarray(img)
        if values.ndim == 3 and values.shape[2] == 1:
            values = values[:, :, 0]
        if values.ndim != 2:
            raise ValidationError("histogram requires a single-channel image")
        if domain_tag is None:
            raise ValidationError("domain_tag is required for raw array input")
        tag = domain_tag
    if values.size == 0:
        raise ValidationError("cannot histogram an empty image")
    if bins < 1:
        raise ValidationError("bins must be >= 1")
    if not lo < hi:
        raise ValidationError("range must satisfy lo < hi")
    idx = np.floor((values.astype(np.float64) - lo) / (hi - lo) * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    counts = np.bincount(idx.ravel(), minlength=bins)
    return LuminanceHistogram(counts=counts, lo=float(lo), hi=float(hi), domain_tag=tag)
