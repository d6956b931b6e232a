"""Six-stage RAW16 -> LDR processing pipeline with per-stage ablation flags.

Fixed stage order: decode -> denoise -> lens shading -> white balance ->
exposure scale -> color correction -> gamma encode. Disabled stages are
identities, which reproduces the single-stage ablation renders.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import cv2
import numpy as np

from .errors import ValidationError
from .hdr_core import LdrImage, RadianceImage

CFA_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG", "NONE-RGB")

# (row, col) offset of each channel plane in the 2x2 CFA tile; G has two sites.
_CFA_OFFSETS = {
    "RGGB": {"R": [(0, 0)], "G": [(0, 1), (1, 0)], "B": [(1, 1)]},
    "BGGR": {"B": [(0, 0)], "G": [(0, 1), (1, 0)], "R": [(1, 1)]},
    "GRBG": {"G": [(0, 0), (1, 1)], "R": [(0, 1)], "B": [(1, 0)]},
    "GBRG": {"G": [(0, 0), (1, 1)], "B": [(0, 1)], "R": [(1, 0)]},
}

_KERNEL_RB = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.float32) / 4.0
_KERNEL_G = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]], dtype=np.float32) / 4.0


@dataclass(frozen=True)
class RawFrame:
    """16-bit sensor frame: a CFA mosaic or pre-demosaiced RGB triplets."""

    data: np.ndarray
    cfa: str = "RGGB"
    black_level: int = 0
    white_level: int = 65535

    def __post_init__(self):
        if self.cfa not in CFA_PATTERNS:
            raise ValidationError(f"unknown CFA tag: {self.cfa!r}")
        arr = np.asarray(self.data)
        if arr.dtype != np.uint16:
            raise ValidationError(f"RAW data must be uint16, got {arr.dtype}")
        if self.cfa == "NONE-RGB":
            if arr.ndim != 3 or arr.shape[2] != 3:
                raise ValidationError(f"NONE-RGB frame must be HxWx3, got shape {arr.shape}")
        elif arr.ndim != 2:
            raise ValidationError(f"CFA mosaic must be HxW, got shape {arr.shape}")
        if not 0 <= self.black_level < self.white_level <= 65535:
            raise ValidationError(
                f"require black_level < white_level <= 65535, got {self.black_level}/{self.white_level}")
        object.__setattr__(self, "data", np.ascontiguousarray(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class PipelineConfig:
    """Stage enable flags plus bilateral parameters."""

    denoise: bool = True
    shading: bool = True
    white_balance: bool = True
    color_correct: bool = True
    gamma_encode: bool = True
    spatial_sigma: float = 2.0
    range_sigma: float = 0.05
    window_radius: int = 5

    def __post_init__(self):
        if self.spatial_sigma <= 0 or self.range_sigma <= 0:
            raise ValidationError("bilateral sigmas must be > 0")
        if self.window_radius < 1:
            raise ValidationError("window_radius must be >= 1")

    def disabling(self, *stages: str) -> "PipelineConfig":
        known = {"denoise", "shading", "white_balance", "color_correct", "gamma_encode"}
        bad = set(stages) - known
        if bad:
            raise ValidationError(f"unknown pipeline stage(s): {sorted(bad)}")
        return replace(self, **{s: False for s in stages})


def normalize_raw(frame: RawFrame) -> np.ndarray:
    """(v - black) / (white - black), clamped at 0. Shape preserved."""
    span = np.float32(frame.white_level - frame.black_level)
    out = (frame.data.astype(np.float32) - np.float32(frame.black_level)) / span
    return np.maximum(out, 0.0, out=out)


def demosaic_bilinear(mosaic: np.ndarray, cfa: str) -> np.ndarray:
    """Bilinear demosaic of a normalized single-plane mosaic to HxWx3."""
    if cfa not in _CFA_OFFSETS:
        raise ValidationError(f"unknown CFA tag: {cfa!r}")
    mosaic = np.ascontiguousarray(mosaic, dtype=np.float32)
    h, w = mosaic.shape
    out = np.empty((h, w, 3), dtype=np.float32)
    for ci, channel in enumerate("RGB"):
        mask = np.zeros((h, w), dtype=np.float32)
        for dy, dx in _CFA_OFFSETS[cfa][channel]:
            mask[dy::2, dx::2] = 1.0
        kernel = _KERNEL_G if channel == "G" else _KERNEL_RB
        num = cv2.filter2D(mosaic * mask, -1, kernel, borderType=cv2.BORDER_REFLECT_101)
        den = cv2.filter2D(mask, -1, kernel, borderType=cv2.BORDER_REFLECT_101)
        out[:, :, ci] = num / den
    return np.maximum(out, 0.0, out=out)


def decode_raw(frame: RawFrame) -> RadianceImage:
    """Normalize sensor counts to linear [0, 1] and demosaic if needed."""
    norm = normalize_raw(frame)
    if frame.cfa == "NONE-RGB":
        return RadianceImage(norm)
    return RadianceImage(demosaic_bilinear(norm, frame.cfa))


def bilateral_denoise(img: RadianceImage, spatial_sigma: float = 2.0,
                      range_sigma: float = 0.05, window_radius: int = 5) -> RadianceImage:
    """Edge-preserving bilateral filter, applied per channel.

    Weights are exp(-d^2 / 2*sigma_s^2) * exp(-delta^2 / 2*sigma_r^2) over a
    (2r+1)^2 window; OpenCV's single-channel bilateral evaluates exactly this
    kernel, so each channel is delegated to it.
    """
    if spatial_sigma <= 0 or range_sigma <= 0:
        raise ValidationError("bilateral sigmas must be > 0")
    if window_radius < 1:
        raise ValidationError("window_radius must be >= 1")
    d = 2 * window_radius + 1
    out = np.empty_like(img.data)
    for c in range(img.channels):
        plane = np.ascontiguousarray(img.data[:, :, c])
        out[:, :, c] = cv2.bilateralFilter(
            plane, d, range_sigma, spatial_sigma, borderType=cv2.BORDER_REFLECT_101)
    return RadianceImage(np.maximum(out, 0.0, out=out))


def lens_shading_correct(img: RadianceImage, gain_map: np.ndarray) -> RadianceImage:
    gain_map = np.asarray(gain_map, dtype=np.float32)
    if gain_map.ndim == 3 and gain_map.shape[2] == 1:
        gain_map = gain_map[:, :, 0]
    if gain_map.shape != (img.height, img.width):
        raise ValidationError(
            f"gain map shape {gain_map.shape} does not match image {img.height}x{img.width}")
    if gain_map.min() <= 0:
        raise ValidationError("shading gains must be > 0")
    return RadianceImage(img.data * gain_map[:, :, None])


def white_balance(img: RadianceImage, gains) -> RadianceImage:
    gains = np.asarray(gains, dtype=np.float32)
    if gains.shape != (3,):
        raise ValidationError("white balance expects 3 per-channel gains")
    if gains.min() <= 0:
        raise ValidationError("white balance gains must be > 0")
    if img.channels != 3:
        raise ValidationError("white balance requires a 3-channel image")
    return RadianceImage(img.data * gains[None, None, :])


def color_correct(img: RadianceImage, ccm) -> RadianceImage:
    ccm = np.asarray(ccm, dtype=np.float32)
    if ccm.shape != (3, 3):
        raise ValidationError(f"CCM must be 3x3, got {ccm.shape}")
    if img.channels != 3:
        raise ValidationError("color correction requires a 3-channel image")
    out = img.data @ ccm.T
    return RadianceImage(np.maximum(out, 0.0, out=out))


def srgb_encode_value(v: np.ndarray) -> np.ndarray:
    """sRGB transfer function on clipped linear values, float in [0, 1]."""
    v = np.clip(v, 0.0, 1.0)
    low = v * 12.92
    high = 1.055 * np.power(v, 1.0 / 2.4, dtype=np.float64) - 0.055
    return np.where(v <= 0.0031308, low, high)


def srgb_decode_value(c: np.ndarray) -> np.ndarray:
    """Inverse sRGB transfer function on encoded values in [0, 1]."""
    c = np.asarray(c, dtype=np.float64)
    low = c / 12.92
    high = np.power((c + 0.055) / 1.055, 2.4)
    return np.where(c <= 0.04045, low, high)


def power_encode_value(v: np.ndarray, gamma: float) -> np.ndarray:
    return np.power(np.clip(v, 0.0, 1.0), 1.0 / gamma, dtype=np.float64)


def quantize_8bit(encoded: np.ndarray) -> np.ndarray:
    """Round-half-up to 8-bit codes (pinned for cross-build determinism)."""
    return np.floor(np.clip(encoded, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def gamma_encode(img: RadianceImage, transfer: str = "srgb", gamma: float = 2.2) -> LdrImage:
    """Apply the display transfer curve and quantize to 8 bits.

    Values above 1.0 clip to 255 by definition. ``transfer`` selects the
    exact piecewise sRGB curve or a pure power curve for experiments.
    """
    if img.channels != 3:
        raise ValidationError("gamma encoding requires a 3-channel image")
    if transfer == "srgb":
        encoded = srgb_encode_value(img.data)
    elif transfer == "power":
        encoded = power_encode_value(img.data, gamma)
    elif transfer == "linear":
        encoded = np.clip(img.data, 0.0, 1.0)
    else:
        raise ValidationError(f"unknown transfer function: {transfer!r}")
    return LdrImage(quantize_8bit(encoded))


def process_hdr(frame: RawFrame, profile, cfg: PipelineConfig | None = None) -> RadianceImage:
    """Run all linear stages (everything before gamma encoding)."""
    from .calibration import CalibrationProfile  # noqa: F401 (documented contract)

    cfg = cfg or PipelineConfig()
    img = decode_raw(frame)
    if cfg.denoise:
        img = bilateral_denoise(img, cfg.spatial_sigma, cfg.range_sigma, cfg.window_radius)
    if cfg.shading:
        if profile.shading_map is not None:
            img = lens_shading_correct(img, profile.shading_map)
    if cfg.white_balance:
        img = white_balance(img, profile.wb_gains)
    if profile.exposure != 1.0:
        img = RadianceImage(img.data * np.float32(profile.exposure))
    if cfg.color_correct:
        img = color_correct(img, profile.ccm)
    return img


def process_frame(frame: RawFrame, profile, cfg: PipelineConfig | None = None) -> LdrImage:
    """Full pipeline: RAW16 container to 8-bit display PNG buffer.

    Deterministic: identical inputs produce bit-identical output.
    """
    cfg = cfg or PipelineConfig()
    img = process_hdr(frame, profile, cfg)
    if cfg.gamma_encode:
        return gamma_encode(img, profile.transfer_kind, profile.transfer_gamma)
    return gamma_encode(img, "linear")
