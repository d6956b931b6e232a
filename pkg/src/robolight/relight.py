"""Light-transport-linear synthesis: HDR composition, episode interpolation,
the synthesis grid, lighting-condition shifts, and HDR condition scaling.

Everything here operates in linear radiance; linearity of light transport
is what makes weighted sums of per-light captures physically meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .hdr_core import RadianceImage, luminance

LIGHT_IDS = ("L1", "L2", "L3", "L4", "L5", "L6", "L7", "L8")

# Octagon layout: L3 is the right-side light, L2/L4 flank it. Overridable
# wherever a directional shift is applied.
RIGHT_SIDE_LIGHTS = ("L2", "L3", "L4")

SHIFT_KINDS = ("color-blue", "direction-right", "intensity-all")


@dataclass(frozen=True)
class LightSetting:
    id: str
    rgb: tuple
    power: float

    def __post_init__(self):
        if self.id not in LIGHT_IDS:
            raise ValidationError(f"unknown light id: {self.id!r}")
        rgb = tuple(int(v) for v in self.rgb)
        if len(rgb) != 3 or min(rgb) < 0 or max(rgb) > 255:
            raise ValidationError(f"light rgb must be three integers in [0, 255], got {self.rgb}")
        if not 0.0 <= self.power <= 1.0:
            raise ValidationError(f"light power must be in [0, 1], got {self.power}")
        object.__setattr__(self, "rgb", rgb)
        object.__setattr__(self, "power", float(self.power))


@dataclass(frozen=True)
class LightingCondition:
    """Per-light RGB + power for the eight cube lights, plus metadata."""

    lights: tuple
    label: str = ""
    measured_lux: float | None = None

    def __post_init__(self):
        lights = tuple(self.lights)
        if len(lights) != 8:
            raise ValidationError(f"a lighting condition has exactly 8 lights, got {len(lights)}")
        ids = [l.id for l in lights]
        if len(set(ids)) != 8:
            raise ValidationError(f"light ids must be distinct, got {ids}")
        if self.measured_lux is not None and self.measured_lux < 0:
            raise ValidationError("measured_lux must be >= 0")
        object.__setattr__(self, "lights", lights)

    def with_label(self, label: str) -> "LightingCondition":
        """Relabeled copy; skips revalidation of the already-validated lights."""
        clone = object.__new__(LightingCondition)
        object.__setattr__(clone, "lights", self.lights)
        object.__setattr__(clone, "label", label)
        object.__setattr__(clone, "measured_lux", self.measured_lux)
        return clone

    def light(self, light_id: str) -> LightSetting:
        for l in self.lights:
            if l.id == light_id:
                return l
        raise ValidationError(f"no such light: {light_id!r}")

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "measured_lux": self.measured_lux,
            "lights": [
                {"id": l.id, "rgb": list(l.rgb), "power": l.power} for l in self.lights
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LightingCondition":
        lights = tuple(
            LightSetting(id=e["id"], rgb=tuple(e["rgb"]), power=e["power"])
            for e in doc["lights"]
        )
        return cls(lights=lights, label=doc.get("label", ""),
                   measured_lux=doc.get("measured_lux"))


def uniform_condition(label: str, rgb=(255, 255, 255), power: float = 1.0,
                      active=LIGHT_IDS, measured_lux: float | None = None) -> LightingCondition:
    """All eight lights declared; inactive lights get power 0."""
    active = set(active)
    lights = tuple(
        LightSetting(id=i, rgb=rgb, power=power if i in active else 0.0)
        for i in LIGHT_IDS
    )
    return LightingCondition(lights=lights, label=label, measured_lux=measured_lux)


@dataclass(frozen=True)
class SynthesisGridSpec:
    """Which condition pairs to blend, at which interior lambdas, how many episodes."""

    pairs: tuple
    lambda_values: tuple
    episodes_per_condition: int

    def __post_init__(self):
        pairs = tuple((str(a), str(b)) for a, b in self.pairs)
        for a, b in pairs:
            if a == b:
                raise ValidationError(f"pair references the same label twice: {a!r}")
        lams = tuple(float(v) for v in self.lambda_values)
        if any(not 0.0 < v < 1.0 for v in lams):
            raise ValidationError("lambda values must lie strictly inside (0, 1)")
        if list(lams) != sorted(set(lams)):
            raise ValidationError("lambda values must be strictly increasing and unique")
        if self.episodes_per_condition < 0:
            raise ValidationError("episodes_per_condition must be >= 0")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "lambda_values", lams)

    def job_count(self) -> int:
        return len(self.pairs) * len(self.lambda_values) * self.episodes_per_condition

    def to_dict(self) -> dict:
        return {
            "pairs": [list(p) for p in self.pairs],
            "lambda_values": list(self.lambda_values),
            "episodes_per_condition": self.episodes_per_condition,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthesisGridSpec":
        return cls(pairs=tuple(tuple(p) for p in doc["pairs"]),
                   lambda_values=tuple(doc["lambda_values"]),
                   episodes_per_condition=int(doc["episodes_per_condition"]))


def default_lambda_values(count: int = 98, step: float = 0.01) -> tuple:
    """The 0.01-step interior lambda grid, lowest-first: 0.01 .. count*step."""
    values = tuple(round(step * i, 10) for i in range(1, count + 1))
    if values and values[-1] >= 1.0:
        raise ValidationError("lambda grid runs past 1.0; reduce count or step")
    return values


# ---------------------------------------------------------------------------
# HDR composition and interpolation

def compose_hdr(images, weights) -> RadianceImage:
    """Per-pixel weighted sum of linear radiance images."""
    images = list(images)
    weights = [float(w) for w in weights]
    if not images:
        raise ValidationError("compose_hdr needs at least one image")
    if len(weights) != len(images):
        raise ValidationError("weights must match images in length")
    if min(weights) < 0:
        raise ValidationError("weights must be non-negative")
    shape = images[0].data.shape
    for img in images[1:]:
        if img.data.shape != shape:
            raise ValidationError(f"image dimensions differ: {img.data.shape} vs {shape}")
    acc = np.zeros(shape, dtype=np.float32)
    for img, w in zip(images, weights):
        acc += img.data * np.float32(w)
    return RadianceImage(acc)


def interpolate_frames(f1: RadianceImage, f2: RadianceImage, lam: float) -> RadianceImage:
    if f1.data.shape != f2.data.shape:
        raise ValidationError(f"frame dimensions differ: {f1.data.shape} vs {f2.data.shape}")
    # f2 + lam * (f1 - f2) rather than lam*f1 + (1-lam)*f2 keeps rounding
    # error small; the final clamp guarantees every pixel lies inside
    # [min(f1, f2), max(f1, f2)] even when float32 rounding lands outside.
    blended = f2.data + np.float32(lam) * (f1.data - f2.data)
    lo = np.minimum(f1.data, f2.data)
    hi = np.maximum(f1.data, f2.data)
    return RadianceImage(np.clip(blended, lo, hi))


def interpolate_episode(episode1, episode2, lam: float) -> list:
    """Frame-wise convex blend: out[t] = lam * E1[t] + (1 - lam) * E2[t].

    The endpoints return the parent frames unchanged (bit-identical).
    Episodes must already be synchronized; only structural agreement is
    checked here.
    """
    e1 = list(episode1)
    e2 = list(episode2)
    if not 0.0 <= lam <= 1.0:
        raise ValidationError(f"lambda must be in [0, 1], got {lam}")
    if len(e1) != len(e2):
        raise ValidationError(f"episode frame counts differ: {len(e1)} vs {len(e2)}")
    for t, (f1, f2) in enumerate(zip(e1, e2)):
        if f1.data.shape != f2.data.shape:
            raise ValidationError(
                f"frame {t} dimensions differ: {f1.data.shape} vs {f2.data.shape}")
    if lam == 1.0:
        return e1
    if lam == 0.0:
        return e2
    return [interpolate_frames(f1, f2, lam) for f1, f2 in zip(e1, e2)]


# ---------------------------------------------------------------------------
# Synthesis grid

@dataclass(frozen=True)
class SynthesisJob:
    pair: tuple
    lam: float
    episode_index: int
    parent_a: str
    parent_b: str
    output_path: str

    def to_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "lambda": self.lam,
            "episode_index": self.episode_index,
            "parent_a": self.parent_a,
            "parent_b": self.parent_b,
            "output_path": self.output_path,
        }


def synthetic_label(pair, lam: float) -> str:
    return f"{pair[0]}+{pair[1]}@{lam:.4g}"


def generate_grid(spec: SynthesisGridSpec, real_manifests):
    """Expand a grid spec over real episodes into jobs plus synthetic manifests.

    ``real_manifests`` is an iterable of EpisodeManifest. Episodes are
    grouped by lighting label and matched pairwise in lexicographic
    episode_id order. Returns (jobs, synthetic_manifests), one of each per
    |pairs| x |lambdas| x episodes_per_condition cell.
    """
    from .dataset import synthesize_manifest

    by_label: dict = {}
    for m in real_manifests:
        by_label.setdefault(m.lighting.label, []).append(m)
    for label in by_label:
        by_label[label].sort(key=lambda m: m.episode_id)

    jobs = []
    manifests = []
    for pair in spec.pairs:
        for label in pair:
            got = len(by_label.get(label, ()))
            if got < spec.episodes_per_condition:
                raise ValidationError(
                    f"condition {label!r} resolves to {got} episodes, "
                    f"need {spec.episodes_per_condition}")
        parents_a = by_label[pair[0]]
        parents_b = by_label[pair[1]]
        for lam in spec.lambda_values:
            for idx in range(spec.episodes_per_condition):
                pa = parents_a[idx]
                pb = parents_b[idx]
                episode_id = f"{pa.episode_id}__{pb.episode_id}__lam{lam:.4f}"
                out = f"{pa.task}/{synthetic_label(pair, lam)}/{episode_id}"
                jobs.append(SynthesisJob(pair=pair, lam=lam, episode_index=idx,
                                         parent_a=pa.episode_id, parent_b=pb.episode_id,
                                         output_path=out))
                manifests.append(synthesize_manifest(pa, pb, lam, episode_id=episode_id))
    return jobs, manifests


# ---------------------------------------------------------------------------
# Lighting-condition shifts

def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def shift_lighting(condition: LightingCondition, kind: str, factor: float,
                   right_side=RIGHT_SIDE_LIGHTS) -> LightingCondition:
    """Attenuation transforms over a condition record.

    color-blue scales every light's blue component (round-half-up to an
    integer); direction-right scales the power of the right-side light
    set; intensity-all scales every light's power.
    """
    if not 0.0 <= factor <= 1.0:
        raise ValidationError(f"factor must be in [0, 1], got {factor}")
    if kind == "color-blue":
        lights = tuple(
            replace(l, rgb=(l.rgb[0], l.rgb[1], _round_half_up(l.rgb[2] * factor)))
            for l in condition.lights
        )
    elif kind == "direction-right":
        right = set(right_side)
        lights = tuple(
            replace(l, power=l.power * factor) if l.id in right else l
            for l in condition.lights
        )
    elif kind == "intensity-all":
        lights = tuple(replace(l, power=l.power * factor) for l in condition.lights)
    else:
        raise ValidationError(f"unknown shift kind: {kind!r} (expected one of {SHIFT_KINDS})")
    return replace(condition, lights=lights)


# ---------------------------------------------------------------------------
# HDR visual condition scaling

def scale_exposure(img: RadianceImage, stops: float) -> RadianceImage:
    """Multiply by 2**stops."""
    return RadianceImage(img.data * np.float32(2.0 ** stops))


def adjust_color(img: RadianceImage, gains) -> RadianceImage:
    """Per-channel multiply for warm/cool condition scaling."""
    gains = np.asarray(gains, dtype=np.float32)
    if gains.shape != (3,):
        raise ValidationError("adjust_color expects 3 per-channel gains")
    if gains.min() < 0:
        raise ValidationError("gains must be >= 0")
    if img.channels != 3:
        raise ValidationError("adjust_color requires a 3-channel image")
    return RadianceImage(img.data * gains[None, None, :])


TONE_MAP_EPS = 1e-6


def log_average_luminance(img: RadianceImage, eps: float = TONE_MAP_EPS) -> float:
    y = luminance(img).data if img.channels == 3 else img.data
    return float(np.exp(np.mean(np.log(eps + y.astype(np.float64)))))


def tone_map(img: RadianceImage, key: float = 0.18,
             white_point: float | None = None) -> RadianceImage:
    """Global photographic tone mapping into [0, 1].

    Scales by key / (log-average luminance + eps), then maps each channel
    through v * (1 + v / white^2) / (1 + v). The white point defaults to
    the scaled scene's maximum luminance.
    """
    if key <= 0:
        raise ValidationError("key must be > 0")
    if white_point is not None and white_point <= 0:
        raise ValidationError("white_point must be > 0")
    lavg = log_average_luminance(img)
    scaled = img.data.astype(np.float64) * (key / (lavg + TONE_MAP_EPS))
    if white_point is None:
        white_point = max(float(scaled.max()), TONE_MAP_EPS)
    mapped = scaled * (1.0 + scaled / (white_point * white_point)) / (1.0 + scaled)
    return RadianceImage(np.clip(mapped, 0.0, 1.0).astype(np.float32))
