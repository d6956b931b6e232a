"""Fidelity metrics and roll-out log statistics.

PSNR and the histogram-intersection distance quantify how close a
synthesized frame is to ground truth; the roll-out statistics reduce
evaluation logs into per-object stage success rates and prediction
errors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hdr_core import LdrImage, LuminanceHistogram, RadianceImage

PSNR_INF = math.inf


def mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))


def psnr(a, b, peak: float | None = None) -> float:
    """10 * log10(peak^2 / MSE); identical images report +inf.

    Peak defaults to 255 for LDR pairs and 1.0 for normalized HDR pairs.
    Mixed domains are rejected.
    """
    if isinstance(a, LdrImage) and isinstance(b, LdrImage):
        default_peak = 255.0
        a_data, b_data = a.data, b.data
    elif isinstance(a, RadianceImage) and isinstance(b, RadianceImage):
        default_peak = 1.0
        a_data, b_data = a.data, b.data
    elif isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
        if peak is None:
            raise ValidationError("peak is required for raw array input")
        a_data, b_data = a, b
        default_peak = peak
    else:
        raise ValidationError(
            f"psnr domain mismatch: {type(a).__name__} vs {type(b).__name__}")
    if a_data.shape != b_data.shape:
        raise ValidationError(f"psnr dimension mismatch: {a_data.shape} vs {b_data.shape}")
    peak = default_peak if peak is None else float(peak)
    err = mse(a_data, b_data)
    if err == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(peak * peak / err)


def histogram_distance(h1: LuminanceHistogram, h2: LuminanceHistogram) -> float:
    """1 - intersection of the normalized histograms; in [0, 1]."""
    if h1.bin_count != h2.bin_count or (h1.lo, h1.hi) != (h2.lo, h2.hi):
        raise ValidationError("histograms must share bin count and range")
    if h1.domain_tag != h2.domain_tag:
        raise ValidationError(
            f"histogram domain mismatch: {h1.domain_tag} vs {h2.domain_tag}")
    p1 = h1.normalized()
    p2 = h2.normalized()
    return float(1.0 - np.minimum(p1, p2).sum())


# ---------------------------------------------------------------------------
# Roll-out logs

@dataclass(frozen=True)
class StageResult:
    object: str
    success: bool
    predicted_position_mm: tuple
    true_position_mm: tuple

    def __post_init__(self):
        pred = tuple(float(v) for v in self.predicted_position_mm)
        true = tuple(float(v) for v in self.true_position_mm)
        if len(pred) != 3 or len(true) != 3:
            raise ValidationError("stage positions must be 3-D mm triples")
        if not all(np.isfinite(pred + true)):
            raise ValidationError("stage positions must be finite")
        object.__setattr__(self, "predicted_position_mm", pred)
        object.__setattr__(self, "true_position_mm", true)

    @property
    def error_mm(self) -> float:
        return math.dist(self.predicted_position_mm, self.true_position_mm)


@dataclass(frozen=True)
class RolloutRecord:
    task: str
    lighting_label: str
    stages: tuple

    def __post_init__(self):
        stages = tuple(self.stages)
        if not stages:
            raise ValidationError("a roll-out must have at least one stage")
        object.__setattr__(self, "stages", stages)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "lighting_label": self.lighting_label,
            "stages": [
                {"object": s.object, "success": s.success,
                 "predicted_position_mm": list(s.predicted_position_mm),
                 "true_position_mm": list(s.true_position_mm)}
                for s in self.stages
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RolloutRecord":
        stages = tuple(
            StageResult(object=s["object"], success=bool(s["success"]),
                        predicted_position_mm=tuple(s["predicted_position_mm"]),
                        true_position_mm=tuple(s["true_position_mm"]))
            for s in doc["stages"]
        )
        return cls(task=doc["task"], lighting_label=doc.get("lighting_label", ""), stages=stages)


def _stage_objects(rollouts) -> list:
    rollouts = list(rollouts)
    if not rollouts:
        raise ValidationError("no roll-outs given")
    objects = [s.object for s in rollouts[0].stages]
    for r in rollouts[1:]:
        if [s.object for s in r.stages] != objects or r.task != rollouts[0].task:
            raise ValidationError("roll-outs have heterogeneous task or stage structure")
    return objects


def stage_success_rates(rollouts) -> dict:
    """Per-object success fraction over roll-outs."""
    rollouts = list(rollouts)
    objects = _stage_objects(rollouts)
    rates = {}
    for i, obj in enumerate(objects):
        rates[obj] = sum(1 for r in rollouts if r.stages[i].success) / len(rollouts)
    return rates


def prediction_error(rollouts) -> dict:
    """Per-object mean Euclidean distance (mm) between predicted and true positions.

    Averaged over all attempts (successes and failures alike).
    """
    rollouts = list(rollouts)
    objects = _stage_objects(rollouts)
    errors = {}
    for i, obj in enumerate(objects):
        errors[obj] = float(np.mean([r.stages[i].error_mm for r in rollouts]))
    return errors


def read_rollout_log(path):
    """JSON lines, one RolloutRecord per line."""
    records = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            records.append(RolloutRecord.from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise ValidationError(f"{path}:{lineno}: malformed roll-out record: {exc}") from exc
    return records


def write_rollout_log(path, records) -> None:
    payload = "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)
    Path(path).write_text(payload)
