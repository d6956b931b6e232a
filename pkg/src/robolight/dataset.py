"""Episode manifest schema, synchronization checks, and placement sampling.

Directory layout::

    <dataset_root>/<task>/<condition_label>/<episode_id>/manifest.json
    .../<stream>/<frame_index:06>.{png|pfm}     image streams
    .../<stream>.csv                            vector streams (header row,
                                                timestamp_ms column first)

Manifests serialize to canonical JSON (UTF-8, sorted keys, shortest
round-trip floats) so checksums are stable across builds.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ManifestError, SyncStructureError, ValidationError
from .fileio import atomic_write_bytes
from .relight import LightingCondition

TASKS = ("RGBStacking", "DonutHanging", "SparklingSorting")

STREAM_FORMATS = ("png8", "png16-raw", "pfm", "csv")

DEFAULT_SYNC_TOLERANCE_MS = 33.0  # one frame at 30 Hz
DEFAULT_MIN_SEPARATION_MM = 30.0


@dataclass(frozen=True)
class StreamDescriptor:
    name: str
    dims: tuple
    rate_hz: float
    path_pattern: str
    format: str

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims:
            raise ValidationError(f"stream {self.name!r}: dims must be non-empty")
        if self.rate_hz <= 0:
            raise ValidationError(f"stream {self.name!r}: rate must be > 0")
        if self.format not in STREAM_FORMATS:
            raise ValidationError(f"stream {self.name!r}: unknown format {self.format!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "rate_hz", float(self.rate_hz))


def _image_stream(name, dims, fmt):
    return StreamDescriptor(name=name, dims=dims, rate_hz=30.0,
                            path_pattern=name + "/{frame:06d}." + ("pfm" if fmt == "pfm" else "png"),
                            format=fmt)


# Required streams for real episodes. Image dims are (width, height[, channels]);
# the storage format is free (RGB may be kept as HDR or a RAW16 container).
REAL_STREAMS = (
    _image_stream("cam_top_rgb", (1920, 1080, 3), "png8"),
    _image_stream("cam_top_depth", (640, 480), "png16-raw"),
    _image_stream("cam_wrist_rgb", (640, 480, 3), "png8"),
    _image_stream("cam_wrist_depth", (640, 480), "png16-raw"),
    StreamDescriptor(name="force_torque", dims=(6,), rate_hz=10.0,
                     path_pattern="force_torque.csv", format="csv"),
    StreamDescriptor(name="proprioception", dims=(14,), rate_hz=30.0,
                     path_pattern="proprioception.csv", format="csv"),
)

_REAL_SCHEMA = {(s.name, s.dims, s.rate_hz) for s in REAL_STREAMS}


def real_streams(rgb_storage: str = "png8") -> tuple:
    """Required real-episode streams, with a choice of RGB storage format.

    The schema fixes names, dims, and rates; RGB frames may be kept as
    display PNGs, HDR PFMs, or RAW16 containers.
    """
    if rgb_storage not in ("png8", "pfm", "png16-raw"):
        raise ValidationError(f"unsupported RGB storage format: {rgb_storage!r}")
    return tuple(
        _image_stream(s.name, s.dims, rgb_storage) if s.name.endswith("_rgb") else s
        for s in REAL_STREAMS
    )


@dataclass(frozen=True)
class Placement:
    label: str
    position_mm: tuple

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position_mm)
        if len(pos) not in (2, 3) or not all(np.isfinite(pos)):
            raise ValidationError(f"placement {self.label!r}: position must be finite 2-D or 3-D mm")
        object.__setattr__(self, "position_mm", pos)


@dataclass(frozen=True)
class Provenance:
    kind: str
    parent_a: str | None = None
    parent_b: str | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.kind == "real":
            if self.parent_a or self.parent_b or self.lam is not None:
                raise ValidationError("real provenance carries no parents or lambda")
        elif self.kind == "synthetic":
            if not self.parent_a or not self.parent_b:
                raise ValidationError("synthetic provenance requires both parents")
            if self.parent_a == self.parent_b:
                raise ValidationError("synthetic parents must be distinct")
            if self.lam is None or not 0.0 < self.lam < 1.0:
                raise ValidationError(f"synthetic lambda must lie in (0, 1), got {self.lam}")
        else:
            raise ValidationError(f"unknown provenance kind: {self.kind!r}")


class _ValidatedTimestamps(dict):
    """Marker type for timestamp mappings that already passed validation."""


@dataclass(frozen=True)
class EpisodeManifest:
    episode_id: str
    task: str
    lighting: LightingCondition
    streams: tuple
    placements: tuple
    provenance: Provenance
    timestamps_ms: dict

    def __post_init__(self):
        if self.task not in TASKS:
            raise ManifestError(f"task: unknown task {self.task!r}")
        streams = tuple(self.streams)
        names = [s.name for s in streams]
        if len(set(names)) != len(names):
            raise ManifestError(f"streams: duplicate stream names in {names}")
        if self.provenance.kind == "real":
            schema = {(s.name, s.dims, s.rate_hz) for s in streams}
            if schema != _REAL_SCHEMA:
                missing = sorted(n for n, _, _ in _REAL_SCHEMA - schema)
                extra = sorted(n for n, _, _ in schema - _REAL_SCHEMA)
                raise ManifestError(
                    f"streams: real episode stream set does not match the required schema "
                    f"(missing/mismatched: {missing}, unexpected: {extra})")
        # Fast path: a _ValidatedTimestamps mapping came out of another
        # manifest's validation unchanged, so it needs no re-normalization.
        if type(self.timestamps_ms) is _ValidatedTimestamps:
            timestamps = self.timestamps_ms
        else:
            timestamps = _ValidatedTimestamps(
                (k, tuple(float(t) for t in v)) for k, v in self.timestamps_ms.items())
            for name, ts in timestamps.items():
                if any(b <= a for a, b in zip(ts, ts[1:])):
                    raise ManifestError(
                        f"timestamps_ms.{name}: timestamps must be strictly increasing")
        for name in timestamps:
            if name not in names:
                raise ManifestError(f"timestamps_ms.{name}: no such stream")
        object.__setattr__(self, "streams", streams)
        object.__setattr__(self, "placements", tuple(self.placements))
        object.__setattr__(self, "timestamps_ms", timestamps)

    def stream(self, name: str) -> StreamDescriptor:
        for s in self.streams:
            if s.name == name:
                return s
        raise ValidationError(f"no such stream: {name!r}")


# ---------------------------------------------------------------------------
# Serialization

def manifest_to_dict(m: EpisodeManifest) -> dict:
    prov = {"kind": m.provenance.kind}
    if m.provenance.kind == "synthetic":
        prov.update(parent_a=m.provenance.parent_a, parent_b=m.provenance.parent_b,
                    **{"lambda": m.provenance.lam})
    return {
        "episode_id": m.episode_id,
        "task": m.task,
        "lighting": m.lighting.to_dict(),
        "streams": [
            {"name": s.name, "dims": list(s.dims), "rate_hz": s.rate_hz,
             "path_pattern": s.path_pattern, "format": s.format}
            for s in m.streams
        ],
        "placements": [
            {"label": p.label, "position_mm": list(p.position_mm)} for p in m.placements
        ],
        "provenance": prov,
        "timestamps_ms": {k: list(v) for k, v in m.timestamps_ms.items()},
    }


def manifest_from_dict(doc: dict) -> EpisodeManifest:
    try:
        prov_doc = doc["provenance"]
        provenance = Provenance(kind=prov_doc["kind"],
                                parent_a=prov_doc.get("parent_a"),
                                parent_b=prov_doc.get("parent_b"),
                                lam=prov_doc.get("lambda"))
        streams = tuple(
            StreamDescriptor(name=s["name"], dims=tuple(s["dims"]), rate_hz=s["rate_hz"],
                             path_pattern=s["path_pattern"], format=s["format"])
            for s in doc["streams"]
        )
        placements = tuple(
            Placement(label=p["label"], position_mm=tuple(p["position_mm"]))
            for p in doc["placements"]
        )
        return EpisodeManifest(
            episode_id=doc["episode_id"],
            task=doc["task"],
            lighting=LightingCondition.from_dict(doc["lighting"]),
            streams=streams,
            placements=placements,
            provenance=provenance,
            timestamps_ms=doc["timestamps_ms"],
        )
    except KeyError as exc:
        raise ManifestError(f"missing required field: {exc.args[0]}") from exc


def canonical_json(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, ensure_ascii=False,
                       separators=(",", ":")) + "\n").encode("utf-8")


def write_manifest(m: EpisodeManifest, path) -> None:
    atomic_write_bytes(path, canonical_json(manifest_to_dict(m)))


def read_manifest(path) -> EpisodeManifest:
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON: {exc}") from exc
    try:
        return manifest_from_dict(doc)
    except (ManifestError, ValidationError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Directory layout

def episode_dir(dataset_root, task: str, condition_label: str, episode_id: str) -> Path:
    return Path(dataset_root) / task / condition_label / episode_id


def manifest_path(ep_dir) -> Path:
    return Path(ep_dir) / "manifest.json"


def iter_manifest_paths(dataset_root):
    root = Path(dataset_root)
    yield from sorted(root.glob("*/*/*/manifest.json"))


def frame_path(ep_dir, descriptor: StreamDescriptor, frame_index: int) -> Path:
    return Path(ep_dir) / descriptor.path_pattern.format(frame=frame_index)


def write_vector_csv(path, timestamps_ms, rows: np.ndarray) -> None:
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] != len(timestamps_ms):
        raise ValidationError("vector stream rows must be (T, D) with one row per timestamp")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp_ms"] + [f"v{i}" for i in range(rows.shape[1])])
        for ts, row in zip(timestamps_ms, rows):
            writer.writerow([repr(float(ts))] + [repr(float(v)) for v in row])


def read_vector_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "timestamp_ms":
            raise ValidationError(f"{path}: first CSV column must be timestamp_ms")
        timestamps = []
        rows = []
        for line in reader:
            timestamps.append(float(line[0]))
            rows.append([float(v) for v in line[1:]])
    return np.asarray(timestamps, dtype=np.float64), np.asarray(rows, dtype=np.float64)


# ---------------------------------------------------------------------------
# Synchronization verification

@dataclass(frozen=True)
class SyncReport:
    passed: bool
    tolerance_ms: float
    max_offset_ms: dict

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tolerance_ms": self.tolerance_ms,
                "max_offset_ms": dict(self.max_offset_ms)}


def verify_sync(episodes, tolerance_ms: float = DEFAULT_SYNC_TOLERANCE_MS) -> SyncReport:
    """Frame-index-aligned pairwise timestamp agreement across episodes.

    Structural disagreements (task, stream set, frame counts) raise
    SyncStructureError; tolerance violations come back as a failed report.
    """
    episodes = list(episodes)
    if len(episodes) < 2:
        raise SyncStructureError("verify_sync needs at least 2 episodes")
    ref = episodes[0]
    names = sorted(s.name for s in ref.streams)
    for ep in episodes[1:]:
        if ep.task != ref.task:
            raise SyncStructureError(f"task mismatch: {ep.task!r} vs {ref.task!r}")
        if sorted(s.name for s in ep.streams) != names:
            raise SyncStructureError(f"stream set mismatch in episode {ep.episode_id!r}")
    offsets = {}
    for name in names:
        lengths = {len(ep.timestamps_ms.get(name, ())) for ep in episodes}
        if len(lengths) != 1:
            raise SyncStructureError(
                f"stream {name!r}: frame counts differ across episodes: {sorted(lengths)}")
        count = lengths.pop()
        if count == 0:
            offsets[name] = 0.0
            continue
        stacked = np.array([ep.timestamps_ms[name] for ep in episodes], dtype=np.float64)
        offsets[name] = float((stacked.max(axis=0) - stacked.min(axis=0)).max())
    passed = all(v <= tolerance_ms for v in offsets.values())
    return SyncReport(passed=passed, tolerance_ms=float(tolerance_ms), max_offset_ms=offsets)


# ---------------------------------------------------------------------------
# Placement sampling

@dataclass(frozen=True)
class PlacementPatch:
    """Axis-aligned rectangle in robot-base-frame millimeters.

    Zero-extent bounds are accepted as a degenerate test override; regular
    specs should use positive-area patches.
    """

    label: str
    x_range: tuple
    y_range: tuple

    def __post_init__(self):
        xr = (float(self.x_range[0]), float(self.x_range[1]))
        yr = (float(self.y_range[0]), float(self.y_range[1]))
        if xr[1] < xr[0] or yr[1] < yr[0]:
            raise ValidationError(f"patch {self.label!r}: ranges must be ordered")
        object.__setattr__(self, "x_range", xr)
        object.__setattr__(self, "y_range", yr)


@dataclass(frozen=True)
class PlacementSpec:
    task: str
    patches: tuple

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"unknown task: {self.task!r}")
        patches = tuple(self.patches)
        if not patches:
            raise ValidationError("placement spec needs at least one patch")
        object.__setattr__(self, "patches", patches)


def sample_placements(spec: PlacementSpec, seed: int, n: int,
                      min_separation_mm: float = DEFAULT_MIN_SEPARATION_MM,
                      max_attempts: int = 1000):
    """n placement sets, uniform i.i.d. inside each patch, seeded.

    Pairwise object separation is enforced by rejection; exhausting the
    attempt budget raises (patches too small for the separation).
    """
    from .errors import JobBudgetError

    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    sets = []
    for _ in range(n):
        for _attempt in range(max_attempts):
            points = [
                (rng.uniform(p.x_range[0], p.x_range[1]),
                 rng.uniform(p.y_range[0], p.y_range[1]))
                for p in spec.patches
            ]
            ok = True
            for i in range(len(points)):
                for j in range(i + 1, len(points)):
                    dx = points[i][0] - points[j][0]
                    dy = points[i][1] - points[j][1]
                    if (dx * dx + dy * dy) ** 0.5 < min_separation_mm:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                sets.append(tuple(
                    Placement(label=p.label, position_mm=pt)
                    for p, pt in zip(spec.patches, points)
                ))
                break
        else:
            raise JobBudgetError(
                f"rejection budget exhausted after {max_attempts} attempts; "
                f"patches too small for separation {min_separation_mm} mm")
    return sets


# ---------------------------------------------------------------------------
# Synthetic manifests

def synthesize_manifest(parent_a: EpisodeManifest, parent_b: EpisodeManifest,
                        lam: float, episode_id: str | None = None) -> EpisodeManifest:
    """Manifest for a blended episode.

    Streams, placements, timestamps, and non-image data descriptors are
    inherited from parent A (episodes are synchronized by construction);
    provenance records both parents and lambda.
    """
    if parent_a.task != parent_b.task:
        raise ValidationError(
            f"parents belong to different tasks: {parent_a.task} vs {parent_b.task}")
    if episode_id is None:
        episode_id = f"{parent_a.episode_id}__{parent_b.episode_id}__lam{lam:.4f}"
    label = f"{parent_a.lighting.label}+{parent_b.lighting.label}@{lam:.4g}"
    return EpisodeManifest(
        episode_id=episode_id,
        task=parent_a.task,
        lighting=parent_a.lighting.with_label(label),
        streams=parent_a.streams,
        placements=parent_a.placements,
        provenance=Provenance(kind="synthetic", parent_a=parent_a.episode_id,
                              parent_b=parent_b.episode_id, lam=float(lam)),
        timestamps_ms=parent_a.timestamps_ms,
    )
