"""Read-only client over a robolight dataset tree.

Iterates episodes and per-timestep records straight from the on-disk
layout (``<root>/<task>/<condition>/<episode>/manifest.json`` plus stream
files); never writes to the tree. Consumes only the public manifest
schema and file formats of the ``robolight`` package.
"""

from __future__ import annotations

import bisect
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from robolight.dataset import (EpisodeManifest, StreamDescriptor,
                               frame_path, read_manifest, read_vector_csv)
from robolight.errors import ValidationError
from robolight.fileio import read_pfm, read_png8, read_png16

PROVENANCE_KINDS = ("real", "synthetic")


@dataclass(frozen=True)
class LoaderFilters:
    """Episode selection: any unset field matches everything."""

    task: str | None = None
    condition_label: str | None = None
    provenance: str | None = None

    def __post_init__(self):
        if self.provenance is not None and self.provenance not in PROVENANCE_KINDS:
            raise ValidationError(
                f"unknown provenance filter: {self.provenance!r} "
                f"(expected one of {PROVENANCE_KINDS})")


@dataclass(frozen=True)
class LoaderHandle:
    """Lazy view over the episodes matching a filter set.

    Episode enumeration is lexicographic by episode_id and stable across
    runs. Handles are read-only; sharing a root between handles is safe.
    """

    dataset_root: Path
    filters: LoaderFilters = field(default_factory=LoaderFilters)
    streams: tuple | None = None

    def _candidate_dirs(self):
        task = self.filters.task or "*"
        label = self.filters.condition_label or "*"
        dirs = [p.parent for p in self.dataset_root.glob(f"{task}/{label}/*/manifest.json")]
        return sorted(dirs, key=lambda d: d.name)

    def episodes(self):
        """Yield (manifest, episode_dir) pairs in episode_id order."""
        for ep_dir in self._candidate_dirs():
            manifest = read_manifest(ep_dir / "manifest.json")
            if (self.filters.provenance is not None
                    and manifest.provenance.kind != self.filters.provenance):
                continue
            yield manifest, ep_dir

    def episode_ids(self):
        return [m.episode_id for m, _ in self.episodes()]

    def find(self, episode_id: str):
        for manifest, ep_dir in self.episodes():
            if manifest.episode_id == episode_id:
                return manifest, ep_dir
        raise ValidationError(f"no episode {episode_id!r} matches the current filters")


def open(root, task=None, condition_label=None, provenance=None, streams=None) -> LoaderHandle:
    """Handle over the episodes under ``root`` matching the given filters.

    A missing root is an error; filters matching zero episodes only warn.
    ``streams`` restricts which streams frames() yields (None = all).
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root does not exist: {root}")
    filters = LoaderFilters(task=task, condition_label=condition_label,
                            provenance=provenance)
    handle = LoaderHandle(dataset_root=root, filters=filters,
                          streams=tuple(streams) if streams is not None else None)
    if not any(True for _ in handle.episodes()):
        warnings.warn(f"no episodes under {root} match {filters}", stacklevel=2)
    return handle


def _expected_shape(descriptor: StreamDescriptor):
    """Manifest dims are (width, height[, channels]); arrays are (H, W[, C])."""
    dims = descriptor.dims
    if len(dims) == 3:
        return (dims[1], dims[0], dims[2])
    return (dims[1], dims[0])


def _read_image(path: Path, descriptor: StreamDescriptor) -> np.ndarray:
    if not path.exists():
        raise FileNotFoundError(f"stream {descriptor.name!r}: missing frame file {path}")
    if descriptor.format == "pfm":
        return read_pfm(path).data
    if descriptor.format == "png8":
        return read_png8(path).data
    return read_png16(path)


def _nearest_earlier(timestamps, ts: float) -> int:
    """Index of the latest sample at or before ts; -1 if none exists."""
    return bisect.bisect_right(timestamps, ts) - 1


def _select_streams(manifest: EpisodeManifest, selection):
    if selection is None:
        return list(manifest.streams)
    available = {s.name: s for s in manifest.streams}
    missing = [name for name in selection if name not in available]
    if missing:
        raise ValidationError(
            f"episode {manifest.episode_id!r} has no stream named {missing[0]!r}")
    return [available[name] for name in selection]


def frames(handle: LoaderHandle, episode_id: str):
    """Per-timestep records for one episode: {stream name: array, "timestamp_ms": float}.

    The record clock is the selected stream with the most frames; streams
    at lower rates are aligned to their nearest-earlier sample, so an
    aligned sample is never later than the record timestamp. Records
    start once every selected stream has a sample available.
    """
    manifest, ep_dir = handle.find(episode_id)
    selected = _select_streams(manifest, handle.streams)
    if not selected:
        raise ValidationError("stream selection is empty")
    reference = max(selected, key=lambda s: (len(manifest.timestamps_ms.get(s.name, ())), s.name))
    ref_ts = manifest.timestamps_ms.get(reference.name, ())

    vectors = {}
    for descriptor in selected:
        if descriptor.format == "csv":
            _, rows = read_vector_csv(ep_dir / descriptor.path_pattern)
            if rows.shape[1] != descriptor.dims[0]:
                raise ValidationError(
                    f"stream {descriptor.name!r}: rows have {rows.shape[1]} values, "
                    f"manifest declares {descriptor.dims[0]}")
            vectors[descriptor.name] = rows

    for t, ts in enumerate(ref_ts):
        if any(_nearest_earlier(manifest.timestamps_ms[s.name], ts) < 0 for s in selected):
            continue  # some stream has no sample yet at this timestamp
        record = {"timestamp_ms": float(ts)}
        for descriptor in selected:
            idx = _nearest_earlier(manifest.timestamps_ms[descriptor.name], ts)
            if descriptor.format == "csv":
                record[descriptor.name] = vectors[descriptor.name][idx]
            else:
                array = _read_image(frame_path(ep_dir, descriptor, idx), descriptor)
                expected = _expected_shape(descriptor)
                if array.shape != expected:
                    raise ValidationError(
                        f"stream {descriptor.name!r} frame {idx}: shape {array.shape} "
                        f"does not match manifest dims {expected}")
                record[descriptor.name] = array
        yield record
