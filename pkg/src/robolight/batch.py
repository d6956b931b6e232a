"""Top-level worker functions and episode read/write plumbing for the CLI.

Workers must stay module-level and take one picklable payload dict so the
process pool in jobs.py can dispatch them.

Synthesis blending rules per stream:

* ``pfm`` and lighting-dependent ``png16-raw`` streams are blended
  frame-wise in linear space (RAW16 counts are normalized first; the
  blend is re-encoded with parent A's black/white levels);
* depth streams, ``png8`` streams, and CSV vector streams are copied from
  parent A — depth and proprioceptive data are lighting-independent and
  the trajectories are synchronized by construction, while 8-bit frames
  live in a gamma-encoded space where linear blending would be invalid.
"""

from __future__ import annotations

import shutil
from pathlib import Path

import numpy as np

from . import dataset as ds
from .calibration import CalibrationProfile
from .errors import ValidationError
from .fileio import (read_pfm, read_png8, read_raw_container, write_pfm,
                     write_png8, write_raw_container)
from .hdr_core import RadianceImage
from .raw_pipeline import PipelineConfig, RawFrame, process_frame


def _frame_count(manifest: ds.EpisodeManifest, name: str) -> int:
    return len(manifest.timestamps_ms.get(name, ()))


def _is_blendable(descriptor: ds.StreamDescriptor) -> bool:
    if "depth" in descriptor.name:
        return False
    return descriptor.format in ("pfm", "png16-raw")


def write_episode(dataset_root, manifest: ds.EpisodeManifest, image_frames: dict,
                  vector_streams: dict | None = None, condition_label: str | None = None) -> Path:
    """Materialize an episode directory from in-memory stream data.

    ``image_frames`` maps stream name to a list of RadianceImage (pfm),
    LdrImage (png8), RawFrame or uint16 array (png16-raw).
    ``vector_streams`` maps stream name to a (T, D) array.
    """
    label = condition_label if condition_label is not None else manifest.lighting.label
    ep_dir = ds.episode_dir(dataset_root, manifest.task, label, manifest.episode_id)
    ep_dir.mkdir(parents=True, exist_ok=True)
    for descriptor in manifest.streams:
        name = descriptor.name
        if descriptor.format == "csv":
            rows = (vector_streams or {}).get(name)
            if rows is None:
                raise ValidationError(f"missing vector data for stream {name!r}")
            ds.write_vector_csv(ep_dir / descriptor.path_pattern,
                                manifest.timestamps_ms[name], rows)
            continue
        frames = image_frames.get(name)
        if frames is None:
            raise ValidationError(f"missing frames for stream {name!r}")
        if len(frames) != _frame_count(manifest, name):
            raise ValidationError(
                f"stream {name!r}: {len(frames)} frames but "
                f"{_frame_count(manifest, name)} timestamps")
        for idx, frame in enumerate(frames):
            path = ds.frame_path(ep_dir, descriptor, idx)
            path.parent.mkdir(parents=True, exist_ok=True)
            if descriptor.format == "pfm":
                write_pfm(path, frame)
            elif descriptor.format == "png8":
                write_png8(path, frame)
            elif descriptor.format == "png16-raw":
                if isinstance(frame, RawFrame):
                    write_raw_container(path, frame)
                else:
                    from .fileio import write_png16
                    write_png16(path, np.asarray(frame, dtype=np.uint16))
    ds.write_manifest(manifest, ds.manifest_path(ep_dir))
    return ep_dir


def _read_hdr_frame(ep_dir, descriptor: ds.StreamDescriptor, idx: int):
    """Linear frame plus re-encode metadata for a blendable stream."""
    path = ds.frame_path(ep_dir, descriptor, idx)
    if descriptor.format == "pfm":
        return read_pfm(path).data, None
    frame = read_raw_container(path)
    from .raw_pipeline import normalize_raw
    return normalize_raw(frame), (frame.cfa, frame.black_level, frame.white_level)


def run_synthesis_job(payload: dict) -> str:
    """Blend one episode pair at one lambda; returns the manifest path."""
    lam = float(payload["lambda"])
    parent_a_dir = Path(payload["parent_a_dir"])
    parent_b_dir = Path(payload["parent_b_dir"])
    out_dir = Path(payload["output_dir"])
    ma = ds.read_manifest(ds.manifest_path(parent_a_dir))
    mb = ds.read_manifest(ds.manifest_path(parent_b_dir))
    manifest = ds.synthesize_manifest(ma, mb, lam, episode_id=payload["episode_id"])
    out_dir.mkdir(parents=True, exist_ok=True)
    for descriptor in manifest.streams:
        if descriptor.format == "csv":
            shutil.copyfile(parent_a_dir / descriptor.path_pattern,
                            out_dir / descriptor.path_pattern)
            continue
        count = _frame_count(manifest, descriptor.name)
        blend = _is_blendable(descriptor)
        for idx in range(count):
            dst = ds.frame_path(out_dir, descriptor, idx)
            dst.parent.mkdir(parents=True, exist_ok=True)
            src_a = ds.frame_path(parent_a_dir, descriptor, idx)
            if not blend:
                shutil.copyfile(src_a, dst)
                continue
            a, meta = _read_hdr_frame(parent_a_dir, descriptor, idx)
            b, _ = _read_hdr_frame(parent_b_dir, descriptor, idx)
            if a.shape != b.shape:
                raise ValidationError(
                    f"{descriptor.name} frame {idx}: parent shapes differ {a.shape} vs {b.shape}")
            # Same bounded blend as interpolate_frames: clamp to the
            # parents' per-pixel envelope so rounding can't escape it.
            blended = b + np.float32(lam) * (a - b)
            blended = np.clip(blended, np.minimum(a, b), np.maximum(a, b))
            if descriptor.format == "pfm":
                write_pfm(dst, RadianceImage(blended))
            else:
                cfa, black, white = meta
                counts = np.floor(blended * np.float32(white - black) + np.float32(black) + 0.5)
                counts = np.clip(counts, 0, 65535).astype(np.uint16)
                write_raw_container(dst, RawFrame(data=counts, cfa=cfa,
                                                  black_level=black, white_level=white))
    manifest_file = ds.manifest_path(out_dir)
    ds.write_manifest(manifest, manifest_file)
    return str(manifest_file)


def run_process_job(payload: dict) -> str:
    """Process one RAW container to an 8-bit PNG; returns the output path."""
    frame = read_raw_container(payload["input"])
    profile = CalibrationProfile.load(payload["profile"]) if payload.get("profile") else CalibrationProfile()
    cfg = PipelineConfig(**payload.get("config", {}))
    ldr = process_frame(frame, profile, cfg)
    out = Path(payload["output"])
    out.parent.mkdir(parents=True, exist_ok=True)
    write_png8(out, ldr)
    if payload.get("save_hdr"):
        from .raw_pipeline import process_hdr
        hdr = process_hdr(frame, profile, cfg)
        write_pfm(out.with_suffix(".pfm"), hdr)
    return str(out)
