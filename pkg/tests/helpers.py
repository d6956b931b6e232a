"""Shared test fixtures-as-functions for the primary suite."""

import numpy as np

from robolight.batch import write_episode
from robolight.dataset import (EpisodeManifest, Placement, Provenance,
                               real_streams)
from robolight.hdr_core import LdrImage, RadianceImage
from robolight.relight import uniform_condition

# Pass/fail lines recorded by the acceptance tests; echoed after the run so
# the scorecard survives pytest's output capture.
ACCEPTANCE_LINES = []


def make_real_manifest(episode_id, label, task="RGBStacking", frames=3,
                       rgb_storage="png8", t0=1.0):
    streams = real_streams(rgb_storage)
    timestamps = {
        s.name: tuple(t0 + i * (1000.0 / s.rate_hz) for i in range(frames))
        for s in streams
    }
    return EpisodeManifest(
        episode_id=episode_id,
        task=task,
        lighting=uniform_condition(label),
        streams=streams,
        placements=(Placement("red_cube", (100.0, 200.0)),),
        provenance=Provenance(kind="real"),
        timestamps_ms=timestamps,
    )


def make_episode_frames(manifest, seed, size=(8, 8)):
    """In-memory stream data matching a manifest; frames are small on purpose."""
    rng = np.random.default_rng(seed)
    h, w = size
    image_frames = {}
    vector_streams = {}
    for s in manifest.streams:
        n = len(manifest.timestamps_ms[s.name])
        if s.format == "csv":
            vector_streams[s.name] = rng.random((n, s.dims[0]))
        elif s.format == "pfm":
            image_frames[s.name] = [
                RadianceImage(rng.random((h, w, 3)).astype(np.float32) * 2.0)
                for _ in range(n)
            ]
        elif s.format == "png8":
            image_frames[s.name] = [
                LdrImage(rng.integers(0, 256, (h, w, 3), dtype=np.uint8))
                for _ in range(n)
            ]
        else:  # png16-raw (depth in tests: plain 16-bit PNG, no sidecar)
            image_frames[s.name] = [
                rng.integers(0, 65536, (h, w), dtype=np.uint16) for _ in range(n)
            ]
    return image_frames, vector_streams


def write_test_episode(dataset_root, episode_id, label, seed, frames=2,
                       rgb_storage="pfm", size=(8, 8)):
    manifest = make_real_manifest(episode_id, label, frames=frames,
                                  rgb_storage=rgb_storage)
    image_frames, vector_streams = make_episode_frames(manifest, seed, size)
    ep_dir = write_episode(dataset_root, manifest, image_frames, vector_streams)
    return manifest, ep_dir, image_frames


def gradient_albedo(size=16):
    ramp = np.linspace(0.1, 0.9, size, dtype=np.float32)
    albedo = np.empty((size, size, 3), dtype=np.float32)
    albedo[:, :, 0] = ramp[None, :]
    albedo[:, :, 1] = ramp[:, None]
    albedo[:, :, 2] = 0.5
    return RadianceImage(albedo)
