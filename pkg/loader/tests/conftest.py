import numpy as np
import pytest

from robolight.batch import write_episode
from robolight.dataset import (EpisodeManifest, Placement, Provenance,
                               real_streams, synthesize_manifest)
from robolight.hdr_core import LdrImage
from robolight.relight import uniform_condition

# Pass/fail lines recorded by the acceptance tests; echoed after the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("loader acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_lines():
    return ACCEPTANCE_LINES


def table_manifest(episode_id, label, frames=2, t0=0.0):
    """Real manifest with the full required stream schema."""
    streams = real_streams("png8")
    timestamps = {
        s.name: tuple(t0 + i * (1000.0 / s.rate_hz) for i in range(frames))
        for s in streams
    }
    return EpisodeManifest(
        episode_id=episode_id,
        task="RGBStacking",
        lighting=uniform_condition(label),
        streams=streams,
        placements=(Placement("red_cube", (100.0, 200.0)),),
        provenance=Provenance(kind="real"),
        timestamps_ms=timestamps,
    )


def full_size_frames(manifest, seed):
    """Stream data at the exact dims the manifest declares.

    Frames are mostly flat so the full-resolution PNGs stay small and fast.
    """
    rng = np.random.default_rng(seed)
    image_frames = {}
    vectors = {}
    for s in manifest.streams:
        n = len(manifest.timestamps_ms[s.name])
        if s.format == "csv":
            vectors[s.name] = rng.random((n, s.dims[0]))
        elif s.format == "png8":
            w, h, c = s.dims
            frames = []
            for i in range(n):
                data = np.full((h, w, c), 32 + 8 * i, np.uint8)
                data[:16, :16] = rng.integers(0, 256, (16, 16, c), dtype=np.uint8)
                frames.append(LdrImage(data))
            image_frames[s.name] = frames
        else:  # 16-bit depth
            w, h = s.dims
            image_frames[s.name] = [
                np.full((h, w), 1000 + 10 * i, np.uint16) for i in range(n)
            ]
    return image_frames, vectors


@pytest.fixture(scope="module")
def mini_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("dataset")
    manifests = []
    for i, label in enumerate(("Bright", "Dark")):
        manifest = table_manifest(f"ep-{label.lower()}-0", label, frames=2)
        image_frames, vectors = full_size_frames(manifest, seed=70 + i)
        write_episode(root, manifest, image_frames, vectors)
        manifests.append(manifest)
    # one synthetic episode reusing parent A's frame data
    synth = synthesize_manifest(manifests[0], manifests[1], 0.5)
    image_frames, vectors = full_size_frames(synth, seed=72)
    write_episode(root, synth, image_frames, vectors)
    return root
