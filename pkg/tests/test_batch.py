import numpy as np
import pytest

from helpers import make_episode_frames, make_real_manifest, write_test_episode
from robolight import dataset as ds
from robolight.batch import run_process_job, run_synthesis_job, write_episode
from robolight.calibration import CalibrationProfile
from robolight.errors import ValidationError
from robolight.fileio import (read_pfm, read_png8, read_png16,
                              read_raw_container, write_raw_container)
from robolight.raw_pipeline import RawFrame, normalize_raw


class TestWriteEpisode:
    def test_materializes_all_streams(self, tmp_path):
        manifest, ep_dir, _ = write_test_episode(tmp_path, "ep-001", "Bright", seed=0)
        assert (ep_dir / "manifest.json").exists()
        assert (ep_dir / "cam_top_rgb" / "000000.pfm").exists()
        assert (ep_dir / "cam_top_rgb" / "000001.pfm").exists()
        assert (ep_dir / "cam_top_depth" / "000000.png").exists()
        assert (ep_dir / "force_torque.csv").exists()
        assert (ep_dir / "proprioception.csv").exists()
        back = ds.read_manifest(ds.manifest_path(ep_dir))
        assert back.episode_id == "ep-001"

    def test_missing_vector_stream_rejected(self, tmp_path):
        manifest = make_real_manifest("ep-002", "Bright")
        image_frames, _ = make_episode_frames(manifest, seed=1)
        with pytest.raises(ValidationError, match="force_torque"):
            write_episode(tmp_path, manifest, image_frames, {})

    def test_frame_count_mismatch_rejected(self, tmp_path):
        manifest = make_real_manifest("ep-003", "Bright", frames=3)
        image_frames, vectors = make_episode_frames(manifest, seed=2)
        image_frames["cam_top_rgb"] = image_frames["cam_top_rgb"][:2]
        with pytest.raises(ValidationError, match="cam_top_rgb"):
            write_episode(tmp_path, manifest, image_frames, vectors)


class TestRunSynthesisJob:
    def make_parents(self, root, rgb_storage="pfm"):
        _, dir_a, frames_a = write_test_episode(root, "ep-a", "Bright", seed=10,
                                                rgb_storage=rgb_storage)
        _, dir_b, frames_b = write_test_episode(root, "ep-b", "Dark", seed=11,
                                                rgb_storage=rgb_storage)
        return dir_a, dir_b, frames_a, frames_b

    def run(self, root, dir_a, dir_b, lam=0.25):
        out_dir = root / "out" / "synthetic-ep"
        payload = {"lambda": lam, "episode_id": "synthetic-ep",
                   "parent_a_dir": str(dir_a), "parent_b_dir": str(dir_b),
                   "output_dir": str(out_dir)}
        manifest_file = run_synthesis_job(payload)
        return out_dir, ds.read_manifest(manifest_file)

    def test_pfm_streams_blend_linearly(self, tmp_path):
        dir_a, dir_b, frames_a, frames_b = self.make_parents(tmp_path)
        lam = 0.25
        out_dir, manifest = self.run(tmp_path, dir_a, dir_b, lam)
        assert manifest.provenance.kind == "synthetic"
        assert manifest.provenance.lam == lam
        for idx in range(2):
            a = frames_a["cam_top_rgb"][idx].data
            b = frames_b["cam_top_rgb"][idx].data
            blended = read_pfm(out_dir / "cam_top_rgb" / f"{idx:06d}.pfm").data
            expected = b + np.float32(lam) * (a - b)
            assert np.allclose(blended, expected, atol=1e-6)
            assert np.all(blended >= np.minimum(a, b))
            assert np.all(blended <= np.maximum(a, b))

    def test_depth_and_vectors_copied_from_parent_a(self, tmp_path):
        dir_a, dir_b, frames_a, _ = self.make_parents(tmp_path)
        out_dir, _ = self.run(tmp_path, dir_a, dir_b)
        for idx in range(2):
            out_depth = read_png16(out_dir / "cam_top_depth" / f"{idx:06d}.png")
            assert np.array_equal(out_depth, frames_a["cam_top_depth"][idx])
        assert ((out_dir / "force_torque.csv").read_bytes()
                == (dir_a / "force_torque.csv").read_bytes())

    def test_raw_rgb_streams_blend_and_reencode(self, tmp_path):
        root = tmp_path
        for episode_id, label, seed in (("ep-a", "Bright", 20), ("ep-b", "Dark", 21)):
            manifest = make_real_manifest(episode_id, label, frames=2,
                                          rgb_storage="png16-raw")
            image_frames, vectors = make_episode_frames(manifest, seed)
            for name in ("cam_top_rgb", "cam_wrist_rgb"):
                image_frames[name] = [
                    RawFrame(data=np.random.default_rng(seed + i).integers(
                        0, 65536, (8, 8, 3), dtype=np.uint16), cfa="NONE-RGB")
                    for i in range(2)
                ]
            write_episode(root, manifest, image_frames, vectors)
        dir_a = root / "RGBStacking" / "Bright" / "ep-a"
        dir_b = root / "RGBStacking" / "Dark" / "ep-b"
        out_dir, _ = self.run(tmp_path, dir_a, dir_b, lam=0.5)
        out = read_raw_container(out_dir / "cam_top_rgb" / "000000.png")
        a = normalize_raw(read_raw_container(dir_a / "cam_top_rgb" / "000000.png"))
        b = normalize_raw(read_raw_container(dir_b / "cam_top_rgb" / "000000.png"))
        expected = np.floor((b + 0.5 * (a - b)) * 65535.0 + 0.5)
        assert np.array_equal(out.data, expected.astype(np.uint16))

    def test_deterministic_outputs(self, tmp_path):
        dir_a, dir_b, _, _ = self.make_parents(tmp_path)
        out1, _ = self.run(tmp_path, dir_a, dir_b)
        first = (out1 / "cam_top_rgb" / "000000.pfm").read_bytes()
        (out1 / "cam_top_rgb" / "000000.pfm").unlink()
        self.run(tmp_path, dir_a, dir_b)
        assert (out1 / "cam_top_rgb" / "000000.pfm").read_bytes() == first


class TestRunProcessJob:
    def test_writes_png_and_optional_hdr(self, tmp_path):
        rng = np.random.default_rng(30)
        frame = RawFrame(data=rng.integers(0, 65536, (16, 16), dtype=np.uint16), cfa="RGGB")
        src = tmp_path / "frame.png"
        write_raw_container(src, frame)
        out = tmp_path / "out" / "frame.png"
        result = run_process_job({"input": str(src), "output": str(out), "save_hdr": True})
        assert result == str(out)
        assert read_png8(out).data.shape == (16, 16, 3)
        assert read_pfm(out.with_suffix(".pfm")).data.shape == (16, 16, 3)

    def test_honors_profile_and_config(self, tmp_path):
        frame = RawFrame(data=np.full((8, 8, 3), 32768, np.uint16), cfa="NONE-RGB")
        src = tmp_path / "frame.png"
        write_raw_container(src, frame)
        profile_path = tmp_path / "profile.json"
        CalibrationProfile(exposure=2.0).save(profile_path)
        out = tmp_path / "boosted.png"
        run_process_job({"input": str(src), "output": str(out),
                         "profile": str(profile_path),
                         "config": {"denoise": False, "gamma_encode": False}})
        boosted = read_png8(out)
        assert np.all(boosted.data == 255)  # 0.5 * exposure 2.0 -> full scale linear
