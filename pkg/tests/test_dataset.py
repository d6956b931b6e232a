import dataclasses

import numpy as np
import pytest

from helpers import make_real_manifest
from robolight.dataset import (DEFAULT_SYNC_TOLERANCE_MS, REAL_STREAMS, TASKS,
                               EpisodeManifest, Placement, PlacementPatch,
                               PlacementSpec, Provenance, StreamDescriptor,
                               canonical_json, episode_dir, frame_path,
                               iter_manifest_paths, manifest_from_dict,
                               manifest_path, manifest_to_dict, read_manifest,
                               read_vector_csv, real_streams,
                               sample_placements, synthesize_manifest,
                               verify_sync, write_manifest, write_vector_csv)
from robolight.errors import (JobBudgetError, ManifestError,
                              SyncStructureError, ValidationError)


class TestStreamSchema:
    def test_required_streams(self):
        by_name = {s.name: s for s in REAL_STREAMS}
        assert by_name["cam_top_rgb"].dims == (1920, 1080, 3)
        assert by_name["cam_top_rgb"].rate_hz == 30.0
        assert by_name["cam_top_depth"].dims == (640, 480)
        assert by_name["cam_wrist_rgb"].dims == (640, 480, 3)
        assert by_name["cam_wrist_depth"].dims == (640, 480)
        assert by_name["force_torque"].dims == (6,)
        assert by_name["force_torque"].rate_hz == 10.0
        assert by_name["proprioception"].dims == (14,)
        assert by_name["proprioception"].rate_hz == 30.0

    def test_tasks(self):
        assert TASKS == ("RGBStacking", "DonutHanging", "SparklingSorting")

    def test_rgb_storage_choice(self):
        pfm_set = real_streams("pfm")
        rgb = next(s for s in pfm_set if s.name == "cam_top_rgb")
        assert rgb.format == "pfm"
        assert rgb.path_pattern.endswith(".pfm")
        with pytest.raises(ValidationError):
            real_streams("jpeg")

    def test_descriptor_validation(self):
        with pytest.raises(ValidationError):
            StreamDescriptor(name="x", dims=(1,), rate_hz=0, path_pattern="x", format="csv")
        with pytest.raises(ValidationError):
            StreamDescriptor(name="x", dims=(1,), rate_hz=1, path_pattern="x", format="exr")


class TestProvenance:
    def test_real_carries_nothing(self):
        with pytest.raises(ValidationError):
            Provenance(kind="real", parent_a="e1")

    def test_synthetic_requires_distinct_parents_and_interior_lambda(self):
        with pytest.raises(ValidationError):
            Provenance(kind="synthetic", parent_a="e1", parent_b="e1", lam=0.5)
        with pytest.raises(ValidationError):
            Provenance(kind="synthetic", parent_a="e1", parent_b="e2", lam=1.0)
        Provenance(kind="synthetic", parent_a="e1", parent_b="e2", lam=0.5)


class TestEpisodeManifest:
    def test_real_manifest_valid(self):
        m = make_real_manifest("ep-001", "Bright")
        assert m.stream("force_torque").rate_hz == 10.0

    def test_real_manifest_missing_stream(self):
        m = make_real_manifest("ep-001", "Bright")
        with pytest.raises(ManifestError, match="schema"):
            dataclasses.replace(m, streams=m.streams[:-1])

    def test_unknown_task(self):
        with pytest.raises(ManifestError):
            make_real_manifest("ep-001", "Bright", task="TowerOfHanoi")

    def test_non_increasing_timestamps(self):
        m = make_real_manifest("ep-001", "Bright")
        bad = {k: tuple(v) for k, v in m.timestamps_ms.items()}
        bad["cam_top_rgb"] = (3.0, 2.0, 1.0)
        with pytest.raises(ManifestError, match="increasing"):
            dataclasses.replace(m, timestamps_ms=bad)

    def test_timestamps_for_unknown_stream(self):
        m = make_real_manifest("ep-001", "Bright")
        bad = dict(m.timestamps_ms)
        bad["sonar"] = (1.0, 2.0)
        with pytest.raises(ManifestError, match="sonar"):
            dataclasses.replace(m, timestamps_ms=bad)

    def test_dict_round_trip(self):
        m = make_real_manifest("ep-007", "Dark", task="DonutHanging")
        back = manifest_from_dict(manifest_to_dict(m))
        assert manifest_to_dict(back) == manifest_to_dict(m)

    def test_missing_field_reported(self):
        doc = manifest_to_dict(make_real_manifest("e", "L"))
        del doc["provenance"]
        with pytest.raises(ManifestError, match="provenance"):
            manifest_from_dict(doc)


class TestManifestFiles:
    def test_write_read_round_trip(self, tmp_path):
        m = make_real_manifest("ep-001", "Bright")
        path = tmp_path / "manifest.json"
        write_manifest(m, path)
        back = read_manifest(path)
        assert manifest_to_dict(back) == manifest_to_dict(m)

    def test_canonical_json_is_stable(self):
        doc_a = {"b": 1, "a": [1.5, 2.0]}
        doc_b = {"a": [1.5, 2.0], "b": 1}
        assert canonical_json(doc_a) == canonical_json(doc_b)

    def test_read_rejects_bad_json_with_path(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ManifestError, match="broken.json"):
            read_manifest(path)

    def test_read_rejects_invalid_manifest_with_path(self, tmp_path):
        doc = manifest_to_dict(make_real_manifest("e", "L"))
        doc["task"] = "Bogus"
        path = tmp_path / "manifest.json"
        path.write_bytes(canonical_json(doc))
        with pytest.raises(ManifestError, match="manifest.json"):
            read_manifest(path)

    def test_layout_helpers(self, tmp_path):
        m = make_real_manifest("ep-001", "Bright")
        ep_dir = episode_dir(tmp_path, m.task, m.lighting.label, m.episode_id)
        assert ep_dir == tmp_path / "RGBStacking" / "Bright" / "ep-001"
        ep_dir.mkdir(parents=True)
        write_manifest(m, manifest_path(ep_dir))
        assert list(iter_manifest_paths(tmp_path)) == [ep_dir / "manifest.json"]
        rgb = m.stream("cam_top_rgb")
        assert frame_path(ep_dir, rgb, 3) == ep_dir / "cam_top_rgb" / "000003.png"


class TestVectorCsv:
    def test_round_trip(self, tmp_path):
        ts = [0.0, 100.0, 200.0]
        rows = np.array([[1.0, 2.0], [3.0, 4.0], [5.5, 6.25]])
        path = tmp_path / "ft.csv"
        write_vector_csv(path, ts, rows)
        ts2, rows2 = read_vector_csv(path)
        assert np.array_equal(ts2, ts)
        assert np.array_equal(rows2, rows)

    def test_rejects_length_mismatch(self, tmp_path):
        with pytest.raises(ValidationError):
            write_vector_csv(tmp_path / "x.csv", [0.0], np.zeros((2, 3)))

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,v0\n0,1\n")
        with pytest.raises(ValidationError):
            read_vector_csv(path)


class TestVerifySync:
    def test_aligned_episodes_pass(self):
        eps = [make_real_manifest(f"ep-{i}", "Bright", t0=1.0 + i * 5.0) for i in range(3)]
        report = verify_sync(eps)
        assert report.passed
        assert max(report.max_offset_ms.values()) == pytest.approx(10.0)

    def test_offset_beyond_tolerance_fails(self):
        eps = [make_real_manifest("ep-0", "Bright", t0=0.0),
               make_real_manifest("ep-1", "Bright", t0=DEFAULT_SYNC_TOLERANCE_MS + 1.0)]
        report = verify_sync(eps)
        assert not report.passed
        assert report.max_offset_ms["cam_top_rgb"] > DEFAULT_SYNC_TOLERANCE_MS

    def test_structure_mismatch_raises(self):
        with pytest.raises(SyncStructureError):
            verify_sync([make_real_manifest("e", "L")])
        with pytest.raises(SyncStructureError):
            verify_sync([make_real_manifest("e1", "L", task="RGBStacking"),
                         make_real_manifest("e2", "L", task="DonutHanging")])

    def test_frame_count_mismatch_raises(self):
        with pytest.raises(SyncStructureError):
            verify_sync([make_real_manifest("e1", "L", frames=3),
                         make_real_manifest("e2", "L", frames=4)])


class TestSamplePlacements:
    def spec(self, extent=200.0):
        return PlacementSpec(task="RGBStacking", patches=(
            PlacementPatch("red_cube", (0.0, extent), (0.0, extent)),
            PlacementPatch("blue_cube", (0.0, extent), (0.0, extent)),
        ))

    def test_deterministic_given_seed(self):
        a = sample_placements(self.spec(), seed=42, n=5)
        b = sample_placements(self.spec(), seed=42, n=5)
        assert a == b
        assert a != sample_placements(self.spec(), seed=43, n=5)

    def test_positions_inside_patches_and_separated(self):
        sets = sample_placements(self.spec(), seed=1, n=20, min_separation_mm=30.0)
        for placements in sets:
            for p in placements:
                assert 0.0 <= p.position_mm[0] <= 200.0
                assert 0.0 <= p.position_mm[1] <= 200.0
            (x1, y1), (x2, y2) = [p.position_mm for p in placements]
            assert np.hypot(x1 - x2, y1 - y2) >= 30.0

    def test_budget_exhaustion(self):
        tight = PlacementSpec(task="RGBStacking", patches=(
            PlacementPatch("a", (0.0, 0.0), (0.0, 0.0)),
            PlacementPatch("b", (0.0, 0.0), (0.0, 0.0)),
        ))
        with pytest.raises(JobBudgetError):
            sample_placements(tight, seed=0, n=1, min_separation_mm=30.0, max_attempts=10)


class TestSynthesizeManifest:
    def test_inherits_from_parent_a(self):
        a = make_real_manifest("ep-a", "Bright", t0=0.0)
        b = make_real_manifest("ep-b", "Dark", t0=1.0)
        m = synthesize_manifest(a, b, 0.25)
        assert m.provenance == Provenance("synthetic", "ep-a", "ep-b", 0.25)
        assert m.lighting.label == "Bright+Dark@0.25"
        assert m.timestamps_ms == a.timestamps_ms
        assert m.placements == a.placements
        assert m.streams == a.streams

    def test_rejects_cross_task_parents(self):
        a = make_real_manifest("ep-a", "Bright", task="RGBStacking")
        b = make_real_manifest("ep-b", "Dark", task="DonutHanging")
        with pytest.raises(ValidationError):
            synthesize_manifest(a, b, 0.5)

    def test_serializes_and_reloads(self, tmp_path):
        a = make_real_manifest("ep-a", "Bright")
        b = make_real_manifest("ep-b", "Dark")
        m = synthesize_manifest(a, b, 0.5)
        path = tmp_path / "manifest.json"
        write_manifest(m, path)
        back = read_manifest(path)
        assert back.provenance.lam == 0.5
        assert back.provenance.parent_a == "ep-a"
