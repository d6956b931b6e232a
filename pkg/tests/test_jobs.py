import json

import pytest

from robolight.errors import ValidationError
from robolight.jobs import (is_complete, load_state, run_jobs, sha256_file)

# module-level so it pickles for the process-pool path
_CALL_LOG = None


def write_payload(payload):
    path = payload["path"]
    with open(path, "w") as fh:
        fh.write(payload["text"])
    if _CALL_LOG is not None:
        _CALL_LOG.append(payload["path"])
    return path


class TestSha256:
    def test_known_digest(self, tmp_path):
        path = tmp_path / "x.txt"
        path.write_bytes(b"abc")
        assert sha256_file(path) == (
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")


class TestRunJobs:
    def make_jobs(self, tmp_path, n=3):
        return [
            (f"job-{i}", {"path": str(tmp_path / f"out-{i}.txt"), "text": f"payload {i}"})
            for i in range(n)
        ]

    def test_runs_all_jobs_and_records_state(self, tmp_path):
        jobs = self.make_jobs(tmp_path)
        state_path = tmp_path / "state.jsonl"
        result = run_jobs(jobs, write_payload, state_path)
        assert result.executed == 3 and result.skipped == 0
        assert len(result.outputs) == 3
        state = load_state(state_path)
        assert set(state) == {"job-0", "job-1", "job-2"}
        assert all(is_complete(e) for e in state.values())

    def test_rerun_skips_completed(self, tmp_path):
        jobs = self.make_jobs(tmp_path)
        state_path = tmp_path / "state.jsonl"
        run_jobs(jobs, write_payload, state_path)
        again = run_jobs(jobs, write_payload, state_path)
        assert again.executed == 0 and again.skipped == 3

    def test_rerun_redoes_jobs_with_corrupted_output(self, tmp_path):
        jobs = self.make_jobs(tmp_path)
        state_path = tmp_path / "state.jsonl"
        run_jobs(jobs, write_payload, state_path)
        (tmp_path / "out-1.txt").write_text("tampered")
        (tmp_path / "out-2.txt").unlink()
        again = run_jobs(jobs, write_payload, state_path)
        assert again.executed == 2 and again.skipped == 1
        assert (tmp_path / "out-1.txt").read_text() == "payload 1"
        assert (tmp_path / "out-2.txt").read_text() == "payload 2"

    def test_process_pool_path(self, tmp_path):
        jobs = self.make_jobs(tmp_path, n=4)
        result = run_jobs(jobs, write_payload, tmp_path / "state.jsonl", workers=2)
        assert result.executed == 4
        for i in range(4):
            assert (tmp_path / f"out-{i}.txt").read_text() == f"payload {i}"

    def test_state_file_is_json_lines(self, tmp_path):
        jobs = self.make_jobs(tmp_path, n=2)
        state_path = tmp_path / "state.jsonl"
        run_jobs(jobs, write_payload, state_path)
        lines = [l for l in state_path.read_text().splitlines() if l.strip()]
        assert len(lines) == 2
        entry = json.loads(lines[0])
        assert set(entry) == {"job_id", "output", "sha256"}

    def test_rejects_zero_workers(self, tmp_path):
        with pytest.raises(ValidationError):
            run_jobs([], write_payload, tmp_path / "s.jsonl", workers=0)
