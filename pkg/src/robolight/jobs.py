"""Resumable batch execution over independent jobs.

A job is a picklable payload handed to a module-level worker. Completion
is tracked in a JSONL state file recording each job's primary output path
and its sha256; on re-runs, jobs whose outputs exist and still match the
recorded checksum are skipped. Output writes are single-writer per path
(workers never share an output), so no cross-process locking is needed.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def load_state(state_path) -> dict:
    state = {}
    state_path = Path(state_path)
    if state_path.exists():
        for line in state_path.read_text().splitlines():
            if line.strip():
                entry = json.loads(line)
                state[entry["job_id"]] = entry
    return state


def append_state(state_path, job_id: str, output: str) -> None:
    entry = {"job_id": job_id, "output": output, "sha256": sha256_file(output)}
    with open(state_path, "a") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


def is_complete(entry: dict | None) -> bool:
    if entry is None:
        return False
    output = entry["output"]
    return os.path.exists(output) and sha256_file(output) == entry["sha256"]


@dataclass(frozen=True)
class BatchResult:
    executed: int
    skipped: int
    outputs: tuple


def run_jobs(jobs, worker, state_path, workers: int = 1) -> BatchResult:
    """Execute ``worker(payload) -> output_path`` for each (job_id, payload).

    Jobs already recorded in the state file with an intact output are
    skipped. ``workers`` > 1 fans out over a process pool; the state file
    is appended only from this process.
    """
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    jobs = list(jobs)
    state = load_state(state_path)
    pending = []
    skipped = 0
    outputs = []
    for job_id, payload in jobs:
        entry = state.get(job_id)
        if is_complete(entry):
            skipped += 1
            outputs.append(entry["output"])
        else:
            pending.append((job_id, payload))
    if pending:
        if workers == 1:
            results = [(job_id, worker(payload)) for job_id, payload in pending]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [(job_id, pool.submit(worker, payload)) for job_id, payload in pending]
                results = [(job_id, fut.result()) for job_id, fut in futures]
        for job_id, output in results:
            append_state(state_path, job_id, str(output))
            outputs.append(str(output))
    return BatchResult(executed=len(pending), skipped=skipped, outputs=tuple(outputs))
