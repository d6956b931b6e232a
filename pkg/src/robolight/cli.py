"""Batch front door.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 I/O error.
Progress goes to stderr; artifacts and machine-readable reports go to
files or stdout. Failures emit a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import csv as csv_module
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset as ds
from .batch import run_process_job, run_synthesis_job
from .calibration import CalibrationProfile, fit_profile_from_chart
from .errors import (JobBudgetError, ManifestError, RobolightError,
                     SyncStructureError, ValidationError)
from .fileio import read_pfm, write_pfm, write_png8
from .hdr_core import DOMAIN_LINEAR, RadianceImage, histogram, luminance
from .jobs import run_jobs
from .metrics import histogram_distance, psnr, read_rollout_log
from .oracle import load_scene, moving_patch_scenes, render, render_episode
from .relight import (LightingCondition, SynthesisGridSpec, adjust_color,
                      scale_exposure, shift_lighting, tone_map)
from .reporting import (rollout_report, write_fidelity_report,
                        write_report_files)

DATASET_ROOT_ENV = "ROBOLIGHT_DATASET_ROOT"

_dataset_root_option = click.option(
    "--dataset-root", envvar=DATASET_ROOT_ENV, type=click.Path(path_type=Path),
    help=f"Dataset root (defaults to ${DATASET_ROOT_ENV}).")

_workers_option = click.option("--workers", type=click.IntRange(min=1), default=1,
                               show_default=True, help="Worker process count.")


def _log(message: str) -> None:
    click.echo(message, err=True)


@click.group()
def cli():
    """Radiometric processing, calibration, and relighting synthesis."""


# ---------------------------------------------------------------------------
# process

_STAGE_NAMES = ("denoise", "shading", "white_balance", "color_correct", "gamma_encode")


@cli.command("process")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="RAW container PNG or a directory of them.")
@click.option("--output-dir", required=True, type=click.Path(path_type=Path))
@click.option("--profile", type=click.Path(exists=True, path_type=Path),
              help="Calibration profile JSON (identity profile if omitted).")
@click.option("--disable", "disabled", multiple=True, type=click.Choice(_STAGE_NAMES),
              help="Disable a pipeline stage (repeatable).")
@click.option("--save-hdr", is_flag=True, help="Also write the linear intermediate as PFM.")
@_workers_option
def process_cmd(input_path, output_dir, profile, disabled, save_hdr, workers):
    """RAW containers -> LDR PNG through the processing pipeline."""
    if input_path.is_dir():
        inputs = sorted(p for p in input_path.glob("*.png"))
    else:
        inputs = [input_path]
    if not inputs:
        raise ValidationError(f"no RAW containers found under {input_path}")
    config = {stage: False for stage in disabled}
    output_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for src in inputs:
        payload = {
            "input": str(src),
            "output": str(output_dir / src.name),
            "profile": str(profile) if profile else None,
            "config": config,
            "save_hdr": save_hdr,
        }
        jobs.append((f"process:{src.name}", payload))
    result = run_jobs(jobs, run_process_job, output_dir / ".jobs-state.jsonl", workers=workers)
    _log(f"processed {result.executed} frame(s), skipped {result.skipped}")


# ---------------------------------------------------------------------------
# calibrate

def _read_triples_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv_module.reader(fh):
            if not row or row[0].strip().lower() in ("r", "red"):
                continue
            rows.append([float(v) for v in row[:3]])
    return np.asarray(rows, dtype=np.float64)


@cli.command("calibrate")
@click.option("--chart-measured", required=True, type=click.Path(exists=True, path_type=Path),
              help="CSV of measured chart patches, linear RGB rows.")
@click.option("--chart-reference", type=click.Path(exists=True, path_type=Path),
              help="CSV of reference patches (defaults to the built-in 24-patch chart).")
@click.option("--flat-field", type=click.Path(exists=True, path_type=Path),
              help="Flat-field capture (PFM) for the shading map.")
@click.option("--smoothing-radius", type=click.IntRange(min=0), default=8, show_default=True)
@click.option("--exposure", type=float, default=1.0, show_default=True)
@click.option("--transfer", type=click.Choice(["srgb", "power"]), default="srgb", show_default=True)
@click.option("--gamma", type=float, default=2.2, show_default=True)
@click.option("--output", required=True, type=click.Path(path_type=Path))
def calibrate_cmd(chart_measured, chart_reference, flat_field, smoothing_radius,
                  exposure, transfer, gamma, output):
    """Chart/flat-field captures -> calibration profile JSON."""
    measured = _read_triples_csv(chart_measured)
    reference = _read_triples_csv(chart_reference) if chart_reference else None
    flat = read_pfm(flat_field) if flat_field else None
    profile = fit_profile_from_chart(
        measured, reference_chart=reference, flat_field=flat,
        smoothing_radius=smoothing_radius, exposure=exposure,
        transfer_kind=transfer, transfer_gamma=gamma)
    output.parent.mkdir(parents=True, exist_ok=True)
    profile.save(output)
    _log(f"wrote calibration profile to {output}")


# ---------------------------------------------------------------------------
# synthesize

@cli.command("synthesize")
@click.option("--grid-spec", required=True, type=click.Path(exists=True, path_type=Path),
              help="JSON grid spec: pairs, lambda_values, episodes_per_condition.")
@_dataset_root_option
@click.option("--output-dir", required=True, type=click.Path(path_type=Path))
@click.option("--dry-run", is_flag=True, help="Print the job plan without synthesizing.")
@_workers_option
def synthesize_cmd(grid_spec, dataset_root, output_dir, dry_run, workers):
    """Grid spec + real dataset root -> synthetic episodes with manifests."""
    if dataset_root is None:
        raise click.UsageError(f"--dataset-root or ${DATASET_ROOT_ENV} is required")
    from .relight import generate_grid

    spec = SynthesisGridSpec.from_dict(json.loads(Path(grid_spec).read_text()))
    manifests = {}
    for mpath in ds.iter_manifest_paths(dataset_root):
        manifest = ds.read_manifest(mpath)
        manifests[manifest.episode_id] = (manifest, mpath.parent)
    real = [m for m, _ in manifests.values() if m.provenance.kind == "real"]
    jobs, _synthetic = generate_grid(spec, real)
    plan_lines = [json.dumps(job.to_dict(), sort_keys=True) for job in jobs]
    if dry_run:
        click.echo("\n".join(plan_lines))
        _log(f"dry run: {len(jobs)} job(s) planned")
        return
    output_dir.mkdir(parents=True, exist_ok=True)
    (output_dir / "jobs.jsonl").write_text("\n".join(plan_lines) + ("\n" if plan_lines else ""))
    payloads = []
    for job in jobs:
        episode_id = Path(job.output_path).name
        payloads.append((f"synthesize:{job.output_path}", {
            "lambda": job.lam,
            "episode_id": episode_id,
            "parent_a_dir": str(manifests[job.parent_a][1]),
            "parent_b_dir": str(manifests[job.parent_b][1]),
            "output_dir": str(output_dir / job.output_path),
        }))
    result = run_jobs(payloads, run_synthesis_job, output_dir / ".jobs-state.jsonl",
                      workers=workers)
    _log(f"synthesized {result.executed} episode(s), skipped {result.skipped}")


# ---------------------------------------------------------------------------
# verify

def _episode_luminance_histogram(frames, bins, lo, hi):
    counts = None
    for frame in frames:
        hist = histogram(luminance(frame), bins, lo, hi)
        counts = hist.counts if counts is None else counts + hist.counts
    from .hdr_core import LuminanceHistogram
    return LuminanceHistogram(counts=counts, lo=lo, hi=hi, domain_tag=DOMAIN_LINEAR)


def _load_pfm_dir(path: Path):
    files = sorted(path.glob("*.pfm"))
    if not files:
        raise ValidationError(f"no PFM frames under {path}")
    return [read_pfm(p) for p in files]


@cli.command("verify")
@_dataset_root_option
@click.option("--task", type=click.Choice(ds.TASKS))
@click.option("--condition-label", help="Verify sync across all episodes of this condition.")
@click.option("--tolerance-ms", type=float, default=ds.DEFAULT_SYNC_TOLERANCE_MS, show_default=True)
@click.option("--truth", type=click.Path(exists=True, path_type=Path),
              help="Directory of ground-truth PFM frames for a fidelity report.")
@click.option("--candidate", "candidates", multiple=True, nargs=2,
              help="NAME DIR pair of candidate PFM frames (repeatable).")
@click.option("--bins", type=click.IntRange(min=1), default=64, show_default=True)
@click.option("--output-dir", type=click.Path(path_type=Path))
def verify_cmd(dataset_root, task, condition_label, tolerance_ms, truth, candidates,
               bins, output_dir):
    """Synchronization checks and histogram/PSNR fidelity reports."""
    did_anything = False
    if condition_label:
        if dataset_root is None or task is None:
            raise click.UsageError("--dataset-root and --task are required for sync checks")
        episodes = []
        for mpath in sorted((Path(dataset_root) / task / condition_label).glob("*/manifest.json")):
            episodes.append(ds.read_manifest(mpath))
        report = ds.verify_sync(episodes, tolerance_ms)
        click.echo(json.dumps(report.to_dict(), sort_keys=True))
        did_anything = True
        if not report.passed:
            raise ValidationError(
                f"synchronization check failed: max offset "
                f"{max(report.max_offset_ms.values()):.3f} ms > {tolerance_ms} ms")
    if truth:
        truth_frames = _load_pfm_dir(Path(truth))
        hi = max(float(f.data.max()) for f in truth_frames) or 1.0
        truth_hist = _episode_luminance_histogram(truth_frames, bins, 0.0, hi)
        histograms = {"truth": truth_hist}
        report = {"frames": len(truth_frames), "bins": bins}
        for name, cand_dir in candidates:
            frames = _load_pfm_dir(Path(cand_dir))
            if len(frames) != len(truth_frames):
                raise ValidationError(
                    f"candidate {name!r} has {len(frames)} frames, truth has {len(truth_frames)}")
            values = [psnr(f.data, t.data, peak=hi) for f, t in zip(frames, truth_frames)]
            hist = _episode_luminance_histogram(frames, bins, 0.0, hi)
            histograms[name] = hist
            report[f"psnr_db_{name}"] = float(np.mean(values))
            report[f"histogram_distance_{name}"] = histogram_distance(hist, truth_hist)
        out = Path(output_dir) if output_dir else Path.cwd()
        paths = write_fidelity_report(report, out, histograms)
        click.echo(json.dumps(report, sort_keys=True))
        _log(f"fidelity report written to {paths['json']}")
        did_anything = True
    if not did_anything:
        raise click.UsageError("nothing to verify: give --condition-label and/or --truth")


# ---------------------------------------------------------------------------
# shift

@cli.command("shift")
@click.option("--condition", required=True, type=click.Path(exists=True, path_type=Path),
              help="Lighting condition JSON.")
@click.option("--kind", required=True,
              type=click.Choice(["color-blue", "direction-right", "intensity-all"]))
@click.option("--factor", required=True, type=click.FloatRange(0.0, 1.0))
@click.option("--output", type=click.Path(path_type=Path),
              help="Output JSON (stdout if omitted).")
def shift_cmd(condition, kind, factor, output):
    """Apply a lighting-condition shift transform."""
    cond = LightingCondition.from_dict(json.loads(Path(condition).read_text()))
    shifted = shift_lighting(cond, kind, factor)
    payload = json.dumps(shifted.to_dict(), sort_keys=True, indent=2) + "\n"
    if output:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(payload)
        _log(f"wrote shifted condition to {output}")
    else:
        click.echo(payload, nl=False)


# ---------------------------------------------------------------------------
# scale

@cli.command("scale")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, path_type=Path),
              help="PFM frame or directory of PFM frames.")
@click.option("--output-dir", required=True, type=click.Path(path_type=Path))
@click.option("--stops", type=float, default=0.0, show_default=True,
              help="Exposure adjustment in stops (multiplies by 2**stops).")
@click.option("--gains", help="Per-channel gains as R,G,B (e.g. 1.0,0.9,0.6).")
@click.option("--tone-map", "apply_tone_map", is_flag=True, help="Apply global tone mapping.")
@click.option("--key", type=float, default=0.18, show_default=True)
@click.option("--white-point", type=float)
@click.option("--encode", is_flag=True, help="Write 8-bit PNG (sRGB) instead of PFM.")
def scale_cmd(input_path, output_dir, stops, gains, apply_tone_map, key, white_point, encode):
    """HDR exposure / tone-map / color condition scaling over frames."""
    from .raw_pipeline import gamma_encode

    files = sorted(input_path.glob("*.pfm")) if input_path.is_dir() else [input_path]
    if not files:
        raise ValidationError(f"no PFM frames under {input_path}")
    gain_values = None
    if gains:
        gain_values = np.asarray([float(v) for v in gains.split(",")], dtype=np.float32)
    output_dir.mkdir(parents=True, exist_ok=True)
    for src in files:
        img = read_pfm(src)
        if stops:
            img = scale_exposure(img, stops)
        if gain_values is not None:
            img = adjust_color(img, gain_values)
        if apply_tone_map:
            img = tone_map(img, key=key, white_point=white_point)
        if encode:
            write_png8(output_dir / (src.stem + ".png"), gamma_encode(img))
        else:
            write_pfm(output_dir / src.name, img)
    _log(f"scaled {len(files)} frame(s) into {output_dir}")


# ---------------------------------------------------------------------------
# report

@cli.command("report")
@click.option("--rollouts", required=True, type=click.Path(exists=True, path_type=Path),
              help="Roll-out log (JSON lines).")
@click.option("--output-dir", required=True, type=click.Path(path_type=Path))
def report_cmd(rollouts, output_dir):
    """Roll-out log -> success-rate / prediction-error tables and figure."""
    records = read_rollout_log(rollouts)
    report = rollout_report(records)
    paths = write_report_files(report, output_dir)
    click.echo(Path(paths["txt"]).read_text(), nl=False)
    _log(f"report files written to {output_dir}")


# ---------------------------------------------------------------------------
# oracle

@cli.command("oracle")
@click.option("--scene", required=True, type=click.Path(exists=True, path_type=Path),
              help="Scene description JSON.")
@click.option("--output-dir", required=True, type=click.Path(path_type=Path))
@click.option("--frames", type=click.IntRange(min=1), default=1, show_default=True,
              help="Episode length; >1 renders a moving-patch episode.")
@click.option("--lights", help="Comma-separated light indices to activate (default: all).")
def oracle_cmd(scene, output_dir, frames, lights):
    """Render analytic ground-truth test scenes and episodes."""
    scn = load_scene(scene)
    active = [int(i) for i in lights.split(",")] if lights else None
    output_dir.mkdir(parents=True, exist_ok=True)
    if frames == 1:
        rendered = [render(scn, active)]
    else:
        rendered = render_episode(moving_patch_scenes(scn, frames), active)
    for idx, frame in enumerate(rendered):
        write_pfm(output_dir / f"{idx:06d}.pfm", frame)
    _log(f"rendered {len(rendered)} frame(s) into {output_dir}")


# ---------------------------------------------------------------------------
# entry point

def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        _emit_error("UsageError", exc.format_message())
        return 1
    except (ValidationError, ManifestError, SyncStructureError, JobBudgetError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    except OSError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 3
    except RobolightError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
