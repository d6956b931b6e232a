"""Analytic Lambertian ground-truth renderer.

A top-down orthographic camera looks at a textured plane lit by point
lights. Direct illumination only, no shadows, no interreflection, so the
render is exactly linear in light intensity. That exact linearity is the
point: it provides the independent ground truth for every superposition
and interpolation check.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hdr_core import RadianceImage

DEFAULT_GRID = 64
DEFAULT_SPACING_MM = 10.0


@dataclass(frozen=True)
class PointLight:
    """Point light at (x, y, height) mm above the plane, linear RGB intensity."""

    position_mm: tuple
    rgb_intensity: tuple

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position_mm)
        if len(pos) != 3:
            raise ValidationError("light position must be (x, y, height) mm")
        if pos[2] <= 0:
            raise ValidationError("light height must be > 0 (no lights in the plane)")
        intensity = tuple(float(v) for v in self.rgb_intensity)
        if len(intensity) != 3 or min(intensity) < 0:
            raise ValidationError("light intensity must be a non-negative RGB triple")
        object.__setattr__(self, "position_mm", pos)
        object.__setattr__(self, "rgb_intensity", intensity)

    def scaled(self, factor: float) -> "PointLight":
        if factor < 0:
            raise ValidationError("intensity scale must be >= 0")
        return PointLight(self.position_mm, tuple(factor * v for v in self.rgb_intensity))


@dataclass(frozen=True)
class OracleScene:
    """Albedo plane on a regular metric grid plus a set of point lights."""

    albedo: RadianceImage
    lights: tuple
    spacing_mm: float = DEFAULT_SPACING_MM

    def __post_init__(self):
        if self.albedo.channels != 3:
            raise ValidationError("albedo must be 3-channel")
        if self.albedo.data.max(initial=0.0) > 1.0:
            raise ValidationError("albedo values must lie in [0, 1]")
        if self.spacing_mm <= 0:
            raise ValidationError("grid spacing must be > 0")
        object.__setattr__(self, "lights", tuple(self.lights))

    def with_albedo(self, albedo: RadianceImage) -> "OracleScene":
        return OracleScene(albedo=albedo, lights=self.lights, spacing_mm=self.spacing_mm)


def pixel_centers_mm(height: int, width: int, spacing_mm: float):
    ys = (np.arange(height, dtype=np.float64) + 0.5) * spacing_mm
    xs = (np.arange(width, dtype=np.float64) + 0.5) * spacing_mm
    return np.meshgrid(xs, ys)


def render(scene: OracleScene, active_lights=None) -> RadianceImage:
    """pixel = albedo * sum over lights of intensity * cos(theta) / d^2.

    ``active_lights`` selects a subset by index; None renders all lights,
    an empty subset renders black.
    """
    if active_lights is None:
        lights = scene.lights
    else:
        lights = tuple(scene.lights[i] for i in active_lights)
    h, w = scene.albedo.height, scene.albedo.width
    xs, ys = pixel_centers_mm(h, w, scene.spacing_mm)
    irradiance = np.zeros((h, w, 3), dtype=np.float64)
    for light in lights:
        lx, ly, lz = light.position_mm
        dx = xs - lx
        dy = ys - ly
        d2 = dx * dx + dy * dy + lz * lz
        # cos(theta) / d^2 = (height / d) / d^2
        falloff = lz / (d2 * np.sqrt(d2))
        irradiance += falloff[:, :, None] * np.asarray(light.rgb_intensity)[None, None, :]
    out = scene.albedo.data.astype(np.float64) * irradiance
    return RadianceImage(out.astype(np.float32))


def render_episode(scenes, active_lights=None):
    """Render an ordered frame sequence, one scene per timestep.

    Two calls over the same scene sequence with different lights produce
    synchronized episodes by construction.
    """
    scenes = list(scenes)
    if not scenes:
        raise ValidationError("render_episode needs at least one frame")
    return [render(scene, active_lights) for scene in scenes]


def moving_patch_scenes(base: OracleScene, frames: int, patch_size: int = 8,
                        patch_albedo=(0.9, 0.9, 0.9)):
    """Scene sequence with a bright square sweeping across the base albedo.

    Deterministic stand-in for scene motion when synthesizing test episodes.
    """
    if frames < 1:
        raise ValidationError("need at least one frame")
    h, w = base.albedo.height, base.albedo.width
    scenes = []
    for t in range(frames):
        albedo = base.albedo.data.copy()
        x0 = (t * max(1, (w - patch_size))) // max(1, frames - 1) if frames > 1 else 0
        y0 = (h - patch_size) // 2
        albedo[y0:y0 + patch_size, x0:x0 + patch_size, :] = np.asarray(patch_albedo, dtype=np.float32)
        scenes.append(base.with_albedo(RadianceImage(albedo)))
    return scenes


def random_scene(rng: np.random.Generator, grid: int = DEFAULT_GRID,
                 spacing_mm: float = DEFAULT_SPACING_MM,
                 n_lights: int = 4) -> OracleScene:
    """Random smooth-ish albedo and randomly placed lights above the plane."""
    albedo = rng.uniform(0.05, 1.0, size=(grid, grid, 3)).astype(np.float32)
    extent = grid * spacing_mm
    lights = tuple(
        PointLight(
            position_mm=(rng.uniform(-0.5 * extent, 1.5 * extent),
                         rng.uniform(-0.5 * extent, 1.5 * extent),
                         rng.uniform(0.5 * extent, 2.0 * extent)),
            rgb_intensity=tuple(rng.uniform(0.0, 5.0) * extent ** 2 * np.array([1, 1, 1]) * rng.uniform(0.2, 1.0, 3)),
        )
        for _ in range(n_lights)
    )
    return OracleScene(albedo=RadianceImage(albedo), lights=lights, spacing_mm=spacing_mm)


# ---------------------------------------------------------------------------
# Scene description JSON

def scene_to_dict(scene: OracleScene) -> dict:
    albedo = scene.albedo.data
    return {
        "grid": [albedo.shape[1], albedo.shape[0]],
        "spacing_mm": scene.spacing_mm,
        "albedo": {"kind": "inline-constant", "rgb": [float(v) for v in albedo.mean(axis=(0, 1))]}
        if bool(np.all(albedo == albedo[0, 0])) else {"kind": "inline-array"},
        "lights": [
            {"position_mm": list(l.position_mm), "rgb_intensity": list(l.rgb_intensity)}
            for l in scene.lights
        ],
    }


def load_scene(path) -> OracleScene:
    """Scene JSON: {grid, spacing_mm, albedo: constant rgb or PFM path, lights}."""
    from .fileio import read_pfm

    path = Path(path)
    doc = json.loads(path.read_text())
    width, height = int(doc["grid"][0]), int(doc["grid"][1])
    albedo_doc = doc["albedo"]
    if "pfm" in albedo_doc:
        albedo = read_pfm(path.parent / albedo_doc["pfm"])
    elif "rgb" in albedo_doc:
        rgb = np.asarray(albedo_doc["rgb"], dtype=np.float32)
        albedo = RadianceImage(np.broadcast_to(rgb, (height, width, 3)).copy())
    else:
        raise ValidationError(f"{path}: albedo must give 'rgb' or 'pfm'")
    lights = tuple(
        PointLight(position_mm=tuple(l["position_mm"]), rgb_intensity=tuple(l["rgb_intensity"]))
        for l in doc["lights"]
    )
    return OracleScene(albedo=albedo, lights=lights, spacing_mm=float(doc.get("spacing_mm", DEFAULT_SPACING_MM)))
