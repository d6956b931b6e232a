"""Radiometric HDR processing, calibration, and relighting-synthesis toolkit."""

from .calibration import (CHART24_REFERENCE_LINEAR, CalibrationProfile,
                          LuxMeasurement, average_lux, fit_ccm,
                          fit_shading_map, fit_white_balance)
from .dataset import (EpisodeManifest, Placement, PlacementPatch,
                      PlacementSpec, Provenance, StreamDescriptor, SyncReport,
                      read_manifest, sample_placements, verify_sync,
                      write_manifest)
from .errors import (JobBudgetError, ManifestError, RobolightError,
                     SyncStructureError, ValidationError)
from .hdr_core import (DOMAIN_ENCODED, DOMAIN_LINEAR, LdrImage,
                       LuminanceHistogram, RadianceImage, histogram,
                       luminance)
from .metrics import (RolloutRecord, StageResult, histogram_distance,
                      prediction_error, psnr, stage_success_rates)
from .oracle import OracleScene, PointLight, render, render_episode
from .raw_pipeline import (PipelineConfig, RawFrame, bilateral_denoise,
                           color_correct, decode_raw, gamma_encode,
                           lens_shading_correct, process_frame, white_balance)
from .relight import (LightingCondition, LightSetting, SynthesisGridSpec,
                      adjust_color, compose_hdr, default_lambda_values,
                      generate_grid, interpolate_episode, scale_exposure,
                      shift_lighting, tone_map)

__version__ = "0.1.0"
