"""Synthetic spatial fringe profiles as seen by a line camera.

The fringe model is a Gaussian envelope times a cosine,

    I(x) = A0 exp(-(x - mu)^2 / (2 sigma^2)) (1 + V cos(k (x - mu) + alpha))

with x in pixels.  The cosine phase ``alpha`` is referenced to the
envelope center, which keeps it independent of ``mu``; pass
``phase_ref="origin"`` for the variant ``cos(k x + alpha)``.

Detector effects available here: per-pixel boxcar averaging over a
window of half-width ``pixel_half_width`` (adaptive quadrature), additive
Gaussian read noise relative to A0, and optional Poisson shot noise.
Frame-to-frame phase behaviour models an unstabilized interferometer:
``alpha`` is redrawn uniformly per frame unless a fixed or random-walk
mode is selected.

Reproducibility: frame ``i`` draws from ``numpy.random.default_rng((seed, i))``
so every frame has its own stream and output does not depend on
scheduling.  Within a frame the draw order is fixed: phase, shot noise,
read noise.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from . import mzi

_PHASE_REFS = ("center", "origin")


@dataclass(frozen=True)
class FringeModelParams:
    """Parameters of the Gaussian-envelope cosine fringe model.

    ``v`` above 1 is unphysical (negative intensities) and is rejected by
    the synthesis entry points, but fitted parameter sets may carry such
    a value raw; consumers of fits check the out-of-range flag instead.
    """

    a0: float
    mu: float
    sigma: float
    v: float
    k: float
    alpha: float

    def __post_init__(self):
        if not self.a0 > 0.0:
            raise ValueError("a0 must be positive")
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive")
        if not self.k > 0.0:
            raise ValueError("k must be positive")
        if not (self.v >= 0.0 and math.isfinite(self.v)):
            raise ValueError("v must be finite and nonnegative")


def _require_physical(p: FringeModelParams) -> FringeModelParams:
    if p.v > 1.0:
        raise ValueError("cannot synthesize a profile with v > 1")
    return p


@dataclass(frozen=True)
class DetectorConfig:
    """Line-camera description and noise model.

    ``pixel_half_width`` is the boxcar half-width in pixels (0 disables
    averaging).  ``read_noise_std`` is the additive Gaussian noise level
    relative to the envelope amplitude A0.  Shot noise, when enabled,
    Poisson-samples ``intensity * photons_per_unit`` counts per pixel.
    """

    n_pixels: int = 1024
    pixel_half_width: float = 0.0
    read_noise_std: float = 0.01
    shot_noise: bool = False
    photons_per_unit: float = 1e4
    seed: int = 0

    def __post_init__(self):
        if self.n_pixels < 16:
            raise ValueError("n_pixels must be at least 16")
        if self.pixel_half_width < 0.0:
            raise ValueError("pixel_half_width must be nonnegative")


@dataclass(frozen=True)
class TwoBeamConfig:
    """Two interfering Gaussian beams with a relative tilt.

    Field amplitudes are real and nonnegative; ``sigma1``/``sigma2`` are
    the intensity-profile standard deviations.  ``tilt_k`` is the fringe
    frequency produced by the angular misalignment, ``rel_phase`` the
    relative phase at pixel 0.
    """

    amp1: float
    amp2: float
    center1: float
    center2: float
    sigma1: float
    sigma2: float
    tilt_k: float
    rel_phase: float = 0.0

    def __post_init__(self):
        if self.amp1 < 0.0 or self.amp2 < 0.0:
            raise ValueError("amplitudes must be nonnegative")
        if self.sigma1 <= 0.0 or self.sigma2 <= 0.0:
            raise ValueError("sigmas must be positive")


@dataclass(frozen=True, eq=False)
class FringeProfile:
    """Sampled intensity versus pixel index, with provenance."""

    intensities: np.ndarray
    detector: DetectorConfig
    truth: FringeModelParams | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "intensities", np.asarray(self.intensities, dtype=float)
        )

    @property
    def pixels(self) -> np.ndarray:
        return np.arange(self.intensities.size, dtype=float)


def wrap_angle(alpha: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(alpha, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    return a


def fringe_model(x, p: FringeModelParams, phase_ref: str = "center") -> np.ndarray:
    """Evaluate the fringe model at positions ``x`` (pixels)."""
    if phase_ref not in _PHASE_REFS:
        raise ValueError(f"phase_ref must be one of {_PHASE_REFS}")
    x = np.asarray(x, dtype=float)
    envelope = p.a0 * np.exp(-((x - p.mu) ** 2) / (2.0 * p.sigma**2))
    arg = p.k * (x - p.mu) if phase_ref == "center" else p.k * x
    return envelope * (1.0 + p.v * np.cos(arg + p.alpha))


def default_envelope(n_pixels: int, v: float = 0.0, alpha: float = 0.0) -> FringeModelParams:
    """Default envelope/fringe geometry for an ``n_pixels`` detector.

    Scales the 1024-pixel defaults (mu = 512, sigma = 120, k = 0.25) so the
    fringe count under the envelope stays the same; k is capped below the
    sampling limit for small detectors.
    """
    scale = n_pixels / 1024.0
    k = min(0.25 / scale, 1.5)
    return FringeModelParams(
        a0=1.0, mu=512.0 * scale, sigma=120.0 * scale, v=v, k=k, alpha=alpha
    )


def ideal_profile(
    p: FringeModelParams, det: DetectorConfig, phase_ref: str = "center"
) -> FringeProfile:
    """Sample the model at pixel centers; no averaging, no noise."""
    _require_physical(p)
    x = np.arange(det.n_pixels, dtype=float)
    return FringeProfile(intensities=fringe_model(x, p, phase_ref), detector=det, truth=p)


def two_beam_profile(tb: TwoBeamConfig, det: DetectorConfig) -> FringeProfile:
    """Intensity of two tilted Gaussian beams, |E1 + E2 e^{i(k x + phase)}|^2.

    For coincident equal-width beams this reduces exactly to the fringe
    model with ``V = 2 a1 a2 / (a1^2 + a2^2)``; in that case the
    equivalent model parameters are attached as ``truth``.
    """
    x = np.arange(det.n_pixels, dtype=float)
    e1 = tb.amp1 * np.exp(-((x - tb.center1) ** 2) / (4.0 * tb.sigma1**2))
    e2 = tb.amp2 * np.exp(-((x - tb.center2) ** 2) / (4.0 * tb.sigma2**2))
    phase = tb.tilt_k * x + tb.rel_phase
    intensity = e1**2 + e2**2 + 2.0 * e1 * e2 * np.cos(phase)
    truth = None
    symmetric = (
        tb.center1 == tb.center2
        and tb.sigma1 == tb.sigma2
        and tb.amp1 > 0.0
        and tb.amp2 > 0.0
        and tb.tilt_k > 0.0
    )
    if symmetric:
        a0 = tb.amp1**2 + tb.amp2**2
        truth = FringeModelParams(
            a0=a0,
            mu=tb.center1,
            sigma=tb.sigma1,
            v=2.0 * tb.amp1 * tb.amp2 / a0,
            k=tb.tilt_k,
            alpha=wrap_angle(tb.rel_phase + tb.tilt_k * tb.center1),
        )
    return FringeProfile(intensities=intensity, detector=det, truth=truth)


def _averaged_samples(func, det: DetectorConfig) -> np.ndarray:
    half = det.pixel_half_width
    out = np.empty(det.n_pixels, dtype=float)
    for i in range(det.n_pixels):
        integral, _ = quad(func, i - half, i + half, epsabs=1e-13, epsrel=1e-8, limit=200)
        out[i] = integral / (2.0 * half)
    return out


def pixel_average(source, det: DetectorConfig, phase_ref: str = "center") -> FringeProfile:
    """Boxcar-average a profile over each pixel's window.

    ``source`` may be model parameters, an intensity callable of the
    continuous pixel coordinate, or an already sampled
    :class:`FringeProfile` (interpolated by a cubic spline before
    integration).  Each output sample is the mean intensity over
    ``[x - A, x + A]`` where ``A = det.pixel_half_width``, computed by
    adaptive quadrature with relative error <= 1e-8.  For a slowly
    varying envelope the fringe term is attenuated by ``sin(kA)/(kA)``.
    """
    if det.pixel_half_width <= 0.0:
        raise ValueError("pixel_half_width must be positive for averaging")
    truth = None
    if isinstance(source, FringeModelParams):
        truth = _require_physical(source)
        func = lambda x: float(fringe_model(x, source, phase_ref))  # noqa: E731
    elif isinstance(source, FringeProfile):
        truth = source.truth
        spline = CubicSpline(source.pixels, source.intensities)
        func = lambda x: float(spline(x))  # noqa: E731
    elif callable(source):
        func = source
    else:
        raise TypeError("source must be FringeModelParams, FringeProfile, or callable")
    return FringeProfile(intensities=_averaged_samples(func, det), detector=det, truth=truth)


def _resolve_base_params(source, det: DetectorConfig, envelope) -> FringeModelParams:
    if isinstance(source, FringeModelParams):
        return source
    if isinstance(source, mzi.MziConfig):
        res = mzi.analytic_visibility(source)
        base = envelope if envelope is not None else default_envelope(det.n_pixels)
        v = min(max(res.visibility, 0.0), 1.0)
        return replace(base, v=v, alpha=wrap_angle(res.phase_shift))
    raise TypeError("source must be FringeModelParams or MziConfig")


def generate_frames(
    source,
    det: DetectorConfig,
    n_frames: int,
    phase_mode: str = "uniform",
    alpha0: float | None = None,
    drift_step: float = 0.05,
    drift_bound: float = math.pi / 2,
    envelope: FringeModelParams | None = None,
    phase_ref: str = "center",
) -> list[FringeProfile]:
    """Generate ``n_frames`` camera frames from a model or an MZI setup.

    When ``source`` is an :class:`~mzweak.mzi.MziConfig` the visibility
    and fringe phase come from the analytic interferometer layer and the
    envelope geometry from ``envelope`` (or the detector default).

    ``phase_mode`` selects the frame-to-frame phase behaviour:

    * ``"uniform"`` - unstabilized: alpha drawn uniformly in [0, 2 pi) per frame;
    * ``"fixed"`` - stabilized: alpha0 (or the source's own alpha) every frame;
    * ``"drift"`` - bounded Gaussian random walk of step ``drift_step``,
      reflected at ``alpha_start +- drift_bound``.

    Each frame's ``truth`` records the parameters actually used,
    including its drawn alpha.
    """
    if n_frames < 1:
        raise ValueError("n_frames must be at least 1")
    if phase_mode not in ("uniform", "fixed", "drift"):
        raise ValueError("phase_mode must be 'uniform', 'fixed', or 'drift'")
    base = _require_physical(_resolve_base_params(source, det, envelope))
    alpha_start = base.alpha if alpha0 is None else alpha0

    frames = []
    drift_alpha = alpha_start
    lo, hi = alpha_start - drift_bound, alpha_start + drift_bound
    for i in range(n_frames):
        rng = np.random.default_rng((det.seed, i))
        if phase_mode == "uniform":
            alpha = float(rng.uniform(0.0, 2.0 * math.pi))
        elif phase_mode == "fixed":
            alpha = alpha_start
            rng.uniform(0.0, 2.0 * math.pi)  # keep stream layout identical across modes
        else:
            step = float(rng.normal(0.0, drift_step))
            drift_alpha += step
            # reflect into [lo, hi]
            span = hi - lo
            t = (drift_alpha - lo) % (2.0 * span)
            drift_alpha = lo + (t if t <= span else 2.0 * span - t)
            alpha = drift_alpha
        params = replace(base, alpha=wrap_angle(alpha))
        if det.pixel_half_width > 0.0:
            intensities = pixel_average(params, det, phase_ref).intensities
        else:
            intensities = fringe_model(np.arange(det.n_pixels, dtype=float), params, phase_ref)
        if det.shot_noise:
            counts = rng.poisson(np.clip(intensities, 0.0, None) * det.photons_per_unit)
            intensities = counts / det.photons_per_unit
        if det.read_noise_std > 0.0:
            intensities = intensities + rng.normal(
                0.0, det.read_noise_std * base.a0, size=det.n_pixels
            )
        frames.append(FringeProfile(intensities=intensities, detector=det, truth=params))
    return frames


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def write_profile_csv(profile: FringeProfile, path) -> None:
    """Write one profile as ``pixel_index, intensity`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pixel_index", "intensity"])
        for i, val in enumerate(profile.intensities):
            writer.writerow([i, repr(float(val))])


def write_frames_wide_csv(frames, path) -> None:
    """Write a frame stack as one wide CSV (pixel_index, frame_0000, ...)."""
    n = frames[0].intensities.size
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pixel_index"] + [f"frame_{j:04d}" for j in range(len(frames))])
        for i in range(n):
            writer.writerow([i] + [repr(float(f.intensities[i])) for f in frames])


def frames_metadata(frames) -> dict:
    """JSON-ready metadata for a frame stack (detector, per-frame truth)."""
    det = frames[0].detector
    return {
        "detector": asdict(det),
        "n_frames": len(frames),
        "truth": [asdict(f.truth) if f.truth is not None else None for f in frames],
    }


def write_metadata_json(frames, path) -> None:
    with open(path, "w") as fh:
        json.dump(frames_metadata(frames), fh, indent=2, sort_keys=True)
        fh.write("\n")
