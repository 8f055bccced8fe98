"""Visibility extraction from spatial fringe profiles.

Two routes are provided:

* the peak/dip envelope method: locate fringe maxima and minima, fit a
  Gaussian ``A exp(-a (x - x0)^2)`` through each set, and form
  ``V = (A_p - A_d) / (A_p + A_d)``;
* a full-model fit of ``A0 exp(-(x-mu)^2/(2 sigma^2)) (1 + V cos(k(x-mu)+alpha))``
  by damped least squares with analytic derivatives.

Initialization is deterministic: fringe frequency and phase come from
the dominant nonzero bin of the profile's discrete Fourier transform,
the envelope from moments of the midline between adjacent extrema (with
a plain moment fallback when the profile has no usable fringes), and the
visibility seed from the local contrast in a central window.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .errors import (
    DegenerateProfileError,
    NonConvergenceError,
    TooFewExtremaError,
)
from .fringe_synth import DetectorConfig, FringeModelParams, FringeProfile, wrap_angle
from .leastsq import damped_least_squares

PARAM_NAMES = ("a0", "mu", "sigma", "v", "k", "alpha")
ALPHA_IDENTIFIABLE_MIN_V = 1e-3


@dataclass(frozen=True, eq=False)
class ExtremaSet:
    """Fringe peak and dip locations with their raw intensities."""

    peak_pixels: np.ndarray
    peak_intensities: np.ndarray
    dip_pixels: np.ndarray
    dip_intensities: np.ndarray

    def interleaved(self) -> bool:
        """True when peaks and dips alternate along the pixel axis."""
        tagged = [(p, 0) for p in self.peak_pixels] + [(d, 1) for d in self.dip_pixels]
        tagged.sort()
        return all(a[1] != b[1] for a, b in zip(tagged, tagged[1:]))


@dataclass(frozen=True)
class EnvelopeFit:
    """Gaussian ``A exp(-a (x - x0)^2)`` through extrema points."""

    amplitude: float
    width_param: float
    center: float
    rms_residual: float


@dataclass(frozen=True, eq=False)
class FitResult:
    """Full-model fit outcome.

    ``param_std`` follows the order ``(a0, mu, sigma, v, k, alpha)``.
    ``params.v`` is reported raw; check :attr:`v_out_of_range` before
    treating it as a visibility.  ``alpha_identifiable`` is False when
    the fitted contrast is too small to pin the fringe phase.
    """

    params: FringeModelParams
    rms_residual: float
    iterations: int
    converged: bool
    param_std: np.ndarray
    alpha_identifiable: bool

    @property
    def v_out_of_range(self) -> bool:
        return self.params.v > 1.0


@dataclass(frozen=True)
class SweepStatistics:
    """Per-angle visibility statistics over a stack of frames.

    ``visibility_mean`` is never clamped; ``out_of_range`` flags means
    outside [0, 1].
    """

    theta: float
    visibility_mean: float
    visibility_std: float
    n_frames: int
    method: str
    out_of_range: bool = False


# ---------------------------------------------------------------------------
# frequency estimation and extrema
# ---------------------------------------------------------------------------

def estimate_fringe_frequency(y: np.ndarray) -> tuple[float, float, bool]:
    """Fringe frequency (rad/px), origin phase, and whether a fringe exists.

    The Gaussian envelope fills the lowest bins with a monotonically
    decaying spectrum that can outweigh the fringe line, so the dominant
    bin is taken among *local* spectral maxima away from dc.  A profile
    with no fringe has no such peak; the fallback then reports the raw
    argmax with ``has_fringe=False`` so callers can seed a zero-contrast
    fit instead of chasing envelope leakage.
    """
    y = np.asarray(y, dtype=float)
    spec = np.fft.rfft(y - np.mean(y))
    mag = np.abs(spec)
    mag[0] = 0.0
    if mag.size > 4:
        interior = (mag[2:-1] > mag[1:-2]) & (mag[2:-1] >= mag[3:])
        peaks = np.nonzero(interior)[0] + 2
    else:
        peaks = np.array([], dtype=int)
    if peaks.size:
        j = int(peaks[np.argmax(mag[peaks])])
        has_fringe = True
    else:
        j = max(int(np.argmax(mag)), 1)
        has_fringe = False
    k_hat = 2.0 * math.pi * j / y.size
    beta_hat = float(np.angle(spec[j]))
    return k_hat, beta_hat, has_fringe


def find_extrema(profile: FringeProfile, prominence_frac: float = 0.02) -> ExtremaSet:
    """Locate fringe peaks and dips.

    The profile is smoothed with a moving average whose window is a
    quarter fringe period (from the FFT frequency estimate), extrema are
    detected on the smoothed signal with a prominence threshold of
    ``prominence_frac`` times the raw dynamic range, and each location
    is then refined to the raw-sample extremum nearby so the reported
    intensities are unattenuated.

    Raises
    ------
    TooFewExtremaError
        When fewer than 3 peaks or 3 dips survive; a fringe-free profile
        (V = 0) always ends up here.
    """
    y = profile.intensities
    if y.size < 64:
        raise ValueError("find_extrema needs at least 64 samples")
    k_hat, _, _ = estimate_fringe_frequency(y)
    window = max(3, round(math.pi / (2.0 * k_hat)))
    window = min(window, max(3, y.size // 4))
    smooth = uniform_filter1d(y, size=window, mode="nearest")
    prominence = prominence_frac * float(np.max(y) - np.min(y))
    if prominence <= 0.0:
        raise TooFewExtremaError("profile is flat")
    peak_idx, _ = find_peaks(smooth, prominence=prominence)
    dip_idx, _ = find_peaks(-smooth, prominence=prominence)

    half = max(1, window // 2)

    def refine(indices, sign):
        refined = []
        for i in indices:
            lo, hi = max(0, i - half), min(y.size, i + half + 1)
            local = y[lo:hi]
            j = int(np.argmax(local) if sign > 0 else np.argmin(local))
            refined.append(lo + j)
        return refined

    peaks = refine(peak_idx, +1)
    dips = refine(dip_idx, -1)

    # keep the extremes strictly alternating; on collisions keep the better one
    tagged = sorted({(p, 0) for p in peaks} | {(d, 1) for d in dips})
    kept: list[tuple[int, int]] = []
    for pos, kind in tagged:
        if kept and kept[-1][1] == kind:
            prev = kept[-1][0]
            better = (y[pos] > y[prev]) if kind == 0 else (y[pos] < y[prev])
            if better:
                kept[-1] = (pos, kind)
        else:
            kept.append((pos, kind))
    peaks = [pos for pos, kind in kept if kind == 0]
    dips = [pos for pos, kind in kept if kind == 1]

    if len(peaks) < 3 or len(dips) < 3:
        raise TooFewExtremaError(
            f"found {len(peaks)} peaks / {len(dips)} dips; need at least 3 of each"
        )
    peaks_arr = np.asarray(peaks, dtype=float)
    dips_arr = np.asarray(dips, dtype=float)
    return ExtremaSet(
        peak_pixels=peaks_arr,
        peak_intensities=y[np.asarray(peaks)],
        dip_pixels=dips_arr,
        dip_intensities=y[np.asarray(dips)],
    )


# ---------------------------------------------------------------------------
# envelope method
# ---------------------------------------------------------------------------

def fit_envelope(pixels, intensities, max_iter: int = 200) -> EnvelopeFit:
    """Least-squares Gaussian ``A exp(-a (x - x0)^2)`` through points.

    Seeded by a log-parabola fit (exact for three exact samples), then
    refined by damped least squares.

    Raises
    ------
    NonConvergenceError
        If the refinement hits ``max_iter`` without converging.
    """
    x = np.asarray(pixels, dtype=float)
    y = np.asarray(intensities, dtype=float)
    if x.size < 3:
        raise ValueError("fit_envelope needs at least 3 points")

    amp0 = float(np.max(y))
    pos = y > max(amp0, 0.0) * 1e-9
    init = None
    if np.count_nonzero(pos) >= 3:
        c2, c1, c0 = np.polyfit(x[pos], np.log(y[pos]), 2)
        if c2 < 0.0:
            a = -c2
            x0 = c1 / (2.0 * a)
            init = np.array([math.exp(c0 + a * x0 * x0), a, x0])
    if init is None:
        spread = max(float(np.std(x)), 1.0)
        init = np.array([max(amp0, 1e-12), 1.0 / (2.0 * spread**2), float(np.mean(x))])

    def residual_jac(p):
        amp, a, x0 = p
        dx = x - x0
        e = np.exp(-a * dx * dx)
        r = amp * e - y
        jac = np.column_stack([e, -amp * dx * dx * e, 2.0 * amp * a * dx * e])
        return r, jac

    res = damped_least_squares(residual_jac, init, max_iter=max_iter)
    if not res.converged:
        raise NonConvergenceError("envelope fit did not converge")
    amp, a, x0 = res.params
    return EnvelopeFit(
        amplitude=abs(float(amp)),
        width_param=abs(float(a)),
        center=float(x0),
        rms_residual=math.sqrt(res.ssr / x.size),
    )


def visibility_from_envelopes(peaks: EnvelopeFit, dips: EnvelopeFit) -> float:
    """``V = (A_p - A_d) / (A_p + A_d)`` from the two envelope amplitudes."""
    return (peaks.amplitude - dips.amplitude) / (peaks.amplitude + dips.amplitude)


def envelope_visibility(profile: FringeProfile) -> float:
    """Full peak/dip pipeline: extrema, two envelope fits, amplitude ratio."""
    ext = find_extrema(profile)
    peaks = fit_envelope(ext.peak_pixels, ext.peak_intensities)
    dips = fit_envelope(ext.dip_pixels, ext.dip_intensities)
    return visibility_from_envelopes(peaks, dips)


# ---------------------------------------------------------------------------
# full-model fit
# ---------------------------------------------------------------------------

def _noise_estimate(y: np.ndarray) -> float:
    """Robust read-noise estimate from successive differences."""
    d = np.diff(y)
    mad = float(np.median(np.abs(d - np.median(d))))
    return 1.4826 * mad / math.sqrt(2.0)


def _initial_guess(profile: FringeProfile, phase_ref: str) -> np.ndarray:
    y = profile.intensities
    x = profile.pixels
    k_hat, beta_hat, has_fringe = estimate_fringe_frequency(y)
    try:
        ext = find_extrema(profile)
        pts = sorted(
            list(zip(ext.peak_pixels, ext.peak_intensities))
            + list(zip(ext.dip_pixels, ext.dip_intensities))
        )
        mid_x = np.array([(a[0] + b[0]) / 2.0 for a, b in zip(pts, pts[1:])])
        mid_y = np.array([(a[1] + b[1]) / 2.0 for a, b in zip(pts, pts[1:])])
        w = np.clip(mid_y, 0.0, None)
        if float(np.sum(w)) <= 0.0:
            raise TooFewExtremaError("midline carries no weight")
        mu = float(np.sum(mid_x * w) / np.sum(w))
        sigma = math.sqrt(max(float(np.sum((mid_x - mu) ** 2 * w) / np.sum(w)), 4.0))
        a0 = float(np.max(mid_y))
    except TooFewExtremaError:
        w = np.clip(y, 0.0, None)
        total = float(np.sum(w))
        if total <= 0.0:
            raise DegenerateProfileError("profile carries no positive intensity")
        mu = float(np.sum(x * w) / total)
        sigma = math.sqrt(max(float(np.sum((x - mu) ** 2 * w) / total), 4.0))
        a0 = float(np.max(y))
    if has_fringe:
        sel = np.abs(x - mu) <= sigma / 2.0
        if np.count_nonzero(sel) >= 2:
            hi, lo = float(np.max(y[sel])), float(np.min(y[sel]))
            v = (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0
        else:
            v = 0.5
        v = min(max(v, 0.0), 0.95)
    else:
        v = 0.0
    alpha = beta_hat + k_hat * mu if phase_ref == "center" else beta_hat
    return np.array([max(a0, 1e-12), mu, sigma, v, k_hat, wrap_angle(alpha)])


def _model_residual_jac(x, y, phase_ref):
    centered = phase_ref == "center"

    def residual_jac(p):
        a0, mu, sigma, v, k, alpha = p
        dx = x - mu
        g = np.exp(-(dx * dx) / (2.0 * sigma * sigma))
        arg = (k * dx if centered else k * x) + alpha
        c = np.cos(arg)
        s = np.sin(arg)
        fringe = 1.0 + v * c
        ag = a0 * g
        r = ag * fringe - y
        jac = np.empty((x.size, 6))
        jac[:, 0] = g * fringe
        jac[:, 1] = ag * (dx / (sigma * sigma)) * fringe
        if centered:
            jac[:, 1] += ag * v * s * k
        jac[:, 2] = ag * fringe * (dx * dx) / (sigma**3)
        jac[:, 3] = ag * c
        jac[:, 4] = -ag * v * s * (dx if centered else x)
        jac[:, 5] = -ag * v * s
        return r, jac

    return residual_jac


def fit_full_model(
    profile: FringeProfile,
    phase_ref: str = "center",
    max_iter: int = 200,
) -> FitResult:
    """Fit the six-parameter fringe model to a profile.

    Raises
    ------
    DegenerateProfileError
        When the dynamic range is below 10x the estimated read noise
        (nothing to fit) or the profile is flat.
    NonConvergenceError
        When the minimizer does not meet its relative tolerance of 1e-10
        within ``max_iter`` trial steps.
    """
    y = profile.intensities
    if y.size < 128:
        raise ValueError("fit_full_model needs at least 128 samples")
    y_range = float(np.max(y) - np.min(y))
    noise = _noise_estimate(y)
    if y_range <= 0.0 or y_range < 10.0 * noise:
        raise DegenerateProfileError(
            f"dynamic range {y_range:.3g} below 10x noise estimate {noise:.3g}"
        )
    p0 = _initial_guess(profile, phase_ref)
    res = damped_least_squares(
        _model_residual_jac(profile.pixels, y, phase_ref), p0, max_iter=max_iter
    )
    if not res.converged:
        raise NonConvergenceError(f"full-model fit stopped after {res.iterations} steps")

    a0, mu, sigma, v, k, alpha = res.params
    sigma = abs(sigma)
    if k < 0.0:
        k, alpha = -k, -alpha
    if v < 0.0:
        v, alpha = -v, alpha + math.pi
    alpha = wrap_angle(alpha)
    params = FringeModelParams(a0=float(a0), mu=float(mu), sigma=float(sigma),
                               v=float(v), k=float(k), alpha=float(alpha))
    return FitResult(
        params=params,
        rms_residual=math.sqrt(res.ssr / y.size),
        iterations=res.iterations,
        converged=res.converged,
        param_std=res.param_std(),
        alpha_identifiable=float(v) > ALPHA_IDENTIFIABLE_MIN_V,
    )


def fitted_visibility(profile: FringeProfile, method: str = "full_model") -> float:
    """Visibility by the chosen method ('full_model' or 'envelope')."""
    if method == "full_model":
        return fit_full_model(profile).params.v
    if method == "envelope":
        return envelope_visibility(profile)
    raise ValueError("method must be 'full_model' or 'envelope'")


def aggregate_sweep(frames_by_theta, method: str = "full_model") -> list[SweepStatistics]:
    """Mean/std of fitted visibility per angle.

    ``frames_by_theta`` maps an angle (radians) to its frame stack.  Each
    stack needs at least 2 frames; per-frame fit failures are tolerated
    up to 50 percent, beyond which the last failure is re-raised.
    Results are sorted by angle and reductions run in frame order, so the
    output is independent of any outer parallelism.
    """
    stats = []
    for theta in sorted(frames_by_theta):
        frames = frames_by_theta[theta]
        if len(frames) < 2:
            raise ValueError("aggregate_sweep needs at least 2 frames per angle")
        values = []
        last_error = None
        for frame in frames:
            try:
                values.append(fitted_visibility(frame, method))
            except (NonConvergenceError, DegenerateProfileError, TooFewExtremaError) as exc:
                last_error = exc
        if len(values) < 0.5 * len(frames):
            raise NonConvergenceError(
                f"only {len(values)}/{len(frames)} frames usable at theta={theta:.4f}"
            ) from last_error
        mean = float(np.mean(values))
        std = float(np.std(values, ddof=1))
        stats.append(
            SweepStatistics(
                theta=float(theta),
                visibility_mean=mean,
                visibility_std=std,
                n_frames=len(values),
                method=method,
                out_of_range=not 0.0 <= mean <= 1.0,
            )
        )
    return stats


# ---------------------------------------------------------------------------
# file interfaces
# ---------------------------------------------------------------------------

def read_profile_csv(path, detector: DetectorConfig | None = None) -> FringeProfile:
    """Read a ``pixel_index, intensity`` CSV written by the synth layer."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["pixel_index", "intensity"]:
            raise ValueError(f"unexpected profile CSV header: {header}")
        for row in reader:
            rows.append(float(row[1]))
    intensities = np.asarray(rows, dtype=float)
    if detector is None:
        detector = DetectorConfig(n_pixels=max(intensities.size, 16))
    return FringeProfile(intensities=intensities, detector=detector)


def read_frames_wide_csv(path, detector: DetectorConfig | None = None) -> list[FringeProfile]:
    """Read a wide frame-stack CSV (pixel_index, frame_0000, ...)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "pixel_index" or len(header) < 2:
            raise ValueError(f"unexpected wide CSV header: {header}")
        columns = [[] for _ in header[1:]]
        for row in reader:
            for j, val in enumerate(row[1:]):
                columns[j].append(float(val))
    det = detector or DetectorConfig(n_pixels=max(len(columns[0]), 16))
    return [FringeProfile(intensities=np.asarray(col), detector=det) for col in columns]


def fit_result_to_dict(result: FitResult) -> dict:
    """JSON-ready view of a fit result."""
    return {
        "params": asdict(result.params),
        "rms_residual": result.rms_residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "param_std": {name: float(s) for name, s in zip(PARAM_NAMES, result.param_std)},
        "alpha_identifiable": result.alpha_identifiable,
        "v_out_of_range": result.v_out_of_range,
    }


def write_sweep_csv(stats, path) -> None:
    """Write sweep statistics as ``theta_deg, v_mean, v_std, n_frames, method``."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_deg", "v_mean", "v_std", "n_frames", "method"])
        for s in stats:
            writer.writerow(
                [repr(math.degrees(s.theta)), repr(s.visibility_mean),
                 repr(s.visibility_std), s.n_frames, s.method]
            )
