"""Analytic Mach-Zehnder propagation and visibility-based inference.

The interferometer places one operator in arm a (intended: the Hermitian
PSD factor R) and one in arm b (intended: the adjoint of the unitary
factor U), recombines the arms on a 50:50 splitter with arm-phase
``epsilon``, and reads the intensity at port d:

    I_d(eps) = 1/4 (1 + <R^2> + 2 |z| cos(arg z - eps)),   z = <psi|U R|psi>

so the fringe visibility over an epsilon scan is ``2|z| / (1 + <R^2>)``
and the fringe phase is ``arg z``.  This module implements the
propagation, the scan-based estimator, and the inverse maps from
visibilities back to ``|z|`` and to the weak value of R.

Sign convention: port c carries the minus sign,
``c = (R|psi> - e^{i eps} U^dag|psi>)/2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import jones
from .errors import AmplificationRegionWarning, DegenerateScanError

# Fast axis of the per-reflection ellipticity retarder.  It sits halfway
# between the s/p axes (H/V) and the diagonal: a retarder at 0 or at 45
# degrees leaves a diagonally polarized input with unchanged fringe
# contrast (|+> is an eigenstate of the 45-degree plate, and common
# mirror unitaries cancel between the arms), so only an intermediate
# axis actually couples the imperfection to the measured visibility.
ELLIPTICITY_AXIS = np.pi / 8

AMPLIFICATION_VISIBILITY_TOL = 1e-3


@dataclass(frozen=True)
class ImperfectionModel:
    """One wave-plate-like unitary of fixed axis per reflection event.

    Three reflections are modeled: one mirror per arm plus the first
    beam-splitter face seen by arm b.  ``compensation_qwp_angle``, when
    set, inserts a compensating plate of opposite retardance at that
    fast-axis angle in arm b (before the arm operator); at
    ``ELLIPTICITY_AXIS`` it cancels the splitter-face ellipticity exactly.
    """

    ellipticity_retardance: float = 0.0
    compensation_qwp_angle: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.ellipticity_retardance <= np.pi:
            raise ValueError("ellipticity_retardance must lie in [0, pi]")


@dataclass(frozen=True, eq=False)
class MziConfig:
    """Interferometer description.

    ``arm_a_op`` acts in arm a (R), ``arm_b_op`` in arm b (U^dag),
    ``epsilon`` is the arm phase difference in radians.
    """

    psi: np.ndarray
    arm_a_op: np.ndarray
    arm_b_op: np.ndarray
    epsilon: float = 0.0
    imperfection: ImperfectionModel | None = None

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=complex)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "arm_a_op", np.asarray(self.arm_a_op, dtype=complex))
        object.__setattr__(self, "arm_b_op", np.asarray(self.arm_b_op, dtype=complex))
        if abs(jones.norm_sq(psi) - 1.0) > 1e-9:
            raise ValueError("psi must be normalized")
        if not math.isfinite(self.epsilon):
            raise ValueError("epsilon must be finite")

    def with_epsilon(self, epsilon: float) -> "MziConfig":
        return MziConfig(self.psi, self.arm_a_op, self.arm_b_op, epsilon, self.imperfection)


@dataclass(frozen=True, eq=False)
class PortState:
    """Unnormalized output amplitudes at ports c and d."""

    c_amp: np.ndarray
    d_amp: np.ndarray


@dataclass(frozen=True)
class VisibilityResult:
    """Outcome of an epsilon scan.

    ``phase_shift`` is ``arg z``; it is only meaningful when the
    interferometer phase reference is stabilized and is NaN otherwise.
    ``r_squared_mean`` is the power throughput of arm a, i.e. <R^2> when
    arm a holds a Hermitian R.
    """

    visibility: float
    phase_shift: float
    r_squared_mean: float


def _arm_totals(cfg: MziConfig) -> tuple[np.ndarray, np.ndarray]:
    """Total operator per arm, imperfection unitaries included."""
    m_a, m_b = cfg.arm_a_op, cfg.arm_b_op
    imp = cfg.imperfection
    if imp is not None and imp.ellipticity_retardance > 0.0:
        refl = jones.waveplate(ELLIPTICITY_AXIS, imp.ellipticity_retardance)
        comp = jones.identity()
        if imp.compensation_qwp_angle is not None:
            comp = jones.waveplate(imp.compensation_qwp_angle, -imp.ellipticity_retardance)
        # arm a: splitter transmission, R, mirror
        # arm b: splitter-face reflection, compensator, U^dag, mirror
        m_a = refl @ m_a
        m_b = refl @ m_b @ comp @ refl
    return m_a, m_b


def propagate(cfg: MziConfig) -> PortState:
    """Propagate ``cfg.psi`` through the interferometer to both ports."""
    m_a, m_b = _arm_totals(cfg)
    a_psi = m_a @ cfg.psi
    b_psi = np.exp(1j * cfg.epsilon) * (m_b @ cfg.psi)
    return PortState(c_amp=0.5 * (a_psi - b_psi), d_amp=0.5 * (a_psi + b_psi))


def intensity_d(cfg: MziConfig) -> float:
    """Intensity at port d, ``|| d_amp ||^2``."""
    return jones.norm_sq(propagate(cfg).d_amp)


def intensity_c(cfg: MziConfig) -> float:
    """Intensity at port c (the minus-sign port)."""
    return jones.norm_sq(propagate(cfg).c_amp)


def _fringe_terms(cfg: MziConfig) -> tuple[float, complex]:
    """Mean level and complex cross term of I_d(eps).

    I_d(eps) = mean + Re(e^{i eps} cross) / 2 with
    mean = (||a psi||^2 + ||b psi||^2)/4 and cross = <a psi | b psi>.
    """
    m_a, m_b = _arm_totals(cfg)
    a_psi = m_a @ cfg.psi
    b_psi = m_b @ cfg.psi
    mean = 0.25 * (jones.norm_sq(a_psi) + jones.norm_sq(b_psi))
    cross = complex(np.vdot(a_psi, b_psi))
    return mean, cross


def analytic_visibility(cfg: MziConfig) -> VisibilityResult:
    """Closed-form visibility, fringe phase and arm-a throughput (no scan).

    This is the theory-side counterpart of :func:`visibility_phase_scan`;
    the phase is always reported since no laboratory phase reference is
    involved.
    """
    mean, cross = _fringe_terms(cfg)
    if mean <= 0.0:
        raise DegenerateScanError("no light reaches the output ports")
    visibility = (0.5 * abs(cross)) / mean
    phase = float(-np.angle(cross)) if abs(cross) > 0.0 else 0.0
    r_sq = jones.norm_sq(cfg.arm_a_op @ cfg.psi)
    return VisibilityResult(visibility=visibility, phase_shift=phase, r_squared_mean=r_sq)


def visibility_phase_scan(
    cfg: MziConfig,
    n_steps: int = 360,
    stabilized: bool = False,
) -> VisibilityResult:
    """Scan the arm phase uniformly over [0, 2 pi) and extract V and arg z.

    The scan samples I_d at ``n_steps`` phases (``cfg.epsilon`` is
    ignored) and projects the samples onto their fundamental harmonic,
    which for a cosine fringe reproduces the continuous-scan
    ``(I_max - I_min)/(I_max + I_min)`` and the phase of the maximum
    exactly, free of grid-resolution bias.

    Parameters
    ----------
    n_steps : number of scan points, at least 8.
    stabilized : when False the phase reference is undefined and
        ``phase_shift`` is NaN; when True it is ``arg z`` in (-pi, pi].

    Raises
    ------
    DegenerateScanError
        When ``I_max + I_min`` is below 1e-15 (no light reaches port d).
    """
    if n_steps < 8:
        raise ValueError("n_steps must be at least 8")
    m_a, m_b = _arm_totals(cfg)
    a_psi = m_a @ cfg.psi
    b_psi = m_b @ cfg.psi
    eps = 2.0 * np.pi * np.arange(n_steps) / n_steps
    cross = complex(np.vdot(a_psi, b_psi))
    base = 0.25 * (jones.norm_sq(a_psi) + jones.norm_sq(b_psi))
    samples = base + 0.5 * np.real(np.exp(1j * eps) * cross)
    i_max, i_min = float(np.max(samples)), float(np.min(samples))
    if i_max + i_min < 1e-15:
        raise DegenerateScanError("scan intensity vanishes at every phase")
    mean_level = float(np.mean(samples))
    fundamental = 2.0 * np.mean(samples * np.exp(-1j * eps))
    amplitude = abs(fundamental)
    visibility = amplitude / mean_level
    phase = float(-np.angle(fundamental)) if stabilized else float("nan")
    r_sq = jones.norm_sq(cfg.arm_a_op @ cfg.psi)
    return VisibilityResult(visibility=visibility, phase_shift=phase, r_squared_mean=r_sq)


def measure_r_squared(psi: np.ndarray, r: np.ndarray) -> float:
    """Power throughput ``||R psi||^2`` = <R^2> for Hermitian R.

    Raises :class:`~mzweak.errors.NotHermitianError` for non-Hermitian input.
    """
    r = jones.require_hermitian(r)
    return jones.norm_sq(r @ np.asarray(psi, dtype=complex))


def infer_z(visibility: float, r_squared_mean: float) -> float:
    """Magnitude of <psi|A|psi> from measured visibility and <R^2>.

    Inverts the visibility relation: ``|z| = V (1 + <R^2>) / 2``.
    """
    if visibility < 0.0:
        raise ValueError("visibility must be nonnegative")
    return visibility * (1.0 + r_squared_mean) / 2.0


def infer_weak_value(
    v_with_r: float,
    v_without_r: float,
    r_squared_mean: float,
) -> float:
    """Magnitude of the weak value of R from two visibility runs.

    ``|R_w| = [V_with (1 + <R^2>)/2] / V_without`` where ``V_without`` is
    the visibility with only the unitary arm populated (it equals
    ``|<phi|psi>|``).  Near-orthogonal selections make the denominator
    tiny; below ``AMPLIFICATION_VISIBILITY_TOL`` an
    :class:`~mzweak.errors.AmplificationRegionWarning` is emitted and the
    value is still returned.
    """
    if v_without_r <= 0.0:
        raise ValueError("v_without_r must be positive (orthogonal selection has no reference fringe)")
    if v_without_r < AMPLIFICATION_VISIBILITY_TOL:
        warnings.warn(
            f"reference visibility {v_without_r:.2e} is below "
            f"{AMPLIFICATION_VISIBILITY_TOL:.0e}; the ratio amplifies noise",
            AmplificationRegionWarning,
            stacklevel=2,
        )
    return infer_z(v_with_r, r_squared_mean) / v_without_r


@dataclass(frozen=True)
class SweepPoint:
    """One row of the closed-form inference table for the hwp(theta) family."""

    theta: float
    v_with_r: float
    v_without_r: float
    z_abs: float
    weak_value_abs: float
    overlap: complex
    amplification_flagged: bool = field(default=False)


def theory_sweep(theta_grid, psi: np.ndarray | None = None) -> list[SweepPoint]:
    """Closed-form visibility/weak-value table for A(theta) = hwp(theta) P_H.

    For each fast-axis angle the table lists the visibility with R in
    place, the reference visibility without it, the inferred ``|z|``, the
    inferred ``|R_w|`` and the overlap ``<phi|psi>``.  Rows where the
    reference visibility drops below the amplification threshold are
    flagged; at an exactly orthogonal selection ``weak_value_abs`` is NaN.
    """
    if psi is None:
        psi = jones.ket_plus()
    psi = np.asarray(psi, dtype=complex)
    r_op = jones.proj_h()
    r_sq = measure_r_squared(psi, r_op)
    rows = []
    for theta in np.atleast_1d(np.asarray(theta_grid, dtype=float)):
        u_op = jones.hwp(theta)
        z = jones.expectation(u_op @ r_op, psi)
        overlap = jones.expectation(u_op, psi)
        v_with = 2.0 * abs(z) / (1.0 + r_sq)
        v_without = abs(overlap)
        z_abs = infer_z(v_with, r_sq)
        flagged = v_without < AMPLIFICATION_VISIBILITY_TOL
        if v_without < jones.ORTHOGONALITY_CUTOFF:
            wv_abs = float("nan")
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", AmplificationRegionWarning)
                wv_abs = infer_weak_value(v_with, v_without, r_sq)
        rows.append(
            SweepPoint(
                theta=float(theta),
                v_with_r=v_with,
                v_without_r=v_without,
                z_abs=z_abs,
                weak_value_abs=wv_abs,
                overlap=overlap,
                amplification_flagged=flagged,
            )
        )
    return rows
