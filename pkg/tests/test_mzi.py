"""Tests for Mach-Zehnder propagation and the visibility inference pipeline."""

import warnings

import numpy as np
import pytest

from mzweak import jones, mzi
from mzweak.errors import (
    AmplificationRegionWarning,
    DegenerateScanError,
    NotHermitianError,
)


def random_matrix(rng):
    m = rng.uniform(-1, 1, size=(2, 2)) + 1j * rng.uniform(-1, 1, size=(2, 2))
    return m.astype(complex)


def random_state(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def paper_config(epsilon=0.0, imperfection=None):
    """R = P_H in arm a, U^dag = sigma_x in arm b, diagonal input."""
    return mzi.MziConfig(
        psi=jones.ket_plus(),
        arm_a_op=jones.proj_h(),
        arm_b_op=jones.sigma_x(),
        epsilon=epsilon,
        imperfection=imperfection,
    )


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------

def test_propagate_balanced_identity_arms():
    rng = np.random.default_rng(2)
    psi = random_state(rng)
    cfg = mzi.MziConfig(psi, jones.identity(), jones.identity(), epsilon=0.0)
    ports = mzi.propagate(cfg)
    assert np.allclose(ports.c_amp, 0.0, atol=1e-15)
    assert np.allclose(ports.d_amp, psi, atol=1e-15)


def test_intensity_d_paper_config_bright():
    assert mzi.intensity_d(paper_config(0.0)) == pytest.approx(0.625, abs=1e-12)


def test_intensity_d_paper_config_dark():
    assert mzi.intensity_d(paper_config(np.pi)) == pytest.approx(0.125, abs=1e-12)


def test_intensity_d_identity_arms_cosine():
    psi = jones.ket_plus()
    for eps in np.linspace(0.0, 2 * np.pi, 17):
        cfg = mzi.MziConfig(psi, jones.identity(), jones.identity(), epsilon=eps)
        assert mzi.intensity_d(cfg) == pytest.approx(0.5 * (1 + np.cos(eps)), abs=1e-12)


def test_intensity_closed_form_general():
    # I_d must equal (1 + <R^2> + 2|z| cos(arg z - eps)) / 4 for polar arm pairs
    rng = np.random.default_rng(8)
    for _ in range(50):
        a, psi = random_matrix(rng), random_state(rng)
        dec = jones.polar_decompose(a)
        z = jones.expectation(a, psi)
        r_sq = mzi.measure_r_squared(psi, dec.r)
        for eps in (0.0, 0.7, np.pi, 4.4):
            cfg = mzi.MziConfig(psi, dec.r, dec.u.conj().T, epsilon=eps)
            closed = 0.25 * (1 + r_sq + 2 * abs(z) * np.cos(np.angle(z) - eps))
            assert mzi.intensity_d(cfg) == pytest.approx(closed, abs=1e-12)


def test_port_norm_matches_pre_splitter_state():
    rng = np.random.default_rng(21)
    for _ in range(50):
        cfg = mzi.MziConfig(
            random_state(rng), random_matrix(rng), random_matrix(rng), epsilon=rng.uniform(0, 2 * np.pi)
        )
        ports = mzi.propagate(cfg)
        total = jones.norm_sq(ports.c_amp) + jones.norm_sq(ports.d_amp)
        expected = 0.5 * (
            jones.norm_sq(cfg.arm_a_op @ cfg.psi) + jones.norm_sq(cfg.arm_b_op @ cfg.psi)
        )
        assert total == pytest.approx(expected, abs=1e-12)


def test_energy_conservation_with_imperfections():
    imp = mzi.ImperfectionModel(ellipticity_retardance=0.25)
    for eps in np.linspace(0.0, 2 * np.pi, 12):
        cfg = paper_config(eps, imperfection=imp)
        total = mzi.intensity_c(cfg) + mzi.intensity_d(cfg)
        assert total == pytest.approx(0.5 * (1 + 0.5), abs=1e-12)


def test_scan_average_intensity():
    eps_grid = 2 * np.pi * np.arange(64) / 64
    vals = [mzi.intensity_d(paper_config(e)) for e in eps_grid]
    assert np.mean(vals) == pytest.approx(0.25 * (1 + 0.5), abs=1e-12)


def test_temporal_ordering_irrelevance():
    rng = np.random.default_rng(33)
    for _ in range(25):
        a, psi = random_matrix(rng), random_state(rng)
        dec = jones.polar_decompose(a)
        eps = rng.uniform(0, 2 * np.pi)
        fwd = mzi.MziConfig(psi, dec.r, dec.u.conj().T, epsilon=eps)
        swp = mzi.MziConfig(psi, dec.u.conj().T, dec.r, epsilon=-eps)
        assert mzi.intensity_d(swp) == pytest.approx(mzi.intensity_d(fwd), abs=1e-12)
        assert mzi.intensity_c(swp) == pytest.approx(mzi.intensity_c(fwd), abs=1e-12)
        v_fwd = mzi.visibility_phase_scan(fwd, 128).visibility
        v_swp = mzi.visibility_phase_scan(swp, 128).visibility
        assert v_swp == pytest.approx(v_fwd, abs=1e-12)


# ---------------------------------------------------------------------------
# visibility scan
# ---------------------------------------------------------------------------

def test_scan_paper_configuration():
    res = mzi.visibility_phase_scan(paper_config(), 360, stabilized=True)
    assert res.visibility == pytest.approx(2.0 / 3.0, abs=1e-9)
    assert res.phase_shift == pytest.approx(0.0, abs=1e-9)
    assert res.r_squared_mean == pytest.approx(0.5, abs=1e-12)


def test_scan_unstabilized_hides_phase():
    res = mzi.visibility_phase_scan(paper_config(), 360, stabilized=False)
    assert np.isnan(res.phase_shift)
    assert res.visibility == pytest.approx(2.0 / 3.0, abs=1e-9)


def test_scan_unitary_only_arm():
    psi = jones.ket_plus()
    for theta in np.deg2rad(np.arange(0.0, 180.0, 7.5)):
        cfg = mzi.MziConfig(psi, jones.identity(), jones.hwp(theta))
        res = mzi.visibility_phase_scan(cfg, 360)
        assert res.visibility == pytest.approx(abs(np.sin(2 * theta)), abs=1e-9)


def test_scan_annihilated_input_gives_zero_visibility():
    cfg = mzi.MziConfig(jones.ket_v(), jones.proj_h(), jones.identity())
    res = mzi.visibility_phase_scan(cfg, 360)
    assert res.visibility == pytest.approx(0.0, abs=1e-12)


def test_scan_agrees_with_analytic_formula():
    # 1e3 random (psi, A) configurations, 360 steps, 1e-6 agreement
    rng = np.random.default_rng(55)
    for _ in range(1000):
        a, psi = random_matrix(rng), random_state(rng)
        dec = jones.polar_decompose(a)
        cfg = mzi.MziConfig(psi, dec.r, dec.u.conj().T)
        res = mzi.visibility_phase_scan(cfg, 360, stabilized=True)
        z = jones.expectation(a, psi)
        r_sq = jones.norm_sq(dec.r @ psi)
        assert res.visibility == pytest.approx(2 * abs(z) / (1 + r_sq), abs=1e-6)
        if abs(z) > 1e-6:
            dphi = (res.phase_shift - np.angle(z) + np.pi) % (2 * np.pi) - np.pi
            assert abs(dphi) <= 1e-6


def test_scan_rejects_tiny_step_count():
    with pytest.raises(ValueError):
        mzi.visibility_phase_scan(paper_config(), 4)


def test_scan_degenerate_when_no_light():
    zero = np.zeros((2, 2), dtype=complex)
    cfg = mzi.MziConfig(jones.ket_plus(), zero, zero)
    with pytest.raises(DegenerateScanError):
        mzi.visibility_phase_scan(cfg, 64)


# ---------------------------------------------------------------------------
# scalar inference helpers
# ---------------------------------------------------------------------------

def test_measure_r_squared_examples():
    assert mzi.measure_r_squared(jones.ket_plus(), jones.proj_h()) == pytest.approx(0.5, abs=1e-12)
    assert mzi.measure_r_squared(jones.ket_v(), jones.identity()) == pytest.approx(1.0, abs=1e-12)


def test_measure_r_squared_matches_expectation_of_square():
    rng = np.random.default_rng(61)
    for _ in range(25):
        h = random_matrix(rng)
        h = 0.5 * (h + h.conj().T)
        psi = random_state(rng)
        direct = mzi.measure_r_squared(psi, h)
        assert direct == pytest.approx(jones.expectation(h @ h, psi).real, abs=1e-10)


def test_measure_r_squared_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        mzi.measure_r_squared(jones.ket_plus(), jones.lowering_operator())


def test_infer_z_examples():
    assert mzi.infer_z(2.0 / 3.0, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert mzi.infer_z(0.0, 0.77) == 0.0
    assert mzi.infer_z(0.640, 0.5) == pytest.approx(0.480, abs=1e-12)


def test_infer_weak_value_examples():
    assert mzi.infer_weak_value(2.0 / 3.0, 1.0, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert mzi.infer_weak_value(0.0, 0.9, 0.5) == 0.0


def test_infer_weak_value_amplification_warning():
    with pytest.warns(AmplificationRegionWarning):
        val = mzi.infer_weak_value(1e-4, 1e-4, 0.5)
    assert val == pytest.approx(0.75, abs=1e-12)
    with pytest.raises(ValueError):
        mzi.infer_weak_value(0.5, 0.0, 0.5)


def test_end_to_end_identity_no_imperfection():
    rng = np.random.default_rng(71)
    for _ in range(100):
        a, psi = random_matrix(rng), random_state(rng)
        dec = jones.polar_decompose(a)
        cfg = mzi.MziConfig(psi, dec.r, dec.u.conj().T)
        res = mzi.visibility_phase_scan(cfg, 720)
        z_inferred = mzi.infer_z(res.visibility, res.r_squared_mean)
        assert z_inferred == pytest.approx(abs(jones.expectation(a, psi)), abs=1e-9)


# ---------------------------------------------------------------------------
# theory sweep
# ---------------------------------------------------------------------------

def test_theory_sweep_rows():
    rows = mzi.theory_sweep(np.deg2rad([45.0, 22.5, 0.0]))
    r45, r225, r0 = rows

    assert r45.v_with_r == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert r45.v_without_r == pytest.approx(1.0, abs=1e-12)
    assert r45.z_abs == pytest.approx(0.5, abs=1e-12)
    assert r45.weak_value_abs == pytest.approx(0.5, abs=1e-12)
    assert r45.overlap == pytest.approx(1.0, abs=1e-12)
    assert not r45.amplification_flagged

    assert r225.v_with_r == pytest.approx((2.0 / 3.0) * np.sqrt(2.0), abs=1e-12)

    assert r0.v_with_r == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert r0.v_without_r == pytest.approx(0.0, abs=1e-12)
    assert r0.z_abs == pytest.approx(0.5, abs=1e-12)
    assert np.isnan(r0.weak_value_abs)
    assert r0.amplification_flagged


def test_theory_sweep_weak_value_closed_form():
    thetas = np.deg2rad(np.arange(4.0, 90.0, 4.0))
    for row in mzi.theory_sweep(thetas):
        t = row.theta
        expect = abs(np.cos(2 * t) + np.sin(2 * t)) / (2 * abs(np.sin(2 * t)))
        assert row.weak_value_abs == pytest.approx(expect, abs=1e-10)
        assert row.overlap == pytest.approx(np.sin(2 * t), abs=1e-12)


# ---------------------------------------------------------------------------
# imperfection model
# ---------------------------------------------------------------------------

def test_imperfection_reduces_visibility_at_45_degrees():
    ideal = mzi.visibility_phase_scan(paper_config(), 360).visibility
    prev = ideal
    for rho in (0.05, 0.1, 0.2, 0.3):
        imp = mzi.ImperfectionModel(ellipticity_retardance=rho)
        v = mzi.visibility_phase_scan(paper_config(imperfection=imp), 360).visibility
        assert v < prev
        prev = v
    # closed form for this geometry: V(rho) = (2/3) cos(rho/2)
    imp = mzi.ImperfectionModel(ellipticity_retardance=0.3)
    v = mzi.visibility_phase_scan(paper_config(imperfection=imp), 360).visibility
    assert v == pytest.approx((2.0 / 3.0) * np.cos(0.15), abs=1e-9)


def test_imperfection_max_theta_visibility_monotone():
    thetas = np.deg2rad(np.arange(0.0, 180.0, 0.1))

    def max_visibility(rho):
        imp = mzi.ImperfectionModel(ellipticity_retardance=rho) if rho > 0 else None
        best = 0.0
        for theta in thetas:
            cfg = mzi.MziConfig(
                jones.ket_plus(), jones.proj_h(), jones.hwp(theta), imperfection=imp
            )
            best = max(best, mzi.visibility_phase_scan(cfg, 128).visibility)
        return best

    values = [max_visibility(rho) for rho in (0.0, 0.1, 0.2, 0.3)]
    assert values[0] == pytest.approx(2.0 * np.sqrt(2.0) / 3.0, abs=1e-6)
    assert all(a > b for a, b in zip(values, values[1:]))


def test_compensator_restores_ideal_visibility():
    imp = mzi.ImperfectionModel(
        ellipticity_retardance=0.2, compensation_qwp_angle=mzi.ELLIPTICITY_AXIS
    )
    v = mzi.visibility_phase_scan(paper_config(imperfection=imp), 360).visibility
    assert v == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_imperfection_validation():
    with pytest.raises(ValueError):
        mzi.ImperfectionModel(ellipticity_retardance=-0.1)
    with pytest.raises(ValueError):
        mzi.ImperfectionModel(ellipticity_retardance=4.0)


def test_config_validation():
    with pytest.raises(ValueError):
        mzi.MziConfig(np.array([1.0, 1.0]), jones.identity(), jones.identity())
    with pytest.raises(ValueError):
        mzi.MziConfig(jones.ket_plus(), jones.identity(), jones.identity(), epsilon=np.inf)
