"""Tests for the 2x2 polarization algebra and the polar/weak-value chain."""

import numpy as np
import pytest

from mzweak import jones
from mzweak.errors import NotHermitianError, NotPSDError, OrthogonalSelectionError


def random_matrix(rng):
    """Entries drawn uniformly from the complex unit disc."""
    m = np.empty((2, 2), dtype=complex)
    k = 0
    while k < 4:
        re, im = rng.uniform(-1.0, 1.0, size=2)
        if re * re + im * im <= 1.0:
            m[k // 2, k % 2] = complex(re, im)
            k += 1
    return m


def random_state(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def matmul_oracle(a, b):
    """Entry-by-entry expansion of the 2x2 product, independent of '@'."""
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[i, j] = a[i, 0] * b[0, j] + a[i, 1] * b[1, j]
    return out


# ---------------------------------------------------------------------------
# products
# ---------------------------------------------------------------------------

def test_sigma_x_times_proj_h_is_lowering():
    prod = jones.sigma_x() @ jones.proj_h()
    assert np.allclose(prod, jones.lowering_operator(), atol=0.0)


def test_identity_product_is_noop():
    rng = np.random.default_rng(7)
    m = random_matrix(rng)
    assert np.array_equal(jones.identity() @ m, m)


def test_matmul_against_summation_oracle():
    rng = np.random.default_rng(11)
    for _ in range(200):
        a, b = random_matrix(rng), random_matrix(rng)
        assert np.allclose(a @ b, matmul_oracle(a, b), atol=1e-15)


# ---------------------------------------------------------------------------
# expectation values
# ---------------------------------------------------------------------------

def test_expectation_proj_h_on_plus():
    assert jones.expectation(jones.proj_h(), jones.ket_plus()) == pytest.approx(0.5, abs=1e-12)


def test_expectation_identity_is_one():
    rng = np.random.default_rng(3)
    for _ in range(20):
        psi = random_state(rng)
        assert jones.expectation(jones.identity(), psi) == pytest.approx(1.0, abs=1e-12)


def test_expectation_class_operator_closed_form():
    # <+| U(t) P_H |+> = (cos 2t + sin 2t)/2, checked on a 1-degree grid
    psi = jones.ket_plus()
    for theta in np.deg2rad(np.arange(0.0, 360.0, 1.0)):
        z = jones.expectation(jones.class_operator(theta), psi)
        expect = 0.5 * (np.cos(2 * theta) + np.sin(2 * theta))
        assert z == pytest.approx(expect, abs=1e-12)


def test_expectation_rejects_unnormalized():
    with pytest.raises(ValueError):
        jones.expectation(jones.identity(), np.array([1.0, 1.0], dtype=complex))


# ---------------------------------------------------------------------------
# PSD square root
# ---------------------------------------------------------------------------

def test_sqrt_of_projector_is_projector():
    assert np.allclose(jones.matrix_sqrt_psd(jones.proj_h()), jones.proj_h(), atol=1e-12)


def test_sqrt_of_diagonal():
    m = np.diag([4.0, 1.0]).astype(complex)
    assert np.allclose(jones.matrix_sqrt_psd(m), np.diag([2.0, 1.0]), atol=1e-12)


def test_sqrt_reconstructs_random_psd():
    rng = np.random.default_rng(5)
    for _ in range(100):
        b = random_matrix(rng)
        m = b.conj().T @ b
        root = jones.matrix_sqrt_psd(m)
        assert jones.is_psd(root, 1e-10)
        assert np.allclose(root @ root, m, atol=1e-10)


def test_sqrt_rejects_non_psd():
    with pytest.raises(NotPSDError):
        jones.matrix_sqrt_psd(np.diag([1.0, -1.0]).astype(complex))
    with pytest.raises(NotPSDError):
        jones.matrix_sqrt_psd(jones.lowering_operator())


# ---------------------------------------------------------------------------
# polar decomposition
# ---------------------------------------------------------------------------

def test_polar_of_lowering_operator_exact():
    dec = jones.polar_decompose(jones.lowering_operator())
    assert np.max(np.abs(dec.u - jones.sigma_x())) <= 1e-12
    assert np.max(np.abs(dec.r - jones.proj_h())) <= 1e-12


def test_polar_of_unitary_gives_identity_r():
    rng = np.random.default_rng(13)
    for _ in range(25):
        w = np.linalg.qr(random_matrix(rng) + 2 * np.eye(2))[0]
        dec = jones.polar_decompose(w)
        assert np.allclose(dec.r, np.eye(2), atol=1e-10)
        assert np.allclose(dec.u, w, atol=1e-10)


def test_polar_of_zero_matrix():
    dec = jones.polar_decompose(np.zeros((2, 2), dtype=complex))
    assert np.array_equal(dec.u, np.eye(2))
    assert np.array_equal(dec.r, np.zeros((2, 2)))


def test_polar_reconstruction_property():
    # 1e4 random matrices with entries in the complex unit disc
    rng = np.random.default_rng(17)
    for _ in range(10_000):
        a = random_matrix(rng)
        dec = jones.polar_decompose(a)
        bound = 1e-10 * max(1.0, jones.frobenius_norm(a))
        assert dec.residual <= bound
        assert jones.is_unitary(dec.u, 1e-10)
        assert jones.is_psd(dec.r, 1e-10)


def test_polar_singular_is_deterministic():
    a = np.array([[0.3 + 0.1j, 0.6 + 0.2j], [0.15 + 0.05j, 0.3 + 0.1j]])  # rank 1
    d1 = jones.polar_decompose(a)
    d2 = jones.polar_decompose(a.copy())
    assert np.array_equal(d1.u, d2.u)
    assert np.array_equal(d1.r, d2.r)
    assert jones.is_unitary(d1.u, 1e-10)
    assert d1.residual <= 1e-10


# ---------------------------------------------------------------------------
# weak values
# ---------------------------------------------------------------------------

def test_weak_value_paper_configuration():
    psi = jones.ket_plus()
    phi = jones.sigma_x() @ psi  # equals |+>
    wv = jones.weak_value(jones.proj_h(), psi, phi)
    assert wv == pytest.approx(0.5, abs=1e-12)


def test_weak_value_of_identity_is_one():
    rng = np.random.default_rng(23)
    n = 0
    while n < 50:
        psi, phi = random_state(rng), random_state(rng)
        if abs(np.vdot(phi, psi)) < 1e-3:
            continue
        assert jones.weak_value(jones.identity(), psi, phi) == pytest.approx(1.0, abs=1e-10)
        n += 1


def test_weak_value_closed_form_vs_theta():
    # (P_H, |+>, U(t)|+>) -> (cos 2t + sin 2t) / (2 sin 2t)
    psi = jones.ket_plus()
    for theta in np.deg2rad(np.arange(5.0, 90.0, 5.0)):
        phi = jones.hwp(theta) @ psi
        wv = jones.weak_value(jones.proj_h(), psi, phi)
        expect = (np.cos(2 * theta) + np.sin(2 * theta)) / (2 * np.sin(2 * theta))
        assert wv == pytest.approx(expect, abs=1e-10)


def test_weak_value_orthogonal_selection_raises():
    with pytest.raises(OrthogonalSelectionError):
        jones.weak_value(jones.proj_h(), jones.ket_plus(), jones.ket_minus())


# ---------------------------------------------------------------------------
# expectation through the weak-value chain
# ---------------------------------------------------------------------------

def test_chain_lowering_on_plus():
    z = jones.nonhermitian_expectation_via_weak(jones.lowering_operator(), jones.ket_plus())
    assert z == pytest.approx(0.5, abs=1e-12)


def test_chain_hermitian_psd_branch():
    rng = np.random.default_rng(29)
    for _ in range(25):
        b = random_matrix(rng)
        m = b.conj().T @ b + 0.1 * np.eye(2)
        psi = random_state(rng)
        z = jones.nonhermitian_expectation_via_weak(m, psi)
        assert abs(z.imag) <= 1e-10
        assert z == pytest.approx(jones.expectation(m, psi), abs=1e-10)


def test_chain_identity_property():
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 2000:
        a, psi = random_matrix(rng), random_state(rng)
        u = jones.polar_decompose(a).u
        if abs(jones.expectation(u, psi)) <= 1e-6:
            continue
        z_chain = jones.nonhermitian_expectation_via_weak(a, psi)
        z_direct = jones.expectation(a, psi)
        assert abs(z_chain - z_direct) <= 1e-10
        checked += 1


# ---------------------------------------------------------------------------
# wave plates and projectors
# ---------------------------------------------------------------------------

def test_hwp_at_pi_over_8_makes_plus():
    out = jones.hwp(np.pi / 8) @ jones.ket_h()
    assert np.allclose(out, jones.ket_plus(), atol=1e-12)


def test_hwp_at_pi_over_4_is_sigma_x():
    assert np.allclose(jones.hwp(np.pi / 4), jones.sigma_x(), atol=1e-12)


def test_polarizer_at_zero_is_proj_h():
    assert np.allclose(jones.polarizer(0.0), jones.proj_h(), atol=0.0)


def test_hwp_hermitian_unitary_periodic():
    rng = np.random.default_rng(37)
    for theta in rng.uniform(-np.pi, np.pi, size=50):
        m = jones.hwp(theta)
        assert jones.is_hermitian(m, 1e-12)
        assert jones.is_unitary(m, 1e-12)
        assert np.allclose(jones.hwp(theta + np.pi), m, atol=1e-12)


def test_qwp_is_unitary():
    rng = np.random.default_rng(41)
    for theta in rng.uniform(-np.pi, np.pi, size=20):
        assert jones.is_unitary(jones.qwp(theta), 1e-12)


def test_projector_completeness():
    assert np.array_equal(jones.proj_h() + jones.proj_v(), np.eye(2))


def test_unitary_predicate_implies_unit_determinant():
    rng = np.random.default_rng(43)
    for _ in range(20):
        w = np.linalg.qr(random_matrix(rng) + 2 * np.eye(2))[0]
        assert jones.is_unitary(w, 1e-10)
        assert abs(abs(np.linalg.det(w)) - 1.0) <= 1e-10


def test_require_hermitian():
    with pytest.raises(NotHermitianError):
        jones.require_hermitian(jones.lowering_operator())


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_matrix_pairs_roundtrip():
    rng = np.random.default_rng(47)
    m = random_matrix(rng)
    assert np.array_equal(jones.matrix_from_pairs(jones.matrix_to_pairs(m)), m)


def test_vector_pairs_roundtrip():
    rng = np.random.default_rng(53)
    v = random_state(rng)
    assert np.array_equal(jones.vector_from_pairs(jones.vector_to_pairs(v)), v)
