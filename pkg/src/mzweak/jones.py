"""Jones calculus on the {|H>, |V>} polarization basis.

2x2 complex operators and 2-component states are plain ``numpy`` arrays of
dtype complex128; this module supplies the constructors, predicates, the
polar decomposition with a deterministic kernel convention, and the
weak-value algebra built on top of it.

Conventions
-----------
* States are column vectors ``(h, v)``; a "normalized" state satisfies
  ``|h|^2 + |v|^2 = 1`` to 1e-12.
* Wave plates are parametrized by the fast-axis angle from horizontal, in
  radians.  ``hwp(theta)`` is the real matrix
  ``[[cos 2t, sin 2t], [sin 2t, -cos 2t]]`` (no global phase).
* All functions are pure and never mutate their arguments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHermitianError, NotPSDError, OrthogonalSelectionError

DEFAULT_TOL = 1e-10
ORTHOGONALITY_CUTOFF = 1e-12
_NORMALIZATION_TOL = 1e-9


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def ket_h() -> np.ndarray:
    """Horizontal polarization state (1, 0)."""
    return np.array([1.0, 0.0], dtype=complex)


def ket_v() -> np.ndarray:
    """Vertical polarization state (0, 1)."""
    return np.array([0.0, 1.0], dtype=complex)


def ket_plus() -> np.ndarray:
    """Diagonal state (|H> + |V>)/sqrt(2)."""
    s = 1.0 / np.sqrt(2.0)
    return np.array([s, s], dtype=complex)


def ket_minus() -> np.ndarray:
    """Anti-diagonal state (|H> - |V>)/sqrt(2)."""
    s = 1.0 / np.sqrt(2.0)
    return np.array([s, -s], dtype=complex)


def ket_linear(theta: float) -> np.ndarray:
    """Linear polarization at angle ``theta`` from horizontal."""
    return np.array([np.cos(theta), np.sin(theta)], dtype=complex)


def ket_circular(hand: int = +1) -> np.ndarray:
    """Circular state (|H> + i*hand*|V>)/sqrt(2); ``hand`` is +1 or -1."""
    s = 1.0 / np.sqrt(2.0)
    return np.array([s, 1j * hand * s], dtype=complex)


def identity() -> np.ndarray:
    return np.eye(2, dtype=complex)


def sigma_x() -> np.ndarray:
    return np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


def proj_h() -> np.ndarray:
    """Projector onto |H> (transmitted arm of a PBS)."""
    return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def proj_v() -> np.ndarray:
    """Projector onto |V>; ``proj_h() + proj_v()`` is the identity exactly."""
    return np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


def lowering_operator() -> np.ndarray:
    """The non-Hermitian ladder operator [[0, 0], [1, 0]]."""
    return np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)


def waveplate(theta: float, retardance: float) -> np.ndarray:
    """Linear retarder with fast axis at ``theta`` and the given retardance.

    The slow axis acquires the phase ``exp(i * retardance)``; no global
    phase factor is applied, so ``waveplate(t, pi)`` equals ``hwp(t)``.
    """
    c, s = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -s], [s, c]], dtype=complex)
    core = np.array([[1.0, 0.0], [0.0, np.exp(1j * retardance)]], dtype=complex)
    return rot @ core @ rot.conj().T


def hwp(theta: float) -> np.ndarray:
    """Half-wave plate with fast axis at ``theta`` from horizontal.

    Written in closed form so entries are exact cosines/sines of ``2*theta``;
    the matrix is both Hermitian and unitary, with period pi in ``theta``.
    """
    c2, s2 = np.cos(2.0 * theta), np.sin(2.0 * theta)
    return np.array([[c2, s2], [s2, -c2]], dtype=complex)


def qwp(theta: float) -> np.ndarray:
    """Quarter-wave plate with fast axis at ``theta`` from horizontal."""
    return waveplate(theta, np.pi / 2.0)


def polarizer(theta: float) -> np.ndarray:
    """Rank-1 projector onto linear polarization at angle ``theta``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c * c, c * s], [c * s, s * s]], dtype=complex)


def class_operator(theta: float) -> np.ndarray:
    """The one-parameter non-Hermitian family hwp(theta) @ proj_h().

    Explicitly ``[[cos 2t, 0], [sin 2t, 0]]``; at ``theta = pi/4`` this is
    the lowering operator.
    """
    return hwp(theta) @ proj_h()


# ---------------------------------------------------------------------------
# predicates and helpers
# ---------------------------------------------------------------------------

def norm_sq(psi: np.ndarray) -> float:
    """Squared 2-norm of a state."""
    psi = np.asarray(psi, dtype=complex)
    return float(np.real(np.vdot(psi, psi)))


def normalize(psi: np.ndarray) -> np.ndarray:
    """Return ``psi`` scaled to unit norm."""
    psi = np.asarray(psi, dtype=complex)
    n = np.sqrt(norm_sq(psi))
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return psi / n


def is_normalized(psi: np.ndarray, tol: float = 1e-12) -> bool:
    return abs(norm_sq(psi) - 1.0) <= tol


def is_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_unitary(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(2))) <= tol)


def is_psd(m: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Hermitian within ``tol`` and with eigenvalues >= -tol."""
    if not is_hermitian(m, tol):
        return False
    m = np.asarray(m, dtype=complex)
    evals = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return bool(evals[0] >= -tol)


def frobenius_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(m, dtype=complex), ord="fro"))


def _require_normalized(psi: np.ndarray, name: str) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if abs(norm_sq(psi) - 1.0) > _NORMALIZATION_TOL:
        raise ValueError(f"{name} must be normalized (|norm^2 - 1| <= {_NORMALIZATION_TOL})")
    return psi


# ---------------------------------------------------------------------------
# expectation values, polar decomposition, weak values
# ---------------------------------------------------------------------------

def expectation(m: np.ndarray, psi: np.ndarray) -> complex:
    """Expectation value <psi|M|psi> of an arbitrary (possibly non-Hermitian) M.

    ``psi`` must be normalized; the result is complex in general.
    """
    psi = _require_normalized(psi, "psi")
    m = np.asarray(m, dtype=complex)
    return complex(np.vdot(psi, m @ psi))


def matrix_sqrt_psd(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Raises
    ------
    NotPSDError
        If ``m`` fails ``is_psd(tol)``.
    """
    m = np.asarray(m, dtype=complex)
    if not is_psd(m, tol):
        raise NotPSDError("matrix_sqrt_psd requires a positive semidefinite matrix")
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    evals = np.clip(evals, 0.0, None)
    return (evecs * np.sqrt(evals)) @ evecs.conj().T


@dataclass(frozen=True, eq=False)
class PolarDecomposition:
    """Factorization A = U @ R with U unitary and R Hermitian PSD.

    ``residual`` is the Frobenius norm of ``A - U @ R``.
    """

    u: np.ndarray
    r: np.ndarray
    residual: float


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate a global phase so the first nonzero component is real positive."""
    for comp in vec:
        if comp != 0.0:
            return vec * (abs(comp) / comp)
    return vec


def _orth_complement(vec: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to a unit 2-vector, phase-fixed."""
    return _fix_phase(np.array([-np.conj(vec[1]), np.conj(vec[0])], dtype=complex))


def polar_decompose(a: np.ndarray, cutoff: float = ORTHOGONALITY_CUTOFF) -> PolarDecomposition:
    """Polar-decompose an arbitrary 2x2 complex matrix as A = U @ R.

    R is the principal square root of ``A^dagger A``; U is unitary.  For
    invertible A both factors are unique.  When A is singular, U is not
    determined on the kernel of R; the kernel columns are completed by
    orthonormality with the phase convention "first nonzero component real
    and positive", which maps the ladder operator [[0,0],[1,0]] to
    exactly (sigma_x, proj_h).  A zero matrix decomposes as (I, 0).
    """
    a = np.asarray(a, dtype=complex)
    w, s, vh = np.linalg.svd(a)
    if s[0] < cutoff:
        u = np.eye(2, dtype=complex)
        r = np.zeros((2, 2), dtype=complex)
    elif s[1] < cutoff:
        # rank one: rebuild both bases with the deterministic convention
        v1 = _fix_phase(vh[0].conj())
        v2 = _orth_complement(v1)
        w1 = (a @ v1) / s[0]
        w2 = _orth_complement(w1)
        u = np.outer(w1, v1.conj()) + np.outer(w2, v2.conj())
        r = s[0] * np.outer(v1, v1.conj())
    else:
        u = w @ vh
        r = (vh.conj().T * s) @ vh
    residual = frobenius_norm(a - u @ r)
    return PolarDecomposition(u=u, r=r, residual=residual)


def weak_value(
    r: np.ndarray,
    psi: np.ndarray,
    phi: np.ndarray,
    orthogonality_cutoff: float = ORTHOGONALITY_CUTOFF,
) -> complex:
    """Weak value <phi|R|psi> / <phi|psi> of operator R.

    Parameters
    ----------
    r : operator whose weak value is taken (any 2x2 complex matrix).
    psi : normalized pre-selection state.
    phi : normalized post-selection state.

    Raises
    ------
    OrthogonalSelectionError
        If ``|<phi|psi>|`` is below ``orthogonality_cutoff``; the weak value
        diverges for orthogonal selections.
    """
    psi = _require_normalized(psi, "psi")
    phi = _require_normalized(phi, "phi")
    r = np.asarray(r, dtype=complex)
    overlap = complex(np.vdot(phi, psi))
    if abs(overlap) < orthogonality_cutoff:
        raise OrthogonalSelectionError(
            f"|<phi|psi>| = {abs(overlap):.3e} below cutoff {orthogonality_cutoff:.0e}"
        )
    return complex(np.vdot(phi, r @ psi)) / overlap


def nonhermitian_expectation_via_weak(a: np.ndarray, psi: np.ndarray) -> complex:
    """Expectation <psi|A|psi> computed through the polar/weak-value chain.

    Decomposes A = U R, forms the post-selection phi = U^dagger psi, and
    returns ``weak_value(R, psi, phi) * <phi|psi>``.  Algebraically this
    equals ``expectation(a, psi)``; the two routes agree to 1e-10 whenever
    ``|<psi|U|psi>|`` is not vanishingly small.

    Raises
    ------
    OrthogonalSelectionError
        Propagated when ``<psi|U|psi>`` is numerically zero.
    """
    psi = _require_normalized(psi, "psi")
    dec = polar_decompose(np.asarray(a, dtype=complex))
    phi = dec.u.conj().T @ psi
    overlap = complex(np.vdot(phi, psi))
    return weak_value(dec.r, psi, phi) * overlap


# ---------------------------------------------------------------------------
# serialization (JSON-friendly [re, im] pair lists, row-major)
# ---------------------------------------------------------------------------

def matrix_to_pairs(m: np.ndarray) -> list:
    """Serialize a 2x2 matrix as four [re, im] pairs, row-major."""
    m = np.asarray(m, dtype=complex).reshape(4)
    return [[float(c.real), float(c.imag)] for c in m]


def matrix_from_pairs(pairs) -> np.ndarray:
    """Inverse of :func:`matrix_to_pairs`."""
    flat = [complex(re, im) for re, im in pairs]
    if len(flat) != 4:
        raise ValueError("matrix serialization needs exactly four [re, im] pairs")
    return np.array(flat, dtype=complex).reshape(2, 2)


def vector_to_pairs(psi: np.ndarray) -> list:
    """Serialize a 2-vector as two [re, im] pairs."""
    psi = np.asarray(psi, dtype=complex).reshape(2)
    return [[float(c.real), float(c.imag)] for c in psi]


def vector_from_pairs(pairs) -> np.ndarray:
    flat = [complex(re, im) for re, im in pairs]
    if len(flat) != 2:
        raise ValueError("vector serialization needs exactly two [re, im] pairs")
    return np.array(flat, dtype=complex)


def require_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Return ``m`` unchanged or raise :class:`NotHermitianError`."""
    m = np.asarray(m, dtype=complex)
    if not is_hermitian(m, tol):
        raise NotHermitianError("operator must be Hermitian")
    return m
