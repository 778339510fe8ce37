"""Fixed-size complex linear algebra for 1- and 2-qubit states.

States are numpy arrays of complex amplitudes: length 2 in the basis
|0>, |1> and length 4 in the basis |00>, |01>, |10>, |11> (first qubit
is the most significant slot).  A 2-qubit state psi is often handled
through its 2x2 coefficient matrix ``Psi[a, b] = psi[2 * a + b]``.

All predicates are tolerance-based; the defaults below are two orders
of magnitude above double-precision noise at these sizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DependentInput, ZeroState

TOL_NORM = 1e-10
TOL_ORTH = 1e-10
TOL_ENT = 1e-10
TOL_IND = 1e-12
TOL_SPAN = 1e-8
TOL_EQ = 1e-9

NORM_FLOOR = 1e-6


def as_state(v) -> np.ndarray:
    """Coerce to a complex amplitude vector without copying when possible."""
    return np.asarray(v, dtype=np.complex128)


def normalize(v) -> np.ndarray:
    """Return v / ||v||.  Raises ZeroState below the renormalization floor."""
    v = as_state(v)
    n = np.linalg.norm(v)
    if n < NORM_FLOOR:
        raise ZeroState(f"norm {n:.3e} below floor {NORM_FLOOR:.0e}")
    if abs(n - 1.0) <= 1e-12:
        return v
    return v / n


def braket(a, b) -> complex:
    """Hermitian inner product <a|b>."""
    return complex(np.vdot(as_state(a), as_state(b)))


def norm_of(v) -> float:
    return float(np.linalg.norm(as_state(v)))


def phase_equal(a, b, tol: float = TOL_EQ) -> bool:
    """Whether two normalized states agree up to a global phase.

    Scale-free test: 1 - |<a|b>| <= tol.
    """
    return 1.0 - abs(braket(a, b)) <= tol


def perp(alpha) -> np.ndarray:
    """The 1-qubit state Hermitian-orthogonal to alpha.

    perp((a0, a1)) = (conj(a1), -conj(a0)), so <alpha|perp(alpha)> = 0
    identically and perp(perp(alpha)) = -alpha.  On real amplitudes this
    reduces to (a1, -a0).
    """
    a = as_state(alpha)
    return np.array([np.conj(a[1]), -np.conj(a[0])], dtype=np.complex128)


def coeff_matrix(psi) -> np.ndarray:
    """2x2 coefficient-matrix view of a 2-qubit state."""
    return as_state(psi).reshape(2, 2)


def det2(psi) -> complex:
    """Determinant of the coefficient matrix; zero iff psi is a product state."""
    p = as_state(psi)
    return complex(p[0] * p[3] - p[1] * p[2])


def swap_qubits(psi) -> np.ndarray:
    """Exchange the two tensor slots (transpose of the coefficient matrix)."""
    p = as_state(psi)
    return np.array([p[0], p[2], p[1], p[3]], dtype=np.complex128)


def product_state(x, y) -> np.ndarray:
    """Tensor product of two 1-qubit states as a 4-vector."""
    return np.kron(as_state(x), as_state(y))


def is_entangled(psi, tol_ent: float = TOL_ENT) -> bool:
    """True iff |det| of the coefficient matrix exceeds tol_ent."""
    return abs(det2(psi)) > tol_ent


def product_factors(psi) -> tuple[np.ndarray, np.ndarray]:
    """Factor a (near-)product 2-qubit state as x (x) y.

    Uses the dominant singular pair of the coefficient matrix, so it is
    well defined for any state; callers should gate on is_entangled.
    """
    m = coeff_matrix(normalize(psi))
    u, _, vh = np.linalg.svd(m)
    return u[:, 0].copy(), vh[0, :].copy()


@dataclass(frozen=True)
class SchmidtForm:
    """Two-term Schmidt decomposition lam1*x1(x)y1 + lam2*x2(x)y2."""

    lambda1: float
    lambda2: float
    x1: np.ndarray
    x2: np.ndarray
    y1: np.ndarray
    y2: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.lambda1 * np.kron(self.x1, self.y1) + self.lambda2 * np.kron(
            self.x2, self.y2
        )


def schmidt(psi) -> SchmidtForm:
    """Schmidt decomposition of a normalized 2-qubit state.

    Singular value decomposition of the coefficient matrix: with
    Psi = U diag(s) Vh, the left factors are the columns of U and the
    right factors are the rows of Vh, so lam1 * lam2 = |det Psi|.
    """
    m = coeff_matrix(psi)
    u, s, vh = np.linalg.svd(m)
    return SchmidtForm(
        lambda1=float(s[0]),
        lambda2=float(s[1]),
        x1=u[:, 0].copy(),
        x2=u[:, 1].copy(),
        y1=vh[0, :].copy(),
        y2=vh[1, :].copy(),
    )


def orthonormal_complement(vectors, dim: int) -> list[np.ndarray]:
    """Orthonormal basis of the orthogonal complement of span(vectors) in C^dim."""
    a = np.array([np.conj(as_state(v)) for v in vectors], dtype=np.complex128)
    _, _, vh = np.linalg.svd(a, full_matrices=True)
    k = len(vectors)
    return [np.conj(vh[r]) for r in range(k, dim)]


def _bilinear_perp(u: np.ndarray) -> np.ndarray:
    # nonzero alpha with alpha^T u = 0
    if abs(u[0]) < 1e-300 and abs(u[1]) < 1e-300:
        return np.array([1.0 + 0j, 0.0 + 0j])
    return np.array([u[1], -u[0]], dtype=np.complex128)


def product_in_span(v1, v2, tol_ind: float = TOL_IND) -> np.ndarray:
    """A normalized product state inside span{v1, v2}.

    Works on the orthocomplement {psi, phi} of the span: a product state
    alpha (x) beta lies in the span iff alpha^T Psi beta = alpha^T Phi beta = 0
    for the conjugate coefficient matrices Psi, Phi.  When Phi is singular,
    beta spans its null space; otherwise beta is an eigenvector of
    Phi^-1 Psi (ties broken toward the eigenvalue of larger modulus) and
    alpha is the bilinear orthogonal of Phi beta.

    Raises DependentInput when the Gram determinant of (v1, v2) is at or
    below tol_ind.
    """
    a = normalize(v1)
    b = normalize(v2)
    gram = 1.0 - abs(braket(a, b)) ** 2
    if gram <= tol_ind:
        raise DependentInput(f"gram determinant {gram:.3e} <= {tol_ind:.0e}")

    psi, phi = orthonormal_complement([a, b], 4)
    cpsi = np.conj(coeff_matrix(psi))
    cphi = np.conj(coeff_matrix(phi))

    det_phi = cphi[0, 0] * cphi[1, 1] - cphi[0, 1] * cphi[1, 0]
    if abs(det_phi) <= 1e-12:
        _, _, vh = np.linalg.svd(cphi)
        beta = np.conj(vh[1])
        alpha = _bilinear_perp(cpsi @ beta)
    else:
        m = np.linalg.inv(cphi) @ cpsi
        vals, vecs = np.linalg.eig(m)
        idx = int(np.argmax(np.abs(vals)))
        beta = vecs[:, idx]
        alpha = _bilinear_perp(cphi @ beta)

    alpha = alpha / np.linalg.norm(alpha)
    beta = beta / np.linalg.norm(beta)
    return np.kron(alpha, beta)


def span_membership(w, v1, v2) -> float:
    """Norm of the projection of normalized w onto span{v1, v2}."""
    a = normalize(v1)
    b2 = as_state(v2) - braket(a, v2) * a
    w = normalize(w)
    proj = braket(a, w) * a
    nb = np.linalg.norm(b2)
    if nb > 1e-14:
        b2 = b2 / nb
        proj = proj + braket(b2, w) * b2
    return float(np.linalg.norm(proj))


def random_qubit1(rng: np.random.Generator) -> np.ndarray:
    """Haar-like random 1-qubit state: complex standard normals, normalized."""
    while True:
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        if np.linalg.norm(v) > 1e-3:
            return v / np.linalg.norm(v)


def random_qubit2(rng: np.random.Generator) -> np.ndarray:
    """Haar-like random 2-qubit state."""
    while True:
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        if np.linalg.norm(v) > 1e-3:
            return v / np.linalg.norm(v)


def random_entangled_qubit2(rng: np.random.Generator, min_det: float = 0.1) -> np.ndarray:
    """Random 2-qubit state with |det| of the coefficient matrix above min_det."""
    while True:
        v = random_qubit2(rng)
        if abs(det2(v)) > min_det:
            return v
