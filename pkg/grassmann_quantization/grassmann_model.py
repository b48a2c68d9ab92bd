"""
Projection-matrix model of the cotangent bundle of a Grassmannian.

A point is a rank-n idempotent d×d matrix q (not necessarily Hermitian); the
Hermitian ones form the zero section, i.e. the Grassmannian itself. Tangent
vectors at q are matrices A with qA + Aq = A.
"""

from dataclasses import dataclass

import numpy as np

from grassmann_quantization.exceptions import ContractViolation, DimensionError
from grassmann_quantization.matrix_kernel import (
    as_complex_matrix,
    dagger,
    expm,
    gaussian_batch,
    gaussian_matrix,
    numerical_rank,
    orthonormal_frame,
)

CONSTRUCTION_TOL = 1e-10
IDENTITY_TOL = 1e-12
MAX_DIM = 16


def _scale(*matrices):
    return max([1.0] + [float(np.linalg.norm(M)) ** 2 for M in matrices])


@dataclass(frozen=True, eq=False)
class ProjectionPoint:
    """
    A rank-n idempotent q, i.e. a point of T*G_n(C^d).

    The raw trace Tr(q) equals the rank; :meth:`tau` is the normalized trace
    Tr(q·M)/n under which rank-n projections have trace 1.

    Raises
    ------
    TypeError
        If `rank` is not an integer.
    ValueError
        If the rank is degenerate (0 or d) or d exceeds MAX_DIM.
    ContractViolation
        If q is not idempotent, its trace differs from the rank, or its
        numerical rank differs from the declared one.
    """

    matrix: np.ndarray
    rank: int

    def __post_init__(self):
        q = as_complex_matrix(self.matrix, "q")
        if q.shape[0] != q.shape[1]:
            raise DimensionError(f"q must be square, got shape {q.shape}.")
        if isinstance(self.rank, bool) or not isinstance(self.rank, (int, np.integer)):
            raise TypeError("rank must be an integer.")
        d = q.shape[0]
        if d > MAX_DIM:
            raise ValueError(f"Dimension {d} exceeds the supported maximum {MAX_DIM}.")
        if not 1 <= self.rank < d:
            raise ValueError(
                f"rank must satisfy 1 <= n < d, got n={self.rank}, d={d}."
            )
        tol = CONSTRUCTION_TOL * _scale(q)
        defect = np.linalg.norm(q @ q - q)
        if defect > tol:
            raise ContractViolation(f"q is not idempotent: ||q^2 - q|| = {defect:.3e}.")
        if abs(np.trace(q) - self.rank) > tol:
            raise ContractViolation(
                f"Tr(q) = {np.trace(q):.6g} differs from rank {self.rank}."
            )
        if numerical_rank(q) != self.rank:
            raise ContractViolation("Numerical rank of q differs from the declared rank.")
        q.flags.writeable = False
        object.__setattr__(self, "matrix", q)
        object.__setattr__(self, "rank", int(self.rank))

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def is_hermitian(self):
        return bool(np.linalg.norm(self.matrix - dagger(self.matrix)) <= CONSTRUCTION_TOL)

    def tau(self, M=None):
        """Normalized trace τ(q·M) = Tr(qM)/n; τ(q) = 1."""
        if M is None:
            return complex(np.trace(self.matrix)) / self.rank
        return complex(np.trace(self.matrix @ np.asarray(M))) / self.rank

    def complement(self):
        return np.eye(self.dim) - self.matrix


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A matrix A with qA + Aq = A, based at the point q."""

    base: ProjectionPoint
    matrix: np.ndarray

    def __post_init__(self):
        if not isinstance(self.base, ProjectionPoint):
            raise TypeError("base must be a ProjectionPoint.")
        A = as_complex_matrix(self.matrix, "A")
        if A.shape != self.base.matrix.shape:
            raise DimensionError(
                f"Tangent matrix shape {A.shape} does not match base {self.base.matrix.shape}."
            )
        q = self.base.matrix
        defect = np.linalg.norm(q @ A + A @ q - A)
        if defect > CONSTRUCTION_TOL * _scale(q, A):
            raise ContractViolation(f"A is not tangent at q: ||qA + Aq - A|| = {defect:.3e}.")
        A.flags.writeable = False
        object.__setattr__(self, "matrix", A)

    def __add__(self, other):
        _same_base(self, other)
        return TangentVector(self.base, self.matrix + other.matrix)

    def __sub__(self, other):
        _same_base(self, other)
        return TangentVector(self.base, self.matrix - other.matrix)

    def __mul__(self, scalar):
        return TangentVector(self.base, scalar * self.matrix)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class CotangentDecomposition:
    """q = q_V + f with q_V the orthogonal projection onto im(q) and f: V⊥ → V."""

    base_orthogonal: ProjectionPoint
    fiber_part: np.ndarray


def _same_base(u, v):
    if u.base is not v.base and not np.allclose(
        u.base.matrix, v.base.matrix, atol=CONSTRUCTION_TOL
    ):
        raise ContractViolation("Tangent vectors are based at different points.")


def from_frame(V):
    """
    Hermitian point q = VV† from an orthonormal frame.

    Raises
    ------
    ContractViolation
        If the columns of `V` are not orthonormal.
    """
    V = as_complex_matrix(V, "V")
    gram_defect = np.linalg.norm(dagger(V) @ V - np.eye(V.shape[1]))
    if gram_defect > CONSTRUCTION_TOL:
        raise ContractViolation(f"Frame is not orthonormal: ||V†V - I|| = {gram_defect:.3e}.")
    return ProjectionPoint(V @ dagger(V), V.shape[1])


def _check_ranks(d, n):
    if not 1 <= n < d:
        raise ValueError(f"rank must satisfy 1 <= n < d, got n={n}, d={d}.")


def haar_sample(d, n, rng):
    """Haar-random point of the zero section: span of n orthonormalized Gaussian columns."""
    _check_ranks(d, n)
    V = orthonormal_frame(gaussian_matrix(rng, d, n), n)
    return from_frame(V)


def haar_batch(d, n, count, rng):
    """
    Stack of `count` Haar-random Hermitian projections as a (count, d, d) array.

    The batched QR is not pivoted; Ginibre columns are independent with
    probability one, so no rank check is needed here.
    """
    _check_ranks(d, n)
    G = gaussian_batch(rng, count, d, n)
    Q, _ = np.linalg.qr(G)
    return Q @ dagger(Q)


def compose_cotangent(base, f):
    """
    Point q = q_V + f over the Hermitian base q_V.

    Parameters
    ----------
    base : ProjectionPoint
        Hermitian projection q_V.
    f : array_like
        Fiber coordinate with q_V f = f and f q_V = 0.

    Raises
    ------
    ContractViolation
        If `base` is not Hermitian or `f` violates the side conditions.
    """
    if not base.is_hermitian:
        raise ContractViolation("Base of a cotangent composition must be Hermitian.")
    f = as_complex_matrix(f, "f")
    qV = base.matrix
    tol = CONSTRUCTION_TOL * max(1.0, float(np.linalg.norm(f)))
    if np.linalg.norm(qV @ f - f) > tol or np.linalg.norm(f @ qV) > tol:
        raise ContractViolation("Fiber part must map the orthogonal complement into im(q_V).")
    return ProjectionPoint(qV + f, base.rank)


def decompose_cotangent(q):
    """Split q into its Hermitian base projection and its fiber part."""
    V = orthonormal_frame(q.matrix, q.rank)
    base = from_frame(V)
    return CotangentDecomposition(base, q.matrix - base.matrix)


def random_cotangent_point(d, n, rng, fiber_norm=0.5):
    """
    Non-Hermitian point over a Haar base, with fiber part of Frobenius norm `fiber_norm`.

    A zero norm returns the Hermitian base itself.
    """
    base = haar_sample(d, n, rng)
    qV = base.matrix
    f = qV @ gaussian_matrix(rng, d, d) @ (np.eye(d) - qV)
    size = np.linalg.norm(f)
    if fiber_norm == 0 or size == 0:
        return base
    return compose_cotangent(base, f * (fiber_norm / size))


def tangent_component(q, X):
    """
    Projection of an arbitrary matrix onto the tangent space at q.

    A = qX(I - q) + (I - q)Xq; applying it twice equals applying it once.
    """
    X = as_complex_matrix(X, "X")
    if X.shape != q.matrix.shape:
        raise DimensionError(f"X shape {X.shape} does not match q shape {q.matrix.shape}.")
    P = q.matrix
    C = q.complement()
    return TangentVector(q, P @ X @ C + C @ X @ P)


def random_tangent(q, rng, norm=1.0):
    """Tangent at q with Gaussian off-diagonal blocks, rescaled to Frobenius `norm`."""
    A = tangent_component(q, gaussian_matrix(rng, q.dim, q.dim)).matrix
    return TangentVector(q, A * (norm / np.linalg.norm(A)))


def apply_I(v):
    return TangentVector(v.base, 1j * v.matrix)


def apply_J(v):
    """J(A) = i[A, q]."""
    q = v.base.matrix
    A = v.matrix
    return TangentVector(v.base, 1j * (A @ q - q @ A))


def apply_K(v):
    """K = IJ; an involution whose +1 eigenvectors are the vertical tangents (Aq = 0)."""
    return apply_I(apply_J(v))


def retract(q, v, t):
    """
    Move along the similarity flow q_t = exp(tΛ) q exp(-tΛ), Λ = [A, q].

    The flow stays exactly on the manifold and has velocity A at t = 0.
    """
    if v.base is not q and not np.allclose(v.base.matrix, q.matrix, atol=CONSTRUCTION_TOL):
        raise ContractViolation("Tangent vector is not based at q.")
    if t == 0:
        return q
    Lam = v.matrix @ q.matrix - q.matrix @ v.matrix
    return ProjectionPoint(expm(t * Lam) @ q.matrix @ expm(-t * Lam), q.rank)


def adjoint_involution(q):
    """q ↦ q†; its fixed points are exactly the zero section."""
    return ProjectionPoint(dagger(q.matrix), q.rank)


def hermitian_split(v):
    """
    Decompose a tangent at a Hermitian point as A = H1 + i·H2 with H1, H2 Hermitian tangents.

    Raises
    ------
    ContractViolation
        If the base point is not Hermitian.
    """
    if not v.base.is_hermitian:
        raise ContractViolation("Hermitian split needs a Hermitian base point.")
    A = v.matrix
    return (
        TangentVector(v.base, (A + dagger(A)) / 2),
        TangentVector(v.base, (A - dagger(A)) / 2j),
    )


def is_vertical(v, tol=IDENTITY_TOL):
    """True when v is tangent to the fiber of T*G → G, i.e. Aq = 0."""
    scale = max(1.0, float(np.linalg.norm(v.matrix)))
    return bool(np.linalg.norm(v.matrix @ v.base.matrix) <= tol * scale)


def tessarine_residual(v):
    """
    Largest deviation from I² = J² = -1, K² = +1, IJ = JI, K = IJ on one tangent.
    """
    A = v.matrix
    I = apply_I
    J = apply_J
    K = apply_K
    residuals = [
        np.linalg.norm(I(I(v)).matrix + A),
        np.linalg.norm(J(J(v)).matrix + A),
        np.linalg.norm(K(K(v)).matrix - A),
        np.linalg.norm(I(J(v)).matrix - J(I(v)).matrix),
        np.linalg.norm(K(v).matrix - I(J(v)).matrix),
    ]
    return float(max(residuals))
