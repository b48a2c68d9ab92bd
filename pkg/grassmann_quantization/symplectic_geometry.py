from dataclasses import dataclass

import numpy as np

from grassmann_quantization.exceptions import ContractViolation
from grassmann_quantization.grassmann_model import (
    CONSTRUCTION_TOL,
    ProjectionPoint,
    TangentVector,
    apply_J,
    retract,
    tangent_component,
)
from grassmann_quantization.matrix_kernel import (
    as_complex_matrix,
    dagger,
    matrix_unit,
)


@dataclass(frozen=True)
class KahlerCheck:
    omega: complex
    metric_form: complex


def _check_based_at(q, *vectors):
    for v in vectors:
        if v.base is not q and not np.allclose(
            v.base.matrix, q.matrix, atol=CONSTRUCTION_TOL
        ):
            raise ContractViolation("Tangent vector is not based at the given point.")


def omega(q, u, v):
    """
    Holomorphic symplectic form Ω_q(A, B) = i·τ(q[A, B]).

    Parameters
    ----------
    q : ProjectionPoint
        Base point.
    u, v : TangentVector
        Tangent vectors based at `q`.

    Returns
    -------
    complex
        The value of the form, antisymmetric in (u, v).

    Raises
    ------
    ContractViolation
        If either vector is based elsewhere.
    """
    _check_based_at(q, u, v)
    A = u.matrix
    B = v.matrix
    return 1j * complex(np.trace(q.matrix @ (A @ B - B @ A))) / q.rank


def hamiltonian_field(q, M):
    """X_<M>(q) = i[M, q], the Hamiltonian vector field of the expectation symbol of M."""
    M = as_complex_matrix(M, "M")
    return TangentVector(q, 1j * (M @ q.matrix - q.matrix @ M))


def poisson_bracket(M, N, q):
    """
    Poisson bracket {<M>, <N>}(q) = d<N>(X_<M>) = Ω_q(X_<N>, X_<M>).

    With this ordering the expectation map is a morphism onto i{·,·}:
    <[M, N]>(q) = i{<M>, <N>}(q).
    """
    return omega(q, hamiltonian_field(q, N), hamiltonian_field(q, M))


def expectation_derivative(q, M, v, h=1e-4):
    """Central difference of τ(qM) along the retraction through q in direction v."""
    M = as_complex_matrix(M, "M")
    forward = retract(q, v, h).tau(M)
    backward = retract(q, v, -h).tau(M)
    return (forward - backward) / (2 * h)


def real_tangent_basis(q):
    """
    Basis of the tangent space at q, orthonormal for Re Tr(A†B).

    Projected matrix units E_ij and iE_ij are stacked as real vectors and
    orthonormalized by SVD. The real dimension is 4n(d - n).

    Returns
    -------
    list of numpy.ndarray
        4n(d - n) complex d×d matrices.
    """
    d = q.dim
    n = q.rank
    columns = []
    for i in range(d):
        for j in range(d):
            for scalar in (1.0, 1j):
                A = tangent_component(q, scalar * matrix_unit(d, i, j)).matrix
                columns.append(np.concatenate([A.real.ravel(), A.imag.ravel()]))
    stacked = np.array(columns).T
    U, _, _ = np.linalg.svd(stacked, full_matrices=False)
    dimension = 4 * n * (d - n)
    basis = []
    for k in range(dimension):
        vector = U[:, k]
        basis.append((vector[: d * d] + 1j * vector[d * d :]).reshape(d, d))
    return basis


def omega_gram(q):
    """Gram matrix of Re Ω over :func:`real_tangent_basis`."""
    basis = [TangentVector(q, A) for A in real_tangent_basis(q)]
    size = len(basis)
    gram = np.empty((size, size))
    for a in range(size):
        for b in range(size):
            gram[a, b] = omega(q, basis[a], basis[b]).real
    return gram


def nondegeneracy_certificate(q):
    """
    Smallest singular value of the Re Ω Gram matrix on an orthonormal real basis.

    Positive exactly when Ω is non-degenerate at q. Invariant under unitary
    conjugation of q since both Ω and the basis inner product are.
    """
    return float(np.linalg.svd(omega_gram(q), compute_uv=False)[-1])


def zero_section_metric(q, u, v):
    """τ(AB), positive definite on Hermitian tangents at Hermitian points."""
    _check_based_at(q, u, v)
    return complex(np.trace(u.matrix @ v.matrix)) / q.rank


def kahler_zero_section_check(q, u, v):
    """
    Both sides of Ω_q(A, B) = τ(A·JB) at a Hermitian point with Hermitian tangents.

    Raises
    ------
    ContractViolation
        If `q`, `u` or `v` is not Hermitian.
    """
    if not q.is_hermitian:
        raise ContractViolation("Kähler check needs a Hermitian base point.")
    for w in (u, v):
        if np.linalg.norm(w.matrix - dagger(w.matrix)) > CONSTRUCTION_TOL:
            raise ContractViolation("Kähler check needs Hermitian tangent vectors.")
    value = omega(q, u, v)
    metric_form = complex(np.trace(u.matrix @ apply_J(v).matrix)) / q.rank
    return KahlerCheck(omega=value, metric_form=metric_form)


def conjugate_tangents(Z, q, *vectors):
    """
    Push a point and tangents forward under q ↦ ZqZ⁻¹, A ↦ ZAZ⁻¹.

    Returns
    -------
    tuple
        The image point followed by the image tangents, all sharing one base.
    """
    Zinv = np.linalg.inv(Z)
    point = ProjectionPoint(Z @ q.matrix @ Zinv, q.rank)
    return (point,) + tuple(TangentVector(point, Z @ v.matrix @ Zinv) for v in vectors)
