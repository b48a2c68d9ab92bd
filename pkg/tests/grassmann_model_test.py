import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grassmann_quantization.exceptions import ContractViolation, RankDeficiencyError
from grassmann_quantization.grassmann_model import (
    ProjectionPoint,
    TangentVector,
    adjoint_involution,
    apply_I,
    apply_J,
    apply_K,
    compose_cotangent,
    decompose_cotangent,
    from_frame,
    haar_batch,
    haar_sample,
    hermitian_split,
    is_vertical,
    random_cotangent_point,
    random_tangent,
    retract,
    tangent_component,
    tessarine_residual,
)
from grassmann_quantization.matrix_kernel import RngState, gaussian_matrix, haar_unitary


def test_from_frame_gives_hermitian_projection():
    """
    Test that an orthonormal frame gives a Hermitian rank-n projection.

    GIVEN: The first two standard basis vectors of C³.
    WHEN: from_frame is called.
    THEN: The point is diag(1, 1, 0), Hermitian, with τ(q) = 1.
    """
    q = from_frame(np.eye(3)[:, :2])

    assert np.allclose(q.matrix, np.diag([1, 1, 0]))
    assert q.is_hermitian
    assert np.isclose(q.tau(), 1.0)


def test_from_frame_rejects_non_orthonormal_frame():
    """
    Test the orthonormality contract of from_frame.

    GIVEN: A frame whose columns have length 2.
    WHEN: from_frame is called.
    THEN: A ContractViolation is raised.
    """
    with pytest.raises(ContractViolation, match="not orthonormal"):
        from_frame(2 * np.eye(3)[:, :1])


@pytest.mark.parametrize(
    "matrix, rank, error, message",
    [
        (np.diag([1.0, 0.5]), 1, ContractViolation, "not idempotent"),
        (np.eye(2), 2, ValueError, "1 <= n < d"),
        (np.diag([1.0, 0.0]), 1.0, TypeError, "integer"),
    ],
)
def test_projection_point_contract(matrix, rank, error, message):
    """
    Test that ProjectionPoint rejects non-idempotents, degenerate ranks and non-integer ranks.

    GIVEN: An invalid matrix or rank.
    WHEN: ProjectionPoint is constructed.
    THEN: The matching error is raised.
    """
    with pytest.raises(error, match=message):
        ProjectionPoint(matrix, rank)


def test_non_hermitian_idempotent_is_accepted():
    """
    Test that non-Hermitian idempotents are points of the cotangent bundle.

    GIVEN: q = [[1, 2], [0, 0]], idempotent of trace 1.
    WHEN: ProjectionPoint is built.
    THEN: The point exists and is not Hermitian; its adjoint is a point as well.
    """
    q = ProjectionPoint(np.array([[1.0, 2.0], [0.0, 0.0]]), 1)

    assert not q.is_hermitian
    assert np.allclose(adjoint_involution(q).matrix, q.matrix.conj().T)


def test_cotangent_round_trip():
    """
    Test that decompose_cotangent inverts compose_cotangent.

    GIVEN: A Haar base point and a fiber part f with q_V f = f, f q_V = 0.
    WHEN: The composed point is decomposed.
    THEN: The base and fiber part are recovered to 1e-10.
    """
    rng = RngState(8)
    base = haar_sample(4, 2, rng)
    f = base.matrix @ gaussian_matrix(rng, 4, 4) @ base.complement()
    q = compose_cotangent(base, 0.3 * f)
    parts = decompose_cotangent(q)

    assert np.allclose(parts.base_orthogonal.matrix, base.matrix, atol=1e-10)
    assert np.allclose(parts.fiber_part, 0.3 * f, atol=1e-10)


def test_compose_cotangent_side_conditions():
    """
    Test that fiber parts violating f q_V = 0 are rejected.

    GIVEN: A base q_V = diag(1, 0) and f = q_V.
    WHEN: compose_cotangent is called.
    THEN: A ContractViolation is raised.
    """
    base = ProjectionPoint(np.diag([1.0, 0.0]), 1)
    with pytest.raises(ContractViolation, match="Fiber part"):
        compose_cotangent(base, np.diag([1.0, 0.0]))


def test_decompose_rank_deficiency_propagates():
    """
    Test that decompose_cotangent surfaces a rank deficiency from the frame computation.

    GIVEN: A ProjectionPoint-like object whose matrix has rank one but claims rank two.
    WHEN: decompose_cotangent is called.
    THEN: A RankDeficiencyError is raised.
    """

    class Fake:
        matrix = np.diag([1.0, 0.0, 0.0])
        rank = 2

    with pytest.raises(RankDeficiencyError):
        decompose_cotangent(Fake())


def test_haar_batch_points_are_projections():
    """
    Test the batched Haar sampler.

    GIVEN: 50 Haar-random rank-2 points in C⁴.
    WHEN: They are drawn with haar_batch.
    THEN: Each is a Hermitian idempotent of trace 2.
    """
    points = haar_batch(4, 2, 50, RngState(1))

    assert np.allclose(points @ points, points, atol=1e-12)
    assert np.allclose(points, np.conj(np.swapaxes(points, 1, 2)), atol=1e-12)
    assert np.allclose(np.trace(points, axis1=1, axis2=2), 2.0)


def test_haar_sampling_is_unitarily_invariant():
    """
    Test that Haar samples look the same from every direction.

    GIVEN: 20000 Haar-random rank-one points of C³, the basis vector e1 and a Haar-rotated vector Ue1.
    WHEN: The fourth moment |⟨a, qa⟩|² is averaged along both vectors, and the samples are rotated by U.
    THEN: Both averages match 2/(d(d+1)) = 1/6 within 0.007, and the rotated samples
          have the same mean (n/d)·I as the originals within 0.02.
    """
    rng = RngState(5)
    points = haar_batch(3, 1, 20000, rng)
    U = haar_unitary(rng, 3)
    e1 = np.array([1.0, 0.0, 0.0], dtype=np.complex128)

    for a in (e1, U @ e1):
        moment = np.mean(np.abs(np.einsum("i,kij,j->k", np.conj(a), points, a)) ** 2)
        assert abs(moment - 1 / 6) < 0.007

    rotated = U @ points @ U.conj().T
    assert np.linalg.norm(rotated.mean(axis=0) - np.eye(3) / 3) < 0.02
    assert np.linalg.norm(points.mean(axis=0) - np.eye(3) / 3) < 0.02


def test_tangent_component_is_idempotent():
    """
    Test that projecting onto the tangent space twice equals projecting once.

    GIVEN: A random cotangent point and a random matrix X.
    WHEN: tangent_component is applied twice.
    THEN: The results agree to 1e-12.
    """
    rng = RngState(2)
    q = random_cotangent_point(3, 1, rng)
    once = tangent_component(q, gaussian_matrix(rng, 3, 3))
    twice = tangent_component(q, once.matrix)

    assert np.allclose(once.matrix, twice.matrix, atol=1e-12)


def test_tangent_vector_contract():
    """
    Test that non-tangent matrices are rejected.

    GIVEN: q = diag(1, 0) and A = q (qA + Aq = 2A ≠ A).
    WHEN: TangentVector is built.
    THEN: A ContractViolation is raised.
    """
    q = ProjectionPoint(np.diag([1.0, 0.0]), 1)
    with pytest.raises(ContractViolation, match="not tangent"):
        TangentVector(q, np.diag([1.0, 0.0]))


@given(
    st.integers(min_value=2, max_value=6),
    st.integers(min_value=1, max_value=5),
    st.integers(min_value=0, max_value=2**32),
)
@settings(max_examples=40, deadline=None)
def test_tessarine_identities(d, n, seed):
    """
    Property: I² = J² = −1, K² = +1 and IJ = JI on random tangents.

    GIVEN: A random cotangent point of T*G_n(C^d) and a tangent at it.
    WHEN: tessarine_residual is evaluated.
    THEN: It is below 1e-12.
    """
    n = min(n, d - 1)
    rng = RngState(seed)
    q = random_cotangent_point(d, n, rng)
    v = random_tangent(q, rng)

    assert tessarine_residual(v) < 1e-12


def test_vertical_tangents_are_K_eigenvectors():
    """
    Test that vertical tangents (Aq = 0) are the +1 eigenvectors of K.

    GIVEN: A = qX(I − q) at a random cotangent point.
    WHEN: K is applied.
    THEN: K(A) = A and A is vertical, while B = (I − q)Xq has K(B) = −B and is not vertical.
    """
    rng = RngState(6)
    q = random_cotangent_point(3, 1, rng)
    X = gaussian_matrix(rng, 3, 3)
    A = TangentVector(q, q.matrix @ X @ q.complement())
    B = TangentVector(q, q.complement() @ X @ q.matrix)

    assert np.allclose(apply_K(A).matrix, A.matrix, atol=1e-12)
    assert np.allclose(apply_K(B).matrix, -B.matrix, atol=1e-12)
    assert is_vertical(A, tol=1e-10)
    assert not is_vertical(B, tol=1e-10)


def test_retract_stays_on_manifold_with_right_velocity():
    """
    Test the retraction.

    GIVEN: A random point and tangent A.
    WHEN: retract is evaluated at ±h.
    THEN: Both images are points, and the central difference recovers A to O(h²).
    """
    rng = RngState(12)
    q = random_cotangent_point(4, 2, rng)
    v = random_tangent(q, rng)
    h = 1e-5
    velocity = (retract(q, v, h).matrix - retract(q, v, -h).matrix) / (2 * h)

    assert np.allclose(velocity, v.matrix, atol=1e-8)
    assert retract(q, v, 0) is q


def test_hermitian_split_recombines():
    """
    Test the Hermitian split of a tangent at a Hermitian point.

    GIVEN: A random tangent at a Haar point.
    WHEN: hermitian_split gives H1 and H2.
    THEN: H1, H2 are Hermitian and H1 + i·H2 = A; non-Hermitian bases are rejected.
    """
    rng = RngState(13)
    q = haar_sample(3, 1, rng)
    v = random_tangent(q, rng)
    H1, H2 = hermitian_split(v)

    assert np.allclose(H1.matrix, H1.matrix.conj().T)
    assert np.allclose(H2.matrix, H2.matrix.conj().T)
    assert np.allclose(H1.matrix + 1j * H2.matrix, v.matrix)

    continued = random_cotangent_point(3, 1, rng)
    with pytest.raises(ContractViolation, match="Hermitian base"):
        hermitian_split(random_tangent(continued, rng))


def test_I_is_multiplication_by_i():
    """
    Test apply_I.

    GIVEN: A tangent A.
    WHEN: apply_I is called.
    THEN: The result is iA, and it commutes with J.
    """
    rng = RngState(14)
    q = random_cotangent_point(2, 1, rng)
    v = random_tangent(q, rng)

    assert np.allclose(apply_I(v).matrix, 1j * v.matrix)
    assert np.allclose(apply_J(apply_I(v)).matrix, apply_I(apply_J(v)).matrix)
