import numpy as np
import pytest

from grassmann_quantization.example_geometries import sphere_cycle
from grassmann_quantization.exceptions import ConditioningError, ContractViolation, EvaluationError
from grassmann_quantization.grassmann_model import haar_sample, random_cotangent_point
from grassmann_quantization.matrix_kernel import RngState, commutator, gaussian_matrix
from grassmann_quantization.quantization_maps import (
    CycleSampler,
    Observable,
    SampleSet,
    SymbolFunction,
    adjointness_residual,
    berezin_moment_oracle,
    berezin_quantize,
    cycle_average,
    draw_samples,
    duality_residual,
    expectation,
    orbit_overcompleteness,
    overcompleteness_residual,
    star_Q,
    star_expectation,
)
from grassmann_quantization.symplectic_geometry import poisson_bracket


def _unit(rng, d):
    M = gaussian_matrix(rng, d, d)
    return M / np.linalg.norm(M)


def _skew(rng, d):
    H = gaussian_matrix(rng, d, d)
    return (H - H.conj().T) / 2


@pytest.mark.parametrize("d, n", [(2, 1), (3, 1), (4, 2)])
def test_haar_overcompleteness(d, n):
    """
    Test (d/n)·mean(q) ≈ I over Haar-random rank-n projections.

    GIVEN: 20000 Haar samples of G_n(C^d).
    WHEN: overcompleteness_residual is evaluated.
    THEN: The residual is small and within twice the 3σ bound.
    """
    result = overcompleteness_residual(CycleSampler.haar(d, n), 20000, RngState(d + n))

    assert result.bound > 0
    assert result.residual <= 2 * result.bound


def test_quadrature_overcompleteness_is_exact():
    """
    Test that the sphere quadrature integrates q to the identity.

    GIVEN: The order-16 sphere quadrature as a fixed cycle.
    WHEN: overcompleteness_residual is evaluated without samples or stream.
    THEN: The residual is below 1e-9 and the bound is zero.
    """
    result = overcompleteness_residual(sphere_cycle(), None, None)

    assert result.bound == 0.0
    assert result.residual < 1e-9
    assert result.verdict == "PASS"


def test_quadrature_rejects_wrong_mass():
    """
    Test that quadrature weights must sum to d/n.

    GIVEN: Two rank-one points with weights summing to 1 in C².
    WHEN: CycleSampler.quadrature is called.
    THEN: A ValueError naming the total mass is raised.
    """
    points = np.array([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])

    with pytest.raises(ValueError, match="total mass"):
        CycleSampler.quadrature(points, [0.5, 0.5], 1)


def test_moment_target_and_oracle():
    """
    Test Q_⟨A⟩ = (A + Tr(A)·I)/3 for A = diag(1, 0) on G_1(C²).

    GIVEN: 200000 Haar samples and the independent QR oracle.
    WHEN: The Berezin quantization of the expectation symbol is averaged.
    THEN: Both estimates agree with the target within 5σ.
    """
    A = np.diag([1.0, 0.0]).astype(complex)
    symbol = SymbolFunction(A)
    rng = RngState(21)
    Q, bound = cycle_average(
        CycleSampler.haar(2, 1), 200000, rng, lambda points: symbol.batch(points, 1)[:, None, None] * points
    )
    oracle = berezin_moment_oracle(A, 200000, rng)
    target = (A + np.trace(A) * np.eye(2)) / 3

    assert np.linalg.norm(Q - target) <= 5 / 3 * bound
    assert np.linalg.norm(oracle.value - target) <= 5 / 3 * oracle.bound


def test_berezin_quantize_constant_on_quadrature():
    """
    Test that the constant symbol 1 quantizes to the identity.

    GIVEN: The sphere quadrature cycle.
    WHEN: berezin_quantize(1, cycle) is computed.
    THEN: The result is I to 1e-9.
    """
    Q = berezin_quantize(1.0, sphere_cycle())

    assert np.allclose(Q.matrix, np.eye(2), atol=1e-9)


def test_berezin_quantize_non_finite_symbol():
    """
    Test that a non-finite symbol is reported with its sample.

    GIVEN: A callable symbol that returns NaN.
    WHEN: berezin_quantize is called with 10 Haar samples.
    THEN: An EvaluationError carrying the offending sample is raised.
    """
    with pytest.raises(EvaluationError, match="not finite") as info:
        berezin_quantize(lambda q: np.nan, CycleSampler.haar(2, 1), 10, RngState(0))

    assert info.value.sample.shape == (2, 2)


def test_berezin_quantize_rejects_zero_samples():
    """
    Test the sample count contract.

    GIVEN: N = 0.
    WHEN: berezin_quantize draws from the Haar sampler.
    THEN: A ValueError is raised.
    """
    with pytest.raises(ValueError, match="at least 1"):
        berezin_quantize(1.0, CycleSampler.haar(2, 1), 0, RngState(0))


def test_duality_same_sample_is_exact():
    """
    Test τ(A·Q_f) = ∫⟨A⟩f.

    GIVEN: Unit-norm A and an expectation symbol f on G_1(C³).
    WHEN: duality_residual is evaluated with 5000 samples.
    THEN: The same-sample difference is round-off and the cross-sample difference passes.
    """
    rng = RngState(4)
    result = duality_residual(_unit(rng, 3), SymbolFunction(_unit(rng, 3)), CycleSampler.haar(3, 1), 5000, rng)

    assert result.same_sample < 1e-9
    assert result.cross_sample <= 2 * result.cross_bound


def test_adjointness_on_zero_section():
    """
    Test τ(T†Q_f) = ⟨⟨T⟩, f⟩ on one Haar sample set.

    GIVEN: 2000 Haar samples of G_2(C⁴) and unit-norm T, F.
    WHEN: adjointness_residual is evaluated.
    THEN: It is below 1e-9.
    """
    rng = RngState(5)
    samples = draw_samples(CycleSampler.haar(4, 2), 2000, rng)

    assert adjointness_residual(_unit(rng, 4), SymbolFunction(_unit(rng, 4)), samples) < 1e-9


def test_adjointness_needs_hermitian_samples():
    """
    Test that adjointness is refused off the zero section.

    GIVEN: A sample set made of one non-Hermitian point.
    WHEN: adjointness_residual is called.
    THEN: A ContractViolation is raised.
    """
    q = random_cotangent_point(2, 1, RngState(6))
    samples = SampleSet(q.matrix[None], np.array([2.0]), 1)

    with pytest.raises(ContractViolation, match="zero section"):
        adjointness_residual(np.eye(2), 1.0, samples)


def test_group_orbit_contracts():
    """
    Test the group-orbit sampler preconditions.

    GIVEN: A Hermitian (not skew-Hermitian) generator, then a frame of length 2.
    WHEN: CycleSampler.group_orbit is built.
    THEN: ContractViolation is raised in both cases.
    """
    frame = np.eye(3, 1, dtype=complex)

    with pytest.raises(ContractViolation, match="skew-Hermitian"):
        CycleSampler.group_orbit([np.eye(3)], frame)
    with pytest.raises(ContractViolation, match="orthonormal columns"):
        CycleSampler.group_orbit([1j * np.eye(3)], 2 * frame)


def test_irreducible_orbit_is_overcomplete():
    """
    Test Schur's lemma for an irreducible orbit.

    GIVEN: Two random skew-Hermitian generators of U(3) acting on span(e1).
    WHEN: orbit_overcompleteness is evaluated with 4000 samples.
    THEN: The orbit is not flagged reducible and the residual is within twice the bound.
    """
    rng = RngState(7)
    result = orbit_overcompleteness([_skew(rng, 3), _skew(rng, 3)], np.eye(3, 1, dtype=complex), 4000, rng)

    assert result.verdict != "REDUCIBLE"
    assert result.residual <= 2 * result.bound


def test_reducible_orbit_is_detected():
    """
    Test that block-diagonal generators are reported as reducible.

    GIVEN: Generators preserving span(e1, e2) in C³.
    WHEN: orbit_overcompleteness is evaluated.
    THEN: The verdict is REDUCIBLE.
    """
    rng = RngState(8)
    generators = []
    for _ in range(2):
        G = np.zeros((3, 3), dtype=complex)
        G[:2, :2] = _skew(rng, 2)
        G[2, 2] = 0.7j
        generators.append(G)
    result = orbit_overcompleteness(generators, np.eye(3, 1, dtype=complex), 2000, rng)

    assert result.verdict == "REDUCIBLE"


def test_star_expectation_is_product_symbol():
    """
    Test f ⋆ g = ⟨FG⟩ and its commutator against the Poisson bracket.

    GIVEN: Unit-norm F, G and a random point of T*G_1(C³).
    WHEN: star_expectation is evaluated.
    THEN: It equals τ(qFG).
    """
    rng = RngState(9)
    F = _unit(rng, 3)
    G = _unit(rng, 3)
    q = random_cotangent_point(3, 1, rng)

    assert abs(star_expectation(F, G)(q) - expectation(F @ G, q)) < 1e-12


@pytest.mark.parametrize("d, n", [(2, 1), (3, 1), (3, 2)])
def test_star_expectation_accepts_plain_matrices(d, n):
    """
    Test the star product on plain ndarray representatives.

    GIVEN: Unit-norm ndarrays F, G and a random point of T*G_n(C^d).
    WHEN: star_expectation is evaluated on the arrays and on Observable wrappers.
    THEN: Both give the same symbol, and ⟨F⋆G − G⋆F⟩ = i{⟨F⟩, ⟨G⟩}.
    """
    rng = RngState(10 + d + n)
    F = _unit(rng, d)
    G = _unit(rng, d)
    q = random_cotangent_point(d, n, rng)
    plain = star_expectation(F, G)(q)
    wrapped = star_expectation(Observable(F), Observable(G))(q)

    assert abs(plain - wrapped) < 1e-14
    assert abs(plain - star_expectation(G, F)(q) - 1j * poisson_bracket(F, G, q)) < 1e-12


def test_quantized_operators_are_hermitian_and_positive():
    """
    Test that Q_f is Hermitian for real f and positive semidefinite for f ≥ 0.

    GIVEN: 5000 Haar samples of G_1(C³), the real symbol ⟨H⟩ of a Hermitian H and f(q) = |⟨M⟩(q)|².
    WHEN: Both symbols are quantized on the samples.
    THEN: Both operators are Hermitian and the second has no negative eigenvalue.
    """
    rng = RngState(21)
    samples = draw_samples(CycleSampler.haar(3, 1), 5000, rng)
    H = _unit(rng, 3)
    H = H + H.conj().T
    M = _unit(rng, 3)

    real_symbol = berezin_quantize(SymbolFunction(H), samples).matrix
    positive = berezin_quantize(lambda q: abs(expectation(M, q)) ** 2, samples).matrix

    assert np.allclose(real_symbol, real_symbol.conj().T, atol=1e-12)
    assert np.allclose(positive, positive.conj().T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(positive)) >= -1e-12


def test_quantization_is_linear():
    """
    Test Q_{af + bg} = a·Q_f + b·Q_g.

    GIVEN: One shared sample set of G_2(C⁴), two symbols and complex coefficients.
    WHEN: The combination and each symbol are quantized.
    THEN: The results agree to round-off.
    """
    rng = RngState(22)
    samples = draw_samples(CycleSampler.haar(4, 2), 2000, rng)
    f = SymbolFunction(_unit(rng, 4))
    g = SymbolFunction(_unit(rng, 4))
    a, b = 0.7 - 0.2j, -1.3

    combined = berezin_quantize(a * f + b * g, samples).matrix
    separate = a * berezin_quantize(f, samples).matrix + b * berezin_quantize(g, samples).matrix

    assert np.allclose(combined, separate, atol=1e-12)


def test_star_Q_commutator_on_sphere():
    """
    Test the Berezin star product through the quantization map on P¹.

    GIVEN: The sphere quadrature and unit-norm F, G in B(C²).
    WHEN: f ⋆_Q g − g ⋆_Q f is computed.
    THEN: Its representative equals [F, G]/3 to 1e-8.
    """
    rng = RngState(10)
    F = _unit(rng, 2)
    G = _unit(rng, 2)
    sampler = sphere_cycle()
    difference = star_Q(SymbolFunction(F), SymbolFunction(G), sampler).operator
    difference = difference - star_Q(SymbolFunction(G), SymbolFunction(F), sampler).operator

    assert np.allclose(difference, commutator(F, G) / 3, atol=1e-8)


def test_star_Q_ill_conditioned():
    """
    Test that a degenerate sample set cannot be inverted.

    GIVEN: A sample set with a single Haar point.
    WHEN: star_Q is computed on it.
    THEN: A ConditioningError with the condition number attached is raised.
    """
    q = haar_sample(2, 1, RngState(11))
    samples = SampleSet(q.matrix[None], np.array([2.0]), 1)

    with pytest.raises(ConditioningError, match="ill-conditioned") as info:
        star_Q(SymbolFunction(np.eye(2)), SymbolFunction(np.eye(2)), samples)

    assert info.value.condition > 1e6
