"""
Verification suites: named groups of numerical checks run with a seed and
tolerances, collected into a versioned report.

Each case draws from its own stream ``RngState(seed).spawn(index)``, so the
report does not depend on how many workers run the cases.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np

from grassmann_quantization import __version__
from grassmann_quantization.example_geometries import (
    SIGMA,
    FlatPoint,
    SpherePoint,
    delta_explorer_sweep,
    delta_product_explorer,
    flat_idempotency_residual,
    flat_polarization_residual,
    hyperkahler_Jprime,
    hyperkahler_metric,
    sphere_cycle,
    sphere_idempotency_residual,
    sphere_projection,
    tessarine_flat_check,
)
from grassmann_quantization.exceptions import StepSizeError
from grassmann_quantization.grassmann_model import (
    MAX_DIM,
    ProjectionPoint,
    TangentVector,
    apply_I,
    apply_J,
    apply_K,
    haar_sample,
    hermitian_split,
    is_vertical,
    random_cotangent_point,
    random_tangent,
    tessarine_residual,
)
from grassmann_quantization.matrix_kernel import (
    RngState,
    commutator,
    dagger,
    gaussian_matrix,
    random_invertible,
)
from grassmann_quantization.propagator import (
    DIAGONAL_TOL,
    PathSpec,
    SectionSample,
    axiom_check,
    coherent_section,
    cone_loop,
    convolution_idempotency_residual,
    curvature_from_three_point,
    discrete_transport,
    hermitian_propagator_residual,
    holonomy_phase,
    kostant_souriau_residual,
    octant_loop,
    ode_transport,
    polarization_residual,
    probability_density_residual,
    propagate,
    reconstruct_point_from_propagator,
    reconstructed_three_point,
    reproducing_projection,
    three_point,
    three_point_from_maps,
    three_point_holomorphy_residual,
    unitary_equivalence_residuals,
)
from grassmann_quantization.quantization_maps import (
    CycleSampler,
    SymbolFunction,
    adjointness_residual,
    berezin_moment_oracle,
    cycle_average,
    draw_samples,
    duality_residual,
    expectation,
    orbit_overcompleteness,
    overcompleteness_residual,
    star_expectation,
    star_Q,
)
from grassmann_quantization.symplectic_geometry import (
    conjugate_tangents,
    expectation_derivative,
    hamiltonian_field,
    kahler_zero_section_check,
    nondegeneracy_certificate,
    omega,
    poisson_bracket,
    zero_section_metric,
)

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFAULT_TOLERANCES = {
    "structure": 1e-12,
    "symplectic": 1e-11,
    "gl_invariance": 1e-9,
    "finite_difference": 1e-6,
    "curvature": 1e-6,
    "kostant_souriau": 1e-5,
    "moment": 0.01,
    "summation": 1e-9,
    "holonomy": 1e-3,
    "path_ratio": 0.25,
    "flat_real": 1e-8,
    "flat_continued": 1e-6,
    "sphere_kernel": 1e-12,
    "sphere_reproducing": 1e-8,
    "sphere_conjugation": 1e-14,
    "star_quadrature": 1e-8,
    "hyperkahler": 1e-12,
}

KNOWN_ANCHORS = {
    "commuting almost complex structures": "I² = J² = −1, K² = +1, IJ = JI on tangents of T*G",
    "I–holomorphic symplectic form Ω": "Ω = i·τ(q[A, B]) and its invariances",
    "Ω is non–degenerate": "Re Ω has a nonsingular Gram matrix on the real tangent space",
    "Kähler for the real part": "Ω(A, B) = Tr(A·JB) with a positive metric on the zero section",
    "is a morphism of algebras": "⟨[M, N]⟩ = i{⟨M⟩, ⟨N⟩}",
    "The Hamiltonian vector of": "X_⟨M⟩ = i[M, q] and its derivatives",
    "positive multiple of the identity": "Q_1 = I for the Haar measure and quadratures",
    "be an irreducible unitary representation": "group orbits average to I iff the action is irreducible",
    "dual in the sense that": "Tr(A·Q_f) = ∫⟨A⟩f",
    "have dense images": "Tr(T†Q_f) = ⟨⟨T⟩, f⟩ on the zero section",
    "We have unit-preserving maps": "Q_f as a cycle integral, checked on a closed-form moment",
    "We define a noncommutative product": "f ⋆ g = ⟨FG⟩",
    "image of Q is closed": "f ⋆_Q g = Q⁻¹(Q_f Q_g)",
    "We have an I–holomorphic function": "Δ = τ(q3 q2 q1), its map form and holomorphy",
    "trace of the curvature of": "antisymmetrized Δ recovers Ω",
    "idempotent of the convolution algebra": "(d/n)·E[P(q, q2)P(q1, q)] = P(q1, q2)",
    "the image of this operator": "the reproducing projection is idempotent and fixes coherent sections",
    "is a unitary equivalence": "Ψ ↦ qΨ preserves vectors and inner products",
    "the Kostant–Souriau operator of": "i∇_X + ⟨M⟩ matches M on coherent sections for n = 1",
    "polarized with respect to I, J, K": "coherent sections are flat along the I, J and K polarizations",
    "Δ–preserving equivalence of categories": "a propagator determines its points and Δ",
    "analytically continues the path integral": "discrete propagator products versus the connection ODE",
    "denotes parallel transport over": "holonomy and reversal of transport along loops",
    "An example satisfying": "integer tessarine frames of the flat model",
    "the connection 1–form is given by": "Gaussian kernel on C² and its reproducing identity",
    "polarized along ∂x₁+i∂y₁": "flat sections on the Kähler and real-polarized slices",
    "the idempotent corresponding to M = S²": "sphere kernel, trace formula and reproducing identity",
    "x²+y²+z²=1": "conjugation on the complexified sphere",
    "hyperboloid model of the unit disk": "pseudo-Hermiticity on the disk locus",
    "dim H = n Vol M": "quadrature mass 2 on the sphere",
    "A simple computation gives": "Δ_{S²}·Δ̄_D identifications swept without asserting a value",
    "anticommutes with I, given by": "anticommuting J′ on T*P¹",
}

HOLONOMY_STEPS = 10000
CONVERGENCE_STEPS = 300
REVERSAL_STEPS = 200
AXIOM_SAMPLES = 2000
ORACLE_SAMPLES = 10**7
NONDEGENERACY_INSTANCES = 100
NONDEGENERACY_FLOOR = 1e-8
CURVATURE_EPS = 1e-4
LINEAR_CURVATURE_EPS = 1e-2
KS_EXCEED_FRACTION = 0.95
KS_CALIBRATION_FACTOR = 100.0
FLAT_INSTANCES = 10
PATH_GEOMETRIES = ("sphere_octant", "unitary_flow")


@dataclass(frozen=True)
class SuiteConfig:
    """
    Parameters of one verification run.

    Parameters
    ----------
    suite : str
        One of :data:`SUITES`.
    dims, ranks : sequence of int
        Every pair (d, n) with n < d is checked; d ranges over 2..16.
    samples : int
        Monte Carlo sample count N.
    seed : int
        Root seed, echoed verbatim in the report.
    tolerances : dict
        Overrides of :data:`DEFAULT_TOLERANCES` by name.
    workers : int
        Number of worker threads.
    cases : int
        Random instances drawn per case.
    output : str
        Report path.

    Raises
    ------
    ValueError
        For an unknown suite, an out-of-range dimension or rank, an unknown
        tolerance name, or non-positive counts.
    """

    suite: str = "all"
    dims: tuple = (2, 3)
    ranks: tuple = (1, 2)
    samples: int = 20000
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    workers: int = 1
    cases: int = 20
    output: str = "results/report.json"

    def __post_init__(self):
        if self.suite not in SUITES:
            raise ValueError(f"Unknown suite '{self.suite}'; expected one of {sorted(SUITES)}.")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "ranks", tuple(int(n) for n in self.ranks))
        for d in self.dims:
            if not 2 <= d <= MAX_DIM:
                raise ValueError(f"Dimension {d} is outside 2..{MAX_DIM}.")
        for n in self.ranks:
            if n < 1:
                raise ValueError(f"Rank {n} must be at least 1.")
        if not self.pairs:
            raise ValueError("No (d, n) pair satisfies 1 <= n < d.")
        unknown = sorted(set(self.tolerances) - set(DEFAULT_TOLERANCES))
        if unknown:
            raise ValueError(f"Unknown tolerance names: {', '.join(unknown)}.")
        for name, count in (("samples", self.samples), ("workers", self.workers), ("cases", self.cases)):
            if isinstance(count, bool) or not isinstance(count, (int, np.integer)):
                raise TypeError(f"{name} must be an integer.")
            if count < 1:
                raise ValueError(f"{name} must be at least 1.")
        RngState(self.seed)

    @property
    def pairs(self):
        return [(d, n) for d in self.dims for n in self.ranks if n < d]

    def tolerance(self, name):
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def echo(self):
        """The configuration as JSON-ready values, tolerances fully resolved."""
        return {
            "suite": self.suite,
            "dims": list(self.dims),
            "ranks": list(self.ranks),
            "samples": int(self.samples),
            "seed": int(self.seed),
            "tolerances": {name: self.tolerance(name) for name in DEFAULT_TOLERANCES},
            "workers": int(self.workers),
            "cases": int(self.cases),
            "output": str(self.output),
        }


@dataclass(frozen=True)
class Outcome:
    residual: float
    bound: float
    passed: bool
    diagnostic: str = ""


@dataclass(frozen=True)
class Case:
    name: str
    anchor: str
    check: object


@dataclass(frozen=True)
class CaseResult:
    name: str
    anchor: str
    residual: float
    bound: float
    passed: bool
    runtime_ms: float
    diagnostic: str = ""


@dataclass(frozen=True)
class VerificationReport:
    """
    Outcome of one suite run.

    The aggregate verdict passes iff every case passes; ``exit_code`` is 0
    for a pass and 1 otherwise.
    """

    suite: str
    config: dict
    cases: tuple
    version: str = __version__
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self):
        return all(case.passed for case in self.cases)

    @property
    def verdict(self):
        return "PASS" if self.passed else "FAIL"

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "version": self.version,
            "suite": self.suite,
            "config": self.config,
            "aggregate": {
                "verdict": self.verdict,
                "cases": len(self.cases),
                "failed": sum(not case.passed for case in self.cases),
            },
            "cases": [asdict(case) for case in self.cases],
        }

    @classmethod
    def from_dict(cls, data):
        """
        Rebuild a report from :meth:`to_dict` output.

        Raises
        ------
        ValueError
            If the schema version is not supported.
        """
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(
                f"Unsupported report schema version {data.get('schema_version')!r}; "
                f"expected {SCHEMA_VERSION}."
            )
        cases = tuple(CaseResult(**case) for case in data["cases"])
        return cls(data["suite"], data["config"], cases, data["version"], data["schema_version"])


def _within(residual, bound, diagnostic=""):
    residual = float(residual)
    bound = float(bound)
    return Outcome(residual, bound, residual <= bound, diagnostic)


def _from_monte_carlo(result):
    return Outcome(float(result.residual), float(result.bound), result.passed, result.verdict)


def _unit_matrix(rng, d):
    G = gaussian_matrix(rng, d, d)
    return G / np.linalg.norm(G)


def _unit_vector(rng, d):
    v = gaussian_matrix(rng, d, 1).ravel()
    return v / np.linalg.norm(v)


def _instances(config, rng, d, n, fiber_norm=0.5):
    for _ in range(config.cases):
        q = random_cotangent_point(d, n, rng, fiber_norm)
        yield q, random_tangent(q, rng), random_tangent(q, rng)


def _worst(config, rng, d, n, measure, tolerance):
    worst = max(measure(q, u, v) for q, u, v in _instances(config, rng, d, n))
    return _within(worst, config.tolerance(tolerance))


def _hermitian_tangent(q, rng):
    return hermitian_split(random_tangent(q, rng))[0]


# tessarine suite


def _tessarine_identities(config, rng, d, n):
    return _worst(config, rng, d, n, lambda q, u, v: tessarine_residual(u), "structure")


def _k_eigenbundles(config, rng, d, n):
    worst = 0.0
    for _ in range(config.cases):
        q = random_cotangent_point(d, n, rng)
        X = _unit_matrix(rng, d)
        vertical = TangentVector(q, q.matrix @ X @ q.complement())
        horizontal = TangentVector(q, q.complement() @ X @ q.matrix)
        if not is_vertical(vertical, config.tolerance("structure")):
            return Outcome(float("inf"), config.tolerance("structure"), False, "vertical tangent is not vertical")
        worst = max(
            worst,
            float(np.linalg.norm(apply_K(vertical).matrix - vertical.matrix)),
            float(np.linalg.norm(apply_K(horizontal).matrix + horizontal.matrix)),
        )
    return _within(worst, config.tolerance("structure"))


def _tessarine_suite(config):
    cases = []
    for d, n in config.pairs:
        cases.append(
            Case(f"tessarine identities (d={d}, n={n})", "commuting almost complex structures",
                 partial(_tessarine_identities, d=d, n=n))
        )
        cases.append(
            Case(f"K eigenbundles (d={d}, n={n})", "commuting almost complex structures",
                 partial(_k_eigenbundles, d=d, n=n))
        )
    return cases


# symplectic suite


def _antisymmetry(q, u, v):
    return abs(omega(q, u, v) + omega(q, v, u))


def _j_invariance(q, u, v):
    return abs(omega(q, apply_J(u), apply_J(v)) - omega(q, u, v))


def _k_reversal(q, u, v):
    return abs(omega(q, apply_K(u), apply_K(v)) + omega(q, u, v))


def _i_linearity(q, u, v):
    return abs(omega(q, apply_I(u), v) - 1j * omega(q, u, v))


def _gl_invariance(config, rng, d, n):
    worst = 0.0
    for q, u, v in _instances(config, rng, d, n):
        Z = random_invertible(rng, d, max_condition=10.0)
        image, u_image, v_image = conjugate_tangents(Z, q, u, v)
        worst = max(worst, abs(omega(image, u_image, v_image) - omega(q, u, v)))
    return _within(worst, config.tolerance("gl_invariance"))


def _lagrangian(config, rng, d, n):
    worst = 0.0
    for _ in range(config.cases):
        q = random_cotangent_point(d, n, rng)
        P = q.matrix
        C = q.complement()
        vertical = [TangentVector(q, P @ _unit_matrix(rng, d) @ C) for _ in range(2)]
        horizontal = [TangentVector(q, C @ _unit_matrix(rng, d) @ P) for _ in range(2)]
        worst = max(worst, abs(omega(q, *vertical)), abs(omega(q, *horizontal)))
    return _within(worst, config.tolerance("symplectic"))


def _nondegeneracy(config, rng, d, n):
    certificate = min(
        nondegeneracy_certificate(random_cotangent_point(d, n, rng))
        for _ in range(min(config.cases, NONDEGENERACY_INSTANCES))
    )
    return Outcome(certificate, NONDEGENERACY_FLOOR, certificate > NONDEGENERACY_FLOOR,
                   "smallest singular value of the Re Ω Gram matrix")


def _homomorphism(config, rng, d, n):
    worst = 0.0
    for _ in range(config.cases):
        q = random_cotangent_point(d, n, rng)
        M = _unit_matrix(rng, d)
        N = _unit_matrix(rng, d)
        lhs = expectation(commutator(M, N), q)
        worst = max(worst, abs(lhs - 1j * poisson_bracket(M, N, q)))
    return _within(worst, config.tolerance("structure"))


def _pauli_bracket(config, rng):
    q = ProjectionPoint(np.diag([1.0, 0.0]), 1)
    sx, sy, _ = SIGMA
    residual = max(
        abs(expectation(commutator(sx, sy), q) - 2j),
        abs(1j * poisson_bracket(sx, sy, q) - 2j),
    )
    return _within(residual, config.tolerance("structure"))


def _field_derivative(config, rng, d, n):
    worst = 0.0
    for _ in range(config.cases):
        q = random_cotangent_point(d, n, rng)
        M = _unit_matrix(rng, d)
        N = _unit_matrix(rng, d)
        derivative = expectation_derivative(q, N, hamiltonian_field(q, M))
        worst = max(worst, abs(derivative - poisson_bracket(M, N, q)))
    return _within(worst, config.tolerance("finite_difference"))


def _field_bracket(config, rng, d, n):
    worst = 0.0
    for _ in range(config.cases):
        q = random_cotangent_point(d, n, rng)
        M = _unit_matrix(rng, d)
        N = _unit_matrix(rng, d)
        XM = hamiltonian_field(q, M).matrix
        XN = hamiltonian_field(q, N).matrix
        bracket = 1j * commutator(N, XM) - 1j * commutator(M, XN)
        target = -1j * hamiltonian_field(q, commutator(M, N)).matrix
        worst = max(worst, float(np.linalg.norm(bracket - target)))
    return _within(worst, config.tolerance("structure"))


def _zero_section_kahler(config, rng, d, n):
    worst = 0.0
    smallest = np.inf
    for _ in range(config.cases):
        q = haar_sample(d, n, rng)
        u = _hermitian_tangent(q, rng)
        v = _hermitian_tangent(q, rng)
        check = kahler_zero_section_check(q, u, v)
        worst = max(worst, abs(check.omega - check.metric_form))
        smallest = min(smallest, zero_section_metric(q, u, u).real)
    if smallest <= 0:
        return Outcome(worst, config.tolerance("symplectic"), False, "zero-section metric is not positive")
    return _within(worst, config.tolerance("symplectic"))


def _symplectic_suite(config):
    cases = [Case("pauli bracket value 2i", "is a morphism of algebras", _pauli_bracket)]
    measures = (
        ("antisymmetry", _antisymmetry),
        ("J invariance", _j_invariance),
        ("K reversal", _k_reversal),
        ("I linearity", _i_linearity),
    )
    for d, n in config.pairs:
        for label, measure in measures:
            cases.append(
                Case(f"omega {label} (d={d}, n={n})", "I–holomorphic symplectic form Ω",
                     partial(_worst, d=d, n=n, measure=measure, tolerance="symplectic"))
            )
        for label, check, anchor in (
            ("omega GL invariance", _gl_invariance, "I–holomorphic symplectic form Ω"),
            ("fiber and K-eigenbundle lagrangian", _lagrangian, "I–holomorphic symplectic form Ω"),
            ("omega nondegeneracy", _nondegeneracy, "Ω is non–degenerate"),
            ("zero-section kahler identity", _zero_section_kahler, "Kähler for the real part"),
            ("expectation homomorphism", _homomorphism, "is a morphism of algebras"),
            ("hamiltonian field derivative", _field_derivative, "The Hamiltonian vector of"),
            ("hamiltonian field bracket", _field_bracket, "The Hamiltonian vector of"),
        ):
            cases.append(Case(f"{label} (d={d}, n={n})", anchor, partial(check, d=d, n=n)))
    return cases


# quantization suite


def _overcompleteness(config, rng, d, n):
    return _from_monte_carlo(overcompleteness_residual(CycleSampler.haar(d, n), config.samples, rng))


def _duality(config, rng, d, n):
    A = _unit_matrix(rng, d)
    f = SymbolFunction(_unit_matrix(rng, d))
    result = duality_residual(A, f, CycleSampler.haar(d, n), config.samples, rng)
    if result.same_sample > config.tolerance("summation"):
        return Outcome(result.same_sample, config.tolerance("summation"), False,
                       "same-sample duality is not exact")
    return Outcome(result.cross_sample, result.cross_bound, result.passed)


def _adjointness(config, rng, d, n):
    samples = draw_samples(CycleSampler.haar(d, n), config.samples, rng)
    worst = max(
        adjointness_residual(_unit_matrix(rng, d), SymbolFunction(_unit_matrix(rng, d)), samples)
        for _ in range(min(config.cases, 5))
    )
    return _within(worst, config.tolerance("summation"))


def _star_expectation(config, rng, d, n):
    worst = 0.0
    for _ in range(config.cases):
        q = random_cotangent_point(d, n, rng)
        F = _unit_matrix(rng, d)
        G = _unit_matrix(rng, d)
        difference = star_expectation(F, G)(q) - star_expectation(G, F)(q)
        worst = max(worst, abs(difference - 1j * poisson_bracket(F, G, q)))
    return _within(worst, config.tolerance("structure"))


def _skew_hermitian(rng, d):
    H = gaussian_matrix(rng, d, d)
    return (H - dagger(H)) / 2


def _orbit_irreducible(config, rng, d, n):
    generators = [_skew_hermitian(rng, d) for _ in range(2)]
    frame = np.eye(d, n, dtype=np.complex128)
    return _from_monte_carlo(orbit_overcompleteness(generators, frame, config.samples, rng))


def _orbit_reducible(config, rng, d, n):
    generators = []
    for _ in range(2):
        G = np.zeros((d, d), dtype=np.complex128)
        G[: d - 1, : d - 1] = _skew_hermitian(rng, d - 1)
        G[d - 1, d - 1] = 1j * rng.standard_normal(1)[0]
        generators.append(G)
    frame = np.eye(d, n, dtype=np.complex128)
    result = orbit_overcompleteness(generators, frame, config.samples, rng)
    return Outcome(result.residual, result.bound, result.verdict == "REDUCIBLE", result.verdict)


def _moment_target(config, rng):
    A = np.diag([1.0, 0.0]).astype(np.complex128)
    symbol = SymbolFunction(A)
    sampler = CycleSampler.haar(2, 1)
    Q, bound = cycle_average(
        sampler, config.samples, rng, lambda points: symbol.batch(points, 1)[:, None, None] * points
    )
    target = (A + np.trace(A) * np.eye(2)) / 3
    oracle = berezin_moment_oracle(A, ORACLE_SAMPLES, rng)
    residual = float(np.linalg.norm(Q - target))
    agreement = float(np.linalg.norm(Q - oracle.value))
    oracle_error = float(np.linalg.norm(oracle.value - target))
    passed = residual <= max(bound, config.tolerance("moment")) and agreement <= np.hypot(bound, oracle.bound)
    return Outcome(
        residual,
        max(bound, config.tolerance("moment")),
        passed,
        f"oracle at N={ORACLE_SAMPLES}: diagonal {np.real(np.diag(oracle.value)).round(6).tolist()}, "
        f"distance to target {oracle_error:.3e} (bound {oracle.bound:.3e}), "
        f"disagreement with estimate {agreement:.3e}",
    )


def _quantization_suite(config):
    cases = [Case("berezin moment target (d=2, n=1)", "We have unit-preserving maps", _moment_target)]
    for d, n in config.pairs:
        for label, check, anchor in (
            ("haar overcompleteness", _overcompleteness, "positive multiple of the identity"),
            ("orbit overcompleteness", _orbit_irreducible, "be an irreducible unitary representation"),
            ("reducible orbit detected", _orbit_reducible, "be an irreducible unitary representation"),
            ("quantization duality", _duality, "dual in the sense that"),
            ("zero-section adjointness", _adjointness, "have dense images"),
            ("star expectation commutator", _star_expectation, "We define a noncommutative product"),
        ):
            cases.append(Case(f"{label} (d={d}, n={n})", anchor, partial(check, d=d, n=n)))
    return cases


# propagator suite


def _curvature(config, rng, d, n):
    def measure(q, u, v):
        return abs(curvature_from_three_point(q, u, v, CURVATURE_EPS) - omega(q, u, v))

    return _worst(config, rng, d, n, measure, "curvature")


def _curvature_linear(config, rng, d, n):
    def measure(q, u, v):
        return abs(curvature_from_three_point(q, u, v, LINEAR_CURVATURE_EPS, linear=True) - omega(q, u, v))

    return _worst(config, rng, d, n, measure, "curvature")


def _curvature_order(config, rng, d, n):
    worst = 0.0
    for q, u, v in _instances(config, rng, d, n):
        target = omega(q, u, v)
        coarse = abs(curvature_from_three_point(q, u, v, 1e-2) - target)
        fine = abs(curvature_from_three_point(q, u, v, 5e-3) - target)
        if coarse > 1e-12:
            worst = max(worst, fine / coarse)
    return _within(worst, 0.5, "error ratio under halving eps")


def _three_point_maps(config, rng, d, n):
    worst = 0.0
    for _ in range(config.cases):
        points = [random_cotangent_point(d, n, rng) for _ in range(3)]
        worst = max(worst, abs(three_point_from_maps(*points) - three_point(*points)))
    return _within(worst, config.tolerance("structure") * 100)


def _holomorphy(config, rng, d, n):
    worst = 0.0
    for k in range(config.cases):
        points = [random_cotangent_point(d, n, rng) for _ in range(3)]
        slot = k % 3
        v = random_tangent(points[slot], rng)
        worst = max(worst, three_point_holomorphy_residual(*points, slot, v))
    return _within(worst, config.tolerance("finite_difference"))


def _idempotency_hermitian(config, rng, d, n):
    q1 = haar_sample(d, n, rng)
    q2 = haar_sample(d, n, rng)
    return _from_monte_carlo(convolution_idempotency_residual(q1, q2, config.samples, rng))


def _idempotency_continued(config, rng, d, n):
    q1 = random_cotangent_point(d, n, rng, fiber_norm=0.5)
    q2 = random_cotangent_point(d, n, rng, fiber_norm=0.5)
    return _from_monte_carlo(convolution_idempotency_residual(q1, q2, config.samples, rng))


def _density(config, rng, d, n):
    return _from_monte_carlo(probability_density_residual(haar_sample(d, n, rng), config.samples, rng))


def _hermitian_propagator(config, rng, d, n):
    worst = max(
        hermitian_propagator_residual(haar_sample(d, n, rng), haar_sample(d, n, rng))
        for _ in range(config.cases)
    )
    return _within(worst, config.tolerance("structure") * 100)


def _unitary_equivalence(config, rng, d, n):
    result = unitary_equivalence_residuals(
        _unit_vector(rng, d), _unit_vector(rng, d), config.samples, rng, rank=n
    )
    reconstruction = result.reconstruction
    inner = result.inner_product
    return Outcome(
        reconstruction.residual,
        reconstruction.bound,
        reconstruction.passed and inner.passed,
        f"inner product residual {inner.residual:.3e} (bound {inner.bound:.3e})",
    )


def _reproducing(config, rng, d, n):
    sampler = CycleSampler.haar(d, n)
    Psi = _unit_vector(rng, d)
    image = reproducing_projection(coherent_section(Psi), sampler, config.samples, rng)
    fixed = float(np.linalg.norm(image.vector - Psi))

    M = _unit_matrix(rng, d)
    section = SectionSample(lambda q: q @ M @ q @ Psi, stacked=True)
    once = reproducing_projection(section, sampler, config.samples, rng)
    twice = reproducing_projection(once, sampler, config.samples, rng)
    drift = float(np.linalg.norm(twice.vector - once.vector))
    return Outcome(
        fixed,
        image.bound,
        fixed <= 2 * image.bound and drift <= 2 * twice.bound,
        f"idempotency residual {drift:.3e} (bound {twice.bound:.3e})",
    )


def _kostant_souriau(config, rng, d, n):
    def draw(rank):
        M = _unit_matrix(rng, d)
        Psi = _unit_vector(rng, d)
        return kostant_souriau_residual(M, Psi, haar_sample(d, rank, rng))

    tolerance = config.tolerance("kostant_souriau")
    if n == 1:
        return _within(max(draw(1) for _ in range(config.cases)), tolerance)
    noise = max(draw(1) for _ in range(config.cases))
    threshold = max(KS_CALIBRATION_FACTOR * noise, tolerance)
    exceeding = sum(draw(n) > threshold for _ in range(config.cases))
    missing = 1.0 - exceeding / config.cases
    return Outcome(missing, 1.0 - KS_EXCEED_FRACTION, missing <= 1.0 - KS_EXCEED_FRACTION + 1e-12,
                   f"{exceeding}/{config.cases} draws exceed calibrated threshold {threshold:.3e}")


def _polarization(config, rng, d, n):
    worst = 0.0
    for _ in range(config.cases):
        q0 = random_cotangent_point(d, n, rng)
        v0 = q0.matrix @ _unit_vector(rng, d)
        q = random_cotangent_point(d, n, rng)
        w = random_tangent(q, rng)
        for which in ("I", "J", "K"):
            worst = max(worst, polarization_residual(q0, v0, q, w, which))
    return _within(worst, config.tolerance("finite_difference"))


def _axiom_round_trip(config, rng, d, n):
    x = random_cotangent_point(d, n, rng)
    sampler = CycleSampler.haar(d, n)
    N = min(config.samples, AXIOM_SAMPLES)
    rebuilt = reconstruct_point_from_propagator(propagate, x, sampler, N, rng)
    residual = float(np.linalg.norm(rebuilt.operator - x.matrix))
    passed = residual <= rebuilt.bound and rebuilt.axioms.verdict == "PASS"
    return Outcome(residual, rebuilt.bound, passed, f"axioms: {rebuilt.axioms.verdict}")


def _scaled_kernel_rejected(config, rng, d, n):
    x = random_cotangent_point(d, n, rng)
    N = min(config.samples, AXIOM_SAMPLES) // 10

    def mutant(a, b):
        return 1.1 * propagate(a, b)

    report = axiom_check(mutant, x, CycleSampler.haar(d, n), max(N, 10), rng)
    rejected = not report.passed["diagonal_identity"]
    # rejected iff tolerance/residual < 1
    margin = DIAGONAL_TOL / max(report.residuals["diagonal_identity"], np.finfo(float).tiny)
    return Outcome(
        margin,
        1.0,
        rejected,
        f"rejection margin: diagonal_identity residual {report.residuals['diagonal_identity']:.3e} "
        f"against tolerance {DIAGONAL_TOL:.0e}; {report.verdict}",
    )


def _reconstructed_delta(config, rng, d, n):
    points = [random_cotangent_point(d, n, rng) for _ in range(3)]
    N = min(config.samples, AXIOM_SAMPLES)
    value, direct, bound = reconstructed_three_point(propagate, points, CycleSampler.haar(d, n), N, rng)
    return _within(abs(value - direct), bound)


def _propagator_suite(config):
    cases = []
    for d, n in config.pairs:
        for label, check, anchor in (
            ("curvature from three-point", _curvature, "trace of the curvature of"),
            ("curvature linear difference", _curvature_linear, "trace of the curvature of"),
            ("curvature eps convergence", _curvature_order, "trace of the curvature of"),
            ("three-point from maps", _three_point_maps, "We have an I–holomorphic function"),
            ("three-point holomorphy", _holomorphy, "We have an I–holomorphic function"),
            ("idempotency hermitian endpoints", _idempotency_hermitian, "idempotent of the convolution algebra"),
            ("idempotency continued endpoints", _idempotency_continued, "idempotent of the convolution algebra"),
            ("probability density", _density, "idempotent of the convolution algebra"),
            ("hermitian propagator", _hermitian_propagator, "idempotent of the convolution algebra"),
            ("coherent-section equivalence", _unitary_equivalence, "is a unitary equivalence"),
            ("reproducing projection", _reproducing, "the image of this operator"),
            ("kostant-souriau", _kostant_souriau, "the Kostant–Souriau operator of"),
            ("polarized coherent sections", _polarization, "polarized with respect to I, J, K"),
            ("propagator reconstructs point", _axiom_round_trip, "Δ–preserving equivalence of categories"),
            ("scaled kernel rejected", _scaled_kernel_rejected, "Δ–preserving equivalence of categories"),
            ("reconstructed three-point", _reconstructed_delta, "Δ–preserving equivalence of categories"),
        ):
            cases.append(Case(f"{label} (d={d}, n={n})", anchor, partial(check, d=d, n=n)))
    return cases


# path suite


def _transport_error(path, steps):
    return float(np.linalg.norm(discrete_transport(path).matrix - ode_transport(path, steps).matrix))


def _ratio_outcome(config, coarse, fine):
    ratio = coarse / fine
    tolerance = config.tolerance("path_ratio")
    return Outcome(abs(ratio - 2.0) / 2.0, tolerance, abs(ratio - 2.0) <= 2.0 * tolerance,
                   f"error ratio {ratio:.4f} under step doubling")


def _octant_holonomy(config, rng):
    phase = holonomy_phase(discrete_transport(octant_loop(HOLONOMY_STEPS)))
    return _within(abs(abs(phase) - np.pi / 4), config.tolerance("holonomy"), f"phase {phase:.6f}")


def _cone_holonomy(config, rng):
    phase = holonomy_phase(discrete_transport(cone_loop(HOLONOMY_STEPS)))
    return _within(abs(abs(phase) - np.pi / 2), config.tolerance("holonomy"), f"phase {phase:.6f}")


def _octant_convergence(config, rng):
    m = CONVERGENCE_STEPS
    return _ratio_outcome(
        config, _transport_error(octant_loop(m), m), _transport_error(octant_loop(2 * m), 2 * m)
    )


def _random_flow(rng, d, n):
    q0 = haar_sample(d, n, rng)
    X = _skew_hermitian(rng, d)
    X = 0.5 * X / np.linalg.norm(X)
    return q0, X


def _flow_convergence(config, rng, d, n):
    q0, X = _random_flow(rng, d, n)
    m = CONVERGENCE_STEPS
    coarse = _transport_error(PathSpec.unitary_flow(q0, X, m), m)
    fine = _transport_error(PathSpec.unitary_flow(q0, X, 2 * m), 2 * m)
    return _ratio_outcome(config, coarse, fine)


def _path_reversal(config, rng, d, n):
    q0, X = _random_flow(rng, d, n)
    path = PathSpec.unitary_flow(q0, X, REVERSAL_STEPS)
    loop = discrete_transport(path).then(discrete_transport(path.reversed()))
    residual = float(np.linalg.norm(loop.matrix - np.eye(n)))
    return _within(residual, 10.0 / REVERSAL_STEPS)


def _path_suite(config):
    transport = "denotes parallel transport over"
    continuation = "analytically continues the path integral"
    cases = [
        Case("octant loop holonomy", transport, _octant_holonomy),
        Case("cone loop holonomy", transport, _cone_holonomy),
        Case("octant discrete-vs-ode convergence", continuation, _octant_convergence),
    ]
    for d, n in config.pairs:
        cases.append(Case(f"flow discrete-vs-ode convergence (d={d}, n={n})", continuation,
                          partial(_flow_convergence, d=d, n=n)))
        cases.append(Case(f"path reversal (d={d}, n={n})", transport,
                          partial(_path_reversal, d=d, n=n)))
    return cases


def path_study(geometry, steps):
    """
    Discrete-versus-ODE transport error and holonomy phase over step counts.

    Parameters
    ----------
    geometry : {"sphere_octant", "unitary_flow"}
        The geodesic octant triangle or the tilted cone loop on the Bloch sphere.
    steps : sequence of int
        Step counts m; an empty sequence gives no rows.

    Returns
    -------
    list of dict
        Rows with keys ``m``, ``error`` and ``phase``. A row whose transport
        fails with a step-size error carries NaN values.

    Raises
    ------
    ValueError
        For an unknown geometry.
    """
    if geometry not in PATH_GEOMETRIES:
        raise ValueError(f"Unknown geometry '{geometry}'; expected one of {PATH_GEOMETRIES}.")
    build = octant_loop if geometry == "sphere_octant" else cone_loop
    rows = []
    for m in steps:
        path = build(int(m))
        try:
            discrete = discrete_transport(path)
            ode = ode_transport(path, int(m))
        except StepSizeError as error:
            logger.warning(f"Path study row m={m} skipped: {error}")
            rows.append({"m": int(m), "error": float("nan"), "phase": float("nan")})
            continue
        rows.append(
            {
                "m": int(m),
                "error": float(np.linalg.norm(discrete.matrix - ode.matrix)),
                "phase": holonomy_phase(discrete),
            }
        )
    return rows


# flat suite


def _flat_frames(config, rng):
    residuals = tessarine_flat_check()
    worst = max(residuals.values())
    failing = [name for name, value in residuals.items() if value > 0]
    return Outcome(worst, 0.0, not failing, ", ".join(failing))


def _flat_point(rng, imaginary=0.0):
    x1, y1 = rng.uniform(-1.0, 1.0, 2)
    x2, y2 = rng.uniform(-imaginary, imaginary, 2) if imaginary else (0.0, 0.0)
    return FlatPoint.from_coordinates(x1, x2, y1, y2)


def _flat_idempotency(config, rng, imaginary, tolerance):
    worst = max(
        flat_idempotency_residual(_flat_point(rng, imaginary), _flat_point(rng, imaginary))
        for _ in range(min(config.cases, FLAT_INSTANCES))
    )
    return _within(worst, config.tolerance(tolerance))


def _flat_polarization(config, rng):
    worst = 0.0
    for _ in range(min(config.cases, FLAT_INSTANCES)):
        p0 = _flat_point(rng)
        x1, y1, y2 = rng.uniform(-1.0, 1.0, 3)
        worst = max(
            worst,
            flat_polarization_residual(p0, FlatPoint.from_coordinates(x1, 0, y1, 0), "kahler"),
            flat_polarization_residual(p0, FlatPoint.from_coordinates(x1, 0, 0, y2), "real_polarized"),
        )
    return _within(worst, config.tolerance("finite_difference"))


def _flat_suite(config):
    return [
        Case("flat tessarine frames", "An example satisfying", _flat_frames),
        Case("flat idempotency real locus", "the connection 1–form is given by",
             partial(_flat_idempotency, imaginary=0.0, tolerance="flat_real")),
        Case("flat idempotency continued", "the connection 1–form is given by",
             partial(_flat_idempotency, imaginary=0.3, tolerance="flat_continued")),
        Case("flat polarized slices", "polarized along ∂x₁+i∂y₁", _flat_polarization),
    ]


# sphere suite


def _sphere_point(rng, spread=0.0):
    radius = rng.uniform(0.0, 1.5)
    angle = rng.uniform(0.0, 2 * np.pi)
    u = radius * np.exp(1j * angle)
    utilde = np.conj(u)
    if spread:
        utilde = utilde + spread * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))
    return SpherePoint.from_stereographic(u, utilde)


def _sphere_trace_formula(config, rng):
    worst = 0.0
    for k in range(config.cases):
        points = [_sphere_point(rng, spread=0.2 * (k % 2)) for _ in range(3)]
        delta = delta_product_explorer(*points).delta_sphere
        q1, q2, q3 = (sphere_projection(p) for p in points)
        worst = max(worst, abs(delta - three_point(q3, q2, q1)))
    return _within(worst, config.tolerance("sphere_kernel"))


def _sphere_reproducing(config, rng):
    worst = 0.0
    for k in range(config.cases):
        z1 = _sphere_point(rng, spread=0.2 * (k % 2)).stereographic()
        z2 = _sphere_point(rng, spread=0.2 * (k % 2)).stereographic()
        worst = max(worst, sphere_idempotency_residual(z1, z2))
    return _within(worst, config.tolerance("sphere_reproducing"))


def _sphere_conjugation(config, rng):
    worst = 0.0
    for _ in range(config.cases):
        p = _sphere_point(rng, spread=0.2)
        q = sphere_projection(p).matrix
        worst = max(worst, float(np.linalg.norm(sphere_projection(p.conjugate()).matrix - dagger(q))))
    return _within(worst, config.tolerance("sphere_conjugation") * 10)


def _disk_pseudo_hermiticity(config, rng):
    worst = 0.0
    sz = SIGMA[2]
    for _ in range(config.cases):
        a, b = rng.uniform(-1.0, 1.0, 2)
        p = SpherePoint(1j * a, 1j * b, np.sqrt(1 + a**2 + b**2))
        q = sphere_projection(p).matrix
        worst = max(worst, float(np.linalg.norm(sz @ dagger(q) @ sz - q)))
    return _within(worst, config.tolerance("sphere_kernel"))


def _sphere_overcompleteness(config, rng):
    result = overcompleteness_residual(sphere_cycle(), None, None)
    return _from_monte_carlo(result)


def _sphere_star_commutator(config, rng):
    sampler = sphere_cycle()
    worst = 0.0
    for _ in range(min(config.cases, 5)):
        F = _unit_matrix(rng, 2)
        G = _unit_matrix(rng, 2)
        f = SymbolFunction(F)
        g = SymbolFunction(G)
        difference = star_Q(f, g, sampler).operator - star_Q(g, f, sampler).operator
        worst = max(worst, float(np.linalg.norm(difference - commutator(F, G) / 3)))
    return _within(worst, config.tolerance("star_quadrature"), "commutator scaled by 1/(d+1)")


def _delta_explorer(config, rng):
    excess = 0.0
    records = 0
    for _ in range(config.cases):
        points = [_sphere_point(rng) for _ in range(3)]
        records += len(delta_explorer_sweep(*points))
        excess = max(excess, abs(delta_product_explorer(*points).delta_sphere) - 1.0)
    return _within(max(excess, 0.0), config.tolerance("sphere_kernel"), f"{records} identifications swept")


def _sphere_suite(config):
    return [
        Case("sphere kernel trace formula", "the idempotent corresponding to M = S²", _sphere_trace_formula),
        Case("sphere reproducing identity", "the idempotent corresponding to M = S²", _sphere_reproducing),
        Case("sphere conjugation", "x²+y²+z²=1", _sphere_conjugation),
        Case("disk pseudo-hermiticity", "hyperboloid model of the unit disk", _disk_pseudo_hermiticity),
        Case("sphere quadrature overcompleteness", "dim H = n Vol M", _sphere_overcompleteness),
        Case("sphere star commutator", "image of Q is closed", _sphere_star_commutator),
        Case("delta explorer sweep", "A simple computation gives", _delta_explorer),
    ]


# hyperkahler suite


def _hyperkahler_algebra(config, rng):
    worst = 0.0
    smallest = np.inf
    for q, u, _ in _instances(config, rng, 2, 1):
        Ju = hyperkahler_Jprime(q, u)
        worst = max(
            worst,
            float(np.linalg.norm(hyperkahler_Jprime(q, Ju).matrix + u.matrix)),
            float(np.linalg.norm(apply_I(Ju).matrix + hyperkahler_Jprime(q, apply_I(u)).matrix)),
        )
        smallest = min(smallest, hyperkahler_metric(q, u, u).real)
    if smallest <= 0:
        return Outcome(worst, config.tolerance("hyperkahler"), False, "metric is not positive")
    return _within(worst, config.tolerance("hyperkahler"))


def _hyperkahler_zero_section(config, rng):
    worst = 0.0
    for _ in range(config.cases):
        q = haar_sample(2, 1, rng)
        u = _hermitian_tangent(q, rng)
        worst = max(worst, float(np.linalg.norm(hyperkahler_Jprime(q, u).matrix + apply_J(u).matrix)))
    return _within(worst, config.tolerance("hyperkahler"), "J′ = −J on Hermitian tangents")


def _hyperkahler_suite(config):
    return [
        Case("anticommuting structure algebra", "anticommutes with I, given by", _hyperkahler_algebra),
        Case("anticommuting structure on zero section", "anticommutes with I, given by", _hyperkahler_zero_section),
    ]


SUITES = {
    "tessarine": _tessarine_suite,
    "symplectic": _symplectic_suite,
    "quantization": _quantization_suite,
    "propagator": _propagator_suite,
    "path": _path_suite,
    "flat": _flat_suite,
    "sphere": _sphere_suite,
    "hyperkahler": _hyperkahler_suite,
    "all": None,
}


def build_cases(config):
    """The ordered case list of the configured suite."""
    if config.suite == "all":
        return [case for name, build in SUITES.items() if build is not None for case in build(config)]
    return SUITES[config.suite](config)


def _execute(case, config, rng):
    start = time.perf_counter()
    try:
        outcome = case.check(config, rng)
    except Exception as error:
        logger.warning(f"Case '{case.name}' raised {type(error).__name__}: {error}")
        outcome = Outcome(None, None, False, f"{type(error).__name__}: {error}")
    runtime_ms = (time.perf_counter() - start) * 1000.0
    result = CaseResult(
        name=case.name,
        anchor=case.anchor,
        residual=None if outcome.residual is None else float(outcome.residual),
        bound=None if outcome.bound is None else float(outcome.bound),
        passed=bool(outcome.passed),
        runtime_ms=runtime_ms,
        diagnostic=outcome.diagnostic,
    )
    logger.info(
        f"{'PASS' if result.passed else 'FAIL'} {case.name}: "
        f"residual={result.residual} bound={result.bound} ({runtime_ms:.1f} ms)"
    )
    return result


def run_suite(config):
    """
    Run every case of the configured suite.

    Case ``k`` draws from ``RngState(seed).spawn(k)``; exceptions inside a
    case are recorded as a failed case and the suite continues.

    Returns
    -------
    VerificationReport
    """
    if not isinstance(config, SuiteConfig):
        raise TypeError("config must be a SuiteConfig.")
    cases = build_cases(config)
    root = RngState(config.seed)
    logger.info(f"Running suite '{config.suite}': {len(cases)} cases on {config.workers} worker(s)")
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(_execute, case, config, root.spawn(k)) for k, case in enumerate(cases)]
        results = tuple(future.result() for future in futures)
    report = VerificationReport(config.suite, config.echo(), results)
    logger.info(f"Suite '{config.suite}' finished: {report.verdict}")
    return report
