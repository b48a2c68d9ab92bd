"""
Berezin quantization Q and the expectation map <·> on T*G_n(C^d).

Integrals over the cycle are Monte Carlo sums (or fixed quadratures) whose
weights carry the total mass d/n, so that Q_1 = I and τ(I) = dim H / n.
"""

import numbers
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from tqdm import tqdm

from grassmann_quantization.exceptions import (
    ConditioningError,
    ContractViolation,
    DimensionError,
    EvaluationError,
)
from grassmann_quantization.grassmann_model import (
    CONSTRUCTION_TOL,
    MAX_DIM,
    ProjectionPoint,
    haar_batch,
)
from grassmann_quantization.matrix_kernel import (
    RngState,
    as_complex_matrix,
    dagger,
    gaussian_batch,
)

CHUNK_SIZE = 65536
WORD_LENGTH = 50
RIDGE = 1e-10
MAX_CONDITION = 1e6
CLT_SIGMAS = 3.0
REDUCIBLE_SIGMAS = 10.0
QUADRATURE_TOL = 1e-9

SAMPLER_KINDS = ("haar_zero_section", "fixed_quadrature", "group_orbit")


@dataclass(frozen=True, eq=False)
class Observable:
    """A d×d complex operator with finite entries."""

    matrix: np.ndarray

    def __post_init__(self):
        M = as_complex_matrix(self.matrix, "observable")
        if M.shape[0] != M.shape[1]:
            raise DimensionError(f"Observable must be square, got shape {M.shape}.")
        M.flags.writeable = False
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class SymbolFunction:
    """
    The expectation symbol f(q) = τ(qM) of an operator representative M.

    Calling it on a :class:`ProjectionPoint` evaluates the symbol; ``batch``
    evaluates it on a stack of matrices of a given rank.
    """

    operator: np.ndarray

    def __post_init__(self):
        M = Observable(self.operator).matrix
        object.__setattr__(self, "operator", M)

    @property
    def dim(self):
        return self.operator.shape[0]

    def __call__(self, q):
        return expectation(self.operator, q)

    def batch(self, stack, rank):
        return np.einsum("kij,ji->k", stack, self.operator) / rank

    def __add__(self, other):
        return SymbolFunction(self.operator + _as_symbol(other, self.dim).operator)

    def __mul__(self, scalar):
        return SymbolFunction(scalar * self.operator)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class SampleSet:
    """A materialized weighted sample of the cycle, reusable across estimators."""

    points: np.ndarray
    weights: np.ndarray
    rank: int
    random: bool = True

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def total_mass(self):
        return float(np.sum(self.weights))

    def iter_chunks(self, N=None, rng=None):
        yield self.points, self.weights


@dataclass(frozen=True)
class MonteCarloResidual:
    """
    A residual with the CLT bound it is judged against.

    ``verdict`` is "PASS" when the residual is within the bound, "REDUCIBLE"
    for orbit samplers whose mean sits persistently away from the identity,
    and "FAIL" otherwise.
    """

    residual: float
    bound: float
    verdict: str

    @property
    def passed(self):
        return self.verdict == "PASS"


@dataclass(frozen=True)
class MonteCarloEstimate:
    value: np.ndarray
    bound: float


@dataclass(frozen=True)
class DualityResult:
    same_sample: float
    cross_sample: float
    cross_bound: float

    @property
    def passed(self):
        return self.cross_sample <= max(self.cross_bound, QUADRATURE_TOL)


@dataclass(frozen=True, eq=False)
class CycleSampler:
    """
    Integration cycle with its measure, normalized to total mass d/n.

    Use the constructors :meth:`haar`, :meth:`quadrature` and
    :meth:`group_orbit` rather than the raw fields.
    """

    kind: str
    dim: int
    rank: int
    points: np.ndarray = None
    weights: np.ndarray = None
    generators: tuple = ()
    frame: np.ndarray = None

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(
                f"Unknown sampler kind '{self.kind}'; expected one of {SAMPLER_KINDS}."
            )
        if not 1 <= self.rank < self.dim <= MAX_DIM:
            raise ValueError(
                f"Sampler needs 1 <= n < d <= {MAX_DIM}, got n={self.rank}, d={self.dim}."
            )

    @classmethod
    def haar(cls, d, n):
        return cls("haar_zero_section", d, n)

    @classmethod
    def quadrature(cls, points, weights, rank):
        """
        Fixed quadrature on given projections.

        Raises
        ------
        ValueError
            If the weights do not sum to the total mass d/n.
        """
        points = np.asarray(points, dtype=np.complex128)
        weights = np.asarray(weights, dtype=float)
        if points.ndim != 3 or points.shape[0] != weights.shape[0]:
            raise DimensionError("Quadrature needs a (m, d, d) point stack and m weights.")
        d = points.shape[1]
        if abs(weights.sum() - d / rank) > QUADRATURE_TOL * d:
            raise ValueError(
                f"Quadrature weights sum to {weights.sum():.12g}, expected total mass {d / rank}."
            )
        return cls("fixed_quadrature", d, rank, points=points, weights=weights)

    @classmethod
    def group_orbit(cls, generators, frame):
        """
        Orbit of span(frame) under the group generated by skew-Hermitian matrices.

        Raises
        ------
        ContractViolation
            If a generator is not skew-Hermitian or the frame is not orthonormal.
        """
        generators = tuple(as_complex_matrix(G, "generator") for G in generators)
        if not generators:
            raise ValueError("At least one generator is needed.")
        V = as_complex_matrix(frame, "frame")
        for G in generators:
            if G.shape != (V.shape[0], V.shape[0]):
                raise DimensionError("Generators must be d×d with d the frame height.")
            if np.linalg.norm(G + dagger(G)) > CONSTRUCTION_TOL:
                raise ContractViolation("Orbit generators must be skew-Hermitian.")
        if np.linalg.norm(dagger(V) @ V - np.eye(V.shape[1])) > CONSTRUCTION_TOL:
            raise ContractViolation("Orbit frame must have orthonormal columns.")
        return cls("group_orbit", V.shape[0], V.shape[1], generators=generators, frame=V)

    @property
    def total_mass(self):
        return self.dim / self.rank

    @property
    def random(self):
        return self.kind != "fixed_quadrature"

    def iter_chunks(self, N, rng, chunk_size=CHUNK_SIZE):
        """
        Yield (points, weights) chunks that together make up one N-sample estimate.

        Fixed quadratures ignore N and `rng` and yield their nodes once.
        """
        if self.kind == "fixed_quadrature":
            yield self.points, self.weights
            return
        _check_count(N)
        if not isinstance(rng, RngState):
            raise TypeError("rng must be an RngState.")
        chunks = -(-N // chunk_size)
        weight = self.total_mass / N
        with tqdm(total=N, desc=self.kind, disable=chunks <= 1) as progress:
            for start in range(0, N, chunk_size):
                count = min(chunk_size, N - start)
                if self.kind == "haar_zero_section":
                    points = haar_batch(self.dim, self.rank, count, rng)
                else:
                    points = self._orbit_batch(count, rng)
                progress.update(count)
                yield points, np.full(count, weight)

    def _orbit_batch(self, count, rng):
        d = self.dim
        U = np.broadcast_to(np.eye(d, dtype=np.complex128), (count, d, d)).copy()
        stacked = np.array(self.generators)
        for _ in range(WORD_LENGTH):
            coefficients = rng.standard_normal((count, len(self.generators)))
            H = 1j * np.einsum("kg,gij->kij", coefficients, stacked)
            eigenvalues, vectors = np.linalg.eigh(H)
            step = (vectors * np.exp(-1j * eigenvalues)[:, None, :]) @ dagger(vectors)
            U = step @ U
        W = U @ self.frame
        return W @ dagger(W)


def _check_count(N):
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
        raise TypeError("Sample count N must be an integer.")
    if N < 1:
        raise ValueError("Sample count N must be at least 1.")


def _as_symbol(f, d):
    if isinstance(f, SymbolFunction):
        return f
    if isinstance(f, Observable):
        return SymbolFunction(f.matrix)
    if isinstance(f, numbers.Number):
        return SymbolFunction(complex(f) * np.eye(d))
    if isinstance(f, (np.ndarray, list, tuple)):
        return SymbolFunction(f)
    raise TypeError("Expected a SymbolFunction, an Observable, a matrix or a constant.")


def _symbol_values(f, points, rank):
    if isinstance(f, (SymbolFunction, Observable, numbers.Number, np.ndarray)):
        return _as_symbol(f, points.shape[1]).batch(points, rank)
    if not callable(f):
        raise TypeError("Symbol must be a SymbolFunction, a constant or a callable of q.")
    return np.array([complex(f(ProjectionPoint(q, rank))) for q in points])


def _check_finite(values, points):
    bad = ~np.isfinite(values)
    if np.any(bad):
        index = int(np.argmax(bad))
        raise EvaluationError(
            f"Symbol is not finite on sample {index}: {values[index]}.",
            sample=points[index],
        )


def expectation(M, q):
    """
    ⟨M⟩(q) = τ(qM) = Tr(qM)/n.

    Raises
    ------
    DimensionError
        If M and q have different sizes.
    """
    M = np.asarray(getattr(M, "matrix", M))
    if M.shape != q.matrix.shape:
        raise DimensionError(f"Observable shape {M.shape} does not match q shape {q.matrix.shape}.")
    return q.tau(M)


def draw_samples(sampler, N, rng):
    """Materialize N weighted samples of `sampler` so several estimators can share them."""
    chunks = list(sampler.iter_chunks(N, rng))
    points = np.concatenate([c[0] for c in chunks])
    weights = np.concatenate([c[1] for c in chunks])
    return SampleSet(points, weights, sampler.rank, random=sampler.random)


def berezin_quantize(f, sampler, N=None, rng=None):
    """
    Q_f = ∫ f(q) q, estimated as the weighted sum Σ w_k f(q_k) q_k.

    Parameters
    ----------
    f : SymbolFunction, number or callable
        The symbol. Callables receive a :class:`ProjectionPoint`.
    sampler : CycleSampler or SampleSet
        Cycle to integrate over. A SampleSet is used as is.
    N : int
        Number of Monte Carlo samples (ignored for fixed quadratures).
    rng : RngState
        Random stream (ignored for fixed quadratures).

    Returns
    -------
    Observable
        The quantized operator.

    Raises
    ------
    EvaluationError
        If `f` is not finite on some sample; the sample is attached.
    """
    total = np.zeros((sampler.dim, sampler.dim), dtype=np.complex128)
    for points, weights in sampler.iter_chunks(N, rng):
        values = _symbol_values(f, points, sampler.rank)
        _check_finite(values, points)
        total += np.einsum("k,kij->ij", weights * values, points)
    return Observable(total)


def cycle_average(sampler, N, rng, integrand):
    """
    Weighted cycle integral Σ w·X(q) with a 3σ CLT bound.

    Parameters
    ----------
    sampler : CycleSampler or SampleSet
        Cycle to integrate over.
    N : int or None
        Number of samples; ignored by sample sets and fixed quadratures.
    rng : RngState or None
        Random stream; ignored by sample sets and fixed quadratures.
    integrand : callable
        Maps a (k, d, d) stack of points to a (k, ...) array of values.

    Returns
    -------
    tuple
        The integral and the bound on its Frobenius error. The bound is 0 for
        deterministic cycles.
    """
    total = 0.0
    square = 0.0
    count = 0
    for points, weights in sampler.iter_chunks(N, rng):
        X = integrand(points)
        w = weights.reshape((-1,) + (1,) * (X.ndim - 1))
        total = total + np.sum(w * X, axis=0)
        square = square + np.sum(np.abs(X) ** 2, axis=0)
        count += weights.shape[0]
    if not sampler.random:
        return total, 0.0
    # random samples carry equal weights mass/count
    mass = sampler.total_mass
    variance = np.maximum(mass**2 * square / count - np.abs(total) ** 2, 0.0)
    return total, CLT_SIGMAS * float(np.sqrt(np.sum(variance) / count))


def _judge(residual, bound):
    return "PASS" if residual <= max(bound, QUADRATURE_TOL) else "FAIL"


def overcompleteness_residual(sampler, N, rng):
    """
    ‖(d/n)·mean(q) − I‖_F with a 3σ CLT bound.

    Returns
    -------
    MonteCarloResidual
        PASS iff the residual is within the bound. Fixed quadratures get a
        zero bound and are judged against a round-off tolerance.
    """
    mean, bound = cycle_average(sampler, N, rng, lambda points: points)
    residual = float(np.linalg.norm(mean - np.eye(sampler.dim)))
    return MonteCarloResidual(residual, bound, _judge(residual, bound))


def duality_residual(A, f, sampler, N, rng):
    """
    Compare τ(A·Q_f) with ∫ ⟨A⟩ f on the same and on independent samples.

    The same-sample difference is a rearrangement of one finite sum and is
    zero up to round-off. The cross-sample difference uses a second draw from
    `rng` and comes with a combined CLT bound.

    Returns
    -------
    DualityResult
    """
    A = Observable(A).matrix
    first = draw_samples(sampler, N, rng)
    n = first.rank
    Qf = berezin_quantize(f, first).matrix
    lhs = complex(np.trace(A @ Qf)) / n

    def integrand(points):
        return SymbolFunction(A).batch(points, n) * _symbol_values(f, points, n)

    rhs, lhs_bound = cycle_average(first, None, None, integrand)
    same_sample = abs(lhs - complex(rhs))
    if not first.random:
        return DualityResult(same_sample, same_sample, 0.0)

    rhs_cross, rhs_bound = cycle_average(sampler, N, rng, integrand)
    cross = abs(lhs - complex(rhs_cross))
    return DualityResult(same_sample, cross, float(np.hypot(lhs_bound, rhs_bound)))


@lru_cache(maxsize=None)
def _symbol_span_is_full(d):
    rng = RngState(0)
    points = haar_batch(d, 1, 2 * d * d, rng)
    return np.linalg.matrix_rank(points.reshape(points.shape[0], -1)) == d * d


def star_expectation(M, N_):
    """
    f ⋆ g = ⟨FG⟩ with the lifts taken as the given representatives.

    The lift is only well defined when rank-one projections span all of
    B(C^d); that span is checked once per dimension.

    Raises
    ------
    ContractViolation
        If the sampled projections fail to span the operator space.
    """
    F = _as_symbol(M, np.asarray(getattr(M, "matrix", M)).shape[0]).operator
    G = _as_symbol(N_, F.shape[0]).operator
    if F.shape != G.shape:
        raise DimensionError(f"Shape mismatch in star product: {F.shape} vs {G.shape}.")
    if not _symbol_span_is_full(F.shape[0]):
        raise ContractViolation("Expectation symbols do not span the operator space.")
    return SymbolFunction(F @ G)


def quantization_matrix(samples):
    """
    Matrix of Q on the matrix-unit symbols ⟨E_ij⟩, acting on row-major vec(F).

    Q_{⟨F⟩} = Σ_k w_k τ(q_k F) q_k, so column (i, j) is Σ_k w_k (q_k)_ji q_k / n.
    """
    d = samples.dim
    L = np.zeros((d * d, d * d), dtype=np.complex128)
    for points, weights in samples.iter_chunks():
        flat = points.reshape(points.shape[0], -1)
        transposed = np.swapaxes(points, 1, 2).reshape(points.shape[0], -1)
        L += np.einsum("k,ka,kb->ab", weights, flat, transposed)
    return L / samples.rank


def _pullback(L, target):
    condition = float(np.linalg.cond(L))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise ConditioningError(
            f"Quantization map on the symbol span is ill-conditioned (cond = {condition:.3e}).",
            condition=condition,
        )
    normal = dagger(L) @ L + RIDGE * np.eye(L.shape[0])
    return np.linalg.solve(normal, dagger(L) @ target)


def star_Q(f, g, sampler, N=None, rng=None):
    """
    f ⋆_Q g = Q⁻¹(Q_f Q_g) on the span of matrix-unit symbols.

    Parameters
    ----------
    f, g : SymbolFunction or number
        Symbols with operator representatives.
    sampler : CycleSampler or SampleSet
        Pass a SampleSet to reuse one draw across several products.
    N, rng
        Sample count and stream when `sampler` is a CycleSampler.

    Returns
    -------
    SymbolFunction

    Raises
    ------
    ConditioningError
        If Q restricted to the symbol span has condition number above 1e6.
    """
    samples = sampler if isinstance(sampler, SampleSet) else draw_samples(sampler, N, rng)
    d = samples.dim
    F = _as_symbol(f, d).operator
    G = _as_symbol(g, d).operator
    L = quantization_matrix(samples)
    product = (L @ F.ravel()).reshape(d, d) @ (L @ G.ravel()).reshape(d, d)
    return SymbolFunction(_pullback(L, product.ravel()).reshape(d, d))


def l2_inner(f, g, samples):
    """⟨f, g⟩ = Σ w conj(f) g over a sample set."""
    n = samples.rank
    values_f = _symbol_values(f, samples.points, n)
    values_g = _symbol_values(g, samples.points, n)
    return complex(np.sum(samples.weights * np.conj(values_f) * values_g))


def adjointness_residual(T, f, sampler, N=None, rng=None):
    """
    |τ(T†Q_f) − ⟨⟨T⟩, f⟩| on one sample set of the zero section.

    Raises
    ------
    ContractViolation
        If the sampled points are not Hermitian.
    """
    T = Observable(T).matrix
    samples = sampler if isinstance(sampler, SampleSet) else draw_samples(sampler, N, rng)
    if np.max(np.abs(samples.points - dagger(samples.points))) > CONSTRUCTION_TOL:
        raise ContractViolation("Adjointness holds on the zero section only; samples are not Hermitian.")
    Qf = berezin_quantize(f, samples).matrix
    lhs = complex(np.trace(dagger(T) @ Qf)) / samples.rank
    rhs = l2_inner(SymbolFunction(T), f, samples)
    return abs(lhs - rhs)


def orbit_overcompleteness(generators, V, N, rng):
    """
    Schur residual of a group orbit: ‖(d/n)·mean(q) − I‖ over q = (UV)(UV)†.

    Group elements are random words of length 50 in exponentials of Gaussian
    combinations of the generators.

    Returns
    -------
    MonteCarloResidual
        PASS within 3σ, REDUCIBLE beyond 10σ, FAIL in between.
    """
    sampler = CycleSampler.group_orbit(generators, V)
    result = overcompleteness_residual(sampler, N, rng)
    sigma = result.bound / CLT_SIGMAS
    if result.passed:
        return result
    if result.residual > REDUCIBLE_SIGMAS * sigma:
        return MonteCarloResidual(result.residual, result.bound, "REDUCIBLE")
    return result


def berezin_moment_oracle(A, N, rng, rank=1):
    """
    Brute-force estimate of (d/n)·E[τ(qA) q] over Haar-random rank-n projections.

    Points come from the first n columns of phase-corrected QR unitaries,
    independently of the sampler pipeline.

    Returns
    -------
    MonteCarloEstimate
        The operator estimate and a 3σ Frobenius bound.
    """
    A = Observable(A).matrix
    d = A.shape[0]
    n = rank
    if not 1 <= n < d:
        raise ValueError(f"rank must satisfy 1 <= n < d, got n={n}, d={d}.")
    _check_count(N)
    total = np.zeros((d, d), dtype=np.complex128)
    square = np.zeros((d, d))
    for start in range(0, N, CHUNK_SIZE):
        count = min(CHUNK_SIZE, N - start)
        Z = gaussian_batch(rng, count, d, d)
        Q, R = np.linalg.qr(Z)
        diagonal = np.diagonal(R, axis1=1, axis2=2)
        U = Q * (diagonal / np.abs(diagonal))[:, None, :]
        V = U[:, :, :n]
        points = V @ dagger(V)
        X = (d / n) * (np.einsum("kij,ji->k", points, A) / n)[:, None, None] * points
        total += X.sum(axis=0)
        square += (np.abs(X) ** 2).sum(axis=0)
    mean = total / N
    variance = np.maximum(square / N - np.abs(mean) ** 2, 0.0)
    return MonteCarloEstimate(mean, CLT_SIGMAS * float(np.sqrt(variance.sum() / N)))
