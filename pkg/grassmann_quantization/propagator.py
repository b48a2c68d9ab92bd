"""
The complexified tautological bundle E = {(q, v) : qv = v} and its propagator
P(q1, q2): v ↦ q2·v.

Fiber frames are orthonormal bases of im(q) with a canonical phase, so the
matrices of P are reproducible. Transport along a path is either the product
of propagators over consecutive samples or the RK4 integration of the
horizontal lift v' = q'(t)·v.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.interpolate
import scipy.linalg

from grassmann_quantization.exceptions import (
    ContractViolation,
    DimensionError,
    StepSizeError,
)
from grassmann_quantization.grassmann_model import (
    CONSTRUCTION_TOL,
    ProjectionPoint,
    TangentVector,
    apply_I,
    apply_J,
    apply_K,
    retract,
)
from grassmann_quantization.matrix_kernel import (
    as_complex_matrix,
    dagger,
    expm,
    orthonormal_frame,
)
from grassmann_quantization.quantization_maps import (
    CLT_SIGMAS,
    CycleSampler,
    MonteCarloResidual,
    cycle_average,
    draw_samples,
)

FIBER_TOL = 1e-10
DIAGONAL_TOL = 1e-10
MAX_STEP = 0.5
DEGENERATE_SINGULAR_VALUE = 1e-8
SEPARATION_FLOOR = 1e-8
AXIOM_WITNESSES = 8
PATH_KINDS = ("unitary_flow", "piecewise_geodesic", "samples")


@dataclass(frozen=True, eq=False)
class FiberFrame:
    """
    Orthonormal basis of the fiber im(q).

    Raises
    ------
    ContractViolation
        If the columns leave im(q) or are not full rank.
    """

    base: ProjectionPoint
    columns: np.ndarray

    def __post_init__(self):
        V = as_complex_matrix(self.columns, "columns")
        q = self.base.matrix
        if V.shape != (self.base.dim, self.base.rank):
            raise DimensionError(
                f"Frame must be {self.base.dim}×{self.base.rank}, got {V.shape}."
            )
        if np.linalg.norm(q @ V - V) > FIBER_TOL:
            raise ContractViolation("Frame columns do not lie in the image of q.")
        if np.linalg.matrix_rank(V, tol=FIBER_TOL) != self.base.rank:
            raise ContractViolation("Frame columns are not linearly independent.")
        object.__setattr__(self, "columns", V)

    def coordinates(self, vectors):
        """Coordinates of fiber vectors in this frame (the frame is orthonormal)."""
        return dagger(self.columns) @ vectors


@dataclass(frozen=True, eq=False)
class PropagatorMap:
    """Matrix of a linear map between fibers, in the stored source and target frames."""

    source: FiberFrame
    target: FiberFrame
    matrix: np.ndarray

    @property
    def smallest_singular_value(self):
        return float(np.linalg.svd(self.matrix, compute_uv=False)[-1])

    def then(self, following):
        """Compose with a map starting where this one ends."""
        if following.source.base is not self.target.base and not np.allclose(
            following.source.columns, self.target.columns, atol=FIBER_TOL
        ):
            raise ContractViolation("Maps cannot be composed: frames do not match.")
        return PropagatorMap(self.source, following.target, following.matrix @ self.matrix)

    def as_operator(self):
        """The map as a d×d matrix, zero on the complement of the source fiber."""
        return self.target.columns @ self.matrix @ dagger(self.source.columns)

    def __mul__(self, scalar):
        return PropagatorMap(self.source, self.target, scalar * self.matrix)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class PathSpec:
    """
    A path t ↦ q(t), t ∈ [0, 1], sampled at m + 1 equally spaced times.

    Build it with :meth:`unitary_flow`, :meth:`piecewise_geodesic` or
    :meth:`from_samples`.
    """

    kind: str
    steps: int
    rank: int
    start: np.ndarray = None
    generator: np.ndarray = None
    vertices: tuple = ()
    generators: tuple = ()
    nodes: np.ndarray = None
    _spline: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise ValueError(f"Unknown path kind '{self.kind}'; expected one of {PATH_KINDS}.")
        if isinstance(self.steps, bool) or not isinstance(self.steps, (int, np.integer)):
            raise TypeError("steps must be an integer.")
        if self.steps < 1:
            raise ValueError("A path needs at least one step.")

    @classmethod
    def unitary_flow(cls, q0, X, steps):
        """q(t) = e^{tX} q0 e^{-tX}."""
        X = as_complex_matrix(X, "X")
        if X.shape != q0.matrix.shape:
            raise DimensionError("Flow generator must have the shape of q0.")
        return cls("unitary_flow", steps, q0.rank, start=q0.matrix, generator=X)

    @classmethod
    def piecewise_geodesic(cls, vertices, steps):
        """
        Zero-section geodesics through consecutive Hermitian vertices.

        Each leg takes an equal share of the time interval.
        """
        if len(vertices) < 2:
            raise ValueError("A piecewise geodesic needs at least two vertices.")
        generators = tuple(
            geodesic_generator(a, b) for a, b in zip(vertices[:-1], vertices[1:])
        )
        return cls(
            "piecewise_geodesic",
            steps,
            vertices[0].rank,
            vertices=tuple(vertices),
            generators=generators,
        )

    @classmethod
    def from_samples(cls, points):
        """Explicit sample list; derivatives come from a cubic spline through the samples."""
        if len(points) < 2:
            raise ValueError("A sampled path needs at least two points.")
        nodes = np.array([p.matrix for p in points])
        times = np.linspace(0.0, 1.0, len(points))
        spline = (
            scipy.interpolate.CubicSpline(times, nodes.real, axis=0),
            scipy.interpolate.CubicSpline(times, nodes.imag, axis=0),
        )
        return cls("samples", len(points) - 1, points[0].rank, nodes=nodes, _spline=spline)

    @property
    def legs(self):
        """Time intervals on which the path is smooth."""
        if self.kind == "piecewise_geodesic":
            count = len(self.generators)
            return [(k / count, (k + 1) / count) for k in range(count)]
        return [(0.0, 1.0)]

    def matrix_at(self, t):
        if self.kind == "unitary_flow":
            U = expm(t * self.generator)
            return U @ self.start @ expm(-t * self.generator)
        if self.kind == "piecewise_geodesic":
            leg, s = self._leg_time(t)
            U = expm(s * self.generators[leg])
            return U @ self.vertices[leg].matrix @ expm(-s * self.generators[leg])
        real, imag = self._spline
        return real(t) + 1j * imag(t)

    def derivative(self, t):
        """dq/dt at time t."""
        if self.kind == "unitary_flow":
            q = self.matrix_at(t)
            return self.generator @ q - q @ self.generator
        if self.kind == "piecewise_geodesic":
            leg, _ = self._leg_time(t)
            q = self.matrix_at(t)
            X = self.generators[leg]
            return len(self.generators) * (X @ q - q @ X)
        real, imag = self._spline
        return real(t, 1) + 1j * imag(t, 1)

    def point(self, t):
        return ProjectionPoint(self.matrix_at(t), self.rank)

    def samples(self):
        """The m + 1 sample points q(k/m)."""
        if self.kind == "samples":
            return [ProjectionPoint(q, self.rank) for q in self.nodes]
        return [self.point(k / self.steps) for k in range(self.steps + 1)]

    def reversed(self):
        return PathSpec.from_samples(self.samples()[::-1])

    def _leg_time(self, t):
        count = len(self.generators)
        leg = min(int(np.floor(t * count)), count - 1)
        return leg, t * count - leg


@dataclass(frozen=True, eq=False)
class SectionSample:
    """
    A section q ↦ ψ(q) ∈ im(q), evaluated lazily.

    ``rule`` maps a raw d×d matrix q to a vector. With ``stacked`` set it
    also maps a (k, d, d) stack to a (k, d) array in one call. Coherent
    sections ψ(q) = qΨ also carry Ψ in ``vector``.
    """

    rule: object
    vector: np.ndarray = None
    bound: float = 0.0
    stacked: bool = False

    def __call__(self, q):
        value = np.asarray(self.rule(q.matrix), dtype=np.complex128)
        defect = np.linalg.norm(q.matrix @ value - value)
        if defect > FIBER_TOL * max(1.0, float(np.linalg.norm(value))):
            raise ContractViolation(f"Section value leaves the fiber: ||qψ - ψ|| = {defect:.3e}.")
        return value

    def batch(self, points):
        if self.vector is not None:
            return points @ self.vector
        if self.stacked:
            return np.asarray(self.rule(points), dtype=np.complex128)
        return np.array([self.rule(q) for q in points], dtype=np.complex128)


@dataclass(frozen=True)
class UnitaryEquivalenceResult:
    reconstruction: MonteCarloResidual
    inner_product: MonteCarloResidual


@dataclass(frozen=True)
class AxiomReport:
    """Residual of each propagator condition and whether it passed."""

    residuals: dict
    passed: dict

    @property
    def failed(self):
        return [name for name, ok in self.passed.items() if not ok]

    @property
    def verdict(self):
        return "PASS" if not self.failed else "VIOLATED: " + ", ".join(self.failed)


@dataclass(frozen=True)
class Reconstruction:
    operator: np.ndarray
    bound: float
    axioms: AxiomReport


def _same_shape(*points):
    shapes = {(p.dim, p.rank) for p in points}
    if len(shapes) != 1:
        raise DimensionError(f"Points must share d and n, got {sorted(shapes)}.")


def fiber_frame(q):
    return FiberFrame(q, orthonormal_frame(q.matrix, q.rank))


def propagate(q1, q2, source=None, target=None):
    """
    Matrix of P(q1, q2): v ↦ q2·v from E_{q1} to E_{q2}.

    Parameters
    ----------
    q1, q2 : ProjectionPoint
        Source and target points with the same d and n.
    source, target : FiberFrame, optional
        Frames to express the map in; canonical frames by default.

    Returns
    -------
    PropagatorMap
        May be singular when the fibers are nearly orthogonal.
    """
    _same_shape(q1, q2)
    source = source if source is not None else fiber_frame(q1)
    target = target if target is not None else fiber_frame(q2)
    matrix = target.coordinates(q2.matrix @ source.columns)
    return PropagatorMap(source, target, matrix)


def _delta(m1, m2, m3, n):
    return complex(np.trace(m3 @ m2 @ m1)) / n


def three_point(q1, q2, q3):
    """Δ(q1, q2, q3) = τ(q3 q2 q1)."""
    _same_shape(q1, q2, q3)
    return _delta(q1.matrix, q2.matrix, q3.matrix, q1.rank)


def three_point_from_maps(q1, q2, q3):
    """Δ as the normalized trace of P(q1,q2), P(q2,q3), P(q3,q1) composed around the cycle."""
    loop = propagate(q1, q2).then(propagate(q2, q3)).then(propagate(q3, q1))
    return complex(np.trace(loop.matrix)) / q1.rank


def curvature_from_three_point(q, u, v, eps, linear=False):
    """
    Recover Ω_q(u, v) from the antisymmetrized three-point function.

    Parameters
    ----------
    q : ProjectionPoint
    u, v : TangentVector
        Tangents A and B at q.
    eps : float
        Displacement ε, in [1e-6, 1e-2].
    linear : bool
        Use the difference of Δ itself instead of the difference of log Δ.

    Returns
    -------
    complex
        Tangents satisfy qAq = 0, so Δ(q+εB, q+εA, q) = 1 + ε²τ(qAB) and
        Δ(q+εA, q+εB, q) = 1 + ε²τ(qBA) exactly.

        With ``linear=False`` the result is
        i·[log Δ(q+εB, q+εA, q) − log Δ(q+εA, q+εB, q)]/ε², which is Ω plus
        the O(ε²) term −iε²[τ(qAB)² − τ(qBA)²]/2 of the logarithm.

        With ``linear=True`` it is i·[Δ(q+εB, q+εA, q) − Δ(q+εA, q+εB, q)]/ε²,
        which equals Ω up to round-off of order 1e-16/ε².

    Raises
    ------
    ValueError
        If `eps` lies outside [1e-6, 1e-2].
    """
    if not 1e-6 <= eps <= 1e-2:
        raise ValueError(f"eps must lie in [1e-6, 1e-2], got {eps}.")
    Q = q.matrix
    A = u.matrix
    B = v.matrix
    forward = _delta(Q + eps * B, Q + eps * A, Q, q.rank)
    backward = _delta(Q + eps * A, Q + eps * B, Q, q.rank)
    if linear:
        return 1j * (forward - backward) / eps**2
    return 1j * (np.log(forward) - np.log(backward)) / eps**2


def three_point_holomorphy_residual(q1, q2, q3, slot, v, h=1e-4):
    """
    Cauchy–Riemann residual |D_{iA}Δ − i·D_AΔ| in one slot of Δ.

    Derivatives are central differences along the retraction of the point
    in `slot` (0, 1 or 2) in directions A = v and iA.
    """
    points = [q1, q2, q3]
    if slot not in (0, 1, 2):
        raise ValueError(f"slot must be 0, 1 or 2, got {slot}.")
    base = points[slot]

    def directional(w):
        values = []
        for t in (h, -h):
            moved = list(points)
            moved[slot] = retract(base, w, t)
            values.append(three_point(*moved))
        return (values[0] - values[1]) / (2 * h)

    return abs(directional(TangentVector(base, 1j * v.matrix)) - 1j * directional(v))


def convolution_idempotency_residual(q1, q2, N, rng):
    """
    ‖(d/n)·E_Haar[P(q, q2)∘P(q1, q)] − P(q1, q2)‖ in the canonical frames of q1, q2.

    Returns
    -------
    MonteCarloResidual
    """
    _same_shape(q1, q2)
    F1 = fiber_frame(q1).columns
    F2 = fiber_frame(q2).columns
    left = dagger(F2) @ q2.matrix
    right = q1.matrix @ F1
    sampler = CycleSampler.haar(q1.dim, q1.rank)
    mean, bound = cycle_average(sampler, N, rng, lambda points: left @ points @ right)
    residual = float(np.linalg.norm(mean - propagate(q1, q2).matrix))
    verdict = "PASS" if residual <= bound else "FAIL"
    return MonteCarloResidual(residual, bound, verdict)


def _step_maps(points):
    frames = [fiber_frame(p) for p in points]
    for k in range(len(points) - 1):
        size = float(np.linalg.norm(points[k + 1].matrix - points[k].matrix))
        if size > MAX_STEP:
            raise StepSizeError(
                f"Step {k} has size {size:.3f} > {MAX_STEP}; refine the path.",
                step=k,
                size=size,
            )
        yield propagate(points[k], points[k + 1], frames[k], frames[k + 1])


def discrete_transport(path):
    """
    Product P(q_{m-1}, q_m)∘…∘P(q_0, q_1) over the path samples.

    Raises
    ------
    StepSizeError
        If consecutive samples are more than 0.5 apart.

    Warns
    -----
    UserWarning
        If an intermediate step is nearly singular.
    """
    result = None
    for k, step in enumerate(_step_maps(path.samples())):
        if step.smallest_singular_value < DEGENERATE_SINGULAR_VALUE:
            warnings.warn(
                f"Transport step {k} is nearly singular; fibers are almost orthogonal.",
                UserWarning,
            )
        result = step if result is None else result.then(step)
    return result


def ode_transport(path, steps):
    """
    RK4 integration of the horizontal lift v' = q'(t)·v, one frame column at a time.

    Each leg of a piecewise path is integrated separately with `steps`
    divided evenly among the legs; after every step the columns are projected
    back onto the fiber.

    Raises
    ------
    StepSizeError
        If the integration blows up.
    """
    if isinstance(steps, bool) or not isinstance(steps, (int, np.integer)) or steps < 1:
        raise ValueError("steps must be a positive integer.")
    start = path.point(0.0)
    source = fiber_frame(start)
    V = source.columns.copy()
    legs = path.legs
    per_leg = max(1, steps // len(legs))
    for t0, t1 in legs:
        h = (t1 - t0) / per_leg
        # stay inside the leg so its own generator is used at the end point
        inner = h * 1e-12
        for k in range(per_leg):
            t = t0 + k * h
            k1 = path.derivative(t + inner) @ V
            k2 = path.derivative(t + h / 2) @ (V + h / 2 * k1)
            k3 = path.derivative(t + h / 2) @ (V + h / 2 * k2)
            k4 = path.derivative(t + h - inner) @ (V + h * k3)
            V = V + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            V = path.matrix_at(t + h - inner) @ V
            if not np.all(np.isfinite(V)) or np.linalg.norm(V) > 1e6:
                raise StepSizeError("ODE transport diverged.", step=k, size=h)
    end = path.point(1.0)
    target = fiber_frame(end)
    return PropagatorMap(source, target, target.coordinates(V))


def holonomy_phase(transport):
    """
    arg det of a loop transport, in (-π, π].

    Warns
    -----
    UserWarning
        If the determinant is nearly zero and the phase is ill-defined.
    """
    determinant = np.linalg.det(transport.matrix)
    if abs(determinant) < DEGENERATE_SINGULAR_VALUE:
        warnings.warn("Transport determinant is nearly zero; phase is unreliable.", UserWarning)
    return float(np.angle(determinant))


def geodesic_generator(qa, qb):
    """
    X = ½·log((I − 2q_b)(I − 2q_a)), so that e^{X} q_a e^{-X} = q_b along a geodesic.

    Raises
    ------
    ContractViolation
        If either point is not Hermitian or the geodesic is not unique.
    """
    _same_shape(qa, qb)
    if not (qa.is_hermitian and qb.is_hermitian):
        raise ContractViolation("Geodesics are defined between Hermitian points.")
    d = qa.dim
    rotation = (np.eye(d) - 2 * qb.matrix) @ (np.eye(d) - 2 * qa.matrix)
    if np.min(np.abs(np.linalg.eigvals(rotation) + 1)) < 1e-8:
        raise ContractViolation("Points are at maximal distance; the geodesic is not unique.")
    return 0.5 * scipy.linalg.logm(rotation)


def bloch_point(x, y, z):
    """Rank-one projection ½(I + xσ1 + yσ2 + zσ3) for a unit Bloch vector."""
    matrix = 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])
    return ProjectionPoint(matrix, 1)


def octant_loop(steps):
    """Geodesic triangle north pole → (1,0,0) → (0,1,0) → north pole, enclosing solid angle π/2."""
    vertices = [
        bloch_point(0, 0, 1),
        bloch_point(1, 0, 0),
        bloch_point(0, 1, 0),
        bloch_point(0, 0, 1),
    ]
    return PathSpec.piecewise_geodesic(vertices, steps)


def cone_loop(steps, angle=np.pi / 3):
    """
    One full rotation of the north pole about an axis tilted by `angle` from z.

    The loop bounds a spherical cap of solid angle 2π(1 − cos angle), so the
    holonomy phase has modulus π(1 − cos angle) for angles up to π/2.
    """
    axis = np.array(
        [[np.cos(angle), np.sin(angle)], [np.sin(angle), -np.cos(angle)]],
        dtype=np.complex128,
    )
    return PathSpec.unitary_flow(bloch_point(0, 0, 1), -1j * np.pi * axis, steps)


def coherent_section(Psi):
    """
    ψ_Ψ(q) = qΨ.

    Raises
    ------
    ValueError
        If Ψ is zero.
    """
    Psi = np.asarray(Psi, dtype=np.complex128).ravel()
    if not np.any(Psi):
        raise ValueError("Coherent sections need a nonzero vector.")
    return SectionSample(lambda q: q @ Psi, vector=Psi)


def unitary_equivalence_residuals(Psi1, Psi2, N, rng, rank=1):
    """
    Check Ψ ↦ ψ_Ψ against its inverse and the inner product on one Haar sample.

    Returns
    -------
    UnitaryEquivalenceResult
        ‖(d/n)·E[qΨ1] − Ψ1‖ and |(d/n)·E[⟨qΨ1, qΨ2⟩] − ⟨Ψ1, Ψ2⟩|, each with its bound.
    """
    Psi1 = np.asarray(Psi1, dtype=np.complex128).ravel()
    Psi2 = np.asarray(Psi2, dtype=np.complex128).ravel()
    if Psi1.shape != Psi2.shape:
        raise DimensionError("Vectors must have the same length.")
    d = Psi1.shape[0]
    samples = draw_samples(CycleSampler.haar(d, rank), N, rng)
    vector, vector_bound = cycle_average(samples, None, None, lambda points: points @ Psi1)
    inner, inner_bound = cycle_average(
        samples,
        None,
        None,
        lambda points: np.einsum("ki,ki->k", np.conj(points @ Psi1), points @ Psi2),
    )
    reconstruction = float(np.linalg.norm(vector - Psi1))
    inner_residual = abs(complex(inner) - complex(np.vdot(Psi1, Psi2)))
    return UnitaryEquivalenceResult(
        MonteCarloResidual(
            reconstruction, vector_bound, "PASS" if reconstruction <= vector_bound else "FAIL"
        ),
        MonteCarloResidual(
            inner_residual, inner_bound, "PASS" if inner_residual <= inner_bound else "FAIL"
        ),
    )


def reproducing_projection(section, sampler, N, rng):
    """
    (P̂ψ)(q) = ∫ ψ(q')P(q', q) = q·∫ψ(q'), returned as the coherent section of ∫ψ.

    The CLT bound of the integral is attached as ``bound``. Coherent sections
    are fixed points and P̂∘P̂ = P̂, both within the Monte Carlo bounds.
    """
    vector, bound = cycle_average(sampler, N, rng, section.batch)
    vector = np.asarray(vector, dtype=np.complex128)
    return SectionSample(lambda q: q @ vector, vector=vector, bound=bound)


def kostant_souriau_residual(M, Psi, q, fd_step=1e-4):
    """
    ‖ψ_{MΨ}(q) − (i∇_{X}ψ_Ψ + ⟨M⟩ψ_Ψ)(q)‖ with X the Hamiltonian field of ⟨M⟩.

    The covariant derivative is a central difference of q(t)Ψ along the
    retraction in direction X minus the vertical part X·ψ(q). For n = 1 the
    residual is the finite-difference error; for n > 1 it equals
    ‖qMqΨ − τ(qM)qΨ‖ and is generically of order one.

    Raises
    ------
    ContractViolation
        If q is not Hermitian.
    """
    if not q.is_hermitian:
        raise ContractViolation("Kostant–Souriau check needs a Hermitian point.")
    M = as_complex_matrix(M, "M")
    Psi = np.asarray(Psi, dtype=np.complex128).ravel()
    X = TangentVector(q, 1j * (M @ q.matrix - q.matrix @ M))
    forward = retract(q, X, fd_step).matrix @ Psi
    backward = retract(q, X, -fd_step).matrix @ Psi
    psi = q.matrix @ Psi
    covariant = (forward - backward) / (2 * fd_step) - X.matrix @ psi
    rhs = 1j * covariant + q.tau(M) * psi
    lhs = q.matrix @ M @ Psi
    return float(np.linalg.norm(lhs - rhs))


def _points(sampler, N, rng):
    for points, weights in sampler.iter_chunks(N, rng):
        for matrix, weight in zip(points, weights):
            yield ProjectionPoint(matrix, sampler.rank), weight


def axiom_check(kernel, x, sampler, N, rng):
    """
    Evaluate the four propagator conditions for a black-box kernel on samples.

    Conditions, by name:

    - ``diagonal_identity``: kernel(y, y) is the identity at x and at the sample points.
    - ``square_integrable``: (d/n)·E[‖kernel(x, y)‖²/n] is finite.
    - ``idempotency``: (d/n)·E[kernel(y, x)∘kernel(x, y)] = kernel(x, x) within the CLT bound.
    - ``separation``: the sections of fiber vectors at x and at a second point y
      span more than n dimensions on the samples, so no section issued from x
      coincides with all sections issued from y.

    Returns
    -------
    AxiomReport
    """
    n = x.rank
    sample_points = []
    diagonal = float(np.linalg.norm(kernel(x, x).matrix - np.eye(n)))
    loop_values = []
    norms = []
    for y, _ in _points(sampler, N, rng):
        forward = kernel(x, y)
        loop_values.append(kernel(y, x).matrix @ forward.matrix)
        norms.append(np.linalg.norm(forward.matrix) ** 2 / n)
        if len(sample_points) < AXIOM_WITNESSES:
            sample_points.append(y)
            diagonal = max(diagonal, float(np.linalg.norm(kernel(y, y).matrix - np.eye(n))))
    mass = sampler.total_mass
    loops = np.array(loop_values)
    loop_mean = mass * loops.mean(axis=0)
    loop_variance = np.maximum(
        mass**2 * np.mean(np.abs(loops) ** 2, axis=0) - np.abs(loop_mean) ** 2, 0.0
    )
    loop_bound = CLT_SIGMAS * float(np.sqrt(loop_variance.sum() / len(loops)))
    idempotency = float(np.linalg.norm(loop_mean - kernel(x, x).matrix))
    density = mass * float(np.mean(norms))

    other = sample_points[0]
    columns = []
    for origin in (x, other):
        for j in range(n):
            values = []
            for y in sample_points[1:] + [x, other]:
                image = kernel(origin, y)
                values.append(image.target.columns @ image.matrix[:, j])
            columns.append(np.concatenate(values))
    singular_values = np.linalg.svd(np.array(columns).T, compute_uv=False)
    # rank of the section span is dim(im x + im y), above n unless the images agree
    separation = float(singular_values[n] / singular_values[0])

    residuals = {
        "diagonal_identity": diagonal,
        "square_integrable": density,
        "idempotency": idempotency,
        "separation": separation,
    }
    passed = {
        "diagonal_identity": diagonal <= DIAGONAL_TOL,
        "square_integrable": bool(np.isfinite(density)),
        "idempotency": idempotency <= max(loop_bound, DIAGONAL_TOL),
        "separation": separation > SEPARATION_FLOOR,
    }
    return AxiomReport(residuals, passed)


def reconstruct_point_from_propagator(kernel, x, sampler, N, rng):
    """
    Rebuild q(x) from a kernel alone: (q(x)ψ)(y) = ψ(x)·kernel(x, y).

    Column j of the result is the vector whose coherent section is
    y ↦ x e_j transported by the kernel, recovered by the reconstruction
    integral (d/n)·E[ψ(y)]. With the model propagator it returns x.

    Returns
    -------
    Reconstruction
        The operator, its CLT bound, and the axiom report of the kernel.
    """
    axioms = axiom_check(kernel, x, sampler, max(N // 10, AXIOM_WITNESSES + 1), rng)
    source = kernel(x, x).source
    coordinates = source.coordinates(x.matrix)

    def integrand(points):
        values = []
        for matrix in points:
            image = kernel(x, ProjectionPoint(matrix, sampler.rank))
            values.append(image.target.columns @ image.matrix @ coordinates)
        return np.array(values)

    operator, bound = cycle_average(sampler, N, rng, integrand)
    return Reconstruction(np.asarray(operator), bound, axioms)


def reconstructed_three_point(kernel, points, sampler, N, rng):
    """
    Δ computed from reconstructed operators, alongside the direct value.

    Returns
    -------
    tuple
        (reconstructed Δ, direct Δ, combined CLT bound).
    """
    if len(points) != 3:
        raise ValueError("Three points are needed for Δ.")
    rebuilt = [reconstruct_point_from_propagator(kernel, p, sampler, N, rng) for p in points]
    n = points[0].rank
    value = _delta(*(r.operator for r in rebuilt), n)
    scale = max(1.0, max(float(np.linalg.norm(r.operator)) for r in rebuilt)) ** 2
    bound = scale * sum(r.bound for r in rebuilt) / n
    return value, three_point(*points), bound


def _covariant_derivative(q, direction, v0, h):
    forward = retract(q, direction, h).matrix @ v0
    backward = retract(q, direction, -h).matrix @ v0
    return (forward - backward) / (2 * h) - direction.matrix @ (q.matrix @ v0)


def polarization_residual(q0, v0, q, w, which, h=1e-4):
    """
    Norm of the covariant derivative of s(p) = v0·P(q0, p) along a polarized direction at q.

    ``which`` selects the polarization: "I" uses w + i·Iw and "J" uses
    w − i·Jw (both complexified, so the derivative is ∇_w s ± i∇_{·}s), while
    "K" uses the real direction (1 − K)w.

    Raises
    ------
    ContractViolation
        If v0 is not in the fiber over q0 or w is not based at q.
    """
    v0 = np.asarray(v0, dtype=np.complex128).ravel()
    if np.linalg.norm(q0.matrix @ v0 - v0) > FIBER_TOL * max(1.0, float(np.linalg.norm(v0))):
        raise ContractViolation("v0 must lie in the fiber over q0.")
    if w.base is not q and not np.allclose(w.base.matrix, q.matrix, atol=CONSTRUCTION_TOL):
        raise ContractViolation("Direction is not based at q.")
    base = _covariant_derivative(q, w, v0, h)
    if which == "I":
        value = base + 1j * _covariant_derivative(q, apply_I(w), v0, h)
    elif which == "J":
        value = base - 1j * _covariant_derivative(q, apply_J(w), v0, h)
    elif which == "K":
        value = _covariant_derivative(q, w - apply_K(w), v0, h)
    else:
        raise ValueError(f"which must be 'I', 'J' or 'K', got {which!r}.")
    return float(np.linalg.norm(value))


def probability_density_residual(x, N, rng):
    """
    |(d/n)·E_Haar[τ(P(x, y)P(x, y)*)] − 1| for a Hermitian point x.

    Raises
    ------
    ContractViolation
        If x is not Hermitian.
    """
    if not x.is_hermitian:
        raise ContractViolation("The density identity holds for Hermitian x.")
    F = fiber_frame(x).columns
    sampler = CycleSampler.haar(x.dim, x.rank)

    def integrand(points):
        images = points @ F
        return np.sum(np.abs(images) ** 2, axis=(1, 2)) / x.rank

    total, bound = cycle_average(sampler, N, rng, integrand)
    residual = abs(float(np.real(total)) - 1.0)
    return MonteCarloResidual(residual, bound, "PASS" if residual <= bound else "FAIL")


def hermitian_propagator_residual(x, y):
    """‖P(x, y) − P(y, x)*‖ in canonical frames; zero on the zero section."""
    return float(np.linalg.norm(propagate(x, y).matrix - dagger(propagate(y, x).matrix)))
