"""
Closed-form examples: the flat model on C² ≅ R⁴ with its Gaussian kernel,
the complexified sphere with its sphere and disk kernels, and the
anticommuting structure J′ on T*P¹.

Every continued formula replaces conj(z) by an independent coordinate and
reduces to the real formula on the real locus.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from grassmann_quantization.exceptions import (
    ChartError,
    ContractViolation,
    QuadratureDomainError,
)
from grassmann_quantization.grassmann_model import ProjectionPoint, TangentVector
from grassmann_quantization.matrix_kernel import dagger
from grassmann_quantization.quantization_maps import CycleSampler

LOCUS_TOL = 1e-12
CONSTRAINT_TOL = 1e-10
CHART_TOL = 1e-14
FLAT_IMAGINARY_LIMIT = 3.0
DENOMINATOR_FLOOR = 1e-12

SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)

FLAT_SLICES = {
    # slice name: (coordinates that vanish, polarized direction in (x1, x2, y1, y2))
    "kahler": ((1, 3), np.array([1, 0, 1j, 0])),
    "real_polarized": ((1, 2), np.array([1, 0, 0, 1], dtype=np.complex128)),
}


@dataclass(frozen=True)
class FlatPoint:
    """
    Point of C² ≅ R⁴ in continued coordinates (z, z̄) with Planck constant ħ.

    With a = x1 + i·x2 and b = y1 + i·y2, z = a + i·b and z̄ = a − i·b; on
    the real locus x2 = y2 = 0 the two are complex conjugates.
    """

    z: complex
    zbar: complex
    hbar: float = 0.5

    def __post_init__(self):
        if not isinstance(self.hbar, (int, float)):
            raise TypeError("hbar must be a real number.")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive.")
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(self, "zbar", complex(self.zbar))

    @classmethod
    def from_coordinates(cls, x1, x2, y1, y2, hbar=0.5):
        a = x1 + 1j * x2
        b = y1 + 1j * y2
        return cls(a + 1j * b, a - 1j * b, hbar)

    def coordinates(self):
        a = (self.z + self.zbar) / 2
        b = (self.z - self.zbar) / 2j
        return np.array([a.real, a.imag, b.real, b.imag])

    @property
    def on_real_locus(self):
        x = self.coordinates()
        return bool(abs(x[1]) <= LOCUS_TOL and abs(x[3]) <= LOCUS_TOL)


@dataclass(frozen=True)
class SpherePoint:
    """
    Point of the complexified sphere x² + y² + z² = 1.

    Raises
    ------
    ContractViolation
        If the constraint residual exceeds 1e-10.
    """

    x: complex
    y: complex
    z: complex

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        residual = abs(self.x**2 + self.y**2 + self.z**2 - 1)
        if residual > CONSTRAINT_TOL:
            raise ContractViolation(
                f"Point is off the complexified sphere: |x²+y²+z²-1| = {residual:.3e}."
            )

    @classmethod
    def from_stereographic(cls, u, utilde):
        """Inverse of :meth:`stereographic`, continued in (u, ũ)."""
        denominator = 1 + u * utilde
        if abs(denominator) < CHART_TOL:
            raise ChartError("Stereographic pair lies at the pole of the chart.")
        x = (u + utilde) / denominator
        y = (u - utilde) / (1j * denominator)
        z = (1 - u * utilde) / denominator
        return cls(x, y, z)

    @property
    def vector(self):
        return np.array([self.x, self.y, self.z])

    @property
    def on_real_locus(self):
        return bool(np.max(np.abs(self.vector.imag)) <= LOCUS_TOL)

    @property
    def on_disk_locus(self):
        return bool(
            abs(self.x.real) <= LOCUS_TOL
            and abs(self.y.real) <= LOCUS_TOL
            and abs(self.z.imag) <= LOCUS_TOL
            and self.z.real >= 1 - LOCUS_TOL
        )

    def stereographic(self):
        """(u, ũ) = ((x + iy)/(1 + z), (x − iy)/(1 + z))."""
        if abs(1 + self.z) < CHART_TOL:
            raise ChartError("The south pole has no stereographic coordinate.")
        return (self.x + 1j * self.y) / (1 + self.z), (self.x - 1j * self.y) / (1 + self.z)

    def conjugate(self):
        return SpherePoint(np.conj(self.x), np.conj(self.y), np.conj(self.z))


@dataclass(frozen=True, eq=False)
class TessarineFrame:
    """Integer matrices of I, J, K and J′ on the basis (∂x1, ∂x2, ∂y1, ∂y2); columns are images."""

    I: np.ndarray
    J: np.ndarray
    K: np.ndarray
    Jprime: np.ndarray

    @classmethod
    def standard(cls):
        I = _frame({0: (1, 1), 1: (0, -1), 2: (3, 1), 3: (2, -1)})
        J = _frame({0: (2, 1), 1: (3, 1), 2: (0, -1), 3: (1, -1)})
        Jprime = _frame({0: (2, 1), 1: (3, -1), 2: (0, -1), 3: (1, 1)})
        return cls(I, J, I @ J, Jprime)


def _frame(images):
    M = np.zeros((4, 4), dtype=int)
    for source, (target, sign) in images.items():
        M[target, source] = sign
    return M


def flat_omega_matrix():
    """Ω = α ∧ β with α = dx1 + i·dx2, β = dy1 + i·dy2, as Ω(X, Y) = Xᵀ W Y."""
    alpha = np.array([1, 1j, 0, 0])
    beta = np.array([0, 0, 1, 1j])
    return np.outer(alpha, beta) - np.outer(beta, alpha)


def _same_hbar(p, w):
    if p.hbar != w.hbar:
        raise ValueError(f"Points carry different hbar: {p.hbar} vs {w.hbar}.")


def _flat_exponent(zp, zbar_p, zw, zbar_w, hbar):
    return -(zp * zbar_p + zw * zbar_w - 2 * zbar_p * zw) / (4 * hbar)


def flat_kernel(p, w):
    """
    P(p, w) = exp(−(z_p z̄_p + z_w z̄_w − 2 z̄_p z_w)/(4ħ)).

    Raises
    ------
    ValueError
        If the points carry different ħ.
    """
    _same_hbar(p, w)
    return complex(np.exp(_flat_exponent(p.z, p.zbar, w.z, w.zbar, p.hbar)))


def flat_idempotency_residual(p, w, order=64):
    """
    |∫_M P(p, u)P(u, w) dμ(u) − P(p, w)| over M = {x2 = y2 = 0}, dμ = du1du2/(2πħ).

    Computed with an order × order Gauss–Hermite grid after u = √(2ħ)·s, in
    log form.

    Raises
    ------
    QuadratureDomainError
        If an imaginary coordinate exceeds 3√ħ or the sum is not finite.
    """
    _same_hbar(p, w)
    hbar = p.hbar
    limit = FLAT_IMAGINARY_LIMIT * np.sqrt(hbar)
    for point in (p, w):
        x = point.coordinates()
        if abs(x[1]) > limit or abs(x[3]) > limit:
            raise QuadratureDomainError(
                f"Imaginary coordinates {x[1]:.3g}, {x[3]:.3g} exceed {limit:.3g}; "
                "the Gaussian decay of the integrand is lost."
            )
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    s1, s2 = np.meshgrid(nodes, nodes, indexing="ij")
    log_weights = np.log(weights)[:, None] + np.log(weights)[None, :]
    u = np.sqrt(2 * hbar) * (s1 + 1j * s2)
    ubar = np.conj(u)
    # the e^{-|s|²} factor is absorbed by the Hermite weights
    exponent = (
        -(p.z * p.zbar + w.z * w.zbar) / (4 * hbar)
        + (p.zbar * u + ubar * w.z) / (2 * hbar)
        + log_weights
    )
    integral = np.sum(np.exp(exponent)) / np.pi
    if not np.isfinite(integral):
        raise QuadratureDomainError("Flat idempotency quadrature overflowed.")
    return float(abs(integral - flat_kernel(p, w)))


def flat_connection_form(point, direction):
    """A(X) = (i/2ħ)(a·db(X) − b·da(X)) with a = x1 + i·x2, b = y1 + i·y2."""
    x = point.coordinates()
    a = x[0] + 1j * x[1]
    b = x[2] + 1j * x[3]
    da = direction[0] + 1j * direction[1]
    db = direction[2] + 1j * direction[3]
    return 1j / (2 * point.hbar) * (a * db - b * da)


def flat_polarization_residual(p0, w, slice_name, h=1e-4, direction=None):
    """
    |∇_X s(w)| for s(u) = P(p0, u), X the slice's polarized direction.

    ``kahler`` is the slice x2 = y2 = 0 with direction ∂x1 + i∂y1;
    ``real_polarized`` is x2 = y1 = 0 with ∂x1 + ∂y2. A complex `direction`
    in (x1, x2, y1, y2) components overrides the default.

    Raises
    ------
    ValueError
        For an unknown slice name.
    ContractViolation
        If `w` is not on the slice.
    """
    if slice_name not in FLAT_SLICES:
        raise ValueError(f"Unknown slice '{slice_name}'; expected one of {sorted(FLAT_SLICES)}.")
    vanishing, default_direction = FLAT_SLICES[slice_name]
    coordinates = w.coordinates()
    if any(abs(coordinates[k]) > LOCUS_TOL for k in vanishing):
        raise ContractViolation(f"Point is not on the {slice_name} slice.")
    direction = default_direction if direction is None else np.asarray(direction, dtype=np.complex128)

    def section(x):
        return flat_kernel(p0, FlatPoint.from_coordinates(*x, hbar=w.hbar))

    derivative = 0j
    for k in range(4):
        if direction[k] == 0:
            continue
        step = np.zeros(4)
        step[k] = h
        partial = (section(coordinates + step) - section(coordinates - step)) / (2 * h)
        derivative += direction[k] * partial
    covariant = derivative - flat_connection_form(w, direction) * section(coordinates)
    return float(abs(covariant))


def tessarine_flat_check():
    """
    Exact identities of the flat tessarine frames and Ω = d(x1 + ix2) ∧ d(y1 + iy2).

    Returns
    -------
    dict
        Residual of each named identity; all are exactly zero.
    """
    frame = TessarineFrame.standard()
    I, J, K, Jp = frame.I, frame.J, frame.K, frame.Jprime
    W = flat_omega_matrix()
    identity = np.eye(4, dtype=int)

    def pulled_back(T):
        return T.T @ W @ T

    kahler = W[np.ix_([0, 2], [0, 2])]
    real_polarized = W[np.ix_([0, 3], [0, 3])]
    return {
        "I_squared": float(np.abs(I @ I + identity).max()),
        "J_squared": float(np.abs(J @ J + identity).max()),
        "K_squared": float(np.abs(K @ K - identity).max()),
        "IJ_commute": float(np.abs(I @ J - J @ I).max()),
        "K_is_IJ": float(np.abs(K - I @ J).max()),
        "omega_J_invariant": float(np.abs(pulled_back(J) - W).max()),
        "omega_K_reversed": float(np.abs(pulled_back(K) + W).max()),
        "omega_dx1_dy1": float(abs(W[0, 2] - 1)),
        "kahler_slice_lagrangian": float(np.abs(kahler.imag).max()),
        "kahler_slice_nondegenerate": float(abs(abs(np.linalg.det(kahler.real)) - 1)),
        "real_slice_lagrangian": float(np.abs(real_polarized.real).max()),
        "real_slice_nondegenerate": float(abs(abs(np.linalg.det(real_polarized.imag)) - 1)),
        "Jprime_squared": float(np.abs(Jp @ Jp + identity).max()),
        "I_Jprime_anticommute": float(np.abs(I @ Jp + Jp @ I).max()),
    }


def sphere_projection(p):
    """q = ½(I + xσ1 + yσ2 + zσ3); the constraint makes q idempotent with trace 1."""
    q = 0.5 * (np.eye(2) + p.x * SIGMA[0] + p.y * SIGMA[1] + p.z * SIGMA[2])
    return ProjectionPoint(q, 1)


def sphere_J(p, t):
    """
    Complexified cross product (x, y, z) × (a, b, c) on the tangent plane.

    Raises
    ------
    ContractViolation
        If x·a + y·b + z·c differs from zero by more than 1e-10.
    """
    t = np.asarray(t, dtype=np.complex128)
    if abs(np.dot(p.vector, t)) > CONSTRAINT_TOL:
        raise ContractViolation("Vector is not tangent to the complexified sphere.")
    return np.cross(p.vector, t)


def _chart_ratio(numerator, denominator):
    if abs(denominator) < CHART_TOL:
        raise ChartError("Kernel denominator vanishes at this chart point.")
    return numerator / denominator


def sphere_kernel(z1, z2):
    """P(z1, z2) = (1 + ũ1·u2)/(1 + ũ1·u1) for stereographic pairs (u, ũ)."""
    u1, ut1 = z1
    u2, _ = z2
    return complex(_chart_ratio(1 + ut1 * u2, 1 + ut1 * u1))


def disk_kernel(z1, z2):
    """P_D(z1, z2) = (1 − ṽ1·v2)/(1 − ṽ1·v1) for disk pairs (v, ṽ)."""
    v1, vt1 = z1
    v2, _ = z2
    return complex(_chart_ratio(1 - vt1 * v2, 1 - vt1 * v1))


def sphere_quadrature(order=16):
    """
    Gauss–Legendre in cos θ times a 2·order-point trapezoid in φ.

    The measure is twice the normalized area measure, so the weights sum to 2.

    Returns
    -------
    tuple
        (u, weights) with u the stereographic coordinate of each node.
    """
    cos_theta, legendre_weights = np.polynomial.legendre.leggauss(order)
    phi = 2 * np.pi * np.arange(2 * order) / (2 * order)
    c, f = np.meshgrid(cos_theta, phi, indexing="ij")
    s = np.sqrt(1 - c**2)
    u = s * np.exp(1j * f) / (1 + c)
    weights = np.outer(legendre_weights, np.full(phi.size, 1.0 / phi.size))
    return u.ravel(), weights.ravel()


def sphere_cycle(order=16):
    """The sphere quadrature as a fixed-quadrature sampler of rank-one projections."""
    u, weights = sphere_quadrature(order)
    points = np.array(
        [sphere_projection(SpherePoint.from_stereographic(a, np.conj(a))).matrix for a in u]
    )
    return CycleSampler.quadrature(points, weights, 1)


def sphere_idempotency_residual(z1, z2, order=16):
    """|Σ w·P(z1, u)P(u, z2) − P(z1, z2)| over the real sphere."""
    u, weights = sphere_quadrature(order)
    total = 0j
    for a, weight in zip(u, weights):
        node = (a, np.conj(a))
        total += weight * sphere_kernel(z1, node) * sphere_kernel(node, z2)
    return float(abs(total - sphere_kernel(z1, z2)))


@dataclass(frozen=True)
class DeltaRecord:
    delta_sphere: complex
    delta_disk_conj: complex
    product: complex
    factor: complex = -1j
    orientation: str = "forward"
    conjugation: str = "swap"


def _cycle(kernel, pairs):
    a, b, c = pairs
    return kernel(a, b) * kernel(b, c) * kernel(c, a)


def delta_product_explorer(p1, p2, p3, factor=-1j, orientation="forward", conjugation="swap"):
    """
    Δ_{S²}, the conjugate-continued disk Δ̄_D and their product, without asserting a value.

    Parameters
    ----------
    p1, p2, p3 : SpherePoint
    factor : complex
        Disk coordinates are v = factor·u and ṽ = factor·ũ.
    orientation : {"forward", "reversed"}
        Direction of the disk cycle.
    conjugation : {"swap", "conjugate"}
        "swap" continues the conjugate by exchanging v and ṽ; "conjugate"
        takes the complex conjugate of Δ_D.

    Raises
    ------
    ChartError
        At a pole of either chart.
    """
    if orientation not in ("forward", "reversed"):
        raise ValueError("orientation must be 'forward' or 'reversed'.")
    if conjugation not in ("swap", "conjugate"):
        raise ValueError("conjugation must be 'swap' or 'conjugate'.")
    sphere_pairs = [p.stereographic() for p in (p1, p2, p3)]
    delta_sphere = _cycle(sphere_kernel, sphere_pairs)
    disk_pairs = [(factor * u, factor * ut) for u, ut in sphere_pairs]
    if orientation == "reversed":
        disk_pairs = disk_pairs[::-1]
    if conjugation == "swap":
        delta_disk_conj = _cycle(disk_kernel, [(vt, v) for v, vt in disk_pairs])
    else:
        delta_disk_conj = np.conj(_cycle(disk_kernel, disk_pairs))
    return DeltaRecord(
        complex(delta_sphere),
        complex(delta_disk_conj),
        complex(delta_sphere * delta_disk_conj),
        factor,
        orientation,
        conjugation,
    )


def delta_explorer_sweep(p1, p2, p3):
    """Every identification the explorer supports, one record each."""
    return [
        delta_product_explorer(p1, p2, p3, factor, orientation, conjugation)
        for factor, orientation, conjugation in itertools.product(
            (-1j, 1j), ("forward", "reversed"), ("swap", "conjugate")
        )
    ]


def _hyperkahler_denominator(q):
    if (q.dim, q.rank) != (2, 1):
        raise ValueError("The anticommuting structure is implemented on T*P¹ only (d=2, n=1).")
    value = 2 * float(np.real(np.trace(dagger(q.matrix) @ q.matrix))) - 1
    if value <= DENOMINATOR_FLOOR:
        warnings.warn(
            f"Hyperkähler denominator 2Tr(q†q) - 1 = {value:.3e} is not positive.",
            UserWarning,
        )
    return np.sqrt(value)


def hyperkahler_Jprime(q, v):
    """J′(A) = i[q, A†]/√(2Tr(q†q) − 1) on T*P¹; anticommutes with I."""
    A = dagger(v.matrix)
    value = 1j * (q.matrix @ A - A @ q.matrix) / _hyperkahler_denominator(q)
    return TangentVector(q, value)


def hyperkahler_metric(q, u, v):
    """Tr(A†B)/√(2Tr(q†q) − 1); the real part is positive definite."""
    return complex(np.trace(dagger(u.matrix) @ v.matrix)) / _hyperkahler_denominator(q)
