import numpy as np
import scipy.linalg

from grassmann_quantization.exceptions import DimensionError, RankDeficiencyError

RANK_CUTOFF = 1e-10


class RngState:
    """
    Deterministic random stream identified by a seed and a spawn key.

    Every stream is a Philox counter-based generator seeded from
    ``SeedSequence(seed, spawn_key=key)``, so the same (seed, key) pair always
    replays the same numbers. Workers get independent streams through
    :meth:`spawn`.

    Parameters
    ----------
    seed : int
        Non-negative 64-bit seed.
    key : tuple of int, optional
        Spawn key distinguishing sibling streams (default: root stream).

    Raises
    ------
    TypeError
        If `seed` is not an integer.
    ValueError
        If `seed` is negative or does not fit in 64 bits.
    """

    def __init__(self, seed, key=()):
        if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
            raise TypeError("seed must be an integer.")
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be a non-negative 64-bit integer.")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        self.counter = 0
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self._generator = np.random.Generator(np.random.Philox(sequence))

    def spawn(self, index):
        """Return the independent child stream number `index`."""
        return RngState(self.seed, self.key + (int(index),))

    def standard_normal(self, size):
        values = self._generator.standard_normal(size)
        self.counter += values.size
        return values

    def uniform(self, low=0.0, high=1.0, size=None):
        values = self._generator.uniform(low, high, size)
        self.counter += np.size(values)
        return values

    def __repr__(self):
        return f"RngState(seed={self.seed}, key={self.key}, counter={self.counter})"


def as_operator(M):
    """Unwrap objects exposing a ``matrix`` attribute (observables, points) into arrays."""
    return np.asarray(getattr(M, "matrix", M))


def as_complex_matrix(A, name="matrix"):
    """
    Validate and convert input into a finite 2-D complex array.

    Parameters
    ----------
    A : array_like
        Input matrix, or any object with a ``matrix`` attribute.
    name : str
        Name used in error messages.

    Returns
    -------
    numpy.ndarray
        A complex128 copy of `A`.

    Raises
    ------
    DimensionError
        If `A` is not two-dimensional.
    ValueError
        If `A` contains NaN or Inf entries.
    """
    array = np.array(as_operator(A), dtype=np.complex128)
    if array.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {array.shape}.")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite entries.")
    return array


def _require_square(A, name):
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}.")


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def hs_inner(A, B):
    """
    Hilbert–Schmidt inner product Tr(A†B).

    Parameters
    ----------
    A, B : array_like
        Matrices of the same shape.

    Returns
    -------
    complex
        The inner product, conjugate-linear in `A`.

    Raises
    ------
    DimensionError
        If the shapes differ.
    """
    A = as_complex_matrix(A, "A")
    B = as_complex_matrix(B, "B")
    if A.shape != B.shape:
        raise DimensionError(f"Shape mismatch in hs_inner: {A.shape} vs {B.shape}.")
    return complex(np.vdot(A, B))


def frobenius_norm(A):
    return float(np.linalg.norm(as_operator(A)))


def expm(A):
    """
    Matrix exponential.

    Delegates to ``scipy.linalg.expm``, a scaling-and-squaring algorithm with
    Padé approximants of degree up to 13, accurate to ~1e-15 relative for the
    norms used here.

    Raises
    ------
    DimensionError
        If `A` is not square.
    """
    A = as_complex_matrix(A, "A")
    _require_square(A, "A")
    return scipy.linalg.expm(A)


def orthonormal_frame(A, rank):
    """
    Orthonormal basis of the leading column space of `A`.

    Uses column-pivoted QR, a rank-revealing factorization, and fixes the
    phase gauge so the diagonal of R is real and positive. The output is
    therefore a deterministic function of `A`.

    Parameters
    ----------
    A : array_like
        Matrix of shape (d, k).
    rank : int
        Number of columns wanted.

    Returns
    -------
    numpy.ndarray
        A (d, rank) matrix V with V†V = I.

    Raises
    ------
    TypeError
        If `rank` is not an integer.
    ValueError
        If `rank` is not in [1, min(d, k)].
    RankDeficiencyError
        If the rank-th pivot falls below RANK_CUTOFF times the largest one.
    """
    A = as_complex_matrix(A, "A")
    if isinstance(rank, bool) or not isinstance(rank, (int, np.integer)):
        raise TypeError("rank must be an integer.")
    if rank < 1 or rank > min(A.shape):
        raise ValueError(f"rank must lie between 1 and {min(A.shape)}, got {rank}.")

    Q, R, _ = scipy.linalg.qr(A, mode="economic", pivoting=True)
    pivots = np.abs(np.diag(R))
    if pivots[0] == 0 or pivots[rank - 1] < RANK_CUTOFF * pivots[0]:
        raise RankDeficiencyError(
            f"Numerical rank is below the requested rank {rank}."
        )
    phases = np.diag(R)[:rank] / pivots[:rank]
    return Q[:, :rank] * phases


def numerical_rank(A):
    """Number of singular values above RANK_CUTOFF times the largest."""
    singular_values = np.linalg.svd(as_operator(A), compute_uv=False)
    if singular_values.size == 0 or singular_values[0] == 0:
        return 0
    return int(np.sum(singular_values > RANK_CUTOFF * singular_values[0]))


def gaussian_matrix(rng, rows, cols):
    """
    Matrix of i.i.d. standard complex normal entries (E|z|^2 = 1).

    Parameters
    ----------
    rng : RngState
        Stream to draw from; it is advanced.
    rows, cols : int
        Shape of the output.

    Returns
    -------
    numpy.ndarray
        A (rows, cols) complex matrix.
    """
    return gaussian_batch(rng, None, rows, cols)


def gaussian_batch(rng, count, rows, cols):
    """Stack of `count` Ginibre matrices; ``count=None`` returns a single matrix."""
    if not isinstance(rng, RngState):
        raise TypeError("rng must be an RngState.")
    shape = (rows, cols) if count is None else (count, rows, cols)
    real = rng.standard_normal(shape)
    imag = rng.standard_normal(shape)
    return (real + 1j * imag) / np.sqrt(2.0)


def haar_unitary(rng, d):
    """Haar-distributed d×d unitary: QR of a Ginibre matrix with R's phases divided out."""
    Z = gaussian_matrix(rng, d, d)
    Q, R = scipy.linalg.qr(Z)
    diagonal = np.diag(R)
    return Q * (diagonal / np.abs(diagonal))


def random_invertible(rng, d, max_condition=10.0):
    """Random d×d matrix with singular values in [1, max_condition]."""
    U = haar_unitary(rng, d)
    W = haar_unitary(rng, d)
    singular_values = rng.uniform(1.0, max_condition, d)
    singular_values[0] = 1.0
    singular_values[-1] = max_condition
    return (U * singular_values) @ W


def matrix_unit(d, i, j):
    E = np.zeros((d, d), dtype=np.complex128)
    E[i, j] = 1.0
    return E


def commutator(A, B):
    return A @ B - B @ A
