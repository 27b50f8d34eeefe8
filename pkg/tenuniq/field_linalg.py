"""Dense linear algebra over the real and complex fields.

A FieldMatrix is a 2-D ``numpy.ndarray``; its dtype is the field tag
(``float64`` for real, ``complex128`` for complex, which stores every scalar
as an (re, im) pair of doubles). Transposes are plain transposes: nothing in
this module conjugates, because the decompositions are written A diag(l) B^T.
"""
import itertools
import logging
import math
from enum import Enum
from typing import Any, Iterable, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from .config import DEFAULT_RANK_TOL, KRANK_COLUMN_CAP
from .exceptions import DimensionError, KRankLimitError, NumericalError

logger = logging.getLogger(__name__)

FieldMatrix = np.ndarray

# Upper bound on scalars materialised at once when stacking submatrices.
_BATCH_SCALARS = 2_000_000


class ScalarField(str, Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self) -> type:
        return np.float64 if self is ScalarField.REAL else np.complex128


class RankTolerance(BaseModel):
    """Relative singular-value threshold used for every numerical rank."""

    model_config = ConfigDict(frozen=True)

    rel_threshold: float = Field(default=DEFAULT_RANK_TOL, ge=0.0, lt=1.0)


DEFAULT_TOLERANCE = RankTolerance()

TolLike = Union[RankTolerance, float, None]


def rel_threshold(tol: TolLike) -> float:
    if tol is None:
        return DEFAULT_TOLERANCE.rel_threshold
    if isinstance(tol, RankTolerance):
        return tol.rel_threshold
    return RankTolerance(rel_threshold=float(tol)).rel_threshold


def field_of(values: Any) -> ScalarField:
    return ScalarField.COMPLEX if np.iscomplexobj(values) else ScalarField.REAL


def common_field(*arrays: Any) -> ScalarField:
    if any(np.iscomplexobj(a) for a in arrays):
        return ScalarField.COMPLEX
    return ScalarField.REAL


def as_field_matrix(values: Any, field: Optional[ScalarField] = None) -> FieldMatrix:
    """Validate ``values`` as a nonempty 2-D matrix and cast it to ``field``."""
    M = np.asarray(values)
    if M.ndim != 2 or M.size == 0:
        raise DimensionError(f"Expected a nonempty 2-D matrix, got shape {M.shape}")
    if field is None:
        field = field_of(M)
    if field is ScalarField.REAL and np.iscomplexobj(M):
        if np.any(M.imag != 0):
            raise DimensionError("Complex entries in a matrix tagged real")
        M = M.real
    return np.ascontiguousarray(M, dtype=field.dtype)


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for task ``key`` under master ``seed``.

    The same (seed, key) always yields the same stream, independent of the
    order in which tasks are scheduled.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def random_matrix(
    rng: np.random.Generator, rows: int, cols: int, field: ScalarField = ScalarField.REAL
) -> FieldMatrix:
    """i.i.d. standard Gaussian entries; independent real and imaginary parts."""
    M = rng.standard_normal((rows, cols))
    if field is ScalarField.COMPLEX:
        M = M + 1j * rng.standard_normal((rows, cols))
    return M


def encode_entries(values: Any) -> Any:
    """Nested lists for JSON; complex scalars become [re, im] pairs."""
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        return np.stack([arr.real, arr.imag], axis=-1).tolist()
    return arr.astype(np.float64).tolist()


def decode_entries(data: Any, field: ScalarField) -> np.ndarray:
    """Inverse of ``encode_entries``."""
    arr = np.asarray(data, dtype=np.float64)
    if field is ScalarField.COMPLEX:
        if arr.ndim == 0 or arr.shape[-1] != 2:
            raise DimensionError("Complex entries must be [re, im] pairs")
        return arr[..., 0] + 1j * arr[..., 1]
    return arr


def singular_values(M: FieldMatrix) -> np.ndarray:
    try:
        s = linalg.svdvals(M)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Singular value decomposition failed: {e}") from e
    if not np.all(np.isfinite(s)):
        raise NumericalError("Singular value decomposition returned non-finite values")
    return s


def rank(M: FieldMatrix, tol: TolLike = None, scale: Optional[float] = None) -> int:
    """Number of singular values above ``rel_threshold * reference``.

    ``reference`` is the largest singular value unless ``scale`` is given.
    The zero matrix has rank 0.
    """
    M = as_field_matrix(M)
    s = singular_values(M)
    reference = s[0] if scale is None else float(scale)
    if reference == 0.0:
        return 0
    return int(np.count_nonzero(s > rel_threshold(tol) * reference))


def _batched_svdvals(stack: np.ndarray) -> np.ndarray:
    try:
        s = np.linalg.svd(stack, compute_uv=False)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"Batched singular value decomposition failed: {e}") from e
    if not np.all(np.isfinite(s)):
        raise NumericalError("Batched singular value decomposition returned non-finite values")
    return s


def _all_subsets_independent(M: FieldMatrix, k: int, rel: float) -> bool:
    """True iff every k-column submatrix has rank k; stops at the first failure."""
    n_rows = M.shape[0]
    batch = max(1, _BATCH_SCALARS // (n_rows * k))
    combos = itertools.combinations(range(M.shape[1]), k)
    while True:
        chunk = list(itertools.islice(combos, batch))
        if not chunk:
            return True
        idx = np.asarray(chunk)
        stack = np.moveaxis(M[:, idx], 1, 0)
        s = _batched_svdvals(stack)
        dependent = s[:, -1] <= rel * s[:, 0]
        if np.any(dependent):
            first = chunk[int(np.argmax(dependent))]
            logger.debug(f"k-rank sweep: first dependent {k}-subset {first}")
            return False


def k_rank(M: FieldMatrix, tol: TolLike = None, column_cap: int = KRANK_COLUMN_CAP) -> int:
    """Kruskal rank: largest k such that every k columns are independent.

    Column subsets are enumerated exhaustively in lexicographic order. A matrix
    with a numerically zero column has k-rank 0.
    """
    M = as_field_matrix(M)
    n_cols = M.shape[1]
    if n_cols > column_cap:
        raise KRankLimitError(f"k-rank needs subset enumeration; {n_cols} columns exceed the cap of {column_cap}")
    rel = rel_threshold(tol)

    norms = np.linalg.norm(M, axis=0)
    largest = norms.max()
    if largest == 0.0 or np.any(norms <= rel * largest):
        return 0

    r = rank(M, tol)
    if r == n_cols:
        return n_cols
    # "all k-subsets independent" is monotone in k, so scan downward from the rank
    for k in range(r, 1, -1):
        if _all_subsets_independent(M, k, rel):
            return k
    return 1


def _index_sets(n: int, m: int) -> np.ndarray:
    return np.asarray(list(itertools.combinations(range(n), m)), dtype=np.intp)


def compound(M: FieldMatrix, m: int) -> FieldMatrix:
    """m-th compound matrix: all m x m minors, index sets in lexicographic order."""
    M = as_field_matrix(M)
    n_rows, n_cols = M.shape
    if not 1 <= m <= min(n_rows, n_cols):
        raise DimensionError(f"Compound order m={m} outside 1..{min(n_rows, n_cols)} for a {n_rows}x{n_cols} matrix")
    if m == 1:
        return M.copy()

    row_sets = _index_sets(n_rows, m)
    col_sets = _index_sets(n_cols, m)
    out = np.empty((len(row_sets), len(col_sets)), dtype=M.dtype)
    block = max(1, _BATCH_SCALARS // (len(col_sets) * m * m))
    for start in range(0, len(row_sets), block):
        rows = row_sets[start:start + block]
        minors = M[rows[:, None, :, None], col_sets[None, :, None, :]]
        try:
            out[start:start + block] = np.linalg.det(minors)
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"Determinant evaluation failed: {e}") from e
    return out


def khatri_rao(A: FieldMatrix, B: FieldMatrix) -> FieldMatrix:
    """Column-wise Kronecker product; row i*J + j is A[i] * B[j]."""
    A = as_field_matrix(A)
    B = as_field_matrix(B)
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"Khatri-Rao needs equal column counts, got {A.shape[1]} and {B.shape[1]}")
    return np.einsum("ir,jr->ijr", A, B).reshape(A.shape[0] * B.shape[0], A.shape[1])


def kronecker(A: FieldMatrix, B: FieldMatrix) -> FieldMatrix:
    return np.kron(as_field_matrix(A), as_field_matrix(B))


def least_squares(A: FieldMatrix, Y: FieldMatrix) -> FieldMatrix:
    """Minimum-norm minimiser of ||A X - Y||_F (SVD-based LAPACK gelsd)."""
    A = as_field_matrix(A)
    Y = np.asarray(Y)
    if A.shape[0] != Y.shape[0]:
        raise DimensionError(f"least_squares: A has {A.shape[0]} rows but Y has {Y.shape[0]}")
    try:
        X, _, _, _ = linalg.lstsq(A, Y, lapack_driver="gelsd")
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Least-squares solve failed: {e}") from e
    return X


def weight(values: Sequence[complex], tol: TolLike = None) -> int:
    """Number of entries with |v| > rel_threshold * max |v|."""
    mags = np.abs(np.asarray(values))
    if mags.size == 0 or mags.max() == 0.0:
        return 0
    return int(np.count_nonzero(mags > rel_threshold(tol) * mags.max()))


def binom(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


def column_norms(M: FieldMatrix) -> np.ndarray:
    return np.linalg.norm(np.asarray(M), axis=0)


def orthonormal_range(M: np.ndarray, tol: TolLike = None) -> np.ndarray:
    """Orthonormal basis of range(M) (columns), possibly with zero columns."""
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=M.dtype)
    try:
        U, s, _ = linalg.svd(M, full_matrices=False)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Range basis computation failed: {e}") from e
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((M.shape[0], 0), dtype=M.dtype)
    keep = s > rel_threshold(tol) * s[0]
    return U[:, keep]


def null_space_basis(M: np.ndarray, tol: TolLike = None) -> np.ndarray:
    """Orthonormal basis of the null space of M (columns)."""
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=M.dtype)
    try:
        _, s, Vh = linalg.svd(M, full_matrices=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Null space computation failed: {e}") from e
    reference = s[0] if s.size else 0.0
    r = 0 if reference == 0.0 else int(np.count_nonzero(s > rel_threshold(tol) * reference))
    return Vh[r:].conj().T


def stack_columns(columns: Iterable[np.ndarray]) -> np.ndarray:
    cols: List[np.ndarray] = [np.asarray(c) for c in columns]
    return np.stack(cols, axis=1)
