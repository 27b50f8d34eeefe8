"""Third-order tensors, their unfoldings, and CPD factor sets.

A Tensor3 is a 3-D ``numpy.ndarray`` of shape (I, J, K). Flat entry storage
(``tensor_entries``) puts index i fastest, then j, then k.
"""
import logging
from dataclasses import dataclass
from typing import Any, Sequence, Tuple

import numpy as np

from .field_linalg import (
    DEFAULT_TOLERANCE,
    FieldMatrix,
    ScalarField,
    TolLike,
    as_field_matrix,
    common_field,
    field_of,
    rel_threshold,
)
from .exceptions import DimensionError

logger = logging.getLogger(__name__)

Tensor3 = np.ndarray


def as_tensor3(values: Any) -> Tensor3:
    T = np.asarray(values)
    if T.ndim != 3 or T.size == 0:
        raise DimensionError(f"Expected a nonempty third-order tensor, got shape {T.shape}")
    return np.ascontiguousarray(T, dtype=field_of(T).dtype)


@dataclass(frozen=True, eq=False)
class FactorSet:
    """Factor matrices of T = sum_r a_r o b_r o c_r.

    All three share the column count R and one scalar field. ``sfs`` marks the
    symmetric-frontal-slice case, where B is A.
    """

    A: FieldMatrix
    B: FieldMatrix
    C: FieldMatrix
    sfs: bool = False

    def __post_init__(self) -> None:
        field = common_field(self.A, self.B, self.C)
        A = as_field_matrix(self.A, field)
        B = as_field_matrix(self.B, field)
        C = as_field_matrix(self.C, field)
        if not A.shape[1] == B.shape[1] == C.shape[1]:
            raise DimensionError(
                f"Factor matrices need equal column counts, got {A.shape[1]}, {B.shape[1]}, {C.shape[1]}"
            )
        if self.sfs and (A.shape != B.shape or not np.array_equal(A, B)):
            raise DimensionError("A symmetric-frontal-slice factor set needs B identical to A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", A if self.sfs else B)
        object.__setattr__(self, "C", C)

    @classmethod
    def symmetric(cls, A: Any, C: Any) -> "FactorSet":
        A = np.asarray(A)
        return cls(A=A, B=A, C=C, sfs=True)

    @property
    def rank(self) -> int:
        return self.A.shape[1]

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])

    @property
    def field(self) -> ScalarField:
        return field_of(self.A)

    def permuted(self, permutation: Sequence[int]) -> "FactorSet":
        p = list(permutation)
        if sorted(p) != list(range(self.rank)):
            raise DimensionError(f"{p} is not a permutation of 0..{self.rank - 1}")
        return FactorSet(self.A[:, p], self.B[:, p], self.C[:, p], sfs=self.sfs)


def from_factors(factors: FactorSet) -> Tensor3:
    return np.einsum("ir,jr,kr->ijk", factors.A, factors.B, factors.C)


def _check_mode(mode: int) -> None:
    if mode not in (1, 2, 3):
        raise DimensionError(f"Mode must be 1, 2 or 3, got {mode}")


def unfold(T: Tensor3, mode: int) -> FieldMatrix:
    """Matrix unfolding with

    mode 1: I x KJ, equals A (C kr B)^T
    mode 2: J x IK, equals B (A kr C)^T
    mode 3: K x JI, equals C (B kr A)^T
    where kr is the Khatri-Rao product.
    """
    T = as_tensor3(T)
    _check_mode(mode)
    I, J, K = T.shape
    if mode == 1:
        return T.transpose(0, 2, 1).reshape(I, K * J)
    if mode == 2:
        return T.transpose(1, 0, 2).reshape(J, I * K)
    return T.transpose(2, 1, 0).reshape(K, J * I)


def fold(X: FieldMatrix, mode: int, dims: Tuple[int, int, int]) -> Tensor3:
    """Inverse of ``unfold``."""
    _check_mode(mode)
    I, J, K = dims
    X = np.asarray(X)
    if mode == 1:
        return X.reshape(I, K, J).transpose(0, 2, 1)
    if mode == 2:
        return X.reshape(J, I, K).transpose(1, 0, 2)
    return X.reshape(K, J, I).transpose(2, 1, 0)


def frontal_slice(T: Tensor3, k: int) -> FieldMatrix:
    """Slice T[:, :, k], with k counted from 1 up to K."""
    T = as_tensor3(T)
    K = T.shape[2]
    if not 1 <= k <= K:
        raise DimensionError(f"Frontal slice index {k} outside 1..{K}")
    return T[:, :, k - 1].copy()


def is_sfs(T: Tensor3, tol: TolLike = None) -> bool:
    """Whether every frontal slice S satisfies ||S - S^T||_F <= tol * ||S||_F."""
    T = as_tensor3(T)
    if T.shape[0] != T.shape[1]:
        return False
    rel = rel_threshold(tol if tol is not None else DEFAULT_TOLERANCE)
    skew = np.linalg.norm(T - T.transpose(1, 0, 2), axis=(0, 1))
    size = np.linalg.norm(T, axis=(0, 1))
    return bool(np.all(skew <= rel * size))


def tensor_entries(T: Tensor3) -> np.ndarray:
    return as_tensor3(T).ravel(order="F")


def tensor_from_entries(entries: Any, dims: Tuple[int, int, int]) -> Tensor3:
    flat = np.asarray(entries).ravel()
    I, J, K = dims
    if min(dims) < 1 or flat.size != I * J * K:
        raise DimensionError(f"{flat.size} entries cannot fill a {I}x{J}x{K} tensor")
    return flat.reshape((I, J, K), order="F")
