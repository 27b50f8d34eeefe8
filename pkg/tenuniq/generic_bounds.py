"""Closed-form generic-uniqueness rank bounds.

Every bound is evaluated by scanning R = 1..r_cap with exact integer
arithmetic. Radical inequalities of the form 2R <= P - sqrt(D) are checked as
P - 2R >= 0 and (P - 2R)^2 >= D. Unstructured bounds work on the ascending
sorted dimensions; symmetric-frontal-slice (SFS) bounds never permute I and K.
"""
import logging
from enum import Enum
from typing import Callable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import DEFAULT_R_CAP, LITERATURE_IJK_LIMIT
from .exceptions import DimensionError, FormDisagreementError
from .field_linalg import ScalarField, TolLike

logger = logging.getLogger(__name__)

BOTH_FIELDS = [ScalarField.REAL, ScalarField.COMPLEX]
COMPLEX_ONLY = [ScalarField.COMPLEX]


class BoundId(str, Enum):
    KRUSKAL_GENERIC = "KRUSKAL_GENERIC"
    LARGE_K_SECANT = "LARGE_K_SECANT"
    DIMENSION_COUNT = "DIMENSION_COUNT"
    POWER_OF_TWO = "POWER_OF_TWO"
    KRUSKAL_LARGE_K = "KRUSKAL_LARGE_K"
    KERNEL_CEILING = "KERNEL_CEILING"
    WM_GENERIC = "WM_GENERIC"
    WM_LARGE_K = "WM_LARGE_K"
    CPD_COMPOUND_MC = "CPD_COMPOUND_MC"
    KRUSKAL_SFS = "KRUSKAL_SFS"
    SFS_SMALL_I = "SFS_SMALL_I"
    SFS_UM_C = "SFS_UM_C"
    SFS_UM_A = "SFS_UM_A"
    SFS_COMPOUND_MC = "SFS_COMPOUND_MC"
    SFS_MONOTONE_CLOSURE = "SFS_MONOTONE_CLOSURE"


class FieldScope(str, Enum):
    REAL = "real"
    COMPLEX = "complex"
    BOTH = "both"


class ProblemDims(BaseModel):
    """Tensor dimensions. For SFS problems I = J and only (I, K) are free."""

    model_config = ConfigDict(frozen=True)

    I: int = Field(ge=1)
    J: int = Field(ge=1)
    K: int = Field(ge=1)
    sfs: bool = False

    @model_validator(mode="after")
    def _sfs_square(self) -> "ProblemDims":
        if self.sfs and self.I != self.J:
            raise ValueError(f"SFS dimensions need I = J, got I={self.I}, J={self.J}")
        return self

    @classmethod
    def unstructured(cls, I: int, J: int, K: int) -> "ProblemDims":
        return cls(I=I, J=J, K=K)

    @classmethod
    def symmetric(cls, I: int, K: int) -> "ProblemDims":
        return cls(I=I, J=I, K=K, sfs=True)

    def sorted_dims(self) -> Tuple[int, int, int]:
        return tuple(sorted((self.I, self.J, self.K)))  # type: ignore[return-value]

    def label(self) -> str:
        if self.sfs:
            return f"{self.I}x{self.K} (SFS)"
        return f"{self.I}x{self.J}x{self.K}"


class BoundEntry(BaseModel):
    bound_id: BoundId
    rank_set: List[int] = Field(default_factory=list)
    max_rank: int = 0
    literature_only: bool = False
    fields: List[ScalarField] = Field(default_factory=lambda: list(BOTH_FIELDS))
    method: str = "closed_form"
    reason: Optional[str] = None

    @model_validator(mode="after")
    def _consistent(self) -> "BoundEntry":
        if any(R < 1 for R in self.rank_set):
            raise ValueError("rank_set elements must be >= 1")
        expected = max(self.rank_set) if self.rank_set else 0
        if self.max_rank != expected:
            raise ValueError(f"max_rank {self.max_rank} inconsistent with rank_set (max {expected})")
        return self

    @property
    def min_rank(self) -> int:
        return min(self.rank_set) if self.rank_set else 0

    def applies_to(self, scope: FieldScope) -> bool:
        if scope is FieldScope.BOTH:
            return all(f in self.fields for f in BOTH_FIELDS)
        return ScalarField(scope.value) in self.fields


class BoundTable(BaseModel):
    dims: ProblemDims
    sorted_dims: Tuple[int, int, int]
    r_cap: int
    field: FieldScope = FieldScope.BOTH
    entries: List[BoundEntry]
    overall_max: int
    co_nonunique_from: Optional[int] = None
    notes: List[str] = Field(default_factory=list)

    def entry(self, bound_id: BoundId) -> BoundEntry:
        for e in self.entries:
            if e.bound_id is bound_id:
                return e
        raise KeyError(bound_id.value)


# --- helpers ---------------------------------------------------------------


def _radical_holds(P: int, two_r: int, D: int) -> bool:
    """Exact test of two_r <= P - sqrt(D)."""
    gap = P - two_r
    return gap >= 0 and gap * gap >= D


def _scan(r_cap: int, predicate: Callable[[int], bool]) -> List[int]:
    return [R for R in range(1, r_cap + 1) if predicate(R)]


def _dual_scan(
    bound_id: BoundId,
    r_cap: int,
    radical: Callable[[int], bool],
    m_form: Callable[[int], bool],
) -> List[int]:
    ranks = []
    for R in range(1, r_cap + 1):
        a, b = radical(R), m_form(R)
        if a != b:
            raise FormDisagreementError(f"{bound_id.value}: radical form gives {a}, m-form gives {b} at R={R}")
        if a:
            ranks.append(R)
    return ranks


def _entry(
    bound_id: BoundId,
    ranks: List[int],
    r_cap: int,
    empty_reason: Optional[str] = None,
    **kwargs,
) -> BoundEntry:
    reason = None
    if not ranks:
        reason = empty_reason or f"no R in 1..{r_cap} satisfies the bound"
    entry = BoundEntry(bound_id=bound_id, rank_set=ranks, max_rank=max(ranks, default=0), reason=reason, **kwargs)
    logger.debug(f"{bound_id.value}: max_rank={entry.max_rank} ({len(ranks)} ranks)")
    return entry


def _require(dims: ProblemDims, sfs: bool, name: str) -> None:
    if dims.sfs != sfs:
        kind = "SFS" if sfs else "unstructured"
        raise DimensionError(f"{name} needs {kind} dimensions, got {dims.label()}")


# --- unstructured bounds ----------------------------------------------------


def kruskal_generic(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    """Kruskal's condition with generic k-ranks min(dim, R)."""
    _require(dims, False, "kruskal_generic")
    I, J, K = dims.sorted_dims()
    ranks = _scan(r_cap, lambda R: 2 * R <= min(I, R) + min(J, R) + min(K, R) - 2)
    return _entry(BoundId.KRUSKAL_GENERIC, ranks, r_cap)


def large_k_secant(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    """R <= (I-1)(J-1) <= K with 3 <= I <= J; stated over the complex field."""
    _require(dims, False, "large_k_secant")
    I, J, K = dims.sorted_dims()
    ceiling = (I - 1) * (J - 1)
    if I < 3:
        return _entry(BoundId.LARGE_K_SECANT, [], r_cap, f"needs 3 <= I, sorted dims {I}x{J}x{K}", fields=COMPLEX_ONLY)
    if ceiling > K:
        return _entry(BoundId.LARGE_K_SECANT, [], r_cap, f"needs (I-1)(J-1) = {ceiling} <= K = {K}", fields=COMPLEX_ONLY)
    return _entry(BoundId.LARGE_K_SECANT, _scan(r_cap, lambda R: R <= ceiling), r_cap, fields=COMPLEX_ONLY)


def algebraic_geometry_bounds(
    dims: ProblemDims, r_cap: int = DEFAULT_R_CAP
) -> Tuple[BoundEntry, BoundEntry, BoundEntry]:
    """Three known bounds for K <= R with 2 <= I <= J <= K.

    dimension count: R <= IJK/(I+J+K-2) - K and 3 <= I (complex field only)
    power of two:    R <= 2^(a+b-2), 2^a <= I < 2^(a+1), 2^b <= J < 2^(b+1)
    Kruskal large K: 2R <= I+J+K-2
    """
    _require(dims, False, "algebraic_geometry_bounds")
    I, J, K = dims.sorted_dims()
    S = I + J + K - 2
    alpha = I.bit_length() - 1
    beta = J.bit_length() - 1

    def base(R: int) -> bool:
        return 2 <= I and K <= R

    count = _scan(r_cap, lambda R: base(R) and 3 <= I and (R + K) * S <= I * J * K)
    power = _scan(r_cap, lambda R: base(R) and R <= 2 ** (alpha + beta - 2))
    kruskal = _scan(r_cap, lambda R: base(R) and 2 * R <= S)
    empty = f"needs 2 <= I and K <= R with sorted dims {I}x{J}x{K}"
    return (
        _entry(BoundId.DIMENSION_COUNT, count, r_cap, empty if I >= 3 else f"needs 3 <= I, sorted dims {I}x{J}x{K}", fields=COMPLEX_ONLY),
        _entry(BoundId.POWER_OF_TWO, power, r_cap, empty),
        _entry(BoundId.KRUSKAL_LARGE_K, kruskal, r_cap, empty),
    )


def kernel_ceiling(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    """R <= ceil(IJK/(I+J+K-2)) - 1, verified elsewhere up to IJK <= 15000.

    Literature only: the kernel computation behind it is not reproduced and
    its known exceptions are not flagged.
    """
    _require(dims, False, "kernel_ceiling")
    I, J, K = dims.sorted_dims()
    volume = I * J * K
    if volume > LITERATURE_IJK_LIMIT:
        return _entry(
            BoundId.KERNEL_CEILING, [], r_cap,
            f"IJK = {volume} > {LITERATURE_IJK_LIMIT}, outside the verified range",
            literature_only=True,
        )
    S = I + J + K - 2
    ceiling = -(-volume // S) - 1
    return _entry(BoundId.KERNEL_CEILING, _scan(r_cap, lambda R: R <= ceiling), r_cap, literature_only=True)


def wm_radical_form(I: int, J: int, K: int, R: int) -> bool:
    """2 <= I <= J <= K <= R and 2R <= I+J+2K-2 - sqrt((I-J)^2 + 4K)."""
    if not (2 <= I <= J <= K <= R):
        return False
    return _radical_holds(I + J + 2 * K - 2, 2 * R, (I - J) ** 2 + 4 * K)


def wm_m_form(I: int, J: int, K: int, R: int) -> bool:
    """m-1 <= I <= J <= K <= R and R <= (I+1-m)(J+1-m) + m - 2, m = R-K+2."""
    if not (I <= J <= K <= R):
        return False
    m = R - K + 2
    return m - 1 <= I and R <= (I + 1 - m) * (J + 1 - m) + m - 2


def wm_generic(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    """Bound from condition W_m on generic factors; both forms must agree."""
    _require(dims, False, "wm_generic")
    I, J, K = dims.sorted_dims()
    ranks = _dual_scan(
        BoundId.WM_GENERIC, r_cap,
        lambda R: wm_radical_form(I, J, K, R),
        lambda R: wm_m_form(I, J, K, R),
    )
    return _entry(BoundId.WM_GENERIC, ranks, r_cap, f"no R with 2 <= I and K <= R <= {r_cap} satisfies the bound")


def wm_large_k(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    _require(dims, False, "wm_large_k")
    I, J, K = dims.sorted_dims()
    if I < 3:
        return _entry(BoundId.WM_LARGE_K, [], r_cap, f"needs 3 <= I, sorted dims {I}x{J}x{K}")
    ranks = _scan(r_cap, lambda R: J <= R <= K and R <= (I - 1) * (J - 1))
    return _entry(BoundId.WM_LARGE_K, ranks, r_cap)


def co_nonunique_from(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> Optional[int]:
    """Smallest R with (I-1)(J-1) < R <= K, or None."""
    I, J, K = dims.sorted_dims()
    if I < 3:
        return None
    start = (I - 1) * (J - 1) + 1
    if start <= min(K, r_cap):
        return start
    return None


# --- SFS bounds -------------------------------------------------------------


def kruskal_sfs(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    _require(dims, True, "kruskal_sfs")
    I, K = dims.I, dims.K
    ranks = _scan(r_cap, lambda R: 2 * R <= 2 * min(I, R) + min(K, R) - 2)
    return _entry(BoundId.KRUSKAL_SFS, ranks, r_cap)


def sfs_small_i(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    """4 <= I < R <= K and 2R <= I^2 - I."""
    _require(dims, True, "sfs_small_i")
    I, K = dims.I, dims.K
    if I < 4:
        return _entry(BoundId.SFS_SMALL_I, [], r_cap, f"needs 4 <= I, got I={I}")
    ranks = _scan(r_cap, lambda R: I < R <= K and 2 * R <= I * I - I)
    return _entry(BoundId.SFS_SMALL_I, ranks, r_cap)


def sfs_um_c_radical_form(I: int, K: int, R: int) -> bool:
    """2 <= I <= K <= R and 2R <= 2I+2K+1 - sqrt(8K+8I+1)."""
    if not (2 <= I <= K <= R):
        return False
    return _radical_holds(2 * I + 2 * K + 1, 2 * R, 8 * K + 8 * I + 1)


def sfs_um_c_m_form(I: int, K: int, R: int) -> bool:
    """m-1 <= I <= K <= R and 2R <= I^2 + (3-2m)I + (m-1)(m-2), m = R-K+2."""
    if not (I <= K <= R):
        return False
    m = R - K + 2
    return m - 1 <= I and 2 * R <= I * I + (3 - 2 * m) * I + (m - 1) * (m - 2)


def sfs_um_c(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    """Bound from condition U_m on (A, A) for I <= K <= R."""
    _require(dims, True, "sfs_um_c")
    I, K = dims.I, dims.K
    ranks = _dual_scan(
        BoundId.SFS_UM_C, r_cap,
        lambda R: sfs_um_c_radical_form(I, K, R),
        lambda R: sfs_um_c_m_form(I, K, R),
    )
    return _entry(BoundId.SFS_UM_C, ranks, r_cap, f"no R with 2 <= I <= K <= R <= {r_cap} satisfies the bound")


def sfs_um_a_radical_form(I: int, K: int, R: int) -> bool:
    """2 <= K <= I <= R and 2R <= K+3I-1 - sqrt((K-I)^2 + 2K + 6I - 3)."""
    if not (2 <= K <= I <= R):
        return False
    return _radical_holds(K + 3 * I - 1, 2 * R, (K - I) ** 2 + 2 * K + 6 * I - 3)


def sfs_um_a_m_form(I: int, K: int, R: int) -> bool:
    """m-1 <= K <= I <= R and R <= (I+1-m)(K+1-m), m = R-I+2."""
    if not (K <= I <= R):
        return False
    m = R - I + 2
    return m - 1 <= K and R <= (I + 1 - m) * (K + 1 - m)


def sfs_um_a(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    """Bound from condition U_m on (A, C) for K <= I <= R."""
    _require(dims, True, "sfs_um_a")
    I, K = dims.I, dims.K
    ranks = _dual_scan(
        BoundId.SFS_UM_A, r_cap,
        lambda R: sfs_um_a_radical_form(I, K, R),
        lambda R: sfs_um_a_m_form(I, K, R),
    )
    return _entry(BoundId.SFS_UM_A, ranks, r_cap, f"no R with 2 <= K <= I <= R <= {r_cap} satisfies the bound")


SFS_BOUNDS: Tuple[Callable[[ProblemDims, int], BoundEntry], ...] = (kruskal_sfs, sfs_small_i, sfs_um_c, sfs_um_a)


def sfs_monotone_closure(dims: ProblemDims, r_cap: int = DEFAULT_R_CAP) -> BoundEntry:
    """Ranks 1..M, M the best proven SFS bound at any K' <= K with the same I.

    A rank guaranteed at (I, K') stays guaranteed at (I, K) for K >= K', and so
    does every smaller rank. K' above r_cap adds nothing new.
    """
    _require(dims, True, "sfs_monotone_closure")
    best = 0
    best_at: Optional[int] = None
    for k_prime in range(1, min(dims.K, r_cap) + 1):
        smaller = ProblemDims.symmetric(dims.I, k_prime)
        for bound in SFS_BOUNDS:
            found = bound(smaller, r_cap).max_rank
            if found > best:
                best, best_at = found, k_prime
    ranks = list(range(1, best + 1))
    entry = _entry(BoundId.SFS_MONOTONE_CLOSURE, ranks, r_cap, method="monotone_closure")
    if best_at is not None and best_at != dims.K:
        logger.debug(f"monotone closure: max rank {best} attained at K'={best_at}")
    return entry


# --- aggregation ------------------------------------------------------------


def overall_max(entries: List[BoundEntry], field: FieldScope = FieldScope.BOTH) -> int:
    return max((e.max_rank for e in entries if not e.literature_only and e.applies_to(field)), default=0)


def aggregate(
    dims: ProblemDims,
    r_cap: int = DEFAULT_R_CAP,
    field: FieldScope = FieldScope.BOTH,
    compound_probe: bool = False,
    seed: int = 0,
    tol: TolLike = None,
) -> BoundTable:
    """Run every applicable bound and collect them into a table."""
    if r_cap < 1:
        raise DimensionError(f"r_cap must be positive, got {r_cap}")
    notes: List[str] = []
    entries: List[BoundEntry] = []
    sorted_dims = dims.sorted_dims()

    if dims.sfs:
        entries.extend(bound(dims, r_cap) for bound in SFS_BOUNDS)
        entries.append(sfs_monotone_closure(dims, r_cap))
        nonunique = None
    else:
        if sorted_dims != (dims.I, dims.J, dims.K):
            notes.append(f"unstructured bounds evaluated on sorted dims {sorted_dims[0]}x{sorted_dims[1]}x{sorted_dims[2]}")
        entries.append(kruskal_generic(dims, r_cap))
        entries.append(large_k_secant(dims, r_cap))
        entries.extend(algebraic_geometry_bounds(dims, r_cap))
        entries.append(kernel_ceiling(dims, r_cap))
        entries.append(wm_generic(dims, r_cap))
        entries.append(wm_large_k(dims, r_cap))
        nonunique = co_nonunique_from(dims, r_cap)

    if compound_probe:
        from .empirical_lab import compound_bound_entry

        entries.append(compound_bound_entry(dims, r_cap, seed=seed, tol=tol))
        notes.append(f"compound Monte Carlo entry uses one random example per R, seed {seed}")

    best = overall_max(entries, field)
    logger.info(f"Bounds for {dims.label()}: overall max rank {best} ({field.value} field)")
    return BoundTable(
        dims=dims,
        sorted_dims=sorted_dims,
        r_cap=r_cap,
        field=field,
        entries=entries,
        overall_max=best,
        co_nonunique_from=nonunique,
        notes=notes,
    )

