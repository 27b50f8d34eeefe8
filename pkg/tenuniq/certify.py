"""Uniqueness certificates for concrete factor sets.

Outcomes are three-valued. PROVEN comes from a sufficient check, REFUTED only
from a witness that re-verifies against the rank/weight definitions, and
everything else is UNKNOWN. Condition W_m for (A, B, C) asks that every
lambda in range(C^T) with rank(A diag(lambda) B^T) <= m-1 has weight at most
m-1; condition U_m for (A, B) is the same with lambda unrestricted.
"""
import itertools
import logging
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import linalg

from .config import (
    DEFAULT_FALSIFY_TRIALS,
    KRANK_COLUMN_CAP,
    MAX_FALSIFY_TRIALS,
    MAX_SEED,
    PROBE_ITERS,
    SUPPORT_ENUM_CAP,
    SUPPORT_FLOOR,
    WITNESS_RANGE_RESIDUAL,
    Settings,
)
from .exceptions import DimensionError
from .field_linalg import (
    DEFAULT_TOLERANCE,
    FieldMatrix,
    RankTolerance,
    ScalarField,
    as_field_matrix,
    binom,
    column_norms,
    common_field,
    compound,
    decode_entries,
    encode_entries,
    k_rank,
    khatri_rao,
    least_squares,
    make_rng,
    null_space_basis,
    orthonormal_range,
    rank,
    weight,
)
from .tensor3 import FactorSet

logger = logging.getLogger(__name__)

FALSIFIER_STREAM = 1


class Status(str, Enum):
    PROVEN = "PROVEN"
    REFUTED = "REFUTED"
    UNKNOWN = "UNKNOWN"


class Verdict(str, Enum):
    UNIQUE_PROVEN = "UNIQUE_PROVEN"
    NOT_PROVEN = "NOT_PROVEN"


class RouteId(str, Enum):
    KRUSKAL = "KRUSKAL"
    CPD_WM = "CPD_WM"
    SFS_UM_C = "SFS_UM_C"
    SFS_UM_A = "SFS_UM_A"


class ConditionId(str, Enum):
    KRUSKAL = "kruskal"
    KRANK_INEQUALITY = "krank_inequality"
    COMPOUND_KR = "compound_khatri_rao"
    UM = "um_condition"
    WM = "wm_condition"
    KR_FULL_RANK = "khatri_rao_full_rank"


class CertParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: RankTolerance = DEFAULT_TOLERANCE
    falsify_trials: int = Field(default=DEFAULT_FALSIFY_TRIALS, ge=0, le=MAX_FALSIFY_TRIALS)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    krank_column_cap: int = Field(default=KRANK_COLUMN_CAP, ge=1)
    support_enum_cap: int = Field(default=SUPPORT_ENUM_CAP, ge=1)
    support_floor: float = Field(default=SUPPORT_FLOOR, gt=0.0, lt=1.0)
    probe_iters: int = Field(default=PROBE_ITERS, ge=1)

    @classmethod
    def from_settings(cls, settings: Settings, **overrides: Any) -> "CertParams":
        values: Dict[str, Any] = {
            "tol": RankTolerance(rel_threshold=settings.rank_tol),
            "falsify_trials": settings.falsify_trials,
            "krank_column_cap": settings.krank_column_cap,
            "support_enum_cap": settings.support_enum_cap,
            "support_floor": settings.support_floor,
            "probe_iters": settings.probe_iters,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class FalsifierCandidate(BaseModel):
    """A lambda (and, for W_m, the x with lambda = C^T x) that breaks the condition."""

    model_config = ConfigDict(populate_by_name=True)

    field: ScalarField
    lam: List[Any] = Field(alias="lambda")
    weight: int = Field(ge=0)
    product_rank: int = Field(ge=0)
    support: List[int]
    x: Optional[List[Any]] = None
    range_residual: Optional[float] = None

    def lambda_vector(self) -> np.ndarray:
        return decode_entries(self.lam, self.field)

    def x_vector(self) -> Optional[np.ndarray]:
        return None if self.x is None else decode_entries(self.x, self.field)


class ConditionOutcome(BaseModel):
    condition_id: ConditionId
    route: Optional[RouteId] = None
    status: Status
    detail: Dict[str, Any] = Field(default_factory=dict)
    witness: Optional[FalsifierCandidate] = None

    @model_validator(mode="after")
    def _refuted_has_witness(self) -> "ConditionOutcome":
        if self.status is Status.REFUTED and self.witness is None:
            raise ValueError("A REFUTED outcome must carry a witness")
        return self


class Certificate(BaseModel):
    route: RouteId
    outcomes: List[ConditionOutcome]
    verdict: Verdict
    notes: List[str] = Field(default_factory=list)

    def route_outcomes(self, route: Optional[RouteId] = None) -> List[ConditionOutcome]:
        target = route or self.route
        return [o for o in self.outcomes if o.route is target]


def _route_proven(outcomes: Sequence[ConditionOutcome], route: RouteId) -> bool:
    on_route = [o for o in outcomes if o.route is route]
    return bool(on_route) and all(o.status is Status.PROVEN for o in on_route)


# --- sufficient checks ------------------------------------------------------


def check_kruskal(f: FactorSet, p: Optional[CertParams] = None) -> ConditionOutcome:
    """Kruskal's condition 2R <= k_A + k_B + k_C - 2."""
    p = p or CertParams()
    k_A = k_rank(f.A, p.tol, p.krank_column_cap)
    k_B = k_rank(f.B, p.tol, p.krank_column_cap)
    k_C = k_rank(f.C, p.tol, p.krank_column_cap)
    R = f.rank
    holds = 2 * R <= k_A + k_B + k_C - 2
    return ConditionOutcome(
        condition_id=ConditionId.KRUSKAL,
        route=RouteId.KRUSKAL,
        status=Status.PROVEN if holds else Status.UNKNOWN,
        detail={"k_A": k_A, "k_B": k_B, "k_C": k_C, "R": R},
    )


def _krank_pair_inequality(k1: int, k2: int, k_third: int, R: int) -> bool:
    return max(min(k1, k2 - 1), min(k1 - 1, k2)) + k_third >= R + 1


def check_cm_condition(
    M1: FieldMatrix, M2: FieldMatrix, m: int, p: Optional[CertParams] = None
) -> ConditionOutcome:
    """PROVEN iff compound(M1, m) kr compound(M2, m) has full column rank C(R, m)."""
    p = p or CertParams()
    M1 = as_field_matrix(M1)
    M2 = as_field_matrix(M2)
    R = M1.shape[1]
    if M2.shape[1] != R:
        raise DimensionError(f"Column counts differ: {R} and {M2.shape[1]}")
    C1 = compound(M1, m)
    C2 = compound(M2, m)
    n_cols = binom(R, m)
    n_rows = C1.shape[0] * C2.shape[0]
    detail: Dict[str, Any] = {"m": m, "rows": n_rows, "cols": n_cols}
    if n_rows < n_cols:
        detail.update(rank=None, reason="fewer rows than columns, full column rank impossible")
        return ConditionOutcome(condition_id=ConditionId.COMPOUND_KR, status=Status.UNKNOWN, detail=detail)
    found = rank(khatri_rao(C1, C2), p.tol)
    detail["rank"] = found
    status = Status.PROVEN if found == n_cols else Status.UNKNOWN
    logger.debug(f"compound check m={m}: rank {found} of {n_cols} columns")
    return ConditionOutcome(condition_id=ConditionId.COMPOUND_KR, status=status, detail=detail)


# --- witness verification ---------------------------------------------------


def verify_witness(
    A: FieldMatrix,
    B: FieldMatrix,
    lam: Sequence[complex],
    m: int,
    tol: Optional[RankTolerance] = None,
    C: Optional[FieldMatrix] = None,
) -> Tuple[bool, int, int, Optional[float], Optional[np.ndarray]]:
    """Check rank(A diag(lam) B^T) <= m-1 and weight(lam) >= m (and lam in range(C^T)).

    Returns (valid, weight, product_rank, range_residual, x).
    """
    tol = tol or DEFAULT_TOLERANCE
    lam = np.asarray(lam)
    scale = float(np.sum(np.abs(lam) * column_norms(A) * column_norms(B)))
    product = (A * lam) @ B.T
    product_rank = rank(product, tol, scale=scale) if scale > 0 else 0
    w = weight(lam, tol)
    valid = product_rank <= m - 1 and w >= m

    residual: Optional[float] = None
    x: Optional[np.ndarray] = None
    if C is not None:
        x = least_squares(C.T, lam)
        norm = np.linalg.norm(lam)
        residual = float(np.linalg.norm(C.T @ x - lam) / norm) if norm > 0 else 0.0
        valid = valid and residual <= WITNESS_RANGE_RESIDUAL
    return valid, w, product_rank, residual, x


# --- falsifier --------------------------------------------------------------


def _supports(
    R: int, s: int, budget: int, cap: int, rng: np.random.Generator
) -> Tuple[List[Tuple[int, ...]], bool]:
    """Supports of size s: lexicographic when C(R, s) <= cap, else random."""
    if binom(R, s) <= cap:
        return list(itertools.combinations(range(R), s)), True
    drawn = [tuple(sorted(rng.choice(R, size=s, replace=False).tolist())) for _ in range(budget)]
    return drawn, False


def _random_vector(rng: np.random.Generator, n: int, complex_field: bool) -> np.ndarray:
    z = rng.standard_normal(n)
    if complex_field:
        z = z + 1j * rng.standard_normal(n)
    return z / np.linalg.norm(z)


def _probe_support(
    AS: np.ndarray,
    BS: np.ndarray,
    m: int,
    Q: Optional[np.ndarray],
    rng: np.random.Generator,
    complex_field: bool,
    p: CertParams,
) -> np.ndarray:
    """Alternating search for lambda on one support with rank(AS diag(lambda) BS^T) <= m-1."""
    if AS.shape[0] > BS.shape[0]:
        AS, BS = BS, AS
    n_free = AS.shape[1] if Q is None else Q.shape[1]
    z = _random_vector(rng, n_free, complex_field)
    rel = p.tol.rel_threshold
    norms = column_norms(AS) * column_norms(BS)
    lam = z if Q is None else Q @ z
    for _ in range(p.probe_iters):
        lam = z if Q is None else Q @ z
        U, sv, _ = linalg.svd((AS * lam) @ BS.T)
        scale = float(np.sum(np.abs(lam) * norms))
        if sv.size < m or sv[m - 1] <= rel * scale:
            break
        P = U[:, m - 1:]
        G = khatri_rao(P.conj().T @ AS, BS)
        if Q is not None:
            G = G @ Q
        _, _, Vh = linalg.svd(G, full_matrices=True)
        z = Vh[-1].conj()
    return lam


def _admissible_basis(C: np.ndarray, support: Tuple[int, ...], p: CertParams) -> np.ndarray:
    """Orthonormal basis for lambda_S when lambda = C^T x vanishes off the support."""
    off = [r for r in range(C.shape[1]) if r not in support]
    N = null_space_basis(C[:, off].T, p.tol) if off else np.eye(C.shape[0], dtype=C.dtype)
    return orthonormal_range(C[:, list(support)].T @ N, p.tol)


def _falsify(
    A: FieldMatrix,
    B: FieldMatrix,
    m: int,
    p: CertParams,
    condition_id: ConditionId,
    C: Optional[FieldMatrix] = None,
) -> ConditionOutcome:
    R = A.shape[1]
    if B.shape[1] != R or (C is not None and C.shape[1] != R):
        raise DimensionError("Falsifier inputs need equal column counts")
    detail: Dict[str, Any] = {"m": m, "trials": p.falsify_trials}
    if p.falsify_trials == 0:
        detail["reason"] = "no falsifier trials requested"
        return ConditionOutcome(condition_id=condition_id, status=Status.UNKNOWN, detail=detail)
    if not 1 <= m <= R:
        detail["reason"] = f"weight >= {m} impossible with R={R}"
        return ConditionOutcome(condition_id=condition_id, status=Status.UNKNOWN, detail=detail)

    field = common_field(A, B) if C is None else common_field(A, B, C)
    complex_field = field is ScalarField.COMPLEX
    rng = make_rng(p.seed, FALSIFIER_STREAM)
    trials_left = p.falsify_trials
    sizes = list(range(m, R + 1))

    for position, s in enumerate(sizes):
        share = max(1, trials_left // (len(sizes) - position))
        supports, exhaustive = _supports(R, s, share, p.support_enum_cap, rng)
        attempts = share if s > m else min(share, len(supports))
        for attempt in range(attempts):
            if trials_left == 0:
                break
            trials_left -= 1
            support = supports[attempt % len(supports)]
            Q = None if C is None else _admissible_basis(C, support, p)
            if Q is not None and Q.shape[1] == 0:
                continue
            idx = list(support)
            if s == m:
                ones = np.ones(s, dtype=complex if complex_field else float)
                lam_S = ones if Q is None else Q @ (Q.conj().T @ ones)
            else:
                lam_S = _probe_support(A[:, idx], B[:, idx], m, Q, rng, complex_field, p)
            mags = np.abs(lam_S)
            if mags.max() == 0.0 or np.any(mags < p.support_floor * mags.max()):
                continue
            lam = np.zeros(R, dtype=lam_S.dtype)
            lam[idx] = lam_S
            valid, w, product_rank, residual, x = verify_witness(A, B, lam, m, p.tol, C)
            logger.debug(f"falsifier support {support}: valid={valid} weight={w} rank={product_rank}")
            if valid:
                witness = FalsifierCandidate(
                    field=field,
                    lam=encode_entries(lam),
                    weight=w,
                    product_rank=product_rank,
                    support=idx,
                    x=None if x is None else encode_entries(x),
                    range_residual=residual,
                )
                detail.update(trials_used=p.falsify_trials - trials_left, support_size=s, exhaustive=exhaustive)
                return ConditionOutcome(condition_id=condition_id, status=Status.REFUTED, detail=detail, witness=witness)
        if trials_left == 0:
            break

    detail.update(trials_used=p.falsify_trials - trials_left, reason="no witness found within the trial budget")
    return ConditionOutcome(condition_id=condition_id, status=Status.UNKNOWN, detail=detail)


def falsify_um(A: FieldMatrix, B: FieldMatrix, m: int, p: Optional[CertParams] = None) -> ConditionOutcome:
    """Search for a witness against condition U_m for the pair (A, B)."""
    p = p or CertParams()
    field = common_field(A, B)
    return _falsify(as_field_matrix(A, field), as_field_matrix(B, field), m, p, ConditionId.UM)


def falsify_wm(
    A: FieldMatrix, B: FieldMatrix, C: FieldMatrix, m: int, p: Optional[CertParams] = None
) -> ConditionOutcome:
    """Search for a witness against condition W_m, lambda restricted to range(C^T).

    When C has full column rank, range(C^T) is everything and the search is
    exactly the U_m search, with x recovered for the witness.
    """
    p = p or CertParams()
    field = common_field(A, B, C)
    A, B, C = (as_field_matrix(M, field) for M in (A, B, C))
    if C.shape[1] != A.shape[1]:
        raise DimensionError("Falsifier inputs need equal column counts")
    if rank(C, p.tol) == C.shape[1]:
        outcome = _falsify(A, B, m, p, ConditionId.WM)
        if outcome.witness is not None:
            lam = outcome.witness.lambda_vector()
            _, _, _, residual, x = verify_witness(A, B, lam, m, p.tol, C)
            witness = outcome.witness.model_copy(update={"x": encode_entries(x), "range_residual": residual})
            outcome = outcome.model_copy(update={"witness": witness})
        return outcome
    return _falsify(A, B, m, p, ConditionId.WM, C=C)


# --- certificates -----------------------------------------------------------


def _m_outcome(
    condition_id: ConditionId,
    route: RouteId,
    M1: FieldMatrix,
    M2: FieldMatrix,
    m: int,
    p: CertParams,
    falsify,
) -> ConditionOutcome:
    """Compound check first, falsifier only when the compound check does not prove."""
    limit = min(M1.shape[0], M2.shape[0], M1.shape[1])
    if m < 1 or m > limit:
        return ConditionOutcome(
            condition_id=condition_id,
            route=route,
            status=Status.UNKNOWN,
            detail={"m": m, "reason": f"m={m} outside the compound range 1..{limit}"},
        )
    cm = check_cm_condition(M1, M2, m, p)
    if cm.status is Status.PROVEN:
        return ConditionOutcome(
            condition_id=condition_id, route=route, status=Status.PROVEN,
            detail={"m": m, "via": "compound", "compound": cm.detail},
        )
    found = falsify()
    detail = {"m": m, "via": "falsifier", "compound": cm.detail, "falsifier": found.detail}
    return ConditionOutcome(
        condition_id=condition_id, route=route, status=found.status, detail=detail, witness=found.witness
    )


def _finish(route: RouteId, outcomes: List[ConditionOutcome], notes: List[str]) -> Certificate:
    verdict = Verdict.UNIQUE_PROVEN if _route_proven(outcomes, route) else Verdict.NOT_PROVEN
    logger.info(f"Certificate route {route.value}: {verdict.value}")
    return Certificate(route=route, outcomes=outcomes, verdict=verdict, notes=notes)


def certify_cpd(f: FactorSet, p: Optional[CertParams] = None) -> Certificate:
    """Certify uniqueness of an unstructured CPD by either of two routes.

    The W_m route needs: the k-rank inequality, condition W_{m_C} with
    m_C = R - rank(C) + 2, and full column rank of A kr B. The Kruskal route
    is evaluated as well; the certificate reports both.
    """
    if f.sfs:
        raise DimensionError("certify_cpd takes unstructured factor sets; use the SFS certificates")
    p = p or CertParams()
    A, B, C = f.A, f.B, f.C
    R = f.rank

    kruskal = check_kruskal(f, p)
    k_A, k_B, k_C = kruskal.detail["k_A"], kruskal.detail["k_B"], kruskal.detail["k_C"]
    route = RouteId.CPD_WM

    krank = ConditionOutcome(
        condition_id=ConditionId.KRANK_INEQUALITY,
        route=route,
        status=Status.PROVEN if _krank_pair_inequality(k_A, k_B, k_C, R) else Status.UNKNOWN,
        detail={"k_A": k_A, "k_B": k_B, "k_C": k_C, "R": R},
    )

    r_C = rank(C, p.tol)
    m_C = R - r_C + 2
    wm = _m_outcome(ConditionId.WM, route, A, B, m_C, p, lambda: falsify_wm(A, B, C, m_C, p))
    wm.detail["r_C"] = r_C

    if wm.status is Status.PROVEN:
        kr = ConditionOutcome(
            condition_id=ConditionId.KR_FULL_RANK, route=route, status=Status.PROVEN,
            detail={"implied_by": "compound check of the W_m condition"},
        )
    else:
        kr_rank = rank(khatri_rao(A, B), p.tol)
        kr = ConditionOutcome(
            condition_id=ConditionId.KR_FULL_RANK, route=route,
            status=Status.PROVEN if kr_rank == R else Status.UNKNOWN,
            detail={"rank": kr_rank, "R": R},
        )

    outcomes = [kruskal, krank, wm, kr]
    if _route_proven(outcomes, RouteId.CPD_WM):
        chosen = RouteId.CPD_WM
    elif kruskal.status is Status.PROVEN:
        chosen = RouteId.KRUSKAL
    else:
        chosen = RouteId.CPD_WM
    return _finish(chosen, outcomes, [])


def certify_sfs_um_c(A: FieldMatrix, C: FieldMatrix, p: Optional[CertParams] = None) -> Certificate:
    """SFS route: k_A + k_C >= R + 2 and condition U_{m_C} for (A, A)."""
    p = p or CertParams()
    field = common_field(A, C)
    A, C = as_field_matrix(A, field), as_field_matrix(C, field)
    R = A.shape[1]
    if C.shape[1] != R:
        raise DimensionError(f"A has {R} columns but C has {C.shape[1]}")
    route = RouteId.SFS_UM_C
    k_A = k_rank(A, p.tol, p.krank_column_cap)
    k_C = k_rank(C, p.tol, p.krank_column_cap)
    krank = ConditionOutcome(
        condition_id=ConditionId.KRANK_INEQUALITY, route=route,
        status=Status.PROVEN if k_A + k_C >= R + 2 else Status.UNKNOWN,
        detail={"k_A": k_A, "k_C": k_C, "R": R},
    )
    r_C = rank(C, p.tol)
    m_C = R - r_C + 2
    um = _m_outcome(ConditionId.UM, route, A, A, m_C, p, lambda: falsify_um(A, A, m_C, p))
    um.detail["r_C"] = r_C
    return _finish(route, [krank, um], [])


def certify_sfs_um_a(A: FieldMatrix, C: FieldMatrix, p: Optional[CertParams] = None) -> Certificate:
    """SFS route through the reshaped I x K x I tensor with factors (A, C, A).

    Needs the k-rank inequality for (A, C) against k_A and condition U_{m_A}
    for (A, C) with m_A = R - rank(A) + 2.
    """
    p = p or CertParams()
    field = common_field(A, C)
    A, C = as_field_matrix(A, field), as_field_matrix(C, field)
    R = A.shape[1]
    if C.shape[1] != R:
        raise DimensionError(f"A has {R} columns but C has {C.shape[1]}")
    route = RouteId.SFS_UM_A
    k_A = k_rank(A, p.tol, p.krank_column_cap)
    k_C = k_rank(C, p.tol, p.krank_column_cap)
    krank = ConditionOutcome(
        condition_id=ConditionId.KRANK_INEQUALITY, route=route,
        status=Status.PROVEN if _krank_pair_inequality(k_A, k_C, k_A, R) else Status.UNKNOWN,
        detail={"k_A": k_A, "k_C": k_C, "R": R},
    )
    r_A = rank(A, p.tol)
    m_A = R - r_A + 2
    um = _m_outcome(ConditionId.UM, route, A, C, m_A, p, lambda: falsify_um(A, C, m_A, p))
    um.detail["r_A"] = r_A

    kr_rank = rank(khatri_rao(A, C), p.tol)
    reshaped = ConditionOutcome(
        condition_id=ConditionId.KR_FULL_RANK,
        status=Status.PROVEN if kr_rank == R else Status.UNKNOWN,
        detail={"rank": kr_rank, "R": R, "informational": True},
    )
    notes = [f"evaluated as the CPD of the reshaped {A.shape[0]}x{C.shape[0]}x{A.shape[0]} tensor with factors (A, C, A)"]
    return _finish(route, [krank, um, reshaped], notes)


def certify_sfs(A: FieldMatrix, C: FieldMatrix, p: Optional[CertParams] = None) -> List[Certificate]:
    """Both SFS routes; uniqueness is proven when either certificate says so."""
    return [certify_sfs_um_c(A, C, p), certify_sfs_um_a(A, C, p)]
