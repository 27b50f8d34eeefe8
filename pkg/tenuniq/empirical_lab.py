"""Random instances, Monte Carlo generic checks, ALS fitting and factor matching."""
import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import linear_sum_assignment

from .config import (
    ALS_FIT_TOL,
    ALS_MAX_ITERS,
    ALS_MAX_ITERS_LIMIT,
    ALS_N_INITS,
    MAX_SEED,
    Settings,
    max_workers,
)
from .certify import CertParams, Status, check_cm_condition
from .exceptions import AlsDivergenceError, DimensionError, NotSymmetricError
from .field_linalg import (
    RankTolerance,
    ScalarField,
    TolLike,
    binom,
    field_of,
    khatri_rao,
    least_squares,
    make_rng,
    random_matrix,
    rel_threshold,
)
from .generic_bounds import BoundEntry, BoundId, ProblemDims
from .tensor3 import FactorSet, Tensor3, as_tensor3, is_sfs, unfold

logger = logging.getLogger(__name__)

SAMPLE_STREAM = 2
ALS_INIT_STREAM = 3

T = TypeVar("T")
U = TypeVar("U")


def parallel_map(fn: Callable[[T], U], items: Sequence[T]) -> List[U]:
    """Map over a thread pool capped by TENUNIQ_THREADS; results keep input order."""
    workers = min(max_workers(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


class SampleSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    dims: ProblemDims
    rank: int = Field(ge=1)
    field: ScalarField = ScalarField.REAL
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    trials: int = Field(default=1, ge=1)


class AlsOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iters: int = Field(default=ALS_MAX_ITERS, ge=1, le=ALS_MAX_ITERS_LIMIT)
    fit_tol: float = Field(default=ALS_FIT_TOL, gt=0.0)
    n_inits: int = Field(default=ALS_N_INITS, ge=1)
    seed: int = Field(default=0, ge=0, le=MAX_SEED)

    @classmethod
    def from_settings(cls, settings: Settings, **overrides) -> "AlsOptions":
        values = {
            "max_iters": settings.als_max_iters,
            "fit_tol": settings.als_fit_tol,
            "n_inits": settings.als_n_inits,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class MatchResult(BaseModel):
    permutation: List[int]
    congruence: float = Field(ge=0.0, le=1.0)
    residual: float = Field(ge=0.0)
    term_congruences: List[float]


class GenericRoute(str, Enum):
    CPD_COMPOUND = "CPD_COMPOUND"
    SFS_COMPOUND = "SFS_COMPOUND"


class ConditionTally(BaseModel):
    condition: str
    m: int
    gate_ok: bool
    gate_reason: Optional[str] = None
    rows: int = 0
    cols: int = 0
    passes: int = 0
    min_rank: Optional[int] = None
    max_rank: Optional[int] = None


class MonteCarloSummary(BaseModel):
    route: GenericRoute
    dims: ProblemDims
    rank: int
    field: ScalarField
    seed: int
    trials: int
    conditions: List[ConditionTally]
    passing_trials: int = 0
    # one trial with one full-rank condition is enough
    evidence: bool = False


class AlsFit(NamedTuple):
    factors: FactorSet
    fit: float
    iterations: int
    converged: bool
    history: List[float]


# --- sampling ---------------------------------------------------------------


def sample_factors(spec: SampleSpec, trial: int = 0) -> FactorSet:
    """Gaussian factors for ``trial``; SFS specs return B = A."""
    rng = make_rng(spec.seed, SAMPLE_STREAM, trial)
    dims, R = spec.dims, spec.rank
    A = random_matrix(rng, dims.I, R, spec.field)
    if dims.sfs:
        C = random_matrix(rng, dims.K, R, spec.field)
        return FactorSet.symmetric(A, C)
    B = random_matrix(rng, dims.J, R, spec.field)
    C = random_matrix(rng, dims.K, R, spec.field)
    return FactorSet(A, B, C)


# --- Monte Carlo compound checks --------------------------------------------


class _Condition(NamedTuple):
    name: str
    first: str
    second: str
    rows1: int
    rows2: int
    m: int


def _route_conditions(dims: ProblemDims, R: int, route: GenericRoute) -> List[_Condition]:
    I, J, K = dims.I, dims.J, dims.K
    if route is GenericRoute.SFS_COMPOUND:
        m_C = R - min(K, R) + 2
        m_A = R - min(I, R) + 2
        return [
            _Condition("compound_A_A", "A", "A", I, I, m_C),
            _Condition("compound_A_C", "A", "C", I, K, m_A),
        ]
    m_A = R - min(I, R) + 2
    m_B = R - min(J, R) + 2
    m_C = R - min(K, R) + 2
    return [
        _Condition("compound_A_B", "A", "B", I, J, m_C),
        _Condition("compound_B_C", "B", "C", J, K, m_A),
        _Condition("compound_C_A", "C", "A", K, I, m_B),
    ]


def _gate(cond: _Condition, R: int) -> Tuple[bool, Optional[str], int, int]:
    cols = binom(R, cond.m)
    if cond.m > min(cond.rows1, cond.rows2, R):
        return False, f"m={cond.m} exceeds the compound range", 0, cols
    n1, n2 = binom(cond.rows1, cond.m), binom(cond.rows2, cond.m)
    # the product of a compound with itself has symmetric rows only
    rows = n1 * (n1 + 1) // 2 if cond.first == cond.second else n1 * n2
    if rows < cols:
        return False, f"{cols} columns exceed {rows} independent rows", rows, cols
    return True, None, rows, cols


def monte_carlo_generic_check(
    spec: SampleSpec, route: GenericRoute, tol: TolLike = None
) -> MonteCarloSummary:
    """Compound Khatri-Rao full-rank conditions on ``spec.trials`` random examples."""
    if route is GenericRoute.SFS_COMPOUND and not spec.dims.sfs:
        raise DimensionError("The SFS compound route needs SFS dimensions")
    if route is GenericRoute.CPD_COMPOUND and spec.dims.sfs:
        raise DimensionError("The unstructured compound route needs unstructured dimensions")

    R = spec.rank
    params = CertParams(tol=RankTolerance(rel_threshold=rel_threshold(tol)))
    conditions = _route_conditions(spec.dims, R, route)
    gates = [_gate(c, R) for c in conditions]
    tallies = [
        ConditionTally(condition=c.name, m=c.m, gate_ok=ok, gate_reason=reason, rows=rows, cols=cols)
        for c, (ok, reason, rows, cols) in zip(conditions, gates)
    ]
    open_conditions = [i for i, (ok, _, _, _) in enumerate(gates) if ok]

    def run_trial(trial: int) -> List[Tuple[int, bool, int]]:
        f = sample_factors(spec, trial)
        mats = {"A": f.A, "B": f.B, "C": f.C}
        checks = []
        for i in open_conditions:
            c = conditions[i]
            outcome = check_cm_condition(mats[c.first], mats[c.second], c.m, params)
            checks.append((i, outcome.status is Status.PROVEN, outcome.detail.get("rank") or 0))
        return checks

    results = parallel_map(run_trial, list(range(spec.trials))) if open_conditions else []
    passing_trials = 0
    for checks in results:
        for i, passed, found in checks:
            tally = tallies[i]
            tally.passes += int(passed)
            tally.min_rank = found if tally.min_rank is None else min(tally.min_rank, found)
            tally.max_rank = found if tally.max_rank is None else max(tally.max_rank, found)
        passing_trials += any(passed for _, passed, _ in checks)

    if not open_conditions:
        logger.debug(f"R={R}: every compound condition fails its dimension gate")
    else:
        logger.info(f"Monte Carlo {route.value} at {spec.dims.label()}, R={R}: {passing_trials}/{spec.trials} trials pass")
    return MonteCarloSummary(
        route=route, dims=spec.dims, rank=R, field=spec.field, seed=spec.seed,
        trials=spec.trials, conditions=tallies, passing_trials=passing_trials,
        evidence=passing_trials > 0,
    )


def compound_bound_entry(dims: ProblemDims, r_cap: int, seed: int = 0, tol: TolLike = None) -> BoundEntry:
    """Ranks for which one random example passes a compound Khatri-Rao condition."""
    route = GenericRoute.SFS_COMPOUND if dims.sfs else GenericRoute.CPD_COMPOUND
    bound_id = BoundId.SFS_COMPOUND_MC if dims.sfs else BoundId.CPD_COMPOUND_MC
    ranks = []
    for R in range(1, r_cap + 1):
        spec = SampleSpec(dims=dims, rank=R, seed=seed, trials=1)
        if monte_carlo_generic_check(spec, route, tol).evidence:
            ranks.append(R)
    return BoundEntry(
        bound_id=bound_id,
        rank_set=ranks,
        max_rank=max(ranks, default=0),
        method="random_example",
        reason=None if ranks else f"no R in 1..{r_cap} passed on the random example",
    )


# --- ALS --------------------------------------------------------------------


def _relative_residual(X3: np.ndarray, A: np.ndarray, B: np.ndarray, C: np.ndarray, norm_T: float) -> float:
    return float(np.linalg.norm(X3 - C @ khatri_rao(B, A).T)) / norm_T


def _has_converged(residual: float, previous: float, fit_tol: float) -> bool:
    """Residual below fit_tol, or a relative residual change below fit_tol."""
    if residual < fit_tol:
        return True
    return abs(previous - residual) < fit_tol * previous


def _check_finite(iteration: int, *mats: np.ndarray) -> None:
    if not all(np.all(np.isfinite(M)) for M in mats):
        raise AlsDivergenceError(f"ALS iterates became non-finite at iteration {iteration}")


def _init_factors(dims: Tuple[int, int, int], R: int, field: ScalarField, seed: int, init_index: int):
    rng = make_rng(seed, ALS_INIT_STREAM, init_index)
    return [random_matrix(rng, n, R, field) for n in dims]


def _prepare(T: Tensor3, R: int) -> Tuple[np.ndarray, ScalarField]:
    if R < 1:
        raise DimensionError(f"ALS rank must be at least 1, got {R}")
    T = as_tensor3(T)
    return T, field_of(T)


def als_cpd(T: Tensor3, R: int, opts: Optional[AlsOptions] = None, init_index: int = 0) -> AlsFit:
    """Alternating least squares for a rank-R CPD of T.

    Stops after ``max_iters`` sweeps, once the relative residual
    ``||T - T_hat|| / ||T||`` drops below ``fit_tol``, or when it changes by
    less than ``fit_tol`` relative to the previous sweep. The reported fit is
    one minus the relative residual. The zero tensor has fit 1.
    """
    opts = opts or AlsOptions()
    T, field = _prepare(T, R)
    A, B, C = _init_factors(T.shape, R, field, opts.seed, init_index)
    norm_T = float(np.linalg.norm(T))
    if norm_T == 0.0:
        zeros = [np.zeros_like(M) for M in (A, B, C)]
        return AlsFit(FactorSet(*zeros), 1.0, 0, True, [1.0])

    X1, X2, X3 = unfold(T, 1), unfold(T, 2), unfold(T, 3)
    history: List[float] = []
    previous = _relative_residual(X3, A, B, C, norm_T)
    converged = False
    iteration = 0
    for iteration in range(1, opts.max_iters + 1):
        A = least_squares(khatri_rao(C, B), X1.T).T
        B = least_squares(khatri_rao(A, C), X2.T).T
        C = least_squares(khatri_rao(B, A), X3.T).T
        _check_finite(iteration, A, B, C)
        residual = _relative_residual(X3, A, B, C, norm_T)
        history.append(1.0 - residual)
        if _has_converged(residual, previous, opts.fit_tol):
            converged = True
            break
        previous = residual
    if not converged:
        logger.warning(f"ALS init {init_index} hit max_iters={opts.max_iters} at fit {history[-1]:.3e}")
    logger.debug(f"ALS init {init_index}: fit {history[-1]:.12f} after {iteration} sweeps")
    return AlsFit(FactorSet(A, B, C), history[-1], iteration, converged, history)


def _symmetric_average(A1: np.ndarray, B1: np.ndarray) -> np.ndarray:
    """Per column: align b to a in phase, average directions, keep sqrt(|a||b|)."""
    out = np.empty_like(A1)
    for r in range(A1.shape[1]):
        a, b = A1[:, r], B1[:, r]
        na, nb = np.linalg.norm(a), np.linalg.norm(b)
        if na == 0.0 or nb == 0.0:
            out[:, r] = (a + b) / 2
            continue
        inner = np.vdot(b, a)
        phase = inner / abs(inner) if abs(inner) > 0 else 1.0
        direction = a / na + phase * b / nb
        size = np.linalg.norm(direction)
        direction = direction / size if size > 0 else a / na
        out[:, r] = np.sqrt(na * nb) * direction
    return out


def als_sfs(T: Tensor3, R: int, opts: Optional[AlsOptions] = None, init_index: int = 0) -> AlsFit:
    """ALS for T = sum_r a_r o a_r o c_r; the result has B identical to A."""
    opts = opts or AlsOptions()
    T, field = _prepare(T, R)
    if not is_sfs(T):
        raise NotSymmetricError("als_sfs needs a tensor with symmetric frontal slices")
    A, _, C = _init_factors(T.shape, R, field, opts.seed, init_index)
    norm_T = float(np.linalg.norm(T))
    if norm_T == 0.0:
        return AlsFit(FactorSet.symmetric(np.zeros_like(A), np.zeros_like(C)), 1.0, 0, True, [1.0])

    X1, X2, X3 = unfold(T, 1), unfold(T, 2), unfold(T, 3)
    history: List[float] = []
    previous = _relative_residual(X3, A, A, C, norm_T)
    converged = False
    iteration = 0
    for iteration in range(1, opts.max_iters + 1):
        A1 = least_squares(khatri_rao(C, A), X1.T).T
        B1 = least_squares(khatri_rao(A, C), X2.T).T
        A = _symmetric_average(A1, B1)
        C = least_squares(khatri_rao(A, A), X3.T).T
        _check_finite(iteration, A, C)
        residual = _relative_residual(X3, A, A, C, norm_T)
        history.append(1.0 - residual)
        if _has_converged(residual, previous, opts.fit_tol):
            converged = True
            break
        previous = residual
    if not converged:
        logger.warning(f"SFS-ALS init {init_index} hit max_iters={opts.max_iters} at fit {history[-1]:.3e}")
    return AlsFit(FactorSet.symmetric(A, C), history[-1], iteration, converged, history)


# --- matching ---------------------------------------------------------------


def _unit_columns(M: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(M, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return M / safe, norms


def match_decompositions(f1: FactorSet, f2: FactorSet) -> MatchResult:
    """Pair the rank-1 terms of two decompositions by optimal assignment.

    ``permutation[r]`` is the term of ``f2`` matched to term r of ``f1``.
    """
    if f1.dims != f2.dims or f1.rank != f2.rank:
        raise DimensionError(f"Cannot match {f1.dims}/R={f1.rank} against {f2.dims}/R={f2.rank}")
    units1 = [_unit_columns(M) for M in (f1.A, f1.B, f1.C)]
    units2 = [_unit_columns(M) for M in (f2.A, f2.B, f2.C)]

    congruence = np.ones((f1.rank, f2.rank))
    inner = np.ones((f1.rank, f2.rank), dtype=complex)
    for (U1, n1), (U2, n2) in zip(units1, units2):
        G = U1.conj().T @ U2
        congruence *= np.abs(G)
        inner *= G * np.outer(n1, n2)
    rows, cols = linear_sum_assignment(-congruence)
    terms = np.clip(congruence[rows, cols], 0.0, 1.0)

    # ||x o y o z||^2 = ||x||^2 ||y||^2 ||z||^2 and inner products factor per mode
    size1 = np.prod([n for _, n in units1], axis=0) ** 2
    size2 = np.prod([n for _, n in units2], axis=0) ** 2
    gaps = size1[rows] + size2[cols] - 2.0 * np.real(inner[rows, cols])
    scale = max(np.sqrt(size1.sum()), np.sqrt(size2.sum()))
    residual = float(np.sqrt(np.clip(gaps, 0.0, None).sum()) / scale) if scale > 0 else 0.0

    return MatchResult(
        permutation=cols.tolist(),
        congruence=float(terms.min()),
        residual=residual,
        term_congruences=terms.tolist(),
    )
