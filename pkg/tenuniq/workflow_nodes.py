import logging
from itertools import combinations
from typing import Any, Dict, List, Optional, TypedDict

import numpy as np

from .config import FIT_GATE_FACTOR, MATCH_CONGRUENCE, MISMATCH_CONGRUENCE
from .empirical_lab import (
    AlsFit,
    AlsOptions,
    SampleSpec,
    als_cpd,
    als_sfs,
    match_decompositions,
    parallel_map,
    sample_factors,
)
from .exceptions import TenuniqError
from .tensor3 import FactorSet, from_factors

logger = logging.getLogger(__name__)


class EmpiricalState(TypedDict):
    """State for the empirical uniqueness workflow"""
    spec: SampleSpec
    opts: AlsOptions
    match_congruence: float
    mismatch_congruence: float
    fit_gate_factor: float
    ground_truth: Optional[FactorSet]
    tensor: Optional[np.ndarray]
    runs: List[Dict[str, Any]]
    kept: List[int]
    truth_congruence: Dict[int, float]
    pairwise_min_congruence: Optional[float]
    verdict: Optional[str]
    error_message: Optional[str]


def initial_state(
    spec: SampleSpec,
    opts: AlsOptions,
    match_congruence: float = MATCH_CONGRUENCE,
    mismatch_congruence: float = MISMATCH_CONGRUENCE,
    fit_gate_factor: float = FIT_GATE_FACTOR,
) -> EmpiricalState:
    return {
        "spec": spec,
        "opts": opts,
        "match_congruence": match_congruence,
        "mismatch_congruence": mismatch_congruence,
        "fit_gate_factor": fit_gate_factor,
        "ground_truth": None,
        "tensor": None,
        "runs": [],
        "kept": [],
        "truth_congruence": {},
        "pairwise_min_congruence": None,
        "verdict": None,
        "error_message": None,
    }


class EmpiricalNodes:
    """Stages of the multi-start uniqueness experiment"""

    def sample_node(self, state: EmpiricalState) -> EmpiricalState:
        """Stage 1: draw the ground-truth factors and build the tensor"""
        try:
            truth = sample_factors(state["spec"], 0)
            logger.info(f"Sampled ground truth {state['spec'].dims.label()}, R={truth.rank}, field {truth.field.value}")
            return {**state, "ground_truth": truth, "tensor": from_factors(truth)}
        except (TenuniqError, ValueError, ArithmeticError) as e:
            logger.error(f"Sampling error: {e}")
            return {**state, "error_message": f"Sampling error: {e}"}

    def fit_node(self, state: EmpiricalState) -> EmpiricalState:
        """Stage 2: run ALS from every initialization"""
        if state["error_message"]:
            return state

        spec, opts = state["spec"], state["opts"]
        solver = als_sfs if spec.dims.sfs else als_cpd

        def run(init: int) -> Dict[str, Any]:
            try:
                result: AlsFit = solver(state["tensor"], spec.rank, opts, init_index=init)
                return {
                    "init": init,
                    "fit": result.fit,
                    "iterations": result.iterations,
                    "converged": result.converged,
                    "factors": result.factors,
                    "error": None,
                }
            except TenuniqError as e:
                return {"init": init, "fit": None, "iterations": 0, "converged": False, "factors": None, "error": str(e)}

        runs = parallel_map(run, list(range(opts.n_inits)))
        failed = sum(1 for r in runs if r["error"])
        logger.info(f"Fitted {len(runs)} inits ({failed} failed)")
        return {**state, "runs": runs}

    def screen_node(self, state: EmpiricalState) -> EmpiricalState:
        """Stage 3: keep runs whose fit clears 1 - factor * fit_tol"""
        if state["error_message"]:
            return state

        gate = 1.0 - state["fit_gate_factor"] * state["opts"].fit_tol
        kept = [r["init"] for r in state["runs"] if r["fit"] is not None and r["fit"] >= gate]
        logger.info(f"Fit gate {gate:.12f}: kept {len(kept)} of {len(state['runs'])} runs")
        return {**state, "kept": kept}

    def match_node(self, state: EmpiricalState) -> EmpiricalState:
        """Stage 4: match kept runs against the ground truth and each other"""
        if state["error_message"]:
            return state

        try:
            by_init = {r["init"]: r["factors"] for r in state["runs"]}
            truth = state["ground_truth"]
            truth_congruence = {
                i: match_decompositions(truth, by_init[i]).congruence for i in state["kept"]
            }
            pairwise = [
                match_decompositions(by_init[i], by_init[j]).congruence
                for i, j in combinations(state["kept"], 2)
            ]
            return {
                **state,
                "truth_congruence": truth_congruence,
                "pairwise_min_congruence": min(pairwise) if pairwise else None,
            }
        except (TenuniqError, ValueError) as e:
            logger.error(f"Matching error: {e}")
            return {**state, "error_message": f"Matching error: {e}"}

    def verdict_node(self, state: EmpiricalState) -> EmpiricalState:
        """Stage 5: decide UNIQUE_LIKE, NON_UNIQUE_LIKE or INCONCLUSIVE"""
        verdict = "INCONCLUSIVE"
        kept = state["kept"]
        if not state["error_message"] and len(kept) >= 2:
            congruences = [state["truth_congruence"][i] for i in kept]
            pairwise = state["pairwise_min_congruence"]
            if all(c >= state["match_congruence"] for c in congruences):
                verdict = "UNIQUE_LIKE"
            elif pairwise is not None and pairwise < state["mismatch_congruence"]:
                verdict = "NON_UNIQUE_LIKE"
        logger.info(f"Empirical verdict: {verdict}")
        return {**state, "verdict": verdict}
