import logging
from enum import Enum
from typing import List, Optional

from langgraph.graph import END, START, StateGraph
from pydantic import BaseModel, Field

from .config import Settings
from .empirical_lab import AlsOptions, SampleSpec
from .workflow_nodes import EmpiricalNodes, EmpiricalState, initial_state

logger = logging.getLogger(__name__)


class EmpiricalOutcome(str, Enum):
    UNIQUE_LIKE = "UNIQUE_LIKE"
    NON_UNIQUE_LIKE = "NON_UNIQUE_LIKE"
    INCONCLUSIVE = "INCONCLUSIVE"


class InitRecord(BaseModel):
    init: int
    fit: Optional[float] = None
    iterations: int = 0
    converged: bool = False
    kept: bool = False
    congruence_to_truth: Optional[float] = None
    error: Optional[str] = None


class EmpiricalVerdict(BaseModel):
    verdict: EmpiricalOutcome
    spec: SampleSpec
    opts: AlsOptions
    fit_gate: float
    kept: int
    min_truth_congruence: Optional[float] = None
    pairwise_min_congruence: Optional[float] = None
    runs: List[InitRecord] = Field(default_factory=list)
    error_message: Optional[str] = None


class EmpiricalUniquenessProtocol:
    """Multi-start ALS experiment run as a staged workflow."""

    def __init__(self, settings: Optional[Settings] = None, nodes: Optional[EmpiricalNodes] = None):
        self.settings = settings or Settings()
        self.nodes = nodes or EmpiricalNodes()
        self.workflow_app = self._build_workflow()

    def _build_workflow(self):
        workflow = StateGraph(EmpiricalState)

        workflow.add_node("sample", self.nodes.sample_node)
        workflow.add_node("fit", self.nodes.fit_node)
        workflow.add_node("screen", self.nodes.screen_node)
        workflow.add_node("match", self.nodes.match_node)
        workflow.add_node("verdict", self.nodes.verdict_node)

        workflow.add_edge(START, "sample")
        workflow.add_edge("sample", "fit")
        workflow.add_edge("fit", "screen")
        workflow.add_edge("screen", "match")
        workflow.add_edge("match", "verdict")
        workflow.add_edge("verdict", END)

        return workflow.compile()

    def run(self, spec: SampleSpec, opts: AlsOptions) -> EmpiricalVerdict:
        state = initial_state(
            spec,
            opts,
            match_congruence=self.settings.match_congruence,
            mismatch_congruence=self.settings.mismatch_congruence,
            fit_gate_factor=self.settings.fit_gate_factor,
        )
        try:
            final_state = self.workflow_app.invoke(state)
        except Exception as e:
            # stage failures are caught in the nodes; this covers graph-level faults
            logger.error(f"Empirical workflow failed: {e}")
            final_state = {**state, "verdict": EmpiricalOutcome.INCONCLUSIVE.value, "error_message": str(e)}
        return self._to_verdict(final_state)

    def _to_verdict(self, state: EmpiricalState) -> EmpiricalVerdict:
        kept = set(state["kept"])
        truth = state["truth_congruence"]
        records = [
            InitRecord(
                init=r["init"],
                fit=r["fit"],
                iterations=r["iterations"],
                converged=r["converged"],
                kept=r["init"] in kept,
                congruence_to_truth=truth.get(r["init"]),
                error=r["error"],
            )
            for r in state["runs"]
        ]
        return EmpiricalVerdict(
            verdict=EmpiricalOutcome(state["verdict"] or EmpiricalOutcome.INCONCLUSIVE.value),
            spec=state["spec"],
            opts=state["opts"],
            fit_gate=1.0 - state["fit_gate_factor"] * state["opts"].fit_tol,
            kept=len(kept),
            min_truth_congruence=min(truth.values()) if truth else None,
            pairwise_min_congruence=state["pairwise_min_congruence"],
            runs=records,
            error_message=state["error_message"],
        )


def empirical_uniqueness(
    spec: SampleSpec, opts: Optional[AlsOptions] = None, settings: Optional[Settings] = None
) -> EmpiricalVerdict:
    """Fit many random starts and compare them with the ground truth.

    Never raises for numerical trouble; failures end in INCONCLUSIVE.
    """
    return EmpiricalUniquenessProtocol(settings).run(spec, opts or AlsOptions())
