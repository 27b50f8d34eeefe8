import pytest

from tenuniq.config import Settings
from tenuniq.empirical_lab import AlsOptions, SampleSpec
from tenuniq.empirical_protocol import EmpiricalOutcome, EmpiricalUniquenessProtocol, empirical_uniqueness
from tenuniq.field_linalg import ScalarField
from tenuniq.generic_bounds import ProblemDims, aggregate
from tenuniq.workflow_nodes import EmpiricalNodes, initial_state


def test_single_init_is_inconclusive():
    spec = SampleSpec(dims=ProblemDims.unstructured(3, 3, 3), rank=2, seed=1)
    verdict = empirical_uniqueness(spec, AlsOptions(n_inits=1, seed=1))
    assert verdict.verdict is EmpiricalOutcome.INCONCLUSIVE
    assert len(verdict.runs) == 1


@pytest.mark.parametrize("dims,R", [
    (ProblemDims.unstructured(3, 3, 3), 2),
    (ProblemDims.unstructured(3, 4, 5), 3),
    (ProblemDims.unstructured(4, 5, 6), 4),
    (ProblemDims.symmetric(4, 4), 3),
])
def test_inside_guaranteed_range_is_never_non_unique(dims, R):
    assert R <= aggregate(dims).overall_max
    spec = SampleSpec(dims=dims, rank=R, seed=3)
    verdict = empirical_uniqueness(spec, AlsOptions(n_inits=5, seed=3))
    assert verdict.verdict is not EmpiricalOutcome.NON_UNIQUE_LIKE
    assert verdict.fit_gate == pytest.approx(1 - 10 * 1e-9)
    assert [r.init for r in verdict.runs] == list(range(5))


@pytest.mark.parametrize("dims,R", [
    (ProblemDims.unstructured(3, 3, 3), 2),
    (ProblemDims.unstructured(3, 4, 5), 3),
])
def test_converged_exact_runs_pass_the_fit_gate(dims, R):
    spec = SampleSpec(dims=dims, rank=R, seed=3)
    verdict = empirical_uniqueness(spec, AlsOptions(n_inits=5, seed=3))
    assert verdict.kept >= 1
    for run in verdict.runs:
        if run.kept:
            assert run.fit >= verdict.fit_gate
    best = max(verdict.runs, key=lambda r: -1.0 if r.fit is None else r.fit)
    assert best.kept


@pytest.mark.slow
def test_unique_like_within_kruskal_range():
    spec = SampleSpec(dims=ProblemDims.unstructured(3, 4, 5), rank=4, seed=2)
    verdict = empirical_uniqueness(spec, AlsOptions(n_inits=20, seed=2))
    assert verdict.verdict is EmpiricalOutcome.UNIQUE_LIKE
    assert verdict.kept >= 2
    assert verdict.min_truth_congruence >= 0.99


@pytest.mark.slow
def test_non_unique_like_beyond_secant_threshold():
    verdicts = []
    for seed in range(3):
        spec = SampleSpec(dims=ProblemDims.unstructured(3, 3, 9), rank=5, field=ScalarField.COMPLEX, seed=seed)
        verdicts.append(empirical_uniqueness(spec, AlsOptions(n_inits=20, seed=seed)))
    assert all(v.verdict is not EmpiricalOutcome.UNIQUE_LIKE for v in verdicts)
    found = [v for v in verdicts if v.verdict is EmpiricalOutcome.NON_UNIQUE_LIKE]
    assert found
    assert all(v.pairwise_min_congruence < 0.9 for v in found)


def test_sfs_experiment_runs():
    spec = SampleSpec(dims=ProblemDims.symmetric(4, 4), rank=2, seed=2)
    verdict = empirical_uniqueness(spec, AlsOptions(n_inits=3, max_iters=50, seed=2))
    assert len(verdict.runs) == 3
    assert verdict.verdict in set(EmpiricalOutcome)


def test_failed_stage_ends_inconclusive():
    class BrokenNodes(EmpiricalNodes):
        def sample_node(self, state):
            return {**state, "error_message": "Sampling error: broken"}

    spec = SampleSpec(dims=ProblemDims.unstructured(3, 3, 3), rank=2)
    verdict = EmpiricalUniquenessProtocol(Settings(), BrokenNodes()).run(spec, AlsOptions(n_inits=3))
    assert verdict.verdict is EmpiricalOutcome.INCONCLUSIVE
    assert verdict.error_message == "Sampling error: broken"
    assert verdict.runs == []


def test_verdict_node_thresholds():
    spec = SampleSpec(dims=ProblemDims.unstructured(3, 3, 3), rank=2)
    state = {
        **initial_state(spec, AlsOptions(n_inits=3)),
        "kept": [0, 1],
        "truth_congruence": {0: 0.5, 1: 0.999},
        "pairwise_min_congruence": 0.4,
    }
    nodes = EmpiricalNodes()
    assert nodes.verdict_node(state)["verdict"] == "NON_UNIQUE_LIKE"
    assert nodes.verdict_node({**state, "truth_congruence": {0: 0.995, 1: 0.999}})["verdict"] == "UNIQUE_LIKE"
    assert nodes.verdict_node({**state, "pairwise_min_congruence": 0.95})["verdict"] == "INCONCLUSIVE"
    assert nodes.verdict_node({**state, "kept": [0]})["verdict"] == "INCONCLUSIVE"
