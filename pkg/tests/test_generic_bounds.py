import math

import pytest

from tenuniq.exceptions import DimensionError
from tenuniq.generic_bounds import (
    BoundEntry,
    BoundId,
    FieldScope,
    ProblemDims,
    aggregate,
    algebraic_geometry_bounds,
    co_nonunique_from,
    kernel_ceiling,
    kruskal_generic,
    kruskal_sfs,
    large_k_secant,
    sfs_monotone_closure,
    sfs_small_i,
    sfs_um_a,
    sfs_um_a_m_form,
    sfs_um_a_radical_form,
    sfs_um_c,
    sfs_um_c_m_form,
    sfs_um_c_radical_form,
    wm_generic,
    wm_large_k,
    wm_m_form,
    wm_radical_form,
)

U = ProblemDims.unstructured
S = ProblemDims.symmetric


@pytest.mark.parametrize("dims,expected", [
    ((4, 5, 6), [2, 3, 4, 5, 6]),
    ((2, 2, 2), [2]),
    ((3, 4, 8), [2, 3, 4, 5]),
    ((6, 5, 4), [2, 3, 4, 5, 6]),
])
def test_kruskal_generic(dims, expected):
    assert kruskal_generic(U(*dims)).rank_set == expected


def test_large_k_secant():
    assert large_k_secant(U(3, 3, 4)).rank_set == [1, 2, 3, 4]
    assert large_k_secant(U(4, 5, 12)).max_rank == 12
    empty = large_k_secant(U(2, 5, 9))
    assert empty.rank_set == [] and empty.reason
    assert [f.value for f in empty.fields] == ["complex"]


def test_algebraic_geometry_bounds():
    count, power, kruskal = algebraic_geometry_bounds(U(4, 5, 6))
    assert count.rank_set == []
    assert kruskal.rank_set == [6]
    _, power444, _ = algebraic_geometry_bounds(U(4, 4, 4))
    assert power444.rank_set == [4]
    assert count.bound_id is BoundId.DIMENSION_COUNT
    assert power.bound_id is BoundId.POWER_OF_TWO


def test_kernel_ceiling():
    entry = kernel_ceiling(U(4, 5, 6))
    assert entry.max_rank == 9 and entry.literature_only
    assert kernel_ceiling(U(7, 8, 30)).max_rank == 39
    big = kernel_ceiling(U(20, 20, 40))
    assert big.rank_set == [] and "15000" in big.reason


@pytest.mark.parametrize("dims,expected", [
    ((4, 5, 6), [6, 7]),
    ((7, 8, 30), [30, 31]),
    ((3, 3, 3), [3]),
    ((5, 6, 12), [12, 13]),
    ((6, 7, 20), [20, 21]),
])
def test_wm_generic(dims, expected):
    assert wm_generic(U(*dims)).rank_set == expected


def test_wm_large_k():
    assert wm_large_k(U(4, 5, 20)).rank_set == list(range(5, 13))
    assert wm_large_k(U(3, 3, 9)).rank_set == [3, 4]
    assert wm_large_k(U(2, 9, 9)).rank_set == []


def test_wm_forms_agree_on_grid():
    for I in range(2, 41):
        for J in range(I, 41):
            for K in range(J, 41):
                for R in range(K, 81):
                    assert wm_radical_form(I, J, K, R) == wm_m_form(I, J, K, R), (I, J, K, R)


def test_sfs_forms_agree_on_grid():
    for I in range(1, 41):
        for K in range(1, 41):
            for R in range(1, 81):
                assert sfs_um_c_radical_form(I, K, R) == sfs_um_c_m_form(I, K, R), (I, K, R)
                assert sfs_um_a_radical_form(I, K, R) == sfs_um_a_m_form(I, K, R), (I, K, R)


def test_wm_dominates_kruskal():
    for I in range(2, 9):
        for J in range(I, 9):
            for K in range(J, 12):
                dims = U(I, J, K)
                assert wm_generic(dims).max_rank >= kruskal_generic(dims).max_rank or wm_generic(dims).max_rank == 0


def test_wm_matches_secant_at_r_equals_k():
    # on the boundary R = K both bounds describe the same condition
    for I in range(3, 8):
        for J in range(I, 8):
            K = (I - 1) * (J - 1)
            if K < J:
                continue
            assert (K in wm_generic(U(I, J, K)).rank_set) == (K in large_k_secant(U(I, J, K)).rank_set)


def test_wm_does_not_exceed_secant_for_large_k():
    for I in range(9, 21):
        for K in range(9, 41):
            dims = U(I, I, K)
            secant = large_k_secant(dims)
            if secant.rank_set:
                assert wm_generic(dims).max_rank <= secant.max_rank


@pytest.mark.parametrize("K", range(9, 41))
def test_dimension_count_and_wm_cross_over(K):
    count_wins_from = 2.5 + math.sqrt(2 * K - math.sqrt(K) + 5.25)
    wm_wins_up_to = 2 + math.sqrt(2 * K - math.sqrt(K) + 3)
    for I in range(9, 21):
        dims = U(I, I, K)
        count = algebraic_geometry_bounds(dims)[0].max_rank
        wm = wm_generic(dims).max_rank
        if I >= count_wins_from:
            assert count >= wm, (I, K, count, wm)
        if I <= wm_wins_up_to:
            assert wm >= count, (I, K, count, wm)


def test_dimension_count_overtakes_wm_for_large_slices():
    # I = 20 is past the crossover for every K up to 40
    dims = U(20, 20, 40)
    assert algebraic_geometry_bounds(dims)[0].max_rank > wm_generic(dims).max_rank


def test_co_nonunique_from():
    assert co_nonunique_from(U(3, 3, 9)) == 5
    assert co_nonunique_from(U(4, 5, 6)) is None
    assert co_nonunique_from(U(2, 4, 9)) is None


@pytest.mark.parametrize("I,K,expected", [
    (8, 20, list(range(2, 15))),
    (2, 2, [2]),
    (5, 4, [2, 3, 4, 5, 6]),
])
def test_kruskal_sfs(I, K, expected):
    assert kruskal_sfs(S(I, K)).rank_set == expected


def test_sfs_small_i():
    assert sfs_small_i(S(4, 10)).rank_set == [5, 6]
    assert sfs_small_i(S(5, 12)).rank_set == [6, 7, 8, 9, 10]
    assert sfs_small_i(S(3, 10)).rank_set == []


def test_sfs_um_c():
    assert sfs_um_c(S(8, 20)).rank_set == [20, 21]
    assert sfs_um_c(S(5, 5)).rank_set == [5, 6]
    assert sfs_um_c(S(2, 2)).rank_set == []


@pytest.mark.parametrize("I", [5, 6, 7, 8])
def test_sfs_um_c_family(I):
    K = (I * I - 3 * I) // 2
    assert sfs_um_c(S(I, K)).max_rank == K + 1


def test_sfs_um_a():
    assert sfs_um_a(S(5, 3)).rank_set == [5]
    assert sfs_um_a(S(4, 4)).rank_set == [4]
    assert sfs_um_a(S(3, 5)).rank_set == []


def test_sfs_monotone_closure_never_decreases_in_k():
    for I in range(2, 9):
        previous = 0
        for K in range(1, 25):
            closure = sfs_monotone_closure(S(I, K), r_cap=60)
            assert closure.max_rank >= previous
            assert closure.rank_set == list(range(1, closure.max_rank + 1))
            previous = closure.max_rank


def test_structure_mismatch_raises():
    with pytest.raises(DimensionError):
        kruskal_generic(S(4, 5))
    with pytest.raises(DimensionError):
        sfs_um_c(U(4, 4, 5))


def test_sfs_dims_need_square_slices():
    with pytest.raises(ValueError):
        ProblemDims(I=3, J=4, K=5, sfs=True)


def test_bound_entry_rejects_inconsistent_max():
    with pytest.raises(ValueError):
        BoundEntry(bound_id=BoundId.KRUSKAL_GENERIC, rank_set=[2, 3], max_rank=2)


def test_r_cap_truncates():
    assert kruskal_generic(U(10, 10, 10), r_cap=5).rank_set == [2, 3, 4, 5]


def test_aggregate_unstructured():
    table = aggregate(U(4, 5, 6))
    assert table.overall_max == 7
    assert table.entry(BoundId.WM_GENERIC).max_rank == 7
    assert table.entry(BoundId.KERNEL_CEILING).max_rank == 9
    assert table.co_nonunique_from is None
    assert table.notes == []


def test_aggregate_ignores_literature_only():
    table = aggregate(U(7, 8, 30))
    assert table.overall_max == 31


def test_aggregate_complex_field_includes_secant():
    both = aggregate(U(4, 5, 12), field=FieldScope.BOTH)
    complex_only = aggregate(U(4, 5, 12), field=FieldScope.COMPLEX)
    assert complex_only.overall_max == 12
    assert both.overall_max <= complex_only.overall_max


def test_aggregate_notes_sorted_dims():
    table = aggregate(U(6, 5, 4))
    assert table.sorted_dims == (4, 5, 6)
    assert table.overall_max == aggregate(U(4, 5, 6)).overall_max
    assert table.notes


def test_aggregate_sfs():
    table = aggregate(S(8, 20))
    assert table.entry(BoundId.KRUSKAL_SFS).max_rank == 14
    assert table.overall_max == 21
    assert table.entry(BoundId.SFS_MONOTONE_CLOSURE).max_rank >= 21


def test_aggregate_sfs_closure_carries_small_k_ranks():
    table = aggregate(S(5, 40))
    assert table.entry(BoundId.KRUSKAL_SFS).max_rank == 8
    assert table.entry(BoundId.SFS_SMALL_I).max_rank == 10
    assert table.entry(BoundId.SFS_UM_C).rank_set == []
    assert table.entry(BoundId.SFS_MONOTONE_CLOSURE).max_rank == 10
    assert table.overall_max == 10


def test_aggregate_rejects_bad_cap():
    with pytest.raises(DimensionError):
        aggregate(U(3, 3, 3), r_cap=0)
