"""Tests for the finite Magnus-matrix models and the geometric helpers.

The two-generator models at exponents 2 and 3 are small enough to
enumerate outright, so every structural claim (group order, module part,
centralizer decomposition) is checked against brute force there; the
exponent-3 run is the main oracle-equivalence case.  At m = 3 the model
has order >= 2^129 and only a deterministic finite prefix is checked,
pointwise, against the same oracle.  Tower growth of the commuting
kernel is cross-checked by brute force wherever the group is small
enough to build.
"""

import pytest

from msolv.errors import PreconditionViolated
from msolv.fingroup import PermElem, center, closure, derived_series
from msolv.models import (
    MODEL_NOTE,
    build_solv_model,
    centerfree_scan,
    centralizer_experiment,
    centralizer_probe_capped,
    euler_char,
    kcap_tower,
    module_part_basis,
    presentation,
    presentation_abelianization,
    surface_presentation,
)


def cyclic_group(k):
    return closure([PermElem(tuple((i + 1) % k for i in range(k)))])


def s3():
    return closure([PermElem((1, 2, 0)), PermElem((1, 0, 2))])


def s4():
    return closure([PermElem((1, 2, 3, 0)), PermElem((1, 0, 2, 3))])


# ------------------------------------------------------------ model shapes


def test_degenerate_models():
    assert build_solv_model(2, 2, 0).group.order == 1
    m_r1 = build_solv_model(1, 3, 2)
    assert m_r1.degenerate and m_r1.group.order == 3
    m_ab = build_solv_model(3, 2, 1)
    assert m_ab.degenerate and m_ab.group.order == 8


def test_model_preconditions():
    with pytest.raises(PreconditionViolated):
        build_solv_model(2, 6, 2)  # exponent must be a prime power
    with pytest.raises(PreconditionViolated):
        build_solv_model(0, 2, 2)
    with pytest.raises(PreconditionViolated):
        build_solv_model(2, 2, -1)


def test_model_order_128():
    model = build_solv_model(2, 2, 2)
    assert model.group.order == 128
    assert not model.degenerate
    assert model.note == MODEL_NOTE
    # the model lies in the 2-step solvable variety
    series = derived_series(model.group)
    assert len(series) <= 3 and series[-1].order == 1


def test_model_order_3_12():
    model = build_solv_model(2, 3, 2)
    assert model.group.order == 3**12 == 531441
    series = derived_series(model.group)
    assert series[-1].order == 1 and len(series) <= 3


def test_module_part_is_kernel_of_f():
    model = build_solv_model(2, 2, 2)
    K, module_count = module_part_basis(model)
    assert module_count == 32
    # |W| = |Q| * |ker f|: the model is module-by-quotient
    assert model.group.order == module_count * model.levels[0].order


# -------------------------------------------- centralizer oracle (m = 2)


def test_centralizer_e2_oracle_and_decomposition():
    model = build_solv_model(2, 2, 2)
    rep = centralizer_experiment(model, 1, 1)
    assert rep.group_order == 128
    assert rep.centralizer_order == 16
    assert rep.x_order == 4
    assert rep.k_cap_brute == rep.k_cap_linear == 8
    assert rep.oracle_equal
    assert rep.decomposition_holds
    # |C| = x_order * |K| / |<x> intersect K|
    assert rep.centralizer_order * 2 == rep.x_order * rep.k_cap_brute


@pytest.mark.parametrize("i,n", [(1, 1), (2, 2)])
def test_centralizer_e3_oracle_and_decomposition(i, n):
    model = build_solv_model(2, 3, 2)
    rep = centralizer_experiment(model, i, n)
    assert rep.group_order == 531441
    assert rep.centralizer_order == 243
    assert rep.x_order == 9
    assert rep.k_cap_brute == rep.k_cap_linear == 81
    assert rep.oracle_equal
    assert rep.decomposition_holds


def test_centralizer_preconditions():
    model = build_solv_model(2, 2, 2)
    with pytest.raises(PreconditionViolated):
        centralizer_experiment(model, 3, 1)  # generator index out of range
    with pytest.raises(PreconditionViolated):
        centralizer_experiment(model, 1, 2)  # e | n kills the abelianized letter
    with pytest.raises(PreconditionViolated):
        centralizer_experiment(build_solv_model(1, 2, 2), 1, 1)  # degenerate


# ---------------------------------------------- capped probe at m = 3


def test_capped_probe_m3():
    rep = centralizer_probe_capped(2, 2, 3, 20000, 1, 1)
    assert rep.enumerated == 20000
    assert not rep.complete  # the full model has order >= 2^129
    assert rep.oracle_equal_pointwise
    assert rep.decomposition_holds_pointwise
    assert rep.centralizer_seen >= 1  # the identity at minimum
    assert rep.note == MODEL_NOTE


def test_capped_probe_complete_on_small_model():
    # cap far above 128: the BFS exhausts W(2, 2, 2) and the counts match
    # the full experiment
    rep = centralizer_probe_capped(2, 2, 2, 10**6, 1, 1)
    assert rep.complete
    assert rep.enumerated == 128
    assert rep.centralizer_seen == 16
    assert rep.k_cap_seen == 8
    assert rep.oracle_equal_pointwise and rep.decomposition_holds_pointwise


# ----------------------------------------------------- kernel growth tower


def test_kcap_tower_exponent_2():
    rows = kcap_tower(2, 2, [2, 4], 1, 1, cap=2_000_000)
    assert [r.e for r in rows] == [2, 4]
    assert rows[0].k_cap == 8
    assert rows[0].verified_brute and rows[0].brute_matches
    assert rows[1].k_cap == 1024
    assert rows[1].group_order == 16 * 4**17  # far beyond any materialization
    assert not rows[1].verified_brute and rows[1].brute_matches


def test_kcap_tower_exponent_3():
    rows = kcap_tower(2, 2, [3, 9], 2, 2, cap=2_000_000)
    assert rows[0].k_cap == 81
    assert rows[0].verified_brute and rows[0].brute_matches
    assert rows[1].k_cap > rows[0].k_cap  # kernel grows with the level


# --------------------------------------------------------------- surfaces


def test_euler_characteristic():
    assert euler_char(0, 0) == (2, False)  # sphere
    assert euler_char(1, 0) == (0, False)  # torus
    assert euler_char(0, 3) == (-1, True)  # thrice-punctured sphere
    assert euler_char(2, 0) == (-2, True)
    assert euler_char(1, 1) == (-1, True)


def test_surface_presentation_genus_2():
    pres = surface_presentation(2)
    assert pres.rank == 4
    assert len(pres.relators) == 1
    assert len(pres.relators[0]) == 8  # product of 2 commutators
    assert all(all(v == 0 for v in row) for row in pres.exponent_matrix)
    rep = presentation_abelianization(pres)
    assert rep.free_rank == 4
    assert rep.invariant_factors == ()
    assert rep.torsion_free


def test_surface_presentation_all_small_genus():
    for g in range(1, 5):
        pres = surface_presentation(g)
        assert len(pres.relators[0]) == 4 * g
        rep = presentation_abelianization(pres)
        assert rep.free_rank == 2 * g and rep.torsion_free


def test_presentation_abelianization_with_torsion():
    from msolv.foxcalc import generator_word

    pres = presentation(1, [generator_word(1, 1).power(2)])  # < x | x^2 >
    rep = presentation_abelianization(pres)
    assert rep.invariant_factors == (2,)
    assert rep.free_rank == 0
    assert not rep.torsion_free


# -------------------------------------------------------- center-free scan


def test_centerfree_scan_flags_only_the_counterexample():
    from msolv.constructions import counterexample_group

    corpus = [("s3", s3()), ("s4", s4()), ("g72", counterexample_group()), ("c6", cyclic_group(6))]
    rows = {r.label: r for r in centerfree_scan(corpus, 2)}
    assert rows["g72"].flagged
    assert not rows["s3"].flagged
    assert not rows["s4"].flagged
    assert not rows["c6"].flagged  # abelian: Z(G) = G is not trivial
    assert rows["g72"].center_in_derived_image
    assert rows["g72"].ab_faithful[0] == (18, False)
    assert all(ok for _, ok in rows["s4"].ab_faithful)


def test_centerfree_scan_quotient_orders():
    corpus = [("s4", s4())]
    (row,) = centerfree_scan(corpus, 2)
    assert row.order == 24
    assert row.quotient_order == 6  # S4 / V4
    assert row.quotient_center_order == 1
