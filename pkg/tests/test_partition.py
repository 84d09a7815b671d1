import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import condpoint as cp
from condpoint.errors import InvalidPartition, ZeroEvidence
from condpoint.partition import RESIDUAL_CELL_CAP


def test_dice_partition_values(dice, dice_X, dice_halves):
    pce = cp.partition_cond_exp(dice, dice_X, dice_halves)
    assert abs(pce.values[0] - 1.5) <= 1e-12
    assert abs(pce.values[1] - 4.5) <= 1e-12


def test_trivial_partition(dice, dice_X):
    whole = cp.Partition(dice, (cp.Event.from_atoms(set(dice.atoms), name="omega"),))
    pce = cp.partition_cond_exp(dice, dice_X, whole)
    assert abs(pce.values[0] - cp.expectation(dice, dice_X).value) <= 1e-12


def test_coin_pair_partition(coin_pair):
    total = cp.RandomVariable("sum", lambda w: w[0] + w[1])
    part = cp.Partition.from_atom_groups(
        coin_pair, [{(0, 0), (0, 1)}, {(1, 0), (1, 1)}], labels=["first0", "first1"])
    pce = cp.partition_cond_exp(coin_pair, total, part)
    assert pce.values[0] == 0.5 and pce.values[1] == 1.5


def test_induced_rv_constant_on_cells(dice, dice_X, dice_halves):
    pce = cp.partition_cond_exp(dice, dice_X, dice_halves)
    assert [pce.rv.fn(w) for w in dice.atoms] == [1.5, 1.5, 4.5, 4.5, 4.5, 4.5]


def test_tower_property_discrete(dice, dice_X, dice_halves):
    pce = cp.partition_cond_exp(dice, dice_X, dice_halves)
    assert abs(pce.mean() - cp.expectation(dice, dice_X).value) <= 1e-12
    assert abs(cp.expectation(dice, pce.rv).value
               - cp.expectation(dice, dice_X).value) <= 1e-12


def test_integral_identity_per_cell(dice, dice_X, dice_halves):
    pce = cp.partition_cond_exp(dice, dice_X, dice_halves)
    for i, cell in enumerate(dice_halves.cells):
        lhs = cp.indicator_moment(dice, dice_X, cell).value
        assert abs(pce.cell_moment(i) - lhs) <= 1e-12


def test_tower_property_grid(normal_grid):
    y = cp.coordinate("y")
    part = cp.Partition.from_interval_cuts(normal_grid, y, [-0.7, 0.4])
    pce = cp.partition_cond_exp(normal_grid, y * y, part)
    assert abs(pce.mean() - cp.expectation(normal_grid, y * y).value) <= 1e-8


def test_verify_accepts_construction(dice, dice_X, dice_halves):
    pce = cp.partition_cond_exp(dice, dice_X, dice_halves)
    report = cp.verify_cond_exp(dice, dice_X, pce.rv, list(dice_halves.cells))
    assert report.passed
    assert report.max_residual("identity") <= 1e-12
    assert report.max_residual("measurability") == 0.0


def test_verify_rejects_non_measurable_candidate(dice, dice_X, dice_halves):
    # X itself varies inside each cell, so measurability must fail
    report = cp.verify_cond_exp(dice, dice_X, dice_X, list(dice_halves.cells))
    assert not report.measurable and not report.passed
    assert report.identity_ok  # E[1_A X] = E[1_A X] trivially


def test_verify_detects_shifted_cell_value(dice, dice_X, dice_halves):
    pce = cp.partition_cond_exp(dice, dice_X, dice_halves)
    v0, v1 = pce.values
    shifted = cp.RandomVariable("shifted", lambda w: (v0 + 1.0) if w in {1, 2} else v1)
    report = cp.verify_cond_exp(dice, dice_X, shifted, list(dice_halves.cells))
    assert report.measurable and not report.identity_ok
    bad = {e.label: e.residual for e in report.entries
           if e.kind == "identity" and not e.passed}
    p_low = cp.probability(dice, dice_halves.cells[0]).value
    assert any(abs(r - p_low) <= 1e-12 for r in bad.values())


def test_verify_report_json_roundtrip(dice, dice_X, dice_halves):
    pce = cp.partition_cond_exp(dice, dice_X, dice_halves)
    doc = cp.verify_cond_exp(dice, dice_X, pce.rv, list(dice_halves.cells)).to_json_dict()
    assert doc["passed"] is True
    assert {c["kind"] for c in doc["checks"]} == {"measurability", "identity"}


def test_total_probability_dice(dice, dice_halves):
    A = cp.Event.from_atoms({5})
    got = cp.total_probability(dice, A, dice_halves)
    assert abs(got - 1.0 / 6.0) <= 1e-15
    assert abs(got - cp.probability(dice, A).value) <= 1e-15


def test_total_probability_trivial_events(dice, dice_halves):
    omega = cp.Event.from_atoms(set(dice.atoms))
    empty = cp.Event.from_atoms(set())
    assert abs(cp.total_probability(dice, omega, dice_halves) - 1.0) <= 1e-12
    assert cp.total_probability(dice, empty, dice_halves) == 0.0


def test_bayes_dice(dice, dice_halves):
    A = cp.Event.from_atoms({5})
    assert cp.bayes_discrete(dice, A, dice_halves, 1) == 1.0
    assert cp.bayes_discrete(dice, A, dice_halves, 0) == 0.0


def test_bayes_posterior_normalizes(dice, dice_halves):
    A = cp.Event.from_atoms({2, 3, 5})
    total = math.fsum(cp.bayes_discrete(dice, A, dice_halves, k)
                      for k in range(len(dice_halves)))
    assert abs(total - 1.0) <= 1e-12


def test_bayes_two_urns():
    urns = cp.DiscreteAtoms((("u1", "hit"), ("u1", "miss"), ("u2", "hit"), ("u2", "miss")),
                            np.array([0.5, 0.0, 0.25, 0.25]))
    part = cp.Partition.from_atom_groups(
        urns, [{("u1", "hit"), ("u1", "miss")}, {("u2", "hit"), ("u2", "miss")}],
        labels=["urn1", "urn2"])
    A = cp.Event.where(lambda w: w[1] == "hit", "hit")
    assert abs(cp.bayes_discrete(urns, A, part, 0) - 2.0 / 3.0) <= 1e-15


def test_bayes_zero_evidence(dice, dice_halves):
    with pytest.raises(ZeroEvidence):
        cp.bayes_discrete(dice, cp.Event.from_atoms(set()), dice_halves, 0)


def test_invalid_partitions(dice):
    with pytest.raises(InvalidPartition):  # overlap
        cp.Partition.from_atom_groups(dice, [{1, 2, 3}, {3, 4, 5, 6}])
    with pytest.raises(InvalidPartition):  # gap
        cp.Partition.from_atom_groups(dice, [{1, 2}, {4, 5, 6}])
    with pytest.raises(InvalidPartition):  # empty cell
        cp.Partition.from_atom_groups(dice, [set(), set(range(1, 7))])


def test_residual_cell_truncation():
    # geometric law truncated after 35 atoms; the tail lump is one cell
    n = 35
    weights = [2.0 ** -(k + 1) for k in range(n)]
    tail = 1.0 - math.fsum(weights)
    space = cp.DiscreteAtoms(tuple(range(n + 1)), np.array(weights + [tail]))
    assert 0.0 < tail <= RESIDUAL_CELL_CAP
    cells = [cp.Event.from_atoms({k}) for k in range(n)] + [cp.Event.from_atoms({n})]
    part = cp.Partition(space, tuple(cells), residual_index=n)
    assert len(part) == n + 1
    with pytest.raises(InvalidPartition):
        cp.Partition(space, tuple(cells), residual_index=0)


@settings(max_examples=40, deadline=None)
@given(weights=st.lists(st.integers(min_value=1, max_value=40), min_size=2, max_size=10),
       data=st.data())
def test_tower_property_random_spaces(weights, data):
    total = sum(weights)
    n = len(weights)
    space = cp.DiscreteAtoms(tuple(range(n)), np.array([w / total for w in weights]))
    vals = data.draw(st.lists(st.floats(-100, 100), min_size=n, max_size=n))
    X = cp.RandomVariable("X", lambda i: vals[i])
    cut = data.draw(st.integers(min_value=1, max_value=n - 1))
    part = cp.Partition.from_atom_groups(space, [set(range(cut)), set(range(cut, n))])
    pce = cp.partition_cond_exp(space, X, part)
    scale = max(1.0, max(abs(v) for v in vals))
    assert abs(pce.mean() - cp.expectation(space, X).value) <= 1e-12 * scale
    for i, cell in enumerate(part.cells):
        lhs = cp.indicator_moment(space, X, cell).value
        assert abs(pce.cell_moment(i) - lhs) <= 1e-12 * scale


@settings(max_examples=40, deadline=None)
@given(mask=st.integers(min_value=0, max_value=63), cut=st.integers(1, 5))
def test_total_probability_random_events(dice, mask, cut):
    A = cp.Event.from_atoms({w for w in range(1, 7) if mask & (1 << (w - 1))})
    part = cp.Partition.from_atom_groups(
        dice, [set(range(1, cut + 1)), set(range(cut + 1, 7))])
    assert abs(cp.total_probability(dice, A, part)
               - cp.probability(dice, A).value) <= 1e-12
