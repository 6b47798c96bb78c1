import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_instance
from fairselect.core import (
    UNASSIGNED,
    Assignment,
    GroupLabels,
    InputError,
    Instance,
    LatentProfile,
    SizeError,
    _enumerate_assignments,
    brute_force_stable,
    respects_capacities,
    verify_stable,
)
from fairselect.matching import serial_dictatorship


def one_slot():
    return Instance((1,), [0.9, 0.1], [[0], [0]])


def test_top_candidate_holding_only_slot_is_stable():
    assert verify_stable(one_slot(), Assignment((0, UNASSIGNED)))


def test_low_candidate_holding_only_slot_is_blocked():
    assert not verify_stable(one_slot(), Assignment((UNASSIGNED, 0)))


def test_vacant_slot_blocks_unassigned_candidate():
    inst = Instance((2,), [0.9, 0.1], [[0], [0]])
    assert not verify_stable(inst, Assignment((0, UNASSIGNED)))


def test_length_mismatch_is_input_error():
    with pytest.raises(InputError):
        verify_stable(one_slot(), Assignment((0,)))


def test_capacity_violation_is_input_error():
    with pytest.raises(InputError):
        verify_stable(one_slot(), Assignment((0, 0)))


def two_type_market(num_type_one: int, num_type_two: int, half: int):
    """Institution 0 ranks type-II first, institution 1 ranks type-I first; candidates want the other."""
    n = num_type_one + num_type_two
    prefs = [[0, 1]] * num_type_one + [[1, 0]] * num_type_two
    inst = Instance((half, half), np.linspace(1, 0.5, n), prefs)
    type_one = np.arange(n) < num_type_one
    priorities = np.vstack([np.where(type_one, 0.0, 1.0), np.where(type_one, 1.0, 0.0)])
    return inst, priorities


def test_crossed_assignment_is_stable_under_institution_rankings():
    inst, prio = two_type_market(2, 2, 2)
    crossed = Assignment((1, 1, 0, 0))
    assert verify_stable(inst, crossed, priorities=prio)
    # under a common ranking the same assignment is blocked
    assert not verify_stable(inst, crossed)


def test_removing_one_type_one_candidate_sends_all_type_one_to_first_choice():
    inst, prio = two_type_market(1, 2, 2)
    stable = [
        slots
        for slots in _enumerate_assignments(inst.n, list(inst.capacities), inst.n)
        if verify_stable(inst, Assignment.from_array(slots), priorities=prio)
    ]
    assert stable
    assert all(slots[0] == 0 for slots in stable)
    assert all(slots[1] == 1 and slots[2] == 1 for slots in stable)


def test_priorities_shape_checked():
    inst, _ = two_type_market(2, 2, 2)
    with pytest.raises(InputError):
        verify_stable(inst, Assignment((1, 1, 0, 0)), priorities=np.zeros((3, 4)))


def test_brute_force_two_candidates_forced_order():
    inst = Instance((1, 1), [0.9, 0.1], [[0, 1], [0, 1]])
    assert brute_force_stable(inst) == [Assignment((0, 1))]


def test_brute_force_three_candidates_matches_serial():
    rng = np.random.default_rng(3)
    for _ in range(20):
        prefs = np.array([rng.permutation(2) for _ in range(3)])
        inst = Instance((1, 1), rng.random(3), prefs)
        stable = brute_force_stable(inst)
        assert len(stable) == 1
        assert stable[0] == serial_dictatorship(inst)
        assert sum(s is UNASSIGNED for s in stable[0].slots) == 1


def test_brute_force_scaled_two_institution_instance():
    # four candidates, two institutions of capacity 2, one fixed preference draw
    inst = Instance((2, 2), [0.8, 0.6, 0.4, 0.2], [[0, 1], [0, 1], [1, 0], [0, 1]])
    stable = brute_force_stable(inst)
    assert stable == [serial_dictatorship(inst)] == [Assignment((0, 0, 1, 1))]


def test_brute_force_counts_all_feasible_assignments():
    # 3 candidates, capacities (1, 1): 3 * 2 = 6 ways to fill both slots, each checked
    assert len(list(_enumerate_assignments(3, [1, 1], 2))) == 6
    # 2 candidates, one institution of capacity 2: only one way
    assert list(_enumerate_assignments(2, [2], 2)) == [[0, 0]]


@pytest.mark.parametrize("n,p", [(9, 2), (4, 5)])
def test_brute_force_size_limit(n, p):
    inst = Instance((1,) * p, np.linspace(1, 0, n), [list(range(p))] * n)
    with pytest.raises(SizeError):
        brute_force_stable(inst)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(capacities=(-1,), observed_utilities=[0.5], preferences=[[0]]),
        dict(capacities=(1,), observed_utilities=[np.nan], preferences=[[0]]),
        dict(capacities=(1, 1), observed_utilities=[0.5], preferences=[[0, 0]]),
        dict(capacities=(1, 1), observed_utilities=[0.5], preferences=[[0]]),
    ],
)
def test_instance_validation(kwargs):
    with pytest.raises(InputError):
        Instance(**kwargs)


def test_instance_is_read_only():
    inst = one_slot()
    with pytest.raises(ValueError):
        inst.observed_utilities[0] = 5.0


def test_latent_profile_rejects_negative():
    with pytest.raises(InputError):
        LatentProfile([0.5, -0.1])


def test_group_labels_from_sizes():
    g = GroupLabels.from_sizes([2, 3])
    assert g.labels.tolist() == [0, 0, 1, 1, 1]
    assert g.sizes.tolist() == [2, 3]
    assert g.members(1).tolist() == [2, 3, 4]


def test_assignment_round_trip_through_array():
    a = Assignment.from_array([2, -1, 0])
    assert a.slots == (2, UNASSIGNED, 0)
    assert a.as_array().tolist() == [2, -1, 0]
    assert a.selected().tolist() == [0, 2]
    assert a.counts(3).tolist() == [1, 0, 1]


@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 4))
def test_unique_stable_assignment_is_serial_dictatorship(seed, n, p):
    inst = random_instance(np.random.default_rng(seed), n, p, max_cap=3)
    stable = brute_force_stable(inst)
    assert stable == [serial_dictatorship(inst)]


@given(st.integers(0, 2**32 - 1), st.integers(1, 60), st.integers(1, 8))
def test_serial_dictatorship_is_stable_and_feasible(seed, n, p):
    inst = random_instance(np.random.default_rng(seed), n, p)
    a = serial_dictatorship(inst)
    assert respects_capacities(inst, a)
    assert verify_stable(inst, a)
    assert len(a.selected()) == min(n, inst.total_capacity)
