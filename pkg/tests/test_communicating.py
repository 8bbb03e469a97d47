import math

import pytest

from skipfree.helpers.communicating import CommWork, routing_policy, solve_communicating
from skipfree.helpers.model_library import communicating_example, make_birth_death, random_skip_free, two_policy_chain
from skipfree.helpers.reference import enumerate_policies
from skipfree.helpers.skip_free import (NotCommunicatingException, choose_root_action, evaluate_policy, residual,
    solve_average, sweep_states)
from skipfree.models.mdp import ChainClass, SkipFreeMdp, classify
from skipfree.models.reports import RootVariant
from skipfree.models.tree import build_tree



def self_loop_choice() -> SkipFreeMdp:
    """
        Chain 0 - 1 where state 1 returns to 0 (a) or stays put for good at cost 2 (b)
        or 1 (c). The cheaper self-loop has the higher index.
    """
    return make_birth_death(
        1,
        actions=[{"a": (1.0, 0.0, 0.0)}, {"a": (0.0, 0.0, 1.0), "b": (0.0, 1.0, 0.0), "c": (0.0, 1.0, 0.0)}],
        costs=[{"a": 5.0}, {"a": 0.0, "b": 2.0, "c": 1.0}],
    )



def communicating_instance(seed: int) -> SkipFreeMdp:
    return random_skip_free(
        seed,
        depth=1 + seed % 3,
        branching=1 + seed % 2,
        actions_per_state=3,
        chain_class=ChainClass.COMMUNICATING_ONLY,
        max_states=7,
    )



def check_against_enumeration(mdp: SkipFreeMdp, variant: str):
    oracle = enumerate_policies(mdp, unichain_only=True)
    report = solve_communicating(mdp, variant=variant)

    assert report.g_star == pytest.approx(oracle.g_star, abs=1e-8)
    assert report.h_star[0] == 0.0
    assert residual(mdp, report.g_star, report.h_star) <= 1e-8 * (1.0 + max(abs(h) for h in report.h_star))
    assert report.distinguished in CommWork.from_mdp(mdp).distinguished

    # Strictly decreasing until the last step, which may only repeat
    g_trace = report.g_trace
    for n in range(1, len(g_trace) - 1):
        assert g_trace[n] < g_trace[n - 1]
    assert g_trace[-1] <= g_trace[-2]
    assert report.g_star == g_trace[-1]



def test_work_partition():
    work = CommWork.from_mdp(communicating_example())
    assert work.climbing == [(), (0,), (0,)]
    assert work.staying == [(0,), (1,), ()]
    assert work.distinguished == [0, 1]



def test_routing_policy():
    mdp = communicating_example()
    assert routing_policy(mdp, [1, 2]) == {0: 0}
    assert routing_policy(mdp, [0, 1, 2]) == {}



def test_communicating_example():
    """ Cycling 1 <-> 2 costs 0.5 per step; the root is only ever left behind """
    mdp = communicating_example()
    report = solve_communicating(mdp)

    assert report.g_star == pytest.approx(0.5)
    assert report.distinguished == 1
    assert report.policy == (0, 1, 0)
    assert report.h_star == pytest.approx([0.0, -4.5, -4.0])
    assert residual(mdp, report.g_star, report.h_star) <= 1e-9



@pytest.mark.parametrize("variant", RootVariant.ALL_VARIANTS)
def test_variants_agree(variant):
    report = solve_communicating(communicating_example(), variant=variant)
    assert report.g_star == pytest.approx(0.5)
    assert report.policy[1] == 1
    assert report.variant == variant



def test_recurrent_models_take_the_plain_path():
    mdp = two_policy_chain()
    report = solve_communicating(mdp)
    expected = solve_average(mdp)
    assert report.g_star == expected.g_star
    assert report.h_star == expected.h_star
    assert report.policy == expected.policy
    assert report.distinguished == 0



def test_not_communicating():
    mdp = SkipFreeMdp(
        build_tree([0, 1]),
        [["a"], ["a", "b"], ["a"]],
        [[{1: 1.0}], [{0: 1.0}, {1: 1.0}], [{1: 1.0}]],
        [[1.0], [1.0, 0.5], [1.0]],
    )
    with pytest.raises(NotCommunicatingException) as e:
        solve_communicating(mdp)
    assert e.value.chain_class.witness == frozenset({0, 1})



@pytest.mark.parametrize("variant", RootVariant.ALL_VARIANTS)
def test_self_loops_rank_by_cost(variant):
    report = solve_communicating(self_loop_choice(), variant=variant)
    assert report.g_trace == pytest.approx([2.5, 1.0, 1.0])
    assert report.policy == (0, 2)
    assert report.distinguished == 1
    assert report.h_star == pytest.approx([0.0, -4.0])



def test_self_loop_numerator_noise():
    """ A self-loop whose cost matches x up to rounding is a zero, not +inf """
    mdp = make_birth_death(
        1,
        actions=[{"a": (1.0, 0.0, 0.0)}, {"a": (0.0, 0.0, 1.0), "b": (0.0, 1.0, 0.0), "c": (0.0, 1.0, 0.0)}],
        costs=[{"a": 5.0}, {"a": 0.0, "b": 0.5, "c": 0.1 + 0.2}],
    )
    sweep = sweep_states(mdp, 0.3, CommWork.from_mdp(mdp).climbing)
    a, u, t = choose_root_action(mdp, 1, (1, 2), sweep, RootVariant.FIRST_RETURN, tol=1e-10)
    assert a == 2
    assert u == pytest.approx(0.0, abs=1e-15)
    assert t == math.inf



@pytest.mark.parametrize("variant", RootVariant.ALL_VARIANTS)
@pytest.mark.parametrize("seed", [114, 134, 179, 285])
def test_first_return_regressions(seed, variant):
    """ Seeds whose first-return runs once stopped on a worse record or failed to repair """
    check_against_enumeration(communicating_instance(seed), variant)



@pytest.mark.slow
@pytest.mark.parametrize("variant", RootVariant.ALL_VARIANTS)
@pytest.mark.parametrize("seed", range(300))
def test_matches_enumeration(seed, variant):
    mdp = communicating_instance(seed)
    assert classify(mdp).kind == ChainClass.COMMUNICATING_ONLY
    check_against_enumeration(mdp, variant)
