import dataclasses
import logging
import math

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from skipfree.helpers.communicating import solve_communicating
from skipfree.helpers.skip_free import solve_average
from skipfree.models.mdp import (CtMdp, InvalidModelException, SkipFreeMdp, check_discount, classify,
    validate_skip_free)
from skipfree.models.reports import RootVariant, SolveReport
from skipfree.models.tree import Tree


logger = logging.getLogger(__name__)


ADDED_TERMINAL_ACTION = "continue"



class ZeroRatesException(InvalidModelException):
    def __init__(self):
        super().__init__("Every rate is zero; there is nothing to uniformize")


class NotChainException(InvalidModelException):
    def __init__(self):
        super().__init__("Discounted values can only be recovered for models on a chain; compare policies instead")



@dataclass
class AugmentedModel:
    """
        Average-cost model equivalent to a β-discounted one.

        * origin_map[s]: the original state behind augmented state s, or None for an
            added terminal
        * added_terminals[n]: the augmented id of the terminal added below the n-th
            original terminal (in id order)
    """
    mdp: SkipFreeMdp
    origin_map: List[Optional[int]]
    beta: float
    added_terminals: List[int]
    is_chain: bool

    @property
    def num_original_states(self) -> int:
        return sum(1 for origin in self.origin_map if origin is not None)


    def restrict_policy(self, policy: Sequence[int]) -> Tuple[int]:
        return tuple(policy[:self.num_original_states])



def discount_to_average(mdp: SkipFreeMdp, beta: float) -> AugmentedModel:
    """
        Adds one terminal below every original terminal, scales every original row by β
        and splits the remaining 1 - β evenly over the added terminals inside T(i).
        Each added terminal moves to its parent with probability β at cost 0.
    """
    beta = check_discount(beta)
    tree = mdp.tree
    n = mdp.num_states
    terminals = tree.terminals
    added = [n + index for index in range(len(terminals))]
    parents = list(tree.parents) + terminals
    augmented_tree = Tree(parents)

    actions = [list(state_actions) for state_actions in mdp.actions]
    transitions = []
    costs = [list(state_costs) for state_costs in mdp.costs]
    for i in range(n):
        below = [e for e, original in zip(added, terminals) if tree.in_subtree(original, i)]
        share = (1.0 - beta) / len(below)
        state_rows = []
        for row in mdp.rows[i]:
            new_row = [(j, beta * p) for j, p in row]
            new_row.extend((e, share) for e in below)
            state_rows.append(new_row)
        transitions.append(state_rows)

    for e, original in zip(added, terminals):
        actions.append([ADDED_TERMINAL_ACTION])
        transitions.append([[(original, beta), (e, 1.0 - beta)]])
        costs.append([0.0])

    labels = None
    if mdp.labels is not None:
        labels = list(mdp.labels) + [f"{mdp.labels[original]}'" for original in terminals]

    augmented = SkipFreeMdp(augmented_tree, actions, transitions, costs, labels=labels)
    validate_skip_free(augmented)
    logger.debug(f"Augmented {mdp} with {len(added)} terminals for β={beta}")
    return AugmentedModel(
        mdp=augmented,
        origin_map=list(range(n)) + [None] * len(added),
        beta=beta,
        added_terminals=added,
        is_chain=tree.is_chain,
    )



def recover_discounted_values(report: SolveReport, augmented: AugmentedModel) -> List[float]:
    """
        v_j = g'/(1 - β) + h'_j - h'_{M+1} where M+1 is the single added terminal.
    """
    if not augmented.is_chain:
        raise NotChainException()
    beta = augmented.beta
    last = augmented.added_terminals[0]
    h = report.h_star
    return [report.g_star / (1.0 - beta) + h[j] - h[last] for j in range(augmented.num_original_states)]



def solve_augmented(augmented: AugmentedModel, variant: str = RootVariant.MEAN_IMPROVEMENT, tol: float = 1e-10, max_iter: int = 100_000) -> SolveReport:
    if classify(augmented.mdp).is_recurrent:
        return solve_average(augmented.mdp, variant=variant, tol=tol, max_iter=max_iter, check=False)
    return solve_communicating(augmented.mdp, variant=variant, tol=tol, max_iter=max_iter)



def solve_discounted(mdp: SkipFreeMdp, beta: float, variant: str = RootVariant.MEAN_IMPROVEMENT, tol: float = 1e-10, max_iter: int = 100_000) -> Tuple[SolveReport, AugmentedModel]:
    """
        Solves the β-discounted problem through its augmented average-cost model.
        The report is for the augmented model; `values` holds the recovered discounted
        values when the original tree is a chain.
    """
    augmented = discount_to_average(mdp, beta)
    report = solve_augmented(augmented, variant=variant, tol=tol, max_iter=max_iter)
    values = recover_discounted_values(report, augmented) if augmented.is_chain else None
    return dataclasses.replace(report, values=values, discount=augmented.beta), augmented



def uniformize(ct: CtMdp) -> Tuple[SkipFreeMdp, float]:
    """
        Discrete time model at the uniform rate Λ = max total rate:
        p'_ij = q_ij/Λ (j ≠ i), p'_ii = 1 - Σ_{j≠i} q_ij/Λ and c' = Λc.
    """
    rate = max(ct.total_rate(i, a) for i in range(ct.num_states) for a in range(ct.num_actions(i)))
    if rate <= 0.0:
        raise ZeroRatesException()

    transitions = []
    costs = []
    for i in range(ct.num_states):
        state_rows = []
        for row in ct.rates[i]:
            moves = [(j, q / rate) for j, q in row if j != i]
            stay = 1.0 - math.fsum(p for _, p in moves)
            state_rows.append(moves + [(i, max(stay, 0.0))])
        transitions.append(state_rows)
        costs.append([rate * c for c in ct.cost_rates[i]])

    mdp = SkipFreeMdp(ct.tree, ct.actions, transitions, costs, labels=ct.labels)
    validate_skip_free(mdp)
    logger.debug(f"Uniformized {ct} at rate {rate}")
    return mdp, rate



def to_continuous(report: SolveReport, rate: float) -> SolveReport:
    """ Reports relative costs of a uniformized solve as h'/Λ """
    return dataclasses.replace(report, h_star=[h / rate for h in report.h_star], rate=rate)
