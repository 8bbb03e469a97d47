import logging

import numpy as np
import scipy.linalg

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from skipfree.helpers.skip_free import (MaxIterExceededException, NotCommunicatingException, SolverException,
    choose_root_action, relative_costs, solve_average, sweep_states)
from skipfree.models.mdp import SkipFreeMdp, classify
from skipfree.models.reports import RootVariant, SolveReport, TraceRow
from skipfree.models.tree import Tree


logger = logging.getLogger(__name__)



@dataclass
class RootRecord:
    """ Outcome of the sub-problem on T(r) with r as the distinguished state """
    state: int
    action: int
    u: float
    g: float



@dataclass
class CommWork:
    """
        Per-state action partition for a communicating model.

        * climbing[i]: B_i, the actions with a positive probability of moving to ρ(i)
        * staying[i]: the complement of B_i; at the root every action is in `staying`
        * distinguished: states that can act as the root of a sub-problem, i.e. the
            root plus every state with a nonempty `staying` set, in id order
    """
    climbing: List[Tuple[int]]
    staying: List[Tuple[int]]
    distinguished: List[int] = field(default_factory=list)
    records: Dict[int, RootRecord] = field(default_factory=dict)
    K: int = Tree.ROOT

    @classmethod
    def from_mdp(cls, mdp: SkipFreeMdp) -> "CommWork":
        climbing = []
        staying = []
        for i in range(mdp.num_states):
            rows = mdp.tail_rows[i]
            if i == Tree.ROOT:
                climbing.append(())
                staying.append(tuple(range(len(rows))))
                continue
            climbing.append(tuple(a for a, row in enumerate(rows) if row.up > 0))
            staying.append(tuple(a for a, row in enumerate(rows) if row.up <= 0))
        distinguished = [i for i in range(mdp.num_states) if i == Tree.ROOT or staying[i]]
        return cls(climbing=climbing, staying=staying, distinguished=distinguished)



def _policy_key(work: CommWork, mdp: SkipFreeMdp, action: Sequence[int]) -> tuple:
    """ The part of the policy that determines g: K, its action and the actions below it """
    K = work.K
    return (K, work.records[K].action, tuple(action[j] for j in mdp.tree.descendants(K)))



def routing_policy(mdp: SkipFreeMdp, target: Sequence[int]) -> Dict[int, int]:
    """
        For every state outside `target`, the lowest-index action that reaches a state
        already known to lead into `target`. Under the result every outside state
        reaches `target` with probability one.
    """
    reached = set(target)
    route = {}
    changed = True
    while changed:
        changed = False
        for i in range(mdp.num_states):
            if i in reached:
                continue
            for a, row in enumerate(mdp.rows[i]):
                if any(p > 0 and j in reached for j, p in row):
                    route[i] = a
                    changed = True
                    break
        reached.update(route)
    missing = [i for i in range(mdp.num_states) if i not in reached]
    if missing:
        raise SolverException(f"States {missing} cannot reach the optimal recurrent class")
    return route



def repair_transient(mdp: SkipFreeMdp, g: float, h: np.ndarray, fixed: Sequence[int], tol: float, max_iter: int) -> Tuple[np.ndarray, Dict[int, int]]:
    """
        Extends `h` (correct on `fixed`) to every other state so that the optimality
        equations hold there.

        The routing policy's value is an upper bound; value iteration on the outside
        states then decreases monotonically from it until the largest change is at
        most `tol`.
    """
    outside = [i for i in range(mdp.num_states) if i not in set(fixed)]
    if not outside:
        return h, {}

    route = routing_policy(mdp, fixed)
    index = {state: n for n, state in enumerate(outside)}
    size = len(outside)
    system = np.eye(size)
    rhs = np.zeros(size)
    for i in outside:
        a = route[i]
        rhs[index[i]] = mdp.costs[i][a] - g
        for j, p in mdp.rows[i][a]:
            if j in index:
                system[index[i], index[j]] -= p
            else:
                rhs[index[i]] += p * h[j]
    h = h.copy()
    h[outside] = scipy.linalg.solve(system, rhs)

    matrix, costs, offsets = mdp.stacked_rows()
    for iteration in range(1, max_iter + 1):
        values = costs - g + matrix @ h
        best = np.minimum.reduceat(values, offsets[:-1])
        change = np.max(np.abs(best[outside] - h[outside]))
        h[outside] = best[outside]
        if change <= tol:
            break
    else:
        logger.warning(f"Transient repair stopped after {max_iter} sweeps with change {change}")
        raise SolverException(f"Transient repair did not settle within {max_iter} sweeps")

    logger.debug(f"Repaired {size} transient states in {iteration} sweeps")

    values = costs - g + matrix @ h
    actions = {i: int(np.argmin(values[offsets[i]:offsets[i + 1]])) for i in outside}
    return h, actions



def solve_communicating(mdp: SkipFreeMdp,
                        variant: str = RootVariant.MEAN_IMPROVEMENT,
                        tol: float = 1e-10,
                        max_iter: int = 100_000,
                        repair_tol: float = 1e-11) -> SolveReport:
    """
        Skip-free improvement for models that are communicating but not necessarily
        recurrent.

        Each iteration sweeps once with every non-root state restricted to its climbing
        actions, then evaluates every distinguished state r as the root of the
        sub-problem on T(r) using its non-climbing actions. The cheapest sub-problem
        (smallest r on ties) becomes K and sets the next estimate. At convergence the
        states outside T(K) are transient; their relative costs and actions are
        repaired so the optimality equations hold everywhere.
    """
    RootVariant.check(variant)
    chain_class = classify(mdp)
    if not chain_class.is_communicating:
        raise NotCommunicatingException(chain_class)
    if chain_class.is_recurrent:
        return solve_average(mdp, variant=variant, tol=tol, max_iter=max_iter, check=False)

    tree = mdp.tree
    work = CommWork.from_mdp(mdp)
    # Levels run deepest first so children are swept before their parents
    order = [i for level in reversed(tree.levels[1:]) for i in level]

    # Initial policy: lowest climbing action everywhere, lowest action at the root
    initial_choices = [(climbing[0],) if climbing else () for climbing in work.climbing]
    sweep = sweep_states(mdp, 0.0, initial_choices, order)
    a0, u0, _ = choose_root_action(mdp, Tree.ROOT, (0,), sweep, variant, tol)
    record = RootRecord(Tree.ROOT, a0, u0, u0)
    work.records[Tree.ROOT] = record
    x = u0
    key = _policy_key(work, mdp, sweep.action)
    trace = [TraceRow(0, x, x)]

    iteration = 0
    while True:
        iteration += 1
        if iteration > max_iter:
            raise MaxIterExceededException(max_iter, trace)

        previous = record
        sweep = sweep_states(mdp, x, work.climbing, order)
        work.records = {}
        for r in work.distinguished:
            a, u, _ = choose_root_action(mdp, r, work.staying[r], sweep, variant, tol)
            work.records[r] = RootRecord(r, a, u, x + u)
        # min() keeps the first (smallest r) record on ties
        K = min(work.distinguished, key=lambda r: work.records[r].g)
        record = work.records[K]

        stalled = record.g >= x - tol
        if stalled:
            # No improvement: the previous K and its root action stay, re-scored at x
            _, u, _ = choose_root_action(mdp, previous.state, (previous.action,), sweep, variant, tol)
            u = min(u, 0.0)
            record = RootRecord(previous.state, previous.action, u, x + u)
            work.records[previous.state] = record
            K = previous.state
        work.K = K
        trace.append(TraceRow(iteration, record.g, record.u))
        logger.debug(f"iteration {iteration}: g_n={record.g} u0={record.u} K={K}")

        new_key = _policy_key(work, mdp, sweep.action)
        if stalled or new_key == key:
            break
        key = new_key
        x = record.g

    g_star = record.g
    subtree = tree.subtree(K)
    h = np.array(relative_costs(tree, sweep.y, root=K))
    policy = list(sweep.action)
    policy[K] = record.action

    h, repaired = repair_transient(mdp, g_star, h, subtree, repair_tol, max_iter)
    for i, a in repaired.items():
        policy[i] = a
    h = h - h[Tree.ROOT]

    logger.info(f"Converged after {iteration} iterations: g* = {g_star}, recurrent class rooted at {K}")
    return SolveReport(
        g_star=g_star,
        h_star=[float(v) for v in h],
        policy=tuple(policy),
        trace=trace,
        iterations=iteration,
        variant=variant,
        distinguished=K,
    )
