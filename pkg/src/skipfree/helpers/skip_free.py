import logging
import math

import numpy as np

from typing import List, Sequence, Tuple

from skipfree.models.mdp import SkipFreeMdp, classify
from skipfree.models.tree import Tree
from skipfree.models.reports import PolicyStats, RootVariant, SolveReport, SweepState, TraceRow


logger = logging.getLogger(__name__)



class SolverException(Exception):
    pass


class DivisionByZeroTransitionException(SolverException):
    def __init__(self, state: int, action: int, action_label: str = None):
        self.state = state
        self.action = action
        super().__init__(f"State {state} action {action_label or action!r} never moves to the parent; first-passage quantities are undefined")


class NotRecurrentException(SolverException):
    def __init__(self, chain_class):
        self.chain_class = chain_class
        super().__init__(f"Model is {chain_class.display_name}; the skip-free solver needs a recurrent model (try the communicating solver)")


class NotCommunicatingException(SolverException):
    def __init__(self, chain_class):
        self.chain_class = chain_class
        super().__init__(f"Model is not communicating: only states {sorted(chain_class.witness)} are reachable from the root")


class MaxIterExceededException(SolverException):
    def __init__(self, max_iter: int, trace: List[TraceRow]):
        self.max_iter = max_iter
        self.trace = trace
        super().__init__(f"No convergence after {max_iter} iterations (last g_n = {trace[-1].g_n!r})")



def check_policy(mdp: SkipFreeMdp, policy: Sequence[int]) -> Tuple[int]:
    policy = tuple(int(a) for a in policy)
    if len(policy) != mdp.num_states:
        raise ValueError(f"Policy must choose an action for each of the {mdp.num_states} states")
    for i, a in enumerate(policy):
        if not 0 <= a < mdp.num_actions(i):
            raise ValueError(f"State {i} has no action index {a}")
    return policy



def default_policy(mdp: SkipFreeMdp) -> Tuple[int]:
    return tuple([0] * mdp.num_states)



def sweep_states(mdp: SkipFreeMdp, x: float, choices: Sequence[Sequence[int]], states: Sequence[int] = None) -> SweepState:
    """
        Backward sweep over `states` (default: all of D(0), deepest level first) with
        the argmin at state i ranging over `choices[i]`.

        Children must be swept before their parents, which any bottom-up level order
        guarantees.
    """
    n = mdp.num_states
    action = [0] * n
    y = [0.0] * n
    t = [0.0] * n
    tail_rows = mdp.tail_rows
    if states is None:
        states = [i for level in reversed(mdp.tree.levels[1:]) for i in level]

    for i in states:
        best = None
        for a in choices[i]:
            row = tail_rows[i][a]
            if row.up <= 0.0:
                raise DivisionByZeroTransitionException(i, a, mdp.action_label(i, a))
            total = row.cost - x
            for k, p_bar in row.tail:
                total += p_bar * y[k]
            value = total / row.up

            # Strict comparison keeps the lowest action index on ties
            if best is None or value < best:
                best = value
                action[i] = a
        y[i] = best

        row = tail_rows[i][action[i]]
        time = 1.0
        for k, p_bar in row.tail:
            time += p_bar * t[k]
        t[i] = time / row.up

    return SweepState(x=x, action=action, y=y, t=t)



def backward_sweep(mdp: SkipFreeMdp, x: float, restrict: Sequence[int] = None) -> SweepState:
    """
        Solves the x-revised first-passage problem of every non-root state, level by
        level from the deepest. `restrict` fixes a policy; the root fields are left
        unset for `root_update()`.
    """
    if restrict is not None:
        restrict = check_policy(mdp, restrict)
        choices = [(a,) for a in restrict]
    else:
        choices = [range(mdp.num_actions(i)) for i in range(mdp.num_states)]
    return sweep_states(mdp, x, choices)



def root_terms(mdp: SkipFreeMdp, state: int, action: int, sweep: SweepState) -> Tuple[float, float, float]:
    """
        Returns (numerator, Σ p̄·t, p_rr) of `action` at a distinguished `state` with all
        of its descendants already swept.
    """
    row = mdp.tail_rows[state][action]
    numerator = row.cost - sweep.x
    time = 0.0
    for k, p_bar in row.tail:
        numerator += p_bar * sweep.y[k]
        time += p_bar * sweep.t[k]
    return numerator, time, row.stay



def root_objective(variant: str, numerator: float, time: float, stay: float, tol: float = 0.0) -> Tuple[int, float]:
    """
        Sort key of one root action under `variant`: (class, value), compared as a tuple.

        Only first-return ever uses a class other than 0. An action that stays put
        with probability one (within tol) has the limit -inf, 0 or +inf by the sign of
        its numerator: class -1, 0 or 1, ranked by numerator inside the class.
        |numerator| <= tol counts as zero.
    """
    if variant == RootVariant.MEAN_IMPROVEMENT:
        return 0, numerator / (1.0 + time)
    if variant == RootVariant.OPTIMALITY_EQ:
        return 0, numerator
    if variant == RootVariant.FIRST_RETURN:
        if 1.0 - stay <= tol:
            if abs(numerator) <= tol:
                return 0, 0.0
            return (-1 if numerator < 0 else 1), numerator
        return 0, numerator / (1.0 - stay)
    raise ValueError(f"Unknown root-update variant {variant!r}")



def choose_root_action(mdp: SkipFreeMdp, state: int, candidates: Sequence[int], sweep: SweepState, variant: str, tol: float = 0.0) -> Tuple[int, float, float]:
    """
        Picks the `variant` minimizer over `candidates` at a distinguished `state`.

        Returns (action, u, t) where u is always the mean-improvement objective of the
        chosen action, so that x + u is the average cost of the resulting policy, and t
        is the expected return time to `state`. Numerators within `tol` of zero count as
        zero when ranking actions that never leave `state`.
    """
    best = None
    for a in candidates:
        numerator, time, stay = root_terms(mdp, state, a, sweep)
        objective = root_objective(variant, numerator, time, stay, tol)
        if best is None or objective < best[0]:
            best = (objective, a, numerator, time, stay)

    _, a, numerator, time, stay = best
    u = numerator / (1.0 + time)
    t = (1.0 + time) / (1.0 - stay) if stay < 1.0 else math.inf
    return a, u, t



def root_update(mdp: SkipFreeMdp, sweep: SweepState, variant: str = RootVariant.MEAN_IMPROVEMENT, restrict: Sequence[int] = None, tol: float = 0.0) -> SweepState:
    """ Fills in a0, u0 and t0; `restrict` limits the root to `restrict[0]` """
    RootVariant.check(variant)
    candidates = (restrict[Tree.ROOT],) if restrict is not None else range(mdp.num_actions(Tree.ROOT))
    sweep.a0, sweep.u0, sweep.t0 = choose_root_action(mdp, Tree.ROOT, candidates, sweep, variant, tol)
    sweep.action[Tree.ROOT] = sweep.a0
    return sweep



def evaluate_policy(mdp: SkipFreeMdp, policy: Sequence[int]) -> PolicyStats:
    """
        g(d), τ(d) and C(d) from a single restricted sweep at x = 0.
    """
    policy = check_policy(mdp, policy)
    sweep = root_update(mdp, backward_sweep(mdp, 0.0, restrict=policy), restrict=policy)
    return PolicyStats(g=sweep.u0, tau=sweep.t0, C=sweep.u0 * sweep.t0)



def relative_costs(tree: Tree, y: Sequence[float], root: int = Tree.ROOT) -> List[float]:
    """ h_j = Σ_{k∈Δ(root, j)} y_k on T(root); zero elsewhere """
    h = [0.0] * tree.num_nodes
    for j in tree.descendants(root):
        h[j] = h[tree.parent(j)] + y[j]
    return h



def residual(mdp: SkipFreeMdp, g: float, h: Sequence[float]) -> float:
    """ max_i |h_i - min_a {c_i(a) - g + Σ_j p_ij(a) h_j}| """
    matrix, costs, offsets = mdp.stacked_rows()
    h = np.asarray(h, dtype=float)
    values = costs - g + matrix @ h
    best = np.minimum.reduceat(values, offsets[:-1])
    return float(np.max(np.abs(h - best)))



def solve_average(mdp: SkipFreeMdp,
                  d0: Sequence[int] = None,
                  variant: str = RootVariant.MEAN_IMPROVEMENT,
                  tol: float = 1e-10,
                  max_iter: int = 100_000,
                  check: bool = True) -> SolveReport:
    """
        Skip-free policy improvement for a recurrent average-cost model.

        Starts from g_0 = g(d0) and repeats sweep + root update at x = g_n until the
        root improvement u0 >= -tol or the policy repeats. Raises
        MaxIterExceededException (carrying the trace so far) after `max_iter`
        improvement iterations.
    """
    RootVariant.check(variant)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if check:
        chain_class = classify(mdp)
        if not chain_class.is_recurrent:
            raise NotRecurrentException(chain_class)

    policy = check_policy(mdp, d0) if d0 is not None else default_policy(mdp)
    initial = root_update(mdp, backward_sweep(mdp, 0.0, restrict=policy), restrict=policy)
    x = initial.u0
    trace = [TraceRow(0, x, x)]
    logger.debug(f"g_0 = {x} for the initial policy {policy}")

    iteration = 0
    while True:
        iteration += 1
        if iteration > max_iter:
            raise MaxIterExceededException(max_iter, trace)

        sweep = root_update(mdp, backward_sweep(mdp, x), variant=variant, tol=tol)
        g_next = x + sweep.u0
        trace.append(TraceRow(iteration, g_next, sweep.u0))
        logger.debug(f"iteration {iteration}: g_n={g_next} u0={sweep.u0}")

        new_policy = sweep.policy
        if sweep.u0 >= -tol or new_policy == policy:
            break
        policy = new_policy
        x = g_next

    h = relative_costs(mdp.tree, sweep.y)
    logger.info(f"Converged after {iteration} iterations: g* = {g_next}")
    return SolveReport(
        g_star=g_next,
        h_star=h,
        policy=new_policy,
        trace=trace,
        iterations=iteration,
        variant=variant,
    )
