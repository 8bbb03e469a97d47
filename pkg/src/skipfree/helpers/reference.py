"""
    Classical solvers used to cross-check the skip-free solvers. None of them use the
    tree structure or the sweep arithmetic; they work on dense transition matrices or
    plain sparse rows.
"""
import logging
import warnings

import numpy as np
import scipy.linalg

from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from typing import List, Sequence, Tuple

from skipfree.helpers.skip_free import SolverException, check_policy, default_policy
from skipfree.models.mdp import SkipFreeMdp, check_discount
from skipfree.models.reports import OracleReport


logger = logging.getLogger(__name__)


METHOD__ENUMERATION = "enumeration"
METHOD__POLICY_ITERATION = "policy-iteration"
METHOD__RELATIVE_VALUE_ITERATION = "relative-value-iteration"
METHOD__DISCOUNTED_VALUE_ITERATION = "discounted-value-iteration"

# Batched stationary solves above this condition number are redone one policy at a time
CONDITION_LIMIT = 1e10
CHUNK_SIZE = 4096



class SingularEvaluationException(SolverException):
    def __init__(self, policy: Sequence[int]):
        self.policy = tuple(policy)
        super().__init__(f"Evaluation system of policy {self.policy} is singular; the policy is not unichain")


class NoConvergenceException(SolverException):
    def __init__(self, tol: float, max_iter: int):
        self.tol = tol
        self.max_iter = max_iter
        super().__init__(f"No convergence to tol={tol} within {max_iter} iterations")


class MultichainException(SolverException):
    def __init__(self, policy: Sequence[int], classes: List[List[int]]):
        self.policy = tuple(policy)
        self.classes = classes
        super().__init__(f"Policy {self.policy} has {len(classes)} recurrent classes: {classes}")


class TooManyPoliciesException(SolverException):
    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} policies exceed the enumeration limit of {limit}")



def recurrent_classes(matrix: np.ndarray) -> List[List[int]]:
    """ Closed strongly connected components of the transition graph """
    graph = csr_matrix(matrix > 0)
    count, labels = connected_components(graph, directed=True, connection="strong")
    closed = np.ones(count, dtype=bool)
    rows, cols = graph.nonzero()
    leaving = labels[rows] != labels[cols]
    closed[labels[rows[leaving]]] = False
    return [np.flatnonzero(labels == c).tolist() for c in range(count) if closed[c]]



def _class_distribution(matrix: np.ndarray, states: List[int]) -> np.ndarray:
    block = matrix[np.ix_(states, states)]
    size = len(states)
    system = block.T - np.eye(size)
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    return scipy.linalg.solve(system, rhs)



def stationary_distribution(mdp: SkipFreeMdp, policy: Sequence[int]) -> np.ndarray:
    """ π with πP = π and Σπ = 1; transient states get 0 """
    policy = check_policy(mdp, policy)
    matrix = mdp.transition_matrix(policy)
    classes = recurrent_classes(matrix)
    if len(classes) != 1:
        raise MultichainException(policy, classes)
    pi = np.zeros(mdp.num_states)
    pi[classes[0]] = _class_distribution(matrix, classes[0])
    return pi



def _cheapest_class_cost(mdp: SkipFreeMdp, policy: Tuple[int]) -> float:
    matrix = mdp.transition_matrix(policy)
    costs = mdp.cost_vector(policy)
    return min(
        float(_class_distribution(matrix, states) @ costs[states])
        for states in recurrent_classes(matrix)
    )



def enumerate_policies(mdp: SkipFreeMdp, unichain_only: bool = True, max_policies: int = 1_000_000) -> OracleReport:
    """
        Evaluates every stationary deterministic policy and returns the cheapest (first
        in lexicographic order on ties).

        Policies are solved in batches; the few whose stationary system is
        ill-conditioned (multichain, or close to it) are classified one at a time and
        either skipped (`unichain_only`) or scored by their cheapest recurrent class.
    """
    count = mdp.num_policies
    if count > max_policies:
        raise TooManyPoliciesException(count, max_policies)

    matrix, costs, offsets = mdp.stacked_rows()
    n = mdp.num_states
    counts = [mdp.num_actions(i) for i in range(n)]
    best_g, best_index = np.inf, None
    skipped = 0

    rhs = np.zeros((n, 1))
    rhs[-1] = 1.0
    for start in range(0, count, CHUNK_SIZE):
        indexes = np.arange(start, min(start + CHUNK_SIZE, count))
        policies = np.stack(np.unravel_index(indexes, counts), axis=1)
        rows = policies + offsets[:-1]

        systems = np.transpose(matrix[rows], (0, 2, 1)) - np.eye(n)
        systems[:, -1, :] = 1.0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            conditioned = np.linalg.cond(systems) < CONDITION_LIMIT

        g = np.full(len(indexes), np.inf)
        if conditioned.any():
            pi = np.linalg.solve(systems[conditioned], np.broadcast_to(rhs, (int(conditioned.sum()), n, 1)))[..., 0]
            g[conditioned] = np.sum(pi * costs[rows[conditioned]], axis=1)

        for position in np.flatnonzero(~conditioned):
            policy = tuple(int(a) for a in policies[position])
            if len(recurrent_classes(mdp.transition_matrix(policy))) == 1:
                g[position] = float(stationary_distribution(mdp, policy) @ mdp.cost_vector(policy))
            elif unichain_only:
                skipped += 1
            else:
                g[position] = _cheapest_class_cost(mdp, policy)

        position = int(np.argmin(g))
        if g[position] < best_g:
            best_g, best_index = float(g[position]), int(indexes[position])

    if best_index is None:
        raise SolverException("No unichain policy found")

    policy = tuple(int(a) for a in np.unravel_index(best_index, counts))
    logger.debug(f"Enumerated {count} policies ({skipped} multichain skipped): g* = {best_g}")
    return OracleReport(g_star=best_g, h=None, policy=policy, method=METHOD__ENUMERATION, solves=count, skipped=skipped)



def _segment_argmin(values: np.ndarray, offsets: np.ndarray) -> List[int]:
    return [int(np.argmin(values[offsets[i]:offsets[i + 1]])) for i in range(len(offsets) - 1)]



def policy_iteration_average(mdp: SkipFreeMdp, d0: Sequence[int] = None, max_iter: int = 10_000) -> OracleReport:
    """
        Average-cost policy iteration with exact evaluation: unknowns (g, h_1..h_N) with
        h_0 = 0, solved by LU with partial pivoting. The current action is kept whenever
        it attains the minimum.
    """
    policy = check_policy(mdp, d0) if d0 is not None else default_policy(mdp)
    matrix, costs, offsets = mdp.stacked_rows()
    n = mdp.num_states

    for iteration in range(1, max_iter + 1):
        rows = np.array(policy) + offsets[:-1]
        system = np.eye(n) - matrix[rows]
        # Column 0 carries g instead of h_0 (which is pinned to 0)
        system[:, 0] = 1.0
        if np.linalg.cond(system) > 1e12:
            raise SingularEvaluationException(policy)
        solution = scipy.linalg.lu_solve(scipy.linalg.lu_factor(system), costs[rows])
        g = float(solution[0])
        h = solution.copy()
        h[0] = 0.0

        values = costs + matrix @ h
        improved = []
        for i in range(n):
            segment = values[offsets[i]:offsets[i + 1]]
            best = int(np.argmin(segment))
            current = policy[i]
            if segment[current] <= segment[best] + 1e-12 * (1.0 + abs(segment[best])):
                best = current
            improved.append(best)
        improved = tuple(improved)

        if improved == policy:
            logger.debug(f"Policy iteration converged after {iteration} evaluations: g* = {g}")
            return OracleReport(g_star=g, h=h.tolist(), policy=policy, method=METHOD__POLICY_ITERATION,
                iterations=iteration, solves=iteration)
        policy = improved

    raise NoConvergenceException(0.0, max_iter)



def rvi_sweep(mdp: SkipFreeMdp, v: List[float], aperiodicity: float = 0.5) -> Tuple[List[float], List[int]]:
    """
        One sweep of the Bellman operator of the aperiodicity-transformed model
        (P' = τP + (1 - τ)I, c' = τc). Plain per-row loops over the sparse rows.
    """
    tau = aperiodicity
    rows = mdp.rows
    new_v = [0.0] * len(v)
    actions = [0] * len(v)
    for i, state_rows in enumerate(rows):
        best = None
        for a, row in enumerate(state_rows):
            total = mdp.costs[i][a]
            for j, p in row:
                total += p * v[j]
            if best is None or total < best:
                best = total
                actions[i] = a
        new_v[i] = tau * best + (1.0 - tau) * v[i]
    return new_v, actions



def relative_value_iteration(mdp: SkipFreeMdp, tol: float = 1e-10, max_iter: int = 1_000_000, aperiodicity: float = 0.5) -> OracleReport:
    """
        Relative value iteration normalized at state 0, stopped when the span of the
        update is at most tol·τ. The transformed model's gain is τg.
    """
    tau = aperiodicity
    v = [0.0] * mdp.num_states
    for iteration in range(1, max_iter + 1):
        new_v, actions = rvi_sweep(mdp, v, tau)
        deltas = [a - b for a, b in zip(new_v, v)]
        high, low = max(deltas), min(deltas)
        v = [value - new_v[0] for value in new_v]
        if high - low <= tol * tau:
            g = (high + low) / 2.0 / tau
            logger.debug(f"Relative value iteration converged after {iteration} sweeps: g* = {g}")
            return OracleReport(g_star=g, h=v, policy=tuple(actions), method=METHOD__RELATIVE_VALUE_ITERATION,
                iterations=iteration)

    raise NoConvergenceException(tol, max_iter)



def discounted_value_iteration(mdp: SkipFreeMdp, beta: float, tol: float = 1e-10, max_iter: int = 1_000_000) -> OracleReport:
    """
        Value iteration for the β-discounted cost; stops once the sup-norm error bound
        β/(1-β)·|v_{n+1} - v_n| is at most tol·(1 + |v|).
    """
    beta = check_discount(beta)
    matrix, costs, offsets = mdp.stacked_rows()
    v = np.zeros(mdp.num_states)
    for iteration in range(1, max_iter + 1):
        new_v = np.minimum.reduceat(costs + beta * (matrix @ v), offsets[:-1])
        change = float(np.max(np.abs(new_v - v)))
        v = new_v
        if beta / (1.0 - beta) * change <= tol * (1.0 + float(np.max(np.abs(v)))):
            policy = tuple(_segment_argmin(costs + beta * (matrix @ v), offsets))
            logger.debug(f"Discounted value iteration converged after {iteration} sweeps")
            return OracleReport(g_star=None, h=v.tolist(), policy=policy, method=METHOD__DISCOUNTED_VALUE_ITERATION,
                iterations=iteration)

    raise NoConvergenceException(tol, max_iter)



def discounted_residual(mdp: SkipFreeMdp, beta: float, v: Sequence[float]) -> float:
    """ max_i |v_i - min_a {c_i(a) + β Σ_j p_ij(a) v_j}| """
    matrix, costs, offsets = mdp.stacked_rows()
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v - np.minimum.reduceat(costs + beta * (matrix @ v), offsets[:-1]))))
