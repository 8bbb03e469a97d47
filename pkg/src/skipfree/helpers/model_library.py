import logging

import numpy as np

from dataclasses import dataclass
from typing import Callable, List, Mapping, Sequence, Tuple, Union

from skipfree.helpers.skip_free import SolverException
from skipfree.models.mdp import (ChainClass, CtMdp, InvalidModelException, SkipFreeMdp, classify, validate_ctmdp,
    validate_skip_free)
from skipfree.models.tree import Tree, build_tree


logger = logging.getLogger(__name__)


# Every required positive probability in a random row is at least this
PROBABILITY_FLOOR = 0.05



class CapacityOverflowException(InvalidModelException):
    def __init__(self, states: int, limit: int):
        self.states = states
        self.limit = limit
        super().__init__(f"Queue would have {states} states; the limit is {limit}")


class GenerationFailedException(SolverException):
    def __init__(self, seed: int, retries: int, chain_class: str):
        self.seed = seed
        self.retries = retries
        super().__init__(f"No {chain_class} instance found for seed {seed} in {retries} attempts")



def queue_length_cost(state: Tuple[int], action: int, service_cost: Sequence[float]) -> float:
    """ Holding cost of one per waiting job plus the service cost of the action """
    return sum(1 for job in state if job) + service_cost[action]



@dataclass
class QueueSpec:
    """
        Single-server queue with K job classes and room for M jobs.

        * lambdas[k]: arrival rate of class k+1
        * mu[k][a]: service rate of a class k+1 job under action a
        * cost: cost rate of (state vector, action index); defaults to the queue length
            plus `service_cost[a]`
    """
    K: int
    M: int
    lambdas: Sequence[float]
    mu: Sequence[Sequence[float]]
    actions: Sequence[str] = None
    service_cost: Sequence[float] = None
    cost: Callable[[Tuple[int], int], float] = None
    max_states: int = 100_000

    def __post_init__(self):
        if self.K < 1 or self.M < 1:
            raise InvalidModelException("A queue needs K >= 1 classes and capacity M >= 1")
        if len(self.lambdas) != self.K or len(self.mu) != self.K:
            raise InvalidModelException(f"Expected arrival and service rates for {self.K} classes")
        num_actions = len(self.mu[0])
        if num_actions == 0 or any(len(rates) != num_actions for rates in self.mu):
            raise InvalidModelException("Every class needs one service rate per action")
        if any(rate <= 0 for rate in self.lambdas) or any(rate <= 0 for rates in self.mu for rate in rates):
            raise InvalidModelException("Arrival and service rates must be positive")
        if self.actions is None:
            self.actions = [str(a) for a in range(num_actions)]
        if self.service_cost is None:
            self.service_cost = [0.0] * num_actions
        if len(self.actions) != num_actions or len(self.service_cost) != num_actions:
            raise InvalidModelException("Action labels and service costs must match the service rates")


    @property
    def num_actions(self) -> int:
        return len(self.actions)


    @property
    def num_states(self) -> int:
        return sum(self.K ** m for m in range(self.M + 1))



def default_queue_spec(K: int, M: int, arrival_rate: float = 0.3) -> QueueSpec:
    """
        Slow and fast service with class-dependent rates; the total arrival rate is
        split evenly over the classes.
    """
    return QueueSpec(
        K=K,
        M=M,
        lambdas=[arrival_rate / K] * K,
        mu=[[0.5 + 0.1 * k, 1.0 + 0.2 * k] for k in range(K)],
        actions=["slow", "fast"],
        service_cost=[0.0, 0.5],
    )



def _vector_label(vector: Tuple[int]) -> str:
    return "(" + ",".join(str(job) for job in vector) + ")"



def make_multiclass_queue(spec: QueueSpec) -> CtMdp:
    """
        State (i_1, ..., i_M) lists the class of each job (0 for an empty slot) with the
        job in service first. A service completion moves to (i_2, ..., i_M, 0), its
        parent; a class k arrival moves to the child (k, i_1, ..., i_{M-1}) and is lost
        when the queue is full. Ids follow a depth-first traversal with children in
        class order.
    """
    if spec.num_states > spec.max_states:
        raise CapacityOverflowException(spec.num_states, spec.max_states)

    K, M = spec.K, spec.M
    vectors: List[Tuple[int]] = []
    parents = {}
    children: List[List[int]] = []
    stack = [((0,) * M, None)]
    while stack:
        vector, parent = stack.pop()
        node = len(vectors)
        vectors.append(vector)
        children.append([])
        if parent is not None:
            parents[node] = parent
            children[parent].append(node)
        if vector[-1] == 0:
            # Push in reverse so class 1 is visited first
            for k in range(K, 0, -1):
                stack.append(((k,) + vector[:-1], node))

    cost = spec.cost
    if cost is None:
        cost = lambda vector, action: queue_length_cost(vector, action, spec.service_cost)

    rates = []
    cost_rates = []
    for node, vector in enumerate(vectors):
        state_rows = []
        for a in range(spec.num_actions):
            row = []
            if node != Tree.ROOT:
                row.append((parents[node], spec.mu[vector[0] - 1][a]))
            for k, child in enumerate(children[node]):
                row.append((child, spec.lambdas[k]))
            state_rows.append(row)
        rates.append(state_rows)
        cost_rates.append([cost(vector, a) for a in range(spec.num_actions)])

    ct = CtMdp(build_tree(parents), [spec.actions] * len(vectors), rates, cost_rates,
        labels=[_vector_label(vector) for vector in vectors])
    validate_ctmdp(ct)
    logger.debug(f"Built a K={K} M={M} queue with {len(vectors)} states")
    return ct



def make_birth_death(M: int,
                     actions: Union[Mapping[str, Tuple[float, float, float]], Sequence[Mapping[str, Tuple[float, float, float]]]],
                     costs: Union[Mapping[str, float], Sequence[Mapping[str, float]]],
                     continuous: bool = False) -> Union[SkipFreeMdp, CtMdp]:
    """
        Chain 0 - 1 - ... - M. Each action is (up, stay, down): probabilities (or rates
        when `continuous`) of moving to i+1, staying and moving to i-1. A single
        mapping applies to every state.
    """
    if M < 1:
        raise InvalidModelException("A birth-death chain needs M >= 1")
    if isinstance(actions, Mapping):
        actions = [actions] * (M + 1)
    if isinstance(costs, Mapping):
        costs = [costs] * (M + 1)
    if len(actions) != M + 1 or len(costs) != M + 1:
        raise InvalidModelException(f"Expected actions and costs for states 0..{M}")

    labels = []
    rows = []
    cost_table = []
    for i in range(M + 1):
        state_labels = list(actions[i])
        state_rows = []
        for label in state_labels:
            up, stay, down = actions[i][label]
            if i == 0 and down:
                raise InvalidModelException(f"State 0 action {label!r} cannot move down")
            if i == M and up:
                raise InvalidModelException(f"State {M} action {label!r} cannot move up")
            row = [(i, stay)]
            if up:
                row.append((i + 1, up))
            if down:
                row.append((i - 1, down))
            state_rows.append(row)
        labels.append(state_labels)
        rows.append(state_rows)
        cost_table.append([costs[i][label] for label in state_labels])

    tree = build_tree(list(range(M)))
    if continuous:
        model = CtMdp(tree, labels, rows, cost_table)
        validate_ctmdp(model)
    else:
        model = SkipFreeMdp(tree, labels, rows, cost_table)
        validate_skip_free(model)
    return model



def _random_tree(rng: np.random.Generator, depth: int, branching: int, max_states: int) -> Tree:
    parents = {}
    level = [Tree.ROOT]
    for _ in range(depth):
        next_level = []
        for node in level:
            for _ in range(int(rng.integers(1, branching + 1))):
                if len(parents) + 1 >= max_states:
                    break
                child = len(parents) + 1
                parents[child] = node
                next_level.append(child)
        if not next_level:
            break
        level = next_level
    return build_tree(parents)



def _random_row(rng: np.random.Generator, support: List[int]) -> List[Tuple[int, float]]:
    weights = rng.random(len(support))
    probabilities = PROBABILITY_FLOOR + (1.0 - PROBABILITY_FLOOR * len(support)) * weights / weights.sum()
    return [(j, float(p)) for j, p in zip(support, probabilities)]



def _random_instance(rng: np.random.Generator, tree: Tree, actions_per_state: int, chain_class: str) -> SkipFreeMdp:
    n = tree.num_nodes
    actions = []
    transitions = []
    costs = []
    for i in range(n):
        parent = tree.parent(i)
        descendants = tree.descendants(i)
        num_actions = int(rng.integers(1, actions_per_state + 1))
        state_rows = []
        for a in range(num_actions):
            # Root rows must leave the root; recurrent rows must reach the parent
            climbs = parent is not None and (chain_class == ChainClass.RECURRENT or a == 0 or rng.random() < 0.5)
            support = [parent] if climbs else []
            if rng.random() < 0.5:
                support.append(i)
            for k in descendants:
                if rng.random() < 0.5:
                    support.append(k)
            if parent is None and not any(j != i for j in support):
                support.append(descendants[int(rng.integers(len(descendants)))])
            if not support:
                support.append(i)
            state_rows.append(_random_row(rng, sorted(support)))
        actions.append([chr(ord("a") + a) for a in range(num_actions)])
        transitions.append(state_rows)
        costs.append([float(c) for c in rng.uniform(0.0, 10.0, num_actions)])
    return SkipFreeMdp(tree, actions, transitions, costs)



def random_skip_free(seed: int,
                     depth: int = 2,
                     branching: int = 2,
                     actions_per_state: int = 2,
                     chain_class: str = ChainClass.RECURRENT,
                     max_states: int = 10,
                     retries: int = 100) -> SkipFreeMdp:
    """
        Seeded random instance on a random tree of the given depth and branching
        (branching 1 gives a chain). Transition supports are drawn from
        {ρ(i), i} ∪ D(i); costs are uniform on [0, 10). Candidates that fail validation
        or have the wrong chain class are redrawn up to `retries` times.
    """
    if chain_class not in (ChainClass.RECURRENT, ChainClass.COMMUNICATING_ONLY):
        raise ValueError(f"Can only generate recurrent or communicating instances, not {chain_class!r}")
    rng = np.random.default_rng(seed)
    for attempt in range(retries):
        tree = _random_tree(rng, depth, branching, max_states)
        if tree.num_nodes < 2:
            continue
        mdp = _random_instance(rng, tree, actions_per_state, chain_class)
        try:
            validate_skip_free(mdp)
        except InvalidModelException:
            continue
        if classify(mdp).kind == chain_class:
            logger.debug(f"Seed {seed}: {chain_class} instance after {attempt + 1} attempts")
            return mdp
    raise GenerationFailedException(seed, retries, chain_class)



def two_policy_chain() -> SkipFreeMdp:
    """ Two states; state 1 chooses between a slow cheap exit (a) and a fast dear one (b) """
    return make_birth_death(
        1,
        actions=[
            {"a": (0.5, 0.5, 0.0)},
            {"a": (0.0, 0.5, 0.5), "b": (0.0, 0.0, 1.0)},
        ],
        costs=[{"a": 0.0}, {"a": 2.0, "b": 2.4}],
    )



def communicating_example() -> SkipFreeMdp:
    """
        Chain 0 - 1 - 2 where state 1 can either return to 0 (a) or drop to 2 (b).
        Not recurrent: under b the root is transient.
    """
    return make_birth_death(
        2,
        actions=[
            {"a": (1.0, 0.0, 0.0)},
            {"a": (0.0, 0.0, 1.0), "b": (1.0, 0.0, 0.0)},
            {"a": (0.0, 0.0, 1.0)},
        ],
        costs=[{"a": 5.0}, {"a": 0.0, "b": 0.0}, {"a": 1.0}],
    )



def mm1_service_control(M: int = 8, arrival_rate: float = 1.0, service_rates: Tuple[float, float] = (1.5, 3.0),
                        service_costs: Tuple[float, float] = (0.0, 0.8)) -> CtMdp:
    """
        M/M/1 queue with room for M jobs and a slow or fast server; cost rate is the
        number in system plus the service cost of the chosen speed.
    """
    actions = []
    costs = []
    for i in range(M + 1):
        up = arrival_rate if i < M else 0.0
        state_actions = {}
        state_costs = {}
        for label, rate, service_cost in zip(("slow", "fast"), service_rates, service_costs):
            state_actions[label] = (up, 0.0, rate if i > 0 else 0.0)
            state_costs[label] = i + service_cost
        actions.append(state_actions)
        costs.append(state_costs)
    return make_birth_death(M, actions, costs, continuous=True)
