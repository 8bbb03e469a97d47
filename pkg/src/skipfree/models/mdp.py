import logging
import math

import numpy as np

from dataclasses import dataclass
from functools import cached_property
from typing import FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from .tree import Tree


logger = logging.getLogger(__name__)


# Rows whose total is within this of 1 are renormalized; anything further off is rejected.
ROW_SUM_TOLERANCE = 1e-9

Row = Tuple[Tuple[int, float], ...]



class InvalidModelException(Exception):
    pass


class SkipFreeViolationException(InvalidModelException):
    def __init__(self, state: int, action: int, dest: int, action_label: str = None):
        self.state = state
        self.action = action
        self.dest = dest
        super().__init__(f"State {state} action {action_label or action!r} moves to {dest}, which is not its parent, itself or a descendant")


class RowSumException(InvalidModelException):
    def __init__(self, state: int, action: int, total: float, action_label: str = None):
        self.state = state
        self.action = action
        self.total = total
        super().__init__(f"State {state} action {action_label or action!r}: probabilities sum to {total!r}, not 1")


class DegenerateRootException(InvalidModelException):
    def __init__(self, action: int, action_label: str = None):
        self.state = 0
        self.action = action
        super().__init__(f"Root action {action_label or action!r} never leaves the root (p_00 = 1)")


class UnreachableParentException(InvalidModelException):
    def __init__(self, state: int):
        self.state = state
        super().__init__(f"State {state} has no action with a positive probability of moving to its parent")


class NotDescendantException(InvalidModelException):
    def __init__(self, node: int, state: int):
        self.node = node
        self.state = state
        super().__init__(f"{node} is not a descendant of {state}")



@dataclass(frozen=True)
class TailRow:
    """
        One (state, action) row in the form the backward sweep consumes.

        * up: p_{iρ(i)}(a) (0 at the root)
        * stay: p_ii(a)
        * tail: (k, p̄_ik(a)) for every k in D(i) with p̄_ik(a) > 0, sorted by k
        * cost: c_i(a)
    """
    up: float
    stay: float
    tail: Tuple[Tuple[int, float], ...]
    cost: float



class ChainClass:
    """
        Classification of a validated model.

        * kind: one of RECURRENT, COMMUNICATING_ONLY, NOT_COMMUNICATING
        * witness: the fixed point of the reachability sequence from the root; equals
            the full state set unless the model is NOT_COMMUNICATING.
    """
    RECURRENT = "recurrent"
    COMMUNICATING_ONLY = "communicating"
    NOT_COMMUNICATING = "not-communicating"
    ALL_KINDS = [
        (RECURRENT, "recurrent"),
        (COMMUNICATING_ONLY, "communicating (not recurrent)"),
        (NOT_COMMUNICATING, "not communicating"),
    ]

    def __init__(self, kind: str, witness: FrozenSet[int]):
        self.kind = kind
        self.witness = witness


    def __repr__(self):
        return f"ChainClass({self.kind}, witness={sorted(self.witness)})"


    def __eq__(self, other):
        if isinstance(other, ChainClass):
            return self.kind == other.kind and self.witness == other.witness
        return False


    @property
    def display_name(self) -> str:
        return dict(ChainClass.ALL_KINDS)[self.kind]


    @property
    def is_recurrent(self) -> bool:
        return self.kind == ChainClass.RECURRENT


    @property
    def is_communicating(self) -> bool:
        return self.kind != ChainClass.NOT_COMMUNICATING



def _clean_rows(entries) -> Row:
    """ Merges duplicate destinations, drops zero entries, sorts by destination """
    if isinstance(entries, Mapping):
        entries = entries.items()
    merged = {}
    for dest, value in entries:
        merged[int(dest)] = merged.get(int(dest), 0.0) + float(value)
    return tuple((dest, value) for dest, value in sorted(merged.items()) if value != 0.0)



class _TreeModel:
    """
        Shared structure of the discrete and continuous time models: a tree, per-state
        action labels, one sparse row per (state, action) and per-row costs. Action
        arguments everywhere are indices into `actions[i]`; labels are for display and
        the text format.
    """
    KIND: str = None

    def __init__(self,
                 tree: Tree,
                 actions: Sequence[Sequence[str]],
                 rows: Sequence[Sequence[Union[Mapping[int, float], Sequence[Tuple[int, float]]]]],
                 costs: Sequence[Sequence[float]],
                 labels: Sequence[str] = None):
        self.tree = tree
        self.actions: Tuple[Tuple[str]] = tuple(tuple(str(a) for a in state_actions) for state_actions in actions)
        self._rows: Tuple[Tuple[Row]] = tuple(tuple(_clean_rows(row) for row in state_rows) for state_rows in rows)
        self.costs: Tuple[Tuple[float]] = tuple(tuple(float(c) for c in state_costs) for state_costs in costs)
        self.labels: Optional[Tuple[str]] = tuple(str(label) for label in labels) if labels is not None else None

        n = tree.num_nodes
        if not (len(self.actions) == len(self._rows) == len(self.costs) == n):
            raise InvalidModelException(f"Expected actions, transitions and costs for {n} states")
        for i in range(n):
            if not self.actions[i]:
                raise InvalidModelException(f"State {i} has no actions")
            if len(set(self.actions[i])) != len(self.actions[i]):
                raise InvalidModelException(f"State {i} has duplicate action labels")
            if not (len(self._rows[i]) == len(self.costs[i]) == len(self.actions[i])):
                raise InvalidModelException(f"State {i}: every action needs one transition row and one cost")
        if self.labels is not None and len(self.labels) != n:
            raise InvalidModelException(f"Expected {n} state labels")


    def __repr__(self):
        return f"{self.__class__.__name__}(states={self.num_states}, rows={sum(len(a) for a in self.actions)})"


    def __eq__(self, other):
        if type(other) is type(self):
            return (self.tree == other.tree and
                self.actions == other.actions and
                self._rows == other._rows and
                self.costs == other.costs and
                self.labels == other.labels)
        return False


    @property
    def num_states(self) -> int:
        return self.tree.num_nodes


    @property
    def raw_rows(self) -> Tuple[Tuple[Row]]:
        """ Rows exactly as given (no renormalization); what the text format writes """
        return self._rows


    @property
    def num_policies(self) -> int:
        return math.prod(len(a) for a in self.actions)


    def num_actions(self, state: int) -> int:
        return len(self.actions[state])


    def action_label(self, state: int, action: int) -> str:
        return self.actions[state][action]


    def action_index(self, state: int, label: str) -> int:
        try:
            return self.actions[state].index(label)
        except ValueError:
            raise InvalidModelException(f"State {state} has no action {label!r}")


    def state_label(self, state: int) -> str:
        if self.labels is not None:
            return self.labels[state]
        return str(state)


    def policy_labels(self, policy: Sequence[int]) -> List[str]:
        return [self.action_label(i, a) for i, a in enumerate(policy)]



class SkipFreeMdp(_TreeModel):
    """
        Discrete time MDP that is skip-free in the negative direction on `tree`.

        Immutable after construction. `transitions[i][a]` is a sparse row of
        (destination, probability) pairs. Rows that sum to within ROW_SUM_TOLERANCE of 1
        are renormalized in every derived quantity (`rows`, `tail_rows`, dense
        matrices); the stored rows stay exactly as given so the text format round-trips.
    """
    KIND = "dtmdp"

    def __init__(self,
                 tree: Tree,
                 actions: Sequence[Sequence[str]],
                 transitions,
                 costs: Sequence[Sequence[float]],
                 labels: Sequence[str] = None,
                 discount: float = None):
        super().__init__(tree, actions, transitions, costs, labels=labels)
        self.discount = float(discount) if discount is not None else None


    def __eq__(self, other):
        return super().__eq__(other) and self.discount == other.discount


    @property
    def transitions(self) -> Tuple[Tuple[Row]]:
        return self._rows


    @cached_property
    def rows(self) -> Tuple[Tuple[Row]]:
        """ Normalized sparse rows """
        normalized = []
        for state_rows in self._rows:
            state_normalized = []
            for row in state_rows:
                total = math.fsum(p for _, p in row)
                if total > 0 and abs(total - 1.0) <= ROW_SUM_TOLERANCE:
                    row = tuple((j, p / total) for j, p in row)
                state_normalized.append(row)
            normalized.append(tuple(state_normalized))
        return tuple(normalized)


    def probability(self, state: int, action: int, dest: int) -> float:
        for j, p in self.rows[state][action]:
            if j == dest:
                return p
        return 0.0


    @cached_property
    def tail_rows(self) -> Tuple[Tuple[TailRow]]:
        """
            Per-row upper-tail table. Σ_{k∈D(i)} p̄_ik(a)·z_k is then a single pass over
            `tail`; building it costs O(support × depth) once.
        """
        tree = self.tree
        table = []
        for i, state_rows in enumerate(self.rows):
            parent = tree.parent(i)
            state_table = []
            for a, row in enumerate(state_rows):
                up = stay = 0.0
                tails = {}
                for j, p in row:
                    if j == i:
                        stay += p
                    elif parent is not None and j == parent:
                        up += p
                    elif tree.is_descendant(j, i):
                        for k in tree.path(i, j):
                            tails[k] = tails.get(k, 0.0) + p
                    else:
                        raise SkipFreeViolationException(i, a, j, self.action_label(i, a))
                tail = tuple((k, p_bar) for k, p_bar in sorted(tails.items()) if p_bar > 0)
                state_table.append(TailRow(up=up, stay=stay, tail=tail, cost=self.costs[i][a]))
            table.append(tuple(state_table))
        return tuple(table)


    def transition_matrix(self, policy: Sequence[int]) -> np.ndarray:
        n = self.num_states
        matrix = np.zeros((n, n))
        for i, a in enumerate(policy):
            for j, p in self.rows[i][a]:
                matrix[i, j] += p
        return matrix


    def cost_vector(self, policy: Sequence[int]) -> np.ndarray:
        return np.array([self.costs[i][a] for i, a in enumerate(policy)], dtype=float)


    @cached_property
    def _stacked(self):
        n = self.num_states
        offsets = np.zeros(n + 1, dtype=int)
        offsets[1:] = np.cumsum([len(a) for a in self.actions])
        matrix = np.zeros((offsets[-1], n))
        costs = np.zeros(offsets[-1])
        for i in range(n):
            for a, row in enumerate(self.rows[i]):
                for j, p in row:
                    matrix[offsets[i] + a, j] += p
                costs[offsets[i] + a] = self.costs[i][a]
        matrix.setflags(write=False)
        costs.setflags(write=False)
        offsets.setflags(write=False)
        return matrix, costs, offsets


    def stacked_rows(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
            Dense (rows × states) transition matrix with one row per (state, action),
            the matching cost vector and `offsets` such that state i owns rows
            offsets[i]:offsets[i+1]. Read-only arrays.
        """
        return self._stacked



class CtMdp(_TreeModel):
    """
        Continuous time MDP on `tree`: `rates[i][a]` is a sparse row of
        (destination, rate) pairs (self-transitions allowed) and `cost_rates[i][a]` is
        the cost incurred per unit time.
    """
    KIND = "ctmdp"

    def __init__(self,
                 tree: Tree,
                 actions: Sequence[Sequence[str]],
                 rates,
                 cost_rates: Sequence[Sequence[float]],
                 labels: Sequence[str] = None):
        super().__init__(tree, actions, rates, cost_rates, labels=labels)


    @property
    def rates(self) -> Tuple[Tuple[Row]]:
        return self._rows


    @property
    def cost_rates(self) -> Tuple[Tuple[float]]:
        return self.costs


    def total_rate(self, state: int, action: int) -> float:
        return math.fsum(q for _, q in self._rows[state][action])



def _check_support(model: _TreeModel, i: int, a: int, j: int):
    tree = model.tree
    if not 0 <= j < model.num_states:
        raise SkipFreeViolationException(i, a, j, model.action_label(i, a))
    if j == i or (i != Tree.ROOT and j == tree.parent(i)) or tree.is_descendant(j, i):
        return
    raise SkipFreeViolationException(i, a, j, model.action_label(i, a))



def validate_skip_free(mdp: SkipFreeMdp):
    """
        Returns None iff every SkipFreeMdp invariant holds; otherwise raises the first
        violation found, scanning states in id order.
    """
    tree = mdp.tree
    for i in range(mdp.num_states):
        for a, row in enumerate(mdp.transitions[i]):
            label = mdp.action_label(i, a)
            if not math.isfinite(mdp.costs[i][a]):
                raise InvalidModelException(f"State {i} action {label!r} has a non-finite cost")
            for j, p in row:
                if not (math.isfinite(p) and 0.0 <= p <= 1.0):
                    raise InvalidModelException(f"State {i} action {label!r}: probability {p!r} to {j} is not in [0, 1]")
            total = math.fsum(p for _, p in row)
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                raise RowSumException(i, a, total, label)
            for j, _ in row:
                _check_support(mdp, i, a, j)

    for a, tail_row in enumerate(mdp.tail_rows[Tree.ROOT]):
        if tail_row.stay >= 1.0:
            raise DegenerateRootException(a, mdp.action_label(Tree.ROOT, a))

    for i in range(1, mdp.num_states):
        if not any(tail_row.up > 0 for tail_row in mdp.tail_rows[i]):
            raise UnreachableParentException(i)

    logger.debug(f"Validated {mdp}")



def validate_ctmdp(ct: CtMdp):
    """ Rates must be finite, nonnegative and respect the skip-free support rule """
    for i in range(ct.num_states):
        for a, row in enumerate(ct.rates[i]):
            label = ct.action_label(i, a)
            if not math.isfinite(ct.cost_rates[i][a]):
                raise InvalidModelException(f"State {i} action {label!r} has a non-finite cost rate")
            for j, q in row:
                if not (math.isfinite(q) and q >= 0.0):
                    raise InvalidModelException(f"State {i} action {label!r}: rate {q!r} to {j} must be finite and nonnegative")
                _check_support(ct, i, a, j)



def upper_tail(mdp: SkipFreeMdp, i: int, a: int, k: int) -> float:
    """ p̄_ik(a): probability that the next state from i under a lies in T(k) """
    if not mdp.tree.is_descendant(k, i):
        raise NotDescendantException(k, i)
    return math.fsum(p for j, p in mdp.rows[i][a] if mdp.tree.in_subtree(j, k))



def classify(mdp: SkipFreeMdp) -> ChainClass:
    """
        RECURRENT when every non-root action can move to the parent (so every policy's
        chain has one recurrent class holding the root); otherwise the reachability
        fixed point from the root decides between COMMUNICATING_ONLY and
        NOT_COMMUNICATING.
    """
    all_states = frozenset(range(mdp.num_states))
    recurrent = all(
        tail_row.up > 0 and tail_row.stay < 1.0
        for i in range(1, mdp.num_states)
        for tail_row in mdp.tail_rows[i]
    )
    if recurrent:
        return ChainClass(ChainClass.RECURRENT, all_states)

    # N_m: states reachable from the root in at most m steps under some choice of actions
    reached = {Tree.ROOT}
    frontier = [Tree.ROOT]
    while frontier:
        next_frontier = []
        for i in frontier:
            for row in mdp.rows[i]:
                for j, p in row:
                    if p > 0 and j not in reached:
                        reached.add(j)
                        next_frontier.append(j)
        frontier = next_frontier

    witness = frozenset(reached)
    if witness == all_states:
        return ChainClass(ChainClass.COMMUNICATING_ONLY, witness)
    return ChainClass(ChainClass.NOT_COMMUNICATING, witness)



class BadDiscountException(InvalidModelException):
    def __init__(self, beta):
        self.beta = beta
        super().__init__(f"Discount factor must lie strictly between 0 and 1, got {beta!r}")



def check_discount(beta: float) -> float:
    try:
        beta = float(beta)
    except (TypeError, ValueError):
        raise BadDiscountException(beta)
    if not 0.0 < beta < 1.0:
        raise BadDiscountException(beta)
    return beta
