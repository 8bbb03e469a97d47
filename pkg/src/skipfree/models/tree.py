import logging

from typing import Dict, List, Mapping, Sequence, Tuple, Union


logger = logging.getLogger(__name__)



class InvalidTreeException(Exception):
    pass


class CycleDetectedException(InvalidTreeException):
    def __init__(self, node: int):
        self.node = node
        super().__init__(f"Parent chain of node {node} never reaches the root")


class NotInSubtreeException(InvalidTreeException):
    def __init__(self, node: int, root: int):
        self.node = node
        self.root = root
        super().__init__(f"{node} is not in the subtree of {root}")


class DanglingParentException(InvalidTreeException):
    def __init__(self, node: int, parent: int):
        self.node = node
        self.parent = parent
        super().__init__(f"Node {node} has parent {parent}, which is not a node of the tree")



class Tree:
    """
        Rooted tree over the dense node ids 0..N with root 0.

        Everything is computed once at construction; instances are immutable and safe to
        share. Subtree membership is an interval test over a depth-first (preorder)
        numbering: `j` is in T(k) iff `tin[k] <= tin[j] < tout[k]`.
    """
    ROOT = 0

    def __init__(self, parents: Sequence[int]):
        """
            `parents[i]` is the parent of node i; `parents[0]` must be None. Use
            `build_tree()` to construct from a parent mapping with validation.
        """
        self._parents: Tuple[int] = tuple(parents)
        n = len(self._parents)

        children: List[List[int]] = [[] for _ in range(n)]
        for node in range(1, n):
            children[self._parents[node]].append(node)
        self._children: Tuple[Tuple[int]] = tuple(tuple(c) for c in children)

        # Breadth-first pass for the level sets
        self._level = [0] * n
        levels = [[Tree.ROOT]]
        while True:
            next_level = [child for node in levels[-1] for child in self._children[node]]
            if not next_level:
                break
            for node in next_level:
                self._level[node] = len(levels)
            levels.append(next_level)
        self._levels: Tuple[Tuple[int]] = tuple(tuple(sorted(level)) for level in levels)

        # Depth-first pass for the subtree intervals
        self._preorder: List[int] = []
        self._tin = [0] * n
        self._tout = [0] * n
        stack = [(Tree.ROOT, False)]
        while stack:
            node, done = stack.pop()
            if done:
                self._tout[node] = len(self._preorder)
                continue
            self._tin[node] = len(self._preorder)
            self._preorder.append(node)
            stack.append((node, True))
            for child in reversed(self._children[node]):
                stack.append((child, False))


    def __repr__(self):
        return f"Tree(nodes={self.num_nodes}, depth={self.depth})"


    def __eq__(self, other):
        if isinstance(other, Tree):
            return self._parents == other._parents
        return False


    @property
    def num_nodes(self) -> int:
        return len(self._parents)


    @property
    def depth(self) -> int:
        """ M: the index of the deepest level """
        return len(self._levels) - 1


    @property
    def levels(self) -> Tuple[Tuple[int]]:
        return self._levels


    @property
    def parents(self) -> Tuple[int]:
        return self._parents


    @property
    def terminals(self) -> List[int]:
        return [node for node in range(self.num_nodes) if not self._children[node]]


    @property
    def is_chain(self) -> bool:
        return all(len(c) <= 1 for c in self._children)


    def parent(self, node: int) -> int:
        return self._parents[node]


    def children(self, node: int) -> Tuple[int]:
        return self._children[node]


    def level(self, node: int) -> int:
        return self._level[node]


    def in_subtree(self, node: int, root: int) -> bool:
        """ True iff `node` is in T(root) """
        return self._tin[root] <= self._tin[node] < self._tout[root]


    def is_descendant(self, node: int, ancestor: int) -> bool:
        """ True iff `node` is in D(ancestor) """
        return node != ancestor and self.in_subtree(node, ancestor)


    def subtree(self, node: int) -> List[int]:
        """ T(node) in preorder, starting with `node` itself """
        return self._preorder[self._tin[node]:self._tout[node]]


    def descendants(self, node: int) -> List[int]:
        """ D(node) in preorder """
        return self._preorder[self._tin[node] + 1:self._tout[node]]


    def path(self, start: int, end: int) -> Tuple[int]:
        """
            Δ(start, end): the nodes after `start` on the way down to `end`, ending with
            `end`. Empty when start == end.
        """
        if not self.in_subtree(end, start):
            raise NotInSubtreeException(end, start)
        nodes = []
        node = end
        while node != start:
            nodes.append(node)
            node = self._parents[node]
        return tuple(reversed(nodes))



def build_tree(parent_list: Union[Mapping[int, int], Sequence[int]]) -> Tree:
    """
        Builds a `Tree` from the parents of nodes 1..N.

        Accepts either a mapping {node: parent} or a sequence where entry k is the
        parent of node k+1 (the model text format's `parents` field).
    """
    if isinstance(parent_list, Mapping):
        mapping: Dict[int, int] = dict(parent_list)
    else:
        mapping = {index + 1: parent for index, parent in enumerate(parent_list)}

    n = len(mapping)
    if Tree.ROOT in mapping:
        raise InvalidTreeException("The root 0 cannot have a parent")
    missing = sorted(set(range(1, n + 1)) - set(mapping))
    if missing:
        raise InvalidTreeException(f"Parent map must cover nodes 1..{n}; missing {missing}")

    parents = [None] * (n + 1)
    for node, parent in mapping.items():
        if not isinstance(parent, int) or isinstance(parent, bool) or not 0 <= parent <= n:
            raise DanglingParentException(node, parent)
        parents[node] = parent

    # Every node must reach the root in at most n steps
    for node in range(1, n + 1):
        current = node
        for _ in range(n):
            current = parents[current]
            if current == Tree.ROOT:
                break
        else:
            raise CycleDetectedException(node)

    tree = Tree(parents)
    logger.debug(f"Built {tree} with level sizes {[len(level) for level in tree.levels]}")
    return tree
