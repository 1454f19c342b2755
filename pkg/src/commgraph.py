"""
Robot communication graph.

Static undirected graph over robot indices with neighbor queries,
connectivity checks, random connected generation by average degree and
multi-hop broadcast accounting.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Optional

import networkx as nx
import numpy as np

from src.errors import InvalidArgumentError

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


@dataclass(frozen=True)
class CommGraph:
    """Undirected graph with canonical (i < j) edges and no self-loops."""
    n_robots: int
    edges: frozenset[Edge] = frozenset()

    def __post_init__(self):
        if self.n_robots < 1:
            raise InvalidArgumentError(f"A graph needs at least one robot, got {self.n_robots}")
        canonical = set()
        for i, j in self.edges:
            if i == j:
                raise InvalidArgumentError(f"Self-loop on robot {i}")
            if not (0 <= i < self.n_robots and 0 <= j < self.n_robots):
                raise InvalidArgumentError(f"Edge ({i}, {j}) references a robot outside [0, {self.n_robots})")
            canonical.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(canonical))

    @classmethod
    def full(cls, n: int) -> "CommGraph":
        return cls(n, frozenset(combinations(range(n), 2)))

    @classmethod
    def empty(cls, n: int) -> "CommGraph":
        return cls(n)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "CommGraph":
        return cls(n, frozenset((int(i), int(j)) for i, j in edges))

    @cached_property
    def nx_graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_robots))
        g.add_edges_from(sorted(self.edges))
        return g

    @property
    def average_degree(self) -> float:
        return 2.0 * len(self.edges) / self.n_robots

    def components(self) -> list[list[int]]:
        """Connected components as sorted robot lists, ordered by lowest member."""
        return sorted((sorted(c) for c in nx.connected_components(self.nx_graph)), key=lambda c: c[0])

    def describe(self) -> str:
        if len(self.edges) == self.n_robots * (self.n_robots - 1) // 2:
            return "full"
        if not self.edges:
            return "none"
        return f"edges({len(self.edges)}, avg_degree={self.average_degree:.2f})"


def _check_index(g: CommGraph, i: int) -> None:
    if not 0 <= i < g.n_robots:
        raise InvalidArgumentError(f"Robot index {i} out of range [0, {g.n_robots})")


def neighbors(g: CommGraph, i: int) -> list[int]:
    """Neighbors of robot i in ascending order."""
    _check_index(g, i)
    return sorted(g.nx_graph.neighbors(i))


def is_connected(g: CommGraph) -> bool:
    return nx.is_connected(g.nx_graph)


def max_degree(g: CommGraph) -> int:
    return max((d for _, d in g.nx_graph.degree()), default=0)


def broadcast_hops(g: CommGraph, source: int) -> list[int]:
    """
    BFS hop count from source to every robot.

    Raises:
        InvalidArgumentError: If the graph is disconnected or source is invalid.
    """
    _check_index(g, source)
    if not is_connected(g):
        raise InvalidArgumentError("Broadcast hop counts need a connected graph")
    hops = nx.single_source_shortest_path_length(g.nx_graph, source)
    return [hops[i] for i in range(g.n_robots)]


def random_connected(
    n: int,
    target_avg_degree: float,
    seed: int,
    max_degree: Optional[int] = None,
) -> CommGraph:
    """
    Random connected graph whose average degree reaches the target.

    A random spanning tree (each robot attaches to a uniformly chosen earlier
    robot in a shuffled order) is topped up with uniformly random non-edges
    until 2|E|/n >= target_avg_degree. With ``max_degree`` set, no vertex
    exceeds that degree.

    Raises:
        InvalidArgumentError: If the target degree is infeasible for n robots
            or cannot be reached under the degree cap.
    """
    if n < 1:
        raise InvalidArgumentError(f"n must be positive, got {n}")
    lower = 2.0 * (n - 1) / n
    if not (lower - 1e-12 <= target_avg_degree <= n - 1 + 1e-12):
        raise InvalidArgumentError(
            f"Average degree {target_avg_degree} infeasible for n={n}; must lie in [{lower:.4f}, {n - 1}]"
        )
    if max_degree is not None and n > 2 and max_degree < 2:
        raise InvalidArgumentError(f"max_degree={max_degree} cannot keep {n} robots connected")

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    degree = np.zeros(n, dtype=int)
    edges: set[Edge] = set()

    for pos in range(1, n):
        earlier = [int(v) for v in order[:pos] if max_degree is None or degree[v] < max_degree]
        if not earlier:
            raise InvalidArgumentError(f"max_degree={max_degree} too small for a spanning tree on {n} robots")
        parent = earlier[int(rng.integers(len(earlier)))]
        child = int(order[pos])
        edges.add((min(parent, child), max(parent, child)))
        degree[parent] += 1
        degree[child] += 1

    candidates = [e for e in combinations(range(n), 2) if e not in edges]
    for idx in rng.permutation(len(candidates)):
        if 2.0 * len(edges) / n >= target_avg_degree:
            break
        i, j = candidates[idx]
        if max_degree is not None and (degree[i] >= max_degree or degree[j] >= max_degree):
            continue
        edges.add((i, j))
        degree[i] += 1
        degree[j] += 1

    if 2.0 * len(edges) / n < target_avg_degree:
        raise InvalidArgumentError(
            f"Could not reach average degree {target_avg_degree} with max_degree={max_degree}"
        )

    g = CommGraph(n, frozenset(edges))
    logger.debug("Random graph n=%d avg_degree=%.3f highest degree=%d", n, g.average_degree, int(degree.max()))
    return g
