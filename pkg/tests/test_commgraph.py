"""
Tests for the communication graph.
"""

import pytest

from src.commgraph import (
    CommGraph,
    broadcast_hops,
    is_connected,
    max_degree,
    neighbors,
    random_connected,
)
from src.errors import InvalidArgumentError


class TestCommGraph:
    """Tests for CommGraph."""

    def test_full_graph(self):
        """Should connect every pair of robots."""
        g = CommGraph.full(4)
        assert neighbors(g, 2) == [0, 1, 3]
        assert g.average_degree == 3.0
        assert g.describe() == "full"

    def test_empty_graph(self):
        """Should leave every robot without neighbors."""
        g = CommGraph.empty(3)
        assert neighbors(g, 1) == []
        assert not is_connected(g)
        assert g.describe() == "none"

    def test_edges_are_canonical(self):
        """Should store each edge once with the smaller index first."""
        g = CommGraph.from_edges(3, [(1, 0), (0, 1), (2, 1)])
        assert g.edges == frozenset({(0, 1), (1, 2)})

    def test_self_loop_rejected(self):
        """Should reject a self loop."""
        with pytest.raises(InvalidArgumentError):
            CommGraph.from_edges(3, [(1, 1)])

    def test_out_of_range_edge_rejected(self):
        """Should reject an edge to a missing robot."""
        with pytest.raises(InvalidArgumentError):
            CommGraph.from_edges(3, [(0, 3)])

    def test_bad_neighbor_query(self):
        """Should reject a neighbor query for a missing robot."""
        with pytest.raises(InvalidArgumentError):
            neighbors(CommGraph.full(2), 5)

    def test_components(self):
        """Should list components sorted by their smallest robot."""
        g = CommGraph.from_edges(5, [(3, 4), (0, 2)])
        assert g.components() == [[0, 2], [1], [3, 4]]

    def test_single_robot(self):
        """Should treat one robot as a connected graph."""
        g = CommGraph.full(1)
        assert is_connected(g)
        assert max_degree(g) == 0
        assert broadcast_hops(g, 0) == [0]


class TestBroadcastHops:
    """Tests for broadcast_hops."""

    def test_path_graph(self):
        """Should count hops along a path."""
        g = CommGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
        assert broadcast_hops(g, 0) == [0, 1, 2, 3]
        assert broadcast_hops(g, 2) == [2, 1, 0, 1]

    def test_star(self):
        """Should count hops through the hub of a star."""
        g = CommGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
        assert broadcast_hops(g, 3) == [1, 2, 2, 0]

    def test_disconnected_rejected(self):
        """Should reject a disconnected graph."""
        with pytest.raises(InvalidArgumentError):
            broadcast_hops(CommGraph.from_edges(3, [(0, 1)]), 0)


class TestRandomConnected:
    """Tests for random_connected."""

    def test_reaches_target_degree(self):
        """Should reach the requested average degree while connected."""
        g = random_connected(10, 5.6, seed=0)
        assert is_connected(g)
        assert 5.6 <= g.average_degree <= 5.8

    def test_minimum_degree_is_a_tree(self):
        """Should build a spanning tree at the minimum degree."""
        g = random_connected(8, 2 * 7 / 8, seed=3)
        assert is_connected(g)
        assert len(g.edges) == 7

    def test_complete_when_target_is_maximal(self):
        """Should build the complete graph at the maximal degree."""
        assert random_connected(6, 5.0, seed=1) == CommGraph.full(6)

    def test_same_seed_same_graph(self):
        """Should build the same graph from the same seed."""
        assert random_connected(12, 3.0, seed=42).edges == random_connected(12, 3.0, seed=42).edges

    def test_different_seeds_differ(self):
        """Should build different graphs from different seeds."""
        graphs = {random_connected(12, 3.0, seed=s).edges for s in range(5)}
        assert len(graphs) > 1

    @pytest.mark.parametrize("target", [1.0, 6.0])
    def test_infeasible_degree(self, target):
        """Should reject a degree no connected graph can have."""
        with pytest.raises(InvalidArgumentError):
            random_connected(5, target, seed=0)

    @pytest.mark.parametrize("seed", range(10))
    def test_degree_cap(self, seed):
        """Should respect the degree cap."""
        g = random_connected(16, 2.0, seed=seed, max_degree=3)
        assert is_connected(g)
        assert max_degree(g) <= 3
        assert g.average_degree >= 2.0

    def test_cap_too_small(self):
        """Should reject a cap too small for the requested degree."""
        with pytest.raises(InvalidArgumentError):
            random_connected(5, 1.6, seed=0, max_degree=1)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
