"""
Tests for the biased mass functions and target assignment.
"""

import math
from types import SimpleNamespace

import numpy as np
import pytest

from src.bias import (
    BiasParams,
    assign_target,
    f_S_biased,
    f_U_biased,
    f_V_biased,
    favor_one,
)
from src.env import cached_field
from src.errors import InvalidArgumentError
from src.models import RobotPose, primitive_set
from src.planners.distributed import build_trees
from src.planners.samplers import SamplerSuite, uniform
from tests.conftest import SPEEDS, TURN_RATES, make_context

STRAIGHT = primitive_set([0.0, 0.2, 1.0], [0])


class TestBiasParams:
    """Tests for BiasParams."""

    @pytest.mark.parametrize("value", [0.5, 1.0, 0.2])
    def test_rejects_outside_open_interval(self, value):
        """Should reject a probability outside (0.5, 1)."""
        with pytest.raises(InvalidArgumentError):
            BiasParams(p_v=value)


class TestGroupMasses:
    """Tests for f_V_biased."""

    def test_single_deepest_group(self):
        """Should put p_v on the single deepest group."""
        tree = SimpleNamespace(group_count=4, deepest_groups={2})
        np.testing.assert_allclose(f_V_biased(tree, BiasParams()), [0.1, 0.1, 0.7, 0.1])

    def test_all_deepest_is_uniform(self):
        """Should be uniform when every group is deepest."""
        tree = SimpleNamespace(group_count=3, deepest_groups={0, 1, 2})
        np.testing.assert_allclose(f_V_biased(tree, BiasParams()), [1 / 3] * 3)

    def test_single_group(self):
        """Should give all mass to a lone group."""
        tree = SimpleNamespace(group_count=1, deepest_groups={0})
        np.testing.assert_allclose(f_V_biased(tree, BiasParams()), [1.0])

    def test_shared_preference(self):
        """Should split p_v evenly over several deepest groups."""
        tree = SimpleNamespace(group_count=5, deepest_groups={1, 3})
        masses = f_V_biased(tree, BiasParams(p_v=0.8))
        np.testing.assert_allclose(masses, [0.2 / 3, 0.4, 0.2 / 3, 0.4, 0.2 / 3])

    def test_no_expandable_group_is_uniform(self):
        """Should fall back to uniform when no group can still be expanded."""
        tree = SimpleNamespace(group_count=3, deepest_groups=set())
        np.testing.assert_allclose(f_V_biased(tree, BiasParams()), [1 / 3] * 3)


class TestControlMasses:
    """Tests for f_U_biased."""

    def test_favors_approaching_control(self, open_room):
        """Should favor the control that moves toward the target."""
        field = cached_field(open_room, (8.0, 5.0))
        masses = f_U_biased(RobotPose(1.0, 5.0, 0.0), STRAIGHT, field, (8.0, 5.0), 1.0, BiasParams(p_u=0.6))
        np.testing.assert_allclose(masses, [0.4 / 3, 0.4 / 3, 0.6 + 0.4 / 3])

    def test_uniform_within_range(self, open_room):
        """Should be uniform once the target is within sensing range."""
        field = cached_field(open_room, (1.5, 5.0))
        masses = f_U_biased(RobotPose(1.0, 5.0, 0.0), STRAIGHT, field, (1.5, 5.0), 1.0, BiasParams())
        np.testing.assert_allclose(masses, [1 / 3] * 3)

    def test_uniform_when_unreachable(self, walled_room):
        """Should be uniform when no successor can reach the target."""
        field = cached_field(walled_room, (6.0, 5.0))
        masses = f_U_biased(RobotPose(1.0, 5.0, 0.0), STRAIGHT, field, (6.0, 5.0), 1.0, BiasParams())
        np.testing.assert_allclose(masses, [1 / 3] * 3)

    def test_empty_primitive_set(self, open_room):
        """Should reject an empty primitive set."""
        with pytest.raises(InvalidArgumentError):
            f_U_biased(RobotPose(1.0, 5.0), [], cached_field(open_room, (8.0, 5.0)), (8.0, 5.0), 1.0, BiasParams())


class TestCandidateMasses:
    """Tests for f_S_biased."""

    def test_favors_most_certain(self):
        """Should favor the candidate with the smallest determinant."""
        log_dets = np.log([0.5, 0.1, 0.3])
        np.testing.assert_allclose(f_S_biased(log_dets, BiasParams(p_s=0.8)), [0.2 / 3, 0.8 + 0.2 / 3, 0.2 / 3])

    def test_singleton(self):
        """Should give all mass to a single candidate."""
        np.testing.assert_array_equal(f_S_biased([-3.0], BiasParams()), [1.0])

    def test_tie_goes_to_first(self):
        """Should favor the first of equally certain candidates."""
        masses = f_S_biased([-2.0, -2.0, 0.0], BiasParams())
        assert masses[0] > masses[1] == masses[2]

    def test_scale_invariant(self):
        """Should not change when every determinant is scaled."""
        log_dets = np.log([0.5, 0.1, 0.3])
        a = f_S_biased(log_dets, BiasParams())
        b = f_S_biased(log_dets + math.log(1e-6), BiasParams())
        np.testing.assert_array_equal(a, b)

    def test_empty(self):
        """Should reject an empty candidate set."""
        with pytest.raises(InvalidArgumentError):
            f_S_biased([], BiasParams())


class TestMassProperties:
    """Every sampler returns a distribution with a positive floor."""

    @staticmethod
    def check(masses, p):
        n = len(masses)
        assert math.fsum(masses) == pytest.approx(1.0, abs=1e-12)
        assert masses.min() >= (1.0 - p) / n - 1e-15
        assert masses.max() == pytest.approx(1.0 / n) or masses.max() == pytest.approx(p + (1.0 - p) / n)

    def test_random_candidate_masses(self):
        """Should keep f_S a distribution over random candidate sets."""
        rng = np.random.default_rng(20)
        for _ in range(1000):
            size = int(rng.integers(2, 40))
            p = float(rng.uniform(0.51, 0.99))
            masses = f_S_biased(rng.normal(size=size), BiasParams(p_s=p))
            self.check(masses, p)
            assert masses.max() == pytest.approx(p + (1.0 - p) / size)

    def test_random_group_masses(self):
        """Should keep f_V a distribution for any set of favored groups."""
        rng = np.random.default_rng(21)
        for _ in range(1000):
            k = int(rng.integers(1, 60))
            favored = int(rng.integers(0, k + 1))
            deepest = set(int(g) for g in rng.choice(k, size=favored, replace=False))
            p = float(rng.uniform(0.51, 0.99))
            masses = f_V_biased(SimpleNamespace(group_count=k, deepest_groups=deepest), BiasParams(p_v=p))
            assert math.fsum(masses) == pytest.approx(1.0, abs=1e-12)
            assert masses.min() > 0.0
            if 0 < len(deepest) < k:
                assert math.fsum(masses[sorted(deepest)]) == pytest.approx(p)

    def test_group_masses_on_grown_trees(self):
        """Should keep f_V a distribution on trees the planner actually grows."""
        ctx = make_context(robots=((1.0, 1.0, 0.0), (4.0, 4.0, 0.0)), max_depth=3)
        samplers = SamplerSuite(ctx)
        for seed in range(5):
            for tree in build_trees(ctx, n_max=30, seed=seed).trees:
                masses = samplers.group_masses(tree)
                assert len(masses) == tree.group_count
                assert math.fsum(masses) == pytest.approx(1.0, abs=1e-12)
                assert masses.min() > 0.0
                for k in tree.deepest_groups:
                    assert any(tree.nodes[m].depth < 3 for m in tree.groups[k])

    def test_random_control_masses(self, open_room):
        """Should keep f_U a distribution from random poses toward random targets."""
        rng = np.random.default_rng(22)
        primitives = primitive_set(SPEEDS, TURN_RATES)
        for _ in range(1000):
            x, y, gx, gy = rng.uniform(0.0, 10.0, size=4)
            pose = RobotPose(float(x), float(y), float(rng.uniform(-math.pi, math.pi)))
            p = float(rng.uniform(0.51, 0.99))
            goal = (float(gx), float(gy))
            masses = f_U_biased(pose, primitives, cached_field(open_room, goal), goal, 1.0, BiasParams(p_u=p))
            assert len(masses) == len(primitives)
            self.check(masses, p)

    @pytest.mark.parametrize("size", [1, 2, 7, 39, 500])
    def test_uniform(self, size):
        """Should spread mass evenly over every outcome."""
        masses = uniform(size)
        assert math.fsum(masses) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(masses, 1.0 / size)

    def test_favor_one(self):
        """Should add p to the preferred outcome on top of the floor."""
        masses = favor_one(4, 3, 0.6)
        np.testing.assert_allclose(masses, [0.1, 0.1, 0.1, 0.7])


class TestAssignTarget:
    """Tests for assign_target."""

    TARGETS = ((2.0, 1.0), (6.0, 1.0), (4.0, 1.0))

    def fields(self, workspace):
        return [cached_field(workspace, t) for t in self.TARGETS]

    def test_skips_satisfied_and_occupied(self, open_room):
        """Should skip satisfied targets and targets taken by neighbors."""
        got = assign_target((1.0, 1.0), [1.0, 1e-6, 1.0], None, {0}, self.fields(open_room), [1e-5] * 3)
        assert got == 2

    def test_nearest_unsatisfied(self, open_room):
        """Should pick the nearest unsatisfied target."""
        got = assign_target((1.0, 1.0), [1.0, 1.0, 1.0], None, [], self.fields(open_room), [1e-5] * 3)
        assert got == 0

    def test_all_occupied_keeps_parent(self, open_room):
        """Should keep the parent's target when every target is taken."""
        got = assign_target((1.0, 1.0), [1.0, 1.0, 1.0], 1, [0, 1, 2], self.fields(open_room), [1e-5] * 3)
        assert got == 1

    def test_all_satisfied_keeps_parent(self, open_room):
        """Should keep the parent's target when every target is satisfied."""
        got = assign_target((1.0, 1.0), [1e-6] * 3, 2, [], self.fields(open_room), [1e-5] * 3)
        assert got == 2

    def test_unassigned_neighbors_ignored(self, open_room):
        """Should ignore neighbors with no target."""
        got = assign_target((1.0, 1.0), [1.0, 1.0, 1.0], None, [None, None], self.fields(open_room), [1e-5] * 3)
        assert got == 0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
