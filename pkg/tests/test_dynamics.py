"""Unit tests for grids, kernels, matrix exponentials, and propagation."""

import numpy as np
import pytest

from consensus_adversary.dynamics import (DynamicsError, Kernel, TimeGrid,
                                          Trajectory, average_and_disagreement,
                                          matrix_exponential, objective,
                                          propagate)
from consensus_adversary.topology import LinkControl, NetworkTopology


TWO_NODE = NetworkTopology(n=2, edges=((0, 1, 1.0),))


def two_node_matrix():
    return np.array([[-1.0, 1.0], [1.0, -1.0]])


class TestTimeGrid:
    def test_step_size(self):
        grid = TimeGrid(T=2.0, steps=400)
        assert grid.h == pytest.approx(0.005)
        t = grid.times()
        assert t[0] == 0.0 and t[-1] == 2.0 and len(t) == 401

    def test_validation(self):
        with pytest.raises(DynamicsError):
            TimeGrid(T=0.0, steps=10)
        with pytest.raises(DynamicsError):
            TimeGrid(T=1.0, steps=0)


class TestKernel:
    def test_constant_sampling(self):
        k = Kernel.constant(2.5)
        assert np.all(k.sample(np.linspace(0, 1, 5)) == 2.5)

    def test_constant_must_be_positive(self):
        with pytest.raises(DynamicsError):
            Kernel.constant(0.0)

    def test_table_interpolation(self):
        k = Kernel.from_table([(0.0, 1.0), (2.0, 3.0)])
        assert k.sample(np.array([1.0]))[0] == pytest.approx(2.0)

    def test_table_validation(self):
        with pytest.raises(DynamicsError):
            Kernel.from_table([(0.0, 1.0)])
        with pytest.raises(DynamicsError):
            Kernel.from_table([(0.0, 1.0), (1.0, -1.0)])

    def test_constants_for_unit_kernel(self):
        # k == 1 on [0, 2]: sup t*k = 2 and int_0^2 tau dtau = 2
        k_check, k_hat = Kernel.constant(1.0).constants(TimeGrid(T=2.0, steps=400))
        assert k_check == pytest.approx(2.0)
        assert k_hat == pytest.approx(2.0, rel=1e-5)


class TestMatrixExponential:
    def test_two_node_closed_form(self):
        # exp(At) = [[(1+e^{-2t})/2, (1-e^{-2t})/2], ...] for the unit edge
        A = two_node_matrix()
        for t in (0.0, 0.3, 1.7):
            E = matrix_exponential(A, t)
            d = np.exp(-2.0 * t)
            expected = 0.5 * np.array([[1 + d, 1 - d], [1 - d, 1 + d]])
            assert np.max(np.abs(E - expected)) < 1e-12

    def test_semigroup_property(self):
        rng = np.random.default_rng(7)
        w = rng.uniform(0.2, 2.0, 6)
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        topo = NetworkTopology(n=4, edges=tuple((i, j, ww) for (i, j), ww in zip(pairs, w)))
        from consensus_adversary.topology import build_system_matrix
        A = build_system_matrix(topo, LinkControl.none(4))
        lhs = matrix_exponential(A, 0.7)
        rhs = matrix_exponential(A, 0.3) @ matrix_exponential(A, 0.4)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_doubly_stochastic(self):
        E = matrix_exponential(two_node_matrix(), 0.5)
        assert np.allclose(E.sum(axis=0), 1.0, atol=1e-12)
        assert np.allclose(E.sum(axis=1), 1.0, atol=1e-12)
        assert np.min(E) >= 0.0

    def test_negative_time_rejected(self):
        with pytest.raises(DynamicsError):
            matrix_exponential(two_node_matrix(), -0.1)

    def test_asymmetric_rejected(self):
        with pytest.raises(DynamicsError):
            matrix_exponential(np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0)


class TestPropagation:
    def test_average_conserved(self):
        grid = TimeGrid(T=2.0, steps=50)
        schedule = [LinkControl.none(2)] * 50
        traj = propagate(np.array([0.0, 2.0]), schedule, TWO_NODE, grid)
        assert np.allclose(traj.x.sum(axis=1), 2.0, atol=1e-12)

    def test_two_node_decay(self):
        grid = TimeGrid(T=2.0, steps=100)
        traj = propagate(np.array([0.0, 2.0]), [LinkControl.none(2)] * 100, TWO_NODE, grid)
        t = grid.times()
        expected = 1.0 - np.exp(-2.0 * t)  # x1(t) for x0 = [0, 2]
        assert np.max(np.abs(traj.x[:, 0] - expected)) < 1e-12

    def test_schedule_length_checked(self):
        grid = TimeGrid(T=1.0, steps=10)
        with pytest.raises(DynamicsError):
            propagate(np.array([0.0, 2.0]), [LinkControl.none(2)] * 9, TWO_NODE, grid)

    def test_x0_shape_checked(self):
        grid = TimeGrid(T=1.0, steps=10)
        with pytest.raises(DynamicsError):
            propagate(np.array([0.0, 2.0, 1.0]), [LinkControl.none(2)] * 10, TWO_NODE, grid)

    def test_trajectory_shape_checked(self):
        with pytest.raises(DynamicsError):
            Trajectory(grid=TimeGrid(T=1.0, steps=10), x=np.zeros((5, 2)))


class TestObjective:
    def test_average_and_disagreement(self):
        avg, e = average_and_disagreement(np.array([0.0, 2.0]))
        assert avg == 1.0
        assert np.array_equal(e, np.array([-1.0, 1.0]))

    def test_two_node_analytic_value(self):
        # J = (1 - e^{-4T})/2 exactly; trapezoid carries an O(h^2) error
        grid = TimeGrid(T=2.0, steps=400)
        traj = propagate(np.array([0.0, 2.0]), [LinkControl.none(2)] * 400, TWO_NODE, grid)
        J = objective(traj, Kernel.constant(1.0))
        exact = (1.0 - np.exp(-8.0)) / 2.0
        assert J == pytest.approx(exact, rel=1e-4)

    def test_consensus_start_zero(self):
        grid = TimeGrid(T=1.0, steps=20)
        traj = propagate(np.array([3.0, 3.0]), [LinkControl.none(2)] * 20, TWO_NODE, grid)
        # the propagator rows sum to 1 only to machine precision, so the
        # deviation picks up ~1e-16 noise and J ~ its square
        assert objective(traj, Kernel.constant(1.0)) < 1e-25
