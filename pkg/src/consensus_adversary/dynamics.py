"""Time grids, kernels, trajectory propagation, and the disagreement objective.

The system matrix is always symmetric with zero row sums, so matrix
exponentials are computed through an eigendecomposition: exact for this class
and free of Pade/squaring tuning. Controls are piecewise constant on the grid,
so per-step propagation by the exact exponential leaves control-switching
granularity as the only discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import LinkControl, NetworkTopology, build_system_matrix


class DynamicsError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] with `steps` intervals (steps+1 samples)."""

    T: float
    steps: int

    def __post_init__(self):
        if not self.T > 0:
            raise DynamicsError(f"horizon must be positive, got {self.T}")
        if self.steps < 1:
            raise DynamicsError(f"steps must be positive, got {self.steps}")

    @property
    def h(self) -> float:
        return self.T / self.steps

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.steps + 1)


@dataclass(frozen=True)
class Kernel:
    """Positive weighting kernel k(t) for the disagreement objective.

    Either constant, or a table of (t, k) pairs interpolated linearly between
    grid points. Table kernels must be positive at every sample.
    """

    kind: str
    value: float = 1.0
    table: tuple[tuple[float, float], ...] = ()

    @classmethod
    def constant(cls, value: float = 1.0) -> "Kernel":
        if not value > 0:
            raise DynamicsError(f"kernel must be positive, got {value}")
        return cls(kind="constant", value=float(value))

    @classmethod
    def from_table(cls, points) -> "Kernel":
        pts = tuple(sorted((float(t), float(k)) for (t, k) in points))
        if len(pts) < 2:
            raise DynamicsError("table kernel needs at least two points")
        if any(k <= 0 for (_, k) in pts):
            raise DynamicsError("table kernel values must be positive")
        return cls(kind="table", table=pts)

    def sample(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.full_like(t, self.value)
        ts = np.array([p[0] for p in self.table])
        ks = np.array([p[1] for p in self.table])
        return np.interp(t, ts, ks)

    def constants(self, grid: TimeGrid) -> tuple[float, float]:
        """(sup t*k(t), sup_t int_t^T tau*k(tau) dtau) on the grid, by quadrature.

        The integrand tau*k(tau) is nonnegative, so the running integral is
        maximal at t = 0; both constants reduce to grid maxima.
        """
        t = grid.times()
        k = self.sample(t)
        k_check = float(np.max(t * k))
        k_hat = float(np.trapezoid(t * k, t))
        return k_check, k_hat


@dataclass(frozen=True)
class Trajectory:
    """Sampled state (and optionally co-state) on a uniform grid."""

    grid: TimeGrid
    x: np.ndarray          # (steps+1, n)
    p: np.ndarray | None = None

    def __post_init__(self):
        if self.x.shape[0] != self.grid.steps + 1:
            raise DynamicsError(
                f"trajectory has {self.x.shape[0]} samples, grid wants {self.grid.steps + 1}")
        if self.p is not None and self.p.shape != self.x.shape:
            raise DynamicsError("co-state samples must match state shape")

    @property
    def n(self) -> int:
        return self.x.shape[1]

    def with_costate(self, p: np.ndarray) -> "Trajectory":
        return Trajectory(grid=self.grid, x=self.x, p=p)


def matrix_exponential(A: np.ndarray, t: float) -> np.ndarray:
    """exp(A t) for a symmetric zero-row-sum matrix, via eigendecomposition.

    Rejects t < 0: the result is only guaranteed doubly stochastic for t >= 0.
    """
    if t < 0:
        raise DynamicsError(f"matrix exponential requires t >= 0, got {t}")
    A = np.asarray(A, dtype=float)
    if not np.allclose(A, A.T, atol=1e-12):
        raise DynamicsError("system matrix must be symmetric")
    vals, vecs = np.linalg.eigh(A)
    return (vecs * np.exp(vals * t)) @ vecs.T


class PropagatorCache:
    """Caches exp(A h) per control bit pattern for closed-loop simulations."""

    def __init__(self, topology: NetworkTopology, h: float):
        self.topology = topology
        self.h = h
        self._cache: dict[tuple[int, ...], np.ndarray] = {}
        self._matrices: dict[tuple[int, ...], np.ndarray] = {}

    def system_matrix(self, control: LinkControl) -> np.ndarray:
        if control.bits not in self._matrices:
            self._matrices[control.bits] = build_system_matrix(self.topology, control)
        return self._matrices[control.bits]

    def step(self, control: LinkControl) -> np.ndarray:
        if control.bits not in self._cache:
            self._cache[control.bits] = matrix_exponential(self.system_matrix(control), self.h)
        return self._cache[control.bits]


def propagate(x0: np.ndarray, schedule: list[LinkControl],
              topology: NetworkTopology, grid: TimeGrid) -> Trajectory:
    """Propagate x' = A(t) x with a piecewise-constant link-control schedule.

    One control per grid step; each step applies the exact exponential of the
    corresponding system matrix.
    """
    if len(schedule) != grid.steps:
        raise DynamicsError(
            f"schedule has {len(schedule)} controls, grid has {grid.steps} steps")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (topology.n,):
        raise DynamicsError(f"x0 has shape {x0.shape}, expected ({topology.n},)")
    cache = PropagatorCache(topology, grid.h)
    x = np.empty((grid.steps + 1, topology.n))
    x[0] = x0
    for k, control in enumerate(schedule):
        x[k + 1] = cache.step(control) @ x[k]
    return Trajectory(grid=grid, x=x)


def average_and_disagreement(x: np.ndarray) -> tuple[float, np.ndarray]:
    """Average of the entries and the deviation vector from it."""
    x = np.asarray(x, dtype=float)
    avg = float(np.mean(x))
    return avg, x - avg


def objective(traj: Trajectory, kernel: Kernel) -> float:
    """J = int_0^T k(t) |x(t) - xbar|^2 dt by composite trapezoid on the grid.

    xbar is the consensus line of the trajectory's initial state.
    """
    t = traj.grid.times()
    xbar = np.mean(traj.x[0])
    dev = traj.x - xbar
    integrand = kernel.sample(t) * np.sum(dev * dev, axis=1)
    return float(np.trapezoid(integrand, t))
