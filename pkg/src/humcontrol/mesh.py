"""Spatial and temporal meshes, trapezoid quadrature, norms and indicators.

Both solution components are stored on the full node set ``0..N+1`` of the
unit interval: Dirichlet values are pinned to zero, Neumann values are
genuine unknowns.  Co-locating the components means the zero-order couplings
of the coupled solvers need no interpolation.

Fields are plain 1-D numpy arrays aligned with ``Grid1D.nodes``; time series
are 1-D arrays aligned with ``TimeMesh.times``.  All quadrature is composite
trapezoid, which is second order and matches the spatial accuracy of the
finite-difference operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on (0, 1) with ``n_interior`` interior nodes.

    Nodes are ``x_i = i*h`` for ``i = 0..N+1`` with spacing ``h = 1/(N+1)``;
    the boundary nodes ``x_0 = 0`` and ``x_{N+1} = 1`` are included.
    """

    n_interior: int

    def __post_init__(self) -> None:
        if int(self.n_interior) != self.n_interior or self.n_interior < 1:
            raise ValueError(f"n_interior must be a positive integer, got {self.n_interior!r}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_interior + 1)

    @property
    def n_nodes(self) -> int:
        return self.n_interior + 2

    @cached_property
    def nodes(self) -> np.ndarray:
        return _readonly(np.linspace(0.0, 1.0, self.n_nodes))

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights: h at interior nodes, h/2 at the two boundary nodes."""
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return _readonly(w)


@dataclass(frozen=True)
class TimeMesh:
    """Uniform partition of [0, T] into ``m_steps`` steps of size dt = T/M."""

    horizon: float
    m_steps: int

    def __post_init__(self) -> None:
        if not (self.horizon > 0.0) or not np.isfinite(self.horizon):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon!r}")
        if int(self.m_steps) != self.m_steps or self.m_steps < 1:
            raise ValueError(f"m_steps must be a positive integer, got {self.m_steps!r}")

    @property
    def dt(self) -> float:
        return self.horizon / self.m_steps

    @cached_property
    def times(self) -> np.ndarray:
        return _readonly(np.linspace(0.0, self.horizon, self.m_steps + 1))

    @cached_property
    def quad_weights(self) -> np.ndarray:
        """Trapezoid weights in time: dt at interior samples, dt/2 at the ends."""
        w = np.full(self.m_steps + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return _readonly(w)


def make_grid(n_interior: int) -> Grid1D:
    """Grid with N interior nodes and spacing h = 1/(N+1)."""
    return Grid1D(n_interior)


def make_time_mesh(horizon: float, m_steps: int) -> TimeMesh:
    """Time mesh with M uniform steps of size dt = T/M."""
    return TimeMesh(horizon, m_steps)


def as_field(values, grid: Grid1D) -> np.ndarray:
    """Coerce to a float array and check alignment with the grid nodes."""
    f = np.asarray(values, dtype=float)
    if f.shape != (grid.n_nodes,):
        raise ValueError(f"field of length {f.shape} does not match grid with {grid.n_nodes} nodes")
    return f


def as_series(values, tm: TimeMesh) -> np.ndarray:
    s = np.asarray(values, dtype=float)
    if s.shape != (tm.m_steps + 1,):
        raise ValueError(f"series of length {s.shape} does not match time mesh with {tm.m_steps + 1} samples")
    return s


def l2_norm(f, grid: Grid1D) -> float:
    """Trapezoid approximation of the L2(0,1) norm of a nodal field."""
    f = as_field(f, grid)
    return float(np.sqrt(np.dot(grid.quad_weights, f * f)))


def l2_norm_time(s, tm: TimeMesh) -> float:
    """Trapezoid approximation of the L2(0,T) norm of a time series."""
    s = as_series(s, tm)
    return float(np.sqrt(np.dot(tm.quad_weights, s * s)))


def mean_value(f, grid: Grid1D) -> float:
    """Trapezoid approximation of the spatial average over (0,1); |domain| = 1."""
    f = as_field(f, grid)
    return float(np.dot(grid.quad_weights, f))


def indicator(a: float, b: float, grid: Grid1D) -> np.ndarray:
    """Nodal indicator of the open interval (a, b): 1 at nodes with a < x < b.

    The inequality is strict, so boundary nodes of the interval never carry
    the indicator; control windows are compactly contained in (0,1).
    """
    if not (0.0 <= a < b <= 1.0):
        raise ValueError(f"need 0 <= a < b <= 1, got a={a!r}, b={b!r}")
    x = grid.nodes
    return ((x > a) & (x < b)).astype(float)
