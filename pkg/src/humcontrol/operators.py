"""Finite-difference Laplacians and the block-tridiagonal implicit-Euler step.

The coupled step couples the two components pointwise, so the system matrix
is block tridiagonal with 2x2 node blocks (unknown order ``u_i, v_i`` per
node, interleaved).  A block-Thomas factorization with 2x2 pivots is kept for
the reference solve and for pivot diagnostics; repeated solves inside time
loops go through a sparse LU of the same matrix, which is the O(N) hot path.

Boundary closure:

* Dirichlet rows (component u) are identity rows with zero data; the matrix
  columns of boundary u-unknowns are zeroed as well, so the assembled matrix
  is exactly the reduced system padded with trivial equations.
* Neumann rows (component v) use the mirror ghost node, e.g. at ``x_0`` the
  second difference is ``2(f_1 - f_0)/h^2``, which keeps the stencil second
  order and symmetric with respect to the trapezoid weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._kernels import HAVE_NUMBA, block_thomas_solve
from .mesh import Grid1D, as_field


class SingularPivotError(RuntimeError):
    """Raised when the block factorization meets a (near-)singular 2x2 pivot."""

    def __init__(self, node: int, det: float):
        super().__init__(f"singular 2x2 pivot at node {node} (det={det:.3e})")
        self.node = node
        self.det = det


@dataclass(frozen=True)
class LinearStencil:
    """Three-point second-difference operator with a boundary closure.

    ``kind`` is "dirichlet" (boundary values are pinned to zero; boundary
    rows and columns of the operator vanish) or "neumann" (ghost-node
    closure encoding a zero normal derivative).
    """

    kind: str
    grid: Grid1D

    def apply(self, values) -> np.ndarray:
        f = as_field(values, self.grid)
        h2 = self.grid.h ** 2
        out = np.zeros_like(f)
        if self.kind == "dirichlet":
            # boundary values do not enter: the operator acts on the
            # zero-trace subspace
            inner = f[1:-1]
            out[1:-1] = -2.0 * inner
            out[2:-1] += inner[:-1]
            out[1:-2] += inner[1:]
        else:
            out[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
            out[0] = 2.0 * (f[1] - f[0])
            out[-1] = 2.0 * (f[-2] - f[-1])
        out /= h2
        return out

    def dense(self) -> np.ndarray:
        n = self.grid.n_nodes
        a = np.zeros((n, n))
        eye = np.eye(n)
        for j in range(n):
            a[:, j] = self.apply(eye[j])
        return a


def laplacian_dirichlet(grid: Grid1D) -> LinearStencil:
    return LinearStencil("dirichlet", grid)


def laplacian_neumann(grid: Grid1D) -> LinearStencil:
    return LinearStencil("neumann", grid)


def _inv2(blocks: np.ndarray, node: int) -> np.ndarray:
    """Invert one 2x2 block, guarding against singular pivots."""
    det = blocks[0, 0] * blocks[1, 1] - blocks[0, 1] * blocks[1, 0]
    scale = max(1.0, float(np.abs(blocks).max()) ** 2)
    if not np.isfinite(det) or abs(det) < 1e-14 * scale:
        raise SingularPivotError(node, float(det))
    return np.array([[blocks[1, 1], -blocks[0, 1]], [-blocks[1, 0], blocks[0, 0]]]) / det


class BlockStepMatrix:
    """Block-tridiagonal matrix with 2x2 node blocks, factorized at creation.

    ``diag``, ``lower`` and ``upper`` are arrays of shape ``(n_nodes, 2, 2)``;
    ``lower[i]`` couples node ``i`` to node ``i-1`` (``lower[0]`` ignored) and
    ``upper[i]`` couples node ``i`` to node ``i+1`` (``upper[-1]`` ignored).
    """

    def __init__(self, diag: np.ndarray, lower: np.ndarray, upper: np.ndarray):
        diag = np.asarray(diag, dtype=float)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        n = diag.shape[0]
        if diag.shape != (n, 2, 2) or lower.shape != (n, 2, 2) or upper.shape != (n, 2, 2):
            raise ValueError("block arrays must all have shape (n_nodes, 2, 2)")
        self.n_nodes = n
        self.diag, self.lower, self.upper = diag, lower, upper
        self._factor_thomas()
        self._lu = None if HAVE_NUMBA else spla.splu(self._assemble_csc(), permc_spec="NATURAL")

    def _factor_thomas(self) -> None:
        n = self.n_nodes
        pinv = np.empty((n, 2, 2))
        lpinv = np.zeros((n, 2, 2))
        pivot = self.diag[0].copy()
        pinv[0] = _inv2(pivot, 0)
        for i in range(1, n):
            lpinv[i] = self.lower[i] @ pinv[i - 1]
            pivot = self.diag[i] - lpinv[i] @ self.upper[i - 1]
            pinv[i] = _inv2(pivot, i)
        self._pinv = pinv
        self._lpinv = lpinv

    def _assemble_csc(self) -> sp.csc_matrix:
        n = self.n_nodes
        node = np.arange(n)
        rows, cols, vals = [], [], []
        for bi in range(2):
            for bj in range(2):
                rows.append(2 * node + bi)
                cols.append(2 * node + bj)
                vals.append(self.diag[:, bi, bj])
                rows.append(2 * node[1:] + bi)
                cols.append(2 * (node[1:] - 1) + bj)
                vals.append(self.lower[1:, bi, bj])
                rows.append(2 * node[:-1] + bi)
                cols.append(2 * (node[:-1] + 1) + bj)
                vals.append(self.upper[:-1, bi, bj])
        coo = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(2 * n, 2 * n),
        )
        return coo.tocsc()

    def solve(self, rhs_u: np.ndarray, rhs_v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Solve the block system (hot path).

        Uses the jitted block-Thomas sweep when numba is importable, else the
        sparse LU of the assembled matrix.  Both paths use the same
        elimination ordering.
        """
        if self._lu is None:
            return block_thomas_solve(self._lpinv, self._pinv, self.upper, rhs_u, rhs_v)
        rhs = np.empty(2 * self.n_nodes)
        rhs[0::2] = rhs_u
        rhs[1::2] = rhs_v
        x = self._lu.solve(rhs)
        return x[0::2].copy(), x[1::2].copy()

    def solve_thomas(self, rhs_u: np.ndarray, rhs_v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Reference block-Thomas solve using the stored 2x2 pivot factors."""
        n = self.n_nodes
        y = np.empty((n, 2))
        y[:, 0] = rhs_u
        y[:, 1] = rhs_v
        for i in range(1, n):
            y[i] -= self._lpinv[i] @ y[i - 1]
        x = np.empty((n, 2))
        x[n - 1] = self._pinv[n - 1] @ y[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = self._pinv[i] @ (y[i] - self.upper[i] @ x[i + 1])
        return x[:, 0].copy(), x[:, 1].copy()

    def matvec(self, u: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.stack([u, v], axis=1)
        out = np.einsum("nij,nj->ni", self.diag, x)
        out[1:] += np.einsum("nij,nj->ni", self.lower[1:], x[:-1])
        out[:-1] += np.einsum("nij,nj->ni", self.upper[:-1], x[1:])
        return out[:, 0], out[:, 1]

    def dense(self) -> np.ndarray:
        return self._assemble_csc().toarray()


def assemble_step_matrix(p, dt: float, grid: Grid1D) -> BlockStepMatrix:
    """Implicit-Euler step matrix for the coupled pair.

    Encodes, per interior node,

        (1 - dt*a) u_i - dt*(D_dirichlet u)_i - dt*b*v_i      = rhs_u,
        -dt*c*u_i + (tau - dt*d) v_i - dt*sigma*(D_neumann v)_i = rhs_v,

    with identity rows for u at the boundary and the ghost-node closure for v.
    ``p`` carries the coefficients (a, b, c, d, tau, sigma).
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    n = grid.n_nodes
    ru = dt / grid.h ** 2
    rv = dt * p.sigma / grid.h ** 2

    diag = np.zeros((n, 2, 2))
    lower = np.zeros((n, 2, 2))
    upper = np.zeros((n, 2, 2))

    # u rows (Dirichlet): interior stencil, identity at the boundary
    diag[1:-1, 0, 0] = 1.0 - dt * p.a + 2.0 * ru
    diag[1:-1, 0, 1] = -dt * p.b
    diag[0, 0, 0] = 1.0
    diag[-1, 0, 0] = 1.0
    # neighbor entries skip boundary u-columns (those unknowns are pinned)
    lower[2:-1, 0, 0] = -ru
    upper[1:-2, 0, 0] = -ru

    # v rows (Neumann): all nodes are genuine unknowns
    diag[:, 1, 1] = p.tau - dt * p.d + 2.0 * rv
    diag[1:-1, 1, 0] = -dt * p.c
    lower[1:-1, 1, 1] = -rv
    lower[-1, 1, 1] = -2.0 * rv
    upper[1:-1, 1, 1] = -rv
    upper[0, 1, 1] = -2.0 * rv

    return BlockStepMatrix(diag, lower, upper)


def solve_block_tridiagonal(m: BlockStepMatrix, rhs_u, rhs_v) -> tuple[np.ndarray, np.ndarray]:
    """Direct solve of the block system by block-Thomas elimination."""
    rhs_u = np.asarray(rhs_u, dtype=float)
    rhs_v = np.asarray(rhs_v, dtype=float)
    if rhs_u.shape != (m.n_nodes,) or rhs_v.shape != (m.n_nodes,):
        raise ValueError("right-hand sides must match the matrix node count")
    return m.solve_thomas(rhs_u, rhs_v)
