"""Optional numba acceleration of the block-Thomas substitution sweeps.

The factor arrays are precomputed once per step matrix; the sweeps are pure
memory-bound recursions, so the jitted kernel is 1-2 us per solve where the
sparse-LU fallback costs tens of us in call overhead.  Everything works
without numba, just slower.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def block_thomas_solve(lpinv, pinv, upper, rhs_u, rhs_v):
    """Forward/backward substitution with precomputed 2x2 block factors.

    ``lpinv[i] = L_i P_{i-1}^{-1}`` and ``pinv[i]`` is the inverse of the
    eliminated pivot; ``upper[i]`` couples node i to node i+1.
    """
    n = rhs_u.shape[0]
    yu = np.empty(n)
    yv = np.empty(n)
    yu[0] = rhs_u[0]
    yv[0] = rhs_v[0]
    for i in range(1, n):
        yu[i] = rhs_u[i] - (lpinv[i, 0, 0] * yu[i - 1] + lpinv[i, 0, 1] * yv[i - 1])
        yv[i] = rhs_v[i] - (lpinv[i, 1, 0] * yu[i - 1] + lpinv[i, 1, 1] * yv[i - 1])
    xu = np.empty(n)
    xv = np.empty(n)
    k = n - 1
    xu[k] = pinv[k, 0, 0] * yu[k] + pinv[k, 0, 1] * yv[k]
    xv[k] = pinv[k, 1, 0] * yu[k] + pinv[k, 1, 1] * yv[k]
    for i in range(n - 2, -1, -1):
        tu = yu[i] - (upper[i, 0, 0] * xu[i + 1] + upper[i, 0, 1] * xv[i + 1])
        tv = yv[i] - (upper[i, 1, 0] * xu[i + 1] + upper[i, 1, 1] * xv[i + 1])
        xu[i] = pinv[i, 0, 0] * tu + pinv[i, 0, 1] * tv
        xv[i] = pinv[i, 1, 0] * tu + pinv[i, 1, 1] * tv
    return xu, xv
