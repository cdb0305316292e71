"""Directed communication graph: adjacency validation, Laplacian, connectivity,
and position-based link masking.

Convention (fixed throughout the project): entry ``a[j, i] == 1`` means agent
``i`` sends data to agent ``j``; equivalently row ``j`` lists the in-neighbours
of agent ``j``.  All edge weights are unity.
"""

from __future__ import annotations

import numpy as np

from .geometry import Rect


def validate_adjacency(a: np.ndarray) -> np.ndarray:
    """Return a validated int copy of an adjacency matrix.

    Raises ValueError unless ``a`` is square, binary, with a zero diagonal.
    """
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"adjacency matrix must be square, got shape {arr.shape}")
    arr = arr.astype(np.int64, copy=True)
    if not np.isin(arr, (0, 1)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    if np.diagonal(arr).any():
        raise ValueError("adjacency diagonal must be zero (no self links)")
    return arr


def laplacian(a: np.ndarray) -> np.ndarray:
    """Graph Laplacian: in-degree on the diagonal, negated adjacency elsewhere.

    Every row sums to zero by construction.
    """
    arr = validate_adjacency(a)
    return np.diag(arr.sum(axis=1)) - arr


def zero_eigen_check(lap: np.ndarray) -> bool:
    """True iff L @ ones == 0 exactly, in integer arithmetic.

    This is the testable face of the agreement-eigenvector property: the
    all-ones vector is in the null space of a well-formed Laplacian.
    """
    lap = np.asarray(lap, dtype=np.int64)
    return bool((lap.sum(axis=1) == 0).all())


def _reachable_from(a: np.ndarray, start: int, reverse: bool) -> np.ndarray:
    """Boolean reachability from ``start`` following edges i -> j (a[j, i] == 1)."""
    n = a.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        # successors of u: nodes receiving from u; predecessors when reversed
        row = a[u, :] if reverse else a[:, u]
        for v in np.nonzero(row)[0]:
            if not seen[v]:
                seen[v] = True
                stack.append(int(v))
    return seen


def is_strongly_connected(a: np.ndarray) -> bool:
    """True iff every node has a directed path to every other node.

    Double reachability from node 0: the graph is strongly connected exactly
    when node 0 reaches everyone and everyone reaches node 0.
    """
    arr = validate_adjacency(a)
    n = arr.shape[0]
    if n <= 1:
        return True
    return bool(_reachable_from(arr, 0, reverse=False).all()
                and _reachable_from(arr, 0, reverse=True).all())


def effective_topology(
    a_base: np.ndarray,
    positions: list[tuple[float, float]],
    zones: list[Rect] | tuple[Rect, ...],
) -> np.ndarray:
    """Mask the base topology by position: an agent whose centre lies inside any
    blackout zone (closed rectangles) loses all inbound and outbound links.

    Never adds an edge, and is idempotent for fixed positions.
    """
    arr = validate_adjacency(a_base)
    n = arr.shape[0]
    if len(positions) != n:
        raise ValueError(f"got {len(positions)} positions for a {n}-agent topology")
    if not zones:
        return arr
    out = arr.copy()
    for i, (px, py) in enumerate(positions):
        if any(z.contains(px, py) for z in zones):
            out[i, :] = 0
            out[:, i] = 0
    return out
