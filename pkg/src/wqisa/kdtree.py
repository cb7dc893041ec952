"""Exact k-d tree over a fixed point set.

Splits are medians along the axis of largest spread, leaves hold up to 16
points, and all distance work is done on squared euclidean distances.
Queries reproduce a brute-force scan exactly: k-nearest results are ordered
by (distance, index) with ties at the k-th distance broken by ascending
index, and radius queries use the closed ball.
"""

from __future__ import annotations

import heapq

import numpy as np

LEAF_SIZE = 16


class _Node:
    __slots__ = ("axis", "split", "left", "right", "indices")

    def __init__(self, axis=None, split=None, left=None, right=None, indices=None):
        self.axis = axis
        self.split = split
        self.left = left
        self.right = right
        self.indices = indices  # leaf payload


class KdTree:
    """Balanced k-d tree; build O(N log N), immutable afterwards."""

    def __init__(self, points):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("need a nonempty (N, d) point array")
        pts.setflags(write=False)
        self.points = pts
        self.n, self.d = pts.shape
        self._root = self._build(np.arange(self.n))

    def _build(self, idx: np.ndarray) -> _Node:
        if len(idx) <= LEAF_SIZE:
            return _Node(indices=idx)
        sub = self.points[idx]
        spread = sub.max(axis=0) - sub.min(axis=0)
        axis = int(np.argmax(spread))
        if spread[axis] == 0.0:  # all duplicates, cannot split
            return _Node(indices=idx)
        coords = sub[:, axis]
        mid = len(idx) // 2
        order = np.argpartition(coords, mid)
        node = _Node(axis=axis, split=float(coords[order[mid]]))
        node.left = self._build(idx[order[:mid]])
        node.right = self._build(idx[order[mid:]])
        return node

    def knn(self, u, k: int) -> np.ndarray:
        """Indices of the k nearest points to u, ordered by (distance, index)."""
        u = np.asarray(u, dtype=float).reshape(-1)
        if len(u) != self.d:
            raise ValueError(f"query dimension {len(u)} != tree dimension {self.d}")
        if not 1 <= k <= self.n:
            raise ValueError(f"k={k} out of range [1, {self.n}]")
        heap: list[tuple[float, int]] = []  # (-d2, -idx), worst on top

        def visit(node: _Node):
            if node.indices is not None:
                d2 = ((self.points[node.indices] - u) ** 2).sum(axis=1)
                for j, i in zip(d2, node.indices):
                    cand = (-float(j), -int(i))
                    if len(heap) < k:
                        heapq.heappush(heap, cand)
                    elif cand > heap[0]:  # smaller (d2, idx) than current worst
                        heapq.heapreplace(heap, cand)
                return
            gap = u[node.axis] - node.split
            near, far = (node.left, node.right) if gap < 0 else (node.right, node.left)
            visit(near)
            # descend on equality too: an equidistant lower index may hide there
            if len(heap) < k or gap * gap <= -heap[0][0]:
                visit(far)

        visit(self._root)
        out = sorted((-d2, -i) for d2, i in heap)
        return np.array([i for _, i in out], dtype=int)

    def radius_query(self, u, r: float) -> np.ndarray:
        """Sorted indices of all points within the closed ball of radius r."""
        u = np.asarray(u, dtype=float).reshape(-1)
        if len(u) != self.d:
            raise ValueError(f"query dimension {len(u)} != tree dimension {self.d}")
        if r < 0:
            raise ValueError(f"radius must be >= 0, got {r}")
        r2 = r * r
        hits: list[np.ndarray] = []

        def visit(node: _Node):
            if node.indices is not None:
                d2 = ((self.points[node.indices] - u) ** 2).sum(axis=1)
                sel = node.indices[d2 <= r2]
                if len(sel):
                    hits.append(sel)
                return
            gap = u[node.axis] - node.split
            near, far = (node.left, node.right) if gap < 0 else (node.right, node.left)
            visit(near)
            if gap * gap <= r2:
                visit(far)

        visit(self._root)
        if not hits:
            return np.empty(0, dtype=int)
        return np.sort(np.concatenate(hits))
