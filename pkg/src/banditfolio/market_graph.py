"""Correlation network, its minimum spanning tree, and peripheral asset selection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    pass


def _returns(h) -> tuple[tuple[str, ...], np.ndarray]:
    arr = np.asarray(getattr(h, "returns", h), dtype=float)
    ids = getattr(h, "asset_ids", tuple(str(i) for i in range(arr.shape[0])))
    return tuple(ids), arr


def correlation_matrix(h) -> np.ndarray:
    """Pearson correlation of each asset pair over the historical window.

    ``h`` is an assets x trials array or a ``ReturnMatrix``.
    """
    ids, x = _returns(h)
    if x.ndim != 2 or x.shape[1] < 2:
        raise GraphError(f"need at least 2 observations per asset, got shape {x.shape}")
    centred = x - x.mean(axis=1, keepdims=True)
    ss = np.einsum("ij,ij->i", centred, centred)
    scale = np.abs(x).max(axis=1) + 1.0
    flat = ss <= (1e-14 * scale) ** 2 * x.shape[1]
    if flat.any():
        names = [ids[i] for i in np.flatnonzero(flat)]
        raise GraphError(f"zero-variance asset(s) {names}: correlation undefined")
    norm = centred / np.sqrt(ss)[:, None]
    rho = np.clip(norm @ norm.T, -1.0, 1.0)
    rho = 0.5 * (rho + rho.T)
    np.fill_diagonal(rho, 1.0)
    return rho


def distance_matrix(rho) -> np.ndarray:
    """Map correlations to distances ``sqrt(2 (1 - rho))`` in [0, 2]."""
    rho = np.asarray(rho, dtype=float)
    d = np.sqrt(np.clip(2.0 * (1.0 - rho), 0.0, 4.0))
    np.fill_diagonal(d, 0.0)
    return d


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


@dataclass(frozen=True)
class SpanningTree:
    vertex_ids: tuple[str, ...]
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        n = len(self.vertex_ids)
        if len(self.edges) != n - 1:
            raise GraphError(f"a tree on {n} vertices has {n - 1} edges, got {len(self.edges)}")
        uf = UnionFind(n)
        for i, j, _ in self.edges:
            if not uf.union(i, j):
                raise GraphError(f"edge ({i}, {j}) closes a cycle")

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(len(self.vertex_ids), dtype=int)
        for i, j, _ in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    @property
    def incident_weight(self) -> np.ndarray:
        total = np.zeros(len(self.vertex_ids))
        for i, j, w in self.edges:
            total[i] += w
            total[j] += w
        return total

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertex_ids),
            "edges": [{"source": self.vertex_ids[i], "target": self.vertex_ids[j], "weight": w}
                      for i, j, w in self.edges],
            "degrees": {v: int(d) for v, d in zip(self.vertex_ids, self.degrees)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def minimum_spanning_tree(d, ids=None) -> SpanningTree:
    """Kruskal's algorithm over the complete graph with distance weights.

    Edges are scanned in ``(weight, min index, max index)`` order so equal
    weights always produce the same tree.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if d.shape != (n, n):
        raise GraphError(f"distance matrix must be square, got {d.shape}")
    if n < 2:
        raise GraphError(f"need at least 2 vertices, got {n}")
    if ids is None:
        ids = tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise GraphError(f"{len(ids)} ids for {n} vertices")
    iu, ju = np.triu_indices(n, k=1)
    w = d[iu, ju]
    order = np.lexsort((ju, iu, w))
    uf = UnionFind(n)
    edges = []
    for e in order:
        i, j = int(iu[e]), int(ju[e])
        if uf.union(i, j):
            edges.append((i, j, float(w[e])))
            if len(edges) == n - 1:
                break
    return SpanningTree(tuple(ids), tuple(edges))


def select_peripheral(tree: SpanningTree, k: int) -> list[str]:
    """The ``k`` least-connected vertices of ``tree``.

    Ordered by ascending degree; ties go to the vertex with the larger total
    incident edge weight (the more remote one), then to the smaller asset id.
    """
    n = len(tree.vertex_ids)
    if not 1 <= k <= n:
        raise GraphError(f"cannot select {k} of {n} vertices")
    deg = tree.degrees
    inc = tree.incident_weight
    order = sorted(range(n), key=lambda v: (deg[v], -inc[v], tree.vertex_ids[v]))
    return [tree.vertex_ids[v] for v in order[:k]]


def jacobi_eigenvalues(a, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm falls below ``tol``
    relative to the full norm. Returned in descending order.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"matrix must be square, got {a.shape}")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a))[::-1]


def covariance_eigenvalues(h) -> np.ndarray:
    """Sample-covariance spectrum, descending, with round-off negatives clamped to 0."""
    _, x = _returns(h)
    if x.ndim != 2 or x.shape[1] < 2:
        raise GraphError(f"need at least 2 observations per asset, got shape {x.shape}")
    cov = np.atleast_2d(np.cov(x))
    ev = jacobi_eigenvalues(cov)
    ev[(ev < 0) & (ev >= -1e-10)] = 0.0
    return ev


def top_eigenvalue_share(eigenvalues) -> float:
    """Fraction of total variance carried by the largest eigenvalue."""
    ev = np.asarray(eigenvalues, dtype=float)
    return float(ev.max() / ev.sum())


def filter_assets(history, k: int) -> tuple[list[str], SpanningTree]:
    """Build the tree from a historical ``ReturnMatrix`` and pick ``k`` peripheral ids."""
    tree = minimum_spanning_tree(distance_matrix(correlation_matrix(history)), history.asset_ids)
    return select_peripheral(tree, k), tree
