"""Transistor clustering: circuit graph, spring embedding, density clustering.

The circuit graph joins transistors through their signal nets. Power nets
are dropped, nets touching at most two transistors become direct
transistor edges, and wider nets stay as hub nodes whose edges are as long
as the net's degree, so high-fanout nets do not pull everything together.
Transistors are embedded in the plane by stress majorization against
graph distances and grouped by HDBSCAN; clusters larger than ``k_max`` are
split recursively at their longest spanning-tree edge.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import networkx as nx
import numpy as np

from ..netlist import Netlist

logger = logging.getLogger(__name__)

MAX_ITER = 500
TOLERANCE = 1e-6


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple[frozenset[str], ...] = ()
    noise: frozenset[str] = frozenset()
    k_min: int = 2
    k_max: int = 6
    seed: int = 0

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for c in self.clusters:
            if not 2 <= len(c) <= self.k_max:
                raise ValueError(f"cluster size {len(c)} outside [2, {self.k_max}]")
            if seen & c:
                raise ValueError("clusters overlap")
            seen |= c
        if seen & self.noise:
            raise ValueError("noise overlaps a cluster")

    def as_lists(self) -> list[list[str]]:
        return [sorted(c) for c in self.clusters]


def build_circuit_graph(netlist: Netlist) -> nx.Graph:
    """Transistor nodes (``kind='tr'``) and hub net nodes (``kind='net'``); edge
    attribute ``weight`` is the edge length used by the embedding."""
    g = nx.Graph()
    for t in netlist.transistors:
        g.add_node(t.id, kind="tr")
    members: dict[str, set[str]] = {}
    for t in netlist.transistors:
        for net in (t.gate_net, t.source_net, t.drain_net):
            if net not in netlist.power_nets:
                members.setdefault(net, set()).add(t.id)
    for net in sorted(members):
        devs = sorted(members[net])
        if len(devs) == 2:
            a, b = devs
            if not g.has_edge(a, b):
                g.add_edge(a, b, weight=1.0)
        elif len(devs) > 2:
            node = f"net:{net}"
            g.add_node(node, kind="net")
            for d in devs:
                g.add_edge(node, d, weight=float(len(devs)))
    return g


def _distances(g: nx.Graph, nodes: list) -> np.ndarray:
    n = len(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    d = np.full((n, n), np.inf)
    for src, lengths in nx.all_pairs_dijkstra_path_length(g, weight="weight"):
        for dst, L in lengths.items():
            d[idx[src], idx[dst]] = L
    finite = d[np.isfinite(d)]
    # disconnected parts sit further apart than anything inside a component
    far = (finite.max() if finite.size else 1.0) * 2 + 1
    d[~np.isfinite(d)] = far
    return d


def stress(x: np.ndarray, d: np.ndarray) -> float:
    n = len(x)
    iu = np.triu_indices(n, 1)
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))[iu]
    target = d[iu]
    return float((((dist - target) / target) ** 2).sum())


def spring_embedding(g: nx.Graph, seed: int = 0, max_iter: int = MAX_ITER,
                     tol: float = TOLERANCE) -> Optional[dict]:
    """Stress-majorization layout; None when the stress has not settled within
    ``max_iter`` iterations."""
    nodes = sorted(g.nodes, key=str)
    n = len(nodes)
    if n == 0:
        return {}
    if n == 1:
        return {nodes[0]: (0.0, 0.0)}
    d = _distances(g, nodes)
    rng = np.random.default_rng(seed)
    # circle in breadth-first order so neighbours start close; seeded start
    # points and a little jitter keep the start off symmetric saddles
    order: list = []
    comps = sorted((sorted(c, key=str) for c in nx.connected_components(g)), key=lambda c: str(c[0]))
    for ci in rng.permutation(len(comps)):
        comp = comps[ci]
        start = comp[int(rng.integers(len(comp)))]
        order += [start] + [v for _, v in nx.bfs_edges(g, start, sort_neighbors=lambda vs: sorted(vs, key=str))]
    slot = {v: i for i, v in enumerate(order)}
    angles = np.array([2 * math.pi * slot[v] / n for v in nodes])
    x = np.column_stack([np.cos(angles), np.sin(angles)]) * d.max() / 2
    x += rng.normal(scale=1e-3 * d.max(), size=x.shape)
    np.fill_diagonal(d, 1.0)
    w = d ** -2.0
    np.fill_diagonal(w, 0.0)
    lw = -w.copy()
    np.fill_diagonal(lw, w.sum(1))
    lw_pinv = np.linalg.pinv(lw)
    prev = stress(x, d)
    for _ in range(max_iter):
        diff = x[:, None, :] - x[None, :, :]
        dist = np.sqrt((diff ** 2).sum(-1))
        with np.errstate(divide="ignore", invalid="ignore"):
            b = np.where(dist > 1e-12, -w * d / dist, 0.0)
        np.fill_diagonal(b, 0.0)
        np.fill_diagonal(b, -b.sum(1))
        x = lw_pinv @ (b @ x)
        cur = stress(x, d)
        if abs(prev - cur) < tol * max(1.0, prev):
            return {v: (float(x[i, 0]), float(x[i, 1])) for i, v in enumerate(nodes)}
        prev = cur
    return None


def _split(points: np.ndarray, ids: list[str], k_max: int) -> list[list[str]]:
    """Cut the longest edge of the Euclidean spanning tree until every part fits."""
    if len(ids) <= k_max:
        return [ids]
    n = len(ids)
    dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(-1))
    best = dist[0].copy()
    parent = [0] * n
    edges = []
    rest = set(range(1, n))
    while rest:
        j = min(rest, key=lambda k: (best[k], ids[k]))
        edges.append((best[j], parent[j], j))
        rest.remove(j)
        for k in rest:
            if dist[j, k] < best[k]:
                best[k] = dist[j, k]
                parent[k] = j
    edges.sort(key=lambda e: (-e[0], ids[e[1]], ids[e[2]]))
    cut = edges[0]
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for _, a, b in edges[1:]:
        adj[a].append(b)
        adj[b].append(a)
    side = {cut[1]}
    todo = [cut[1]]
    while todo:
        v = todo.pop()
        for u in adj[v]:
            if u not in side:
                side.add(u)
                todo.append(u)
    parts = []
    for group in (sorted(side), sorted(set(range(n)) - side)):
        parts += _split(points[group], [ids[i] for i in group], k_max)
    return parts


def embed_and_cluster(g: nx.Graph, k_min: int = 2, k_max: int = 6, seed: int = 0) -> ClusterSet:
    if not 2 <= k_max <= 6 or k_min != 2:
        raise ValueError(f"need k_min == 2 and 2 <= k_max <= 6, got {k_min}, {k_max}")
    pos = spring_embedding(g, seed)
    if pos is None:
        logger.warning("spring embedding did not converge in %d iterations; clustering disabled", MAX_ITER)
        return ClusterSet(k_min=k_min, k_max=k_max, seed=seed)
    trs = sorted(v for v, a in g.nodes(data=True) if a.get("kind") == "tr")
    if len(trs) < k_min:
        return ClusterSet(noise=frozenset(trs), k_min=k_min, k_max=k_max, seed=seed)
    from sklearn.cluster import HDBSCAN

    pts = np.array([pos[t] for t in trs])
    labels = HDBSCAN(min_cluster_size=k_min, copy=True).fit_predict(pts)
    clusters: list[frozenset[str]] = []
    noise = {t for t, lab in zip(trs, labels) if lab < 0}
    for lab in sorted(set(labels) - {-1}):
        idx = [i for i, l in enumerate(labels) if l == lab]
        for part in _split(pts[idx], [trs[i] for i in idx], k_max):
            if len(part) >= k_min:
                clusters.append(frozenset(part))
            else:
                noise.update(part)
    clusters.sort(key=lambda c: sorted(c))
    return ClusterSet(tuple(clusters), frozenset(noise), k_min, k_max, seed)


def cluster_netlist(netlist: Netlist, k_max: int = 4, seed: int = 0) -> ClusterSet:
    return embed_and_cluster(build_circuit_graph(netlist), 2, k_max, seed)


def dump_clusters(cs: ClusterSet, cell: str = "") -> str:
    lines = [f"cell {cell or '-'} kmin {cs.k_min} kmax {cs.k_max} seed {cs.seed} clusters {len(cs.clusters)}"]
    for i, c in enumerate(cs.clusters):
        lines.append(f"cluster {i} : {' '.join(sorted(c))}")
    lines.append(f"noise : {' '.join(sorted(cs.noise))}".rstrip())
    return "\n".join(lines) + "\n"


def parse_clusters(text: str) -> ClusterSet:
    head, *rest = [ln for ln in text.splitlines() if ln.strip()]
    tok = head.split()
    meta = dict(zip(tok[0::2], tok[1::2]))
    clusters, noise = [], frozenset()
    for ln in rest:
        key, _, body = ln.partition(":")
        if key.startswith("cluster"):
            clusters.append(frozenset(body.split()))
        elif key.strip() == "noise":
            noise = frozenset(body.split())
    return ClusterSet(tuple(clusters), noise, int(meta["kmin"]), int(meta["kmax"]), int(meta["seed"]))
