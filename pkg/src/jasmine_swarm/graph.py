"""Radius-induced connectivity graphs, components and cluster labels."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

PARALLEL_FRACTION = Fraction(1, 3)


class ClusterLabel(str, Enum):
    MAIN = "Main"
    PARALLEL = "ParallelProcess"
    LOST = "Lost"


@dataclass(frozen=True)
class ConnectivityGraph:
    adjacency: np.ndarray

    def __post_init__(self) -> None:
        a = self.adjacency
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T) or a.diagonal().any():
            raise ValueError("adjacency must be symmetric without self loops")

    @property
    def n(self) -> int:
        return int(self.adjacency.shape[0])

    def neighbors(self, node: int) -> list[int]:
        self._check(node)
        return [int(j) for j in np.flatnonzero(self.adjacency[node])]

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def _check(self, node: int) -> None:
        if not 0 <= node < self.n:
            raise KeyError(f"unknown node {node}")


@dataclass(frozen=True)
class ClusterReport:
    components: tuple[tuple[int, ...], ...]
    labels: tuple[ClusterLabel, ...]

    @property
    def main(self) -> tuple[int, ...]:
        return self.components[self.labels.index(ClusterLabel.MAIN)]

    def rows(self, tick: int) -> list[tuple[int, int, int, str]]:
        return [(tick, k, len(c), lab.value)
                for k, (c, lab) in enumerate(zip(self.components, self.labels))]


CLUSTER_CSV_HEADER = ("tick", "component_index", "size", "label")


def build_graph(positions, comm_radius: float) -> ConnectivityGraph:
    if comm_radius <= 0:
        raise ValueError("comm_radius must be positive")
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    return ConnectivityGraph(_kernels.within_radius(np.ascontiguousarray(pos), float(comm_radius)))


def degree(graph: ConnectivityGraph, node: int) -> int:
    graph._check(node)
    return int(graph.adjacency[node].sum())


def mean_degree(graph: ConnectivityGraph) -> float:
    return float(graph.adjacency.sum(axis=1).mean()) if graph.n else 0.0


def components(graph: ConnectivityGraph) -> list[tuple[int, ...]]:
    """Connected components, each sorted, ordered by smallest member."""
    labels = _kernels.component_labels(graph.adjacency)
    groups: dict[int, list[int]] = {}
    for node, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, []).append(node)
    return [tuple(g) for _, g in sorted(groups.items())]


def classify(partition: Sequence[Iterable[int]], n: int) -> ClusterReport:
    """Label the largest component Main, others by their share of ``n``.

    A non-largest component holding at least a third of the robots is a
    ParallelProcess; anything smaller is Lost. Size ties for Main go to the
    component containing the smallest id.
    """
    comps = [tuple(sorted(c)) for c in partition]
    if any(len(c) == 0 for c in comps):
        raise ValueError("empty component")
    covered = sorted(i for c in comps for i in c)
    if covered != list(range(n)):
        raise ValueError("partition does not cover ids 0..n-1 exactly once")
    comps.sort(key=lambda c: c[0])
    main = max(range(len(comps)), key=lambda k: (len(comps[k]), -comps[k][0]))
    labels = []
    for k, c in enumerate(comps):
        if k == main:
            labels.append(ClusterLabel.MAIN)
        elif Fraction(len(c), n) >= PARALLEL_FRACTION:
            labels.append(ClusterLabel.PARALLEL)
        else:
            labels.append(ClusterLabel.LOST)
    return ClusterReport(tuple(comps), tuple(labels))


def cluster_report(positions, comm_radius: float) -> ClusterReport:
    g = build_graph(positions, comm_radius)
    return classify(components(g), g.n)


def bfs_distances(graph: ConnectivityGraph, source: int) -> dict[int, int]:
    """Hop distance from ``source`` to every reachable node."""
    graph._check(source)
    dist = {source: 0}
    frontier = [source]
    while frontier:
        nxt = []
        for v in frontier:
            for w in np.flatnonzero(graph.adjacency[v]).tolist():
                if w not in dist:
                    dist[w] = dist[v] + 1
                    nxt.append(w)
        frontier = nxt
    return dist


def eccentricity(graph: ConnectivityGraph, node: int) -> int:
    return max(bfs_distances(graph, node).values())


def clusters_csv(reports: Iterable[tuple[int, ClusterReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CLUSTER_CSV_HEADER)
    for tick, report in reports:
        w.writerows(report.rows(tick))
    return buf.getvalue()
