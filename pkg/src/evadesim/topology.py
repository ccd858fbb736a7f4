"""Fat graphs over the alpha complex 1-skeleton and their boundary cycles.

A fat graph is the edge set together with a counter-clockwise cyclic order of
neighbors at each vertex.  Every undirected edge contributes two darts; the
involution ``alpha`` reverses a dart and ``sigma`` steps to the next outgoing
dart about the tail vertex.  Boundary cycles are the orbits of sigma o alpha
and stand for the faces of the embedded graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple


class RotationMismatch(ValueError):
    """Rotation data disagrees with the edge adjacency."""


class Dart(NamedTuple):
    tail: int
    head: int

    def reversed(self):
        return Dart(self.head, self.tail)


@dataclass(frozen=True)
class FatGraph:
    darts: frozenset
    sigma: dict  # Dart -> next outgoing dart CCW about the tail

    def alpha(self, dart):
        return dart.reversed()

    def phi(self, dart):
        """Boundary-cycle successor sigma(alpha(dart))."""
        return self.sigma[dart.reversed()]


def build_fat_graph(edges, rotation):
    """Fat graph from an undirected edge set and CCW neighbor orders.

    ``rotation`` maps each vertex to its cyclic neighbor sequence; it must
    cover exactly the adjacency of ``edges``.
    """
    adjacency = {}
    for i, j in edges:
        adjacency.setdefault(i, set()).add(j)
        adjacency.setdefault(j, set()).add(i)
    for v, nbrs in adjacency.items():
        rot = rotation.get(v)
        if rot is None or set(rot) != nbrs or len(rot) != len(nbrs):
            raise RotationMismatch(f"rotation at vertex {v} != edge adjacency")
    darts = set()
    sigma = {}
    for v, nbrs in adjacency.items():
        rot = rotation[v]
        k = len(rot)
        for idx, n in enumerate(rot):
            d = Dart(v, n)
            darts.add(d)
            sigma[d] = Dart(v, rot[(idx + 1) % k])
    return FatGraph(frozenset(darts), sigma)


def canonicalize(cycle):
    """Rotate a phi-orbit so its lexicographically smallest dart comes first.

    Canonical tuples give cycles a stable identity across time steps.
    """
    seq = tuple(cycle)
    if not seq:
        return seq
    start = seq.index(min(seq))
    return seq[start:] + seq[:start]


def boundary_cycles(fat):
    """All orbits of sigma o alpha, each canonicalized, as a frozenset."""
    unvisited = set(fat.darts)
    cycles = []
    while unvisited:
        start = min(unvisited)
        orbit = [start]
        unvisited.remove(start)
        d = fat.phi(start)
        while d != start:
            orbit.append(d)
            unvisited.remove(d)
            d = fat.phi(d)
        cycles.append(canonicalize(orbit))
    return frozenset(cycles)


def cycle_vertices(cycle):
    """Set of vertex ids visited by a boundary cycle."""
    return {d.tail for d in cycle}


def vertex_components(vertices, edges):
    """Connected components of the 1-skeleton, as a list of id sets."""
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    comps = {}
    for v in vertices:
        comps.setdefault(find(v), set()).add(v)
    return list(comps.values())
