"""Intruder-feasibility tracking over time-varying alpha complexes.

Between two consecutive snapshots the combinatorial change is classified by
counting added/removed 1-simplices, 2-simplices, and boundary cycles.  For an
atomic change the cycle labelling (True = may contain an intruder) is updated
either by the serialized rule, by an equivalent case-based rule kept as an
independent oracle, or by the power-down variant that drops cycles living on
components disconnected from the fence.

Internally simplices and darts are integer-coded with stride = max_id + 1
(edge i,j -> i*stride + j; dart tail->head -> tail*stride + head), and a
boundary cycle is the canonical tuple of its dart codes, rotated so the
smallest code comes first.  The codes decode back to sensor ids directly.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._kernels import fat_cycles, local_complex
from .geometry import AlphaComplex


class NoFenceCycle(RuntimeError):
    """The outer fence cycle could not be identified."""


class MissingLabel(KeyError):
    """A persisting boundary cycle has no prior label."""


class TransitionKind(enum.Enum):
    NO_CHANGE = "no_change"
    ADD_EDGE = "add_edge"
    REMOVE_EDGE = "remove_edge"
    ADD_2SIMPLEX = "add_2simplex"
    REMOVE_2SIMPLEX = "remove_2simplex"
    ADD_PAIR = "add_pair"
    REMOVE_PAIR = "remove_pair"
    DELAUNAY_FLIP = "delaunay_flip"
    DISCONNECT = "disconnect"
    RECONNECT = "reconnect"
    NON_ATOMIC = "non_atomic"


# (edges added, edges removed, triangles added, triangles removed,
#  cycles added, cycles removed) -> kind.  The first ten rows are the
# published transition tables; the extra disconnect/reconnect signatures
# cover components that lose or gain their last dart (leaf or isolated
# vertices, two-vertex components), which the tables implicitly exclude.
SIGNATURES = {
    (0, 0, 0, 0, 0, 0): TransitionKind.NO_CHANGE,
    (1, 0, 0, 0, 2, 1): TransitionKind.ADD_EDGE,
    (0, 1, 0, 0, 1, 2): TransitionKind.REMOVE_EDGE,
    (0, 0, 1, 0, 0, 0): TransitionKind.ADD_2SIMPLEX,
    (0, 0, 0, 1, 0, 0): TransitionKind.REMOVE_2SIMPLEX,
    (1, 0, 1, 0, 2, 1): TransitionKind.ADD_PAIR,
    (0, 1, 0, 1, 1, 2): TransitionKind.REMOVE_PAIR,
    (1, 1, 2, 2, 2, 2): TransitionKind.DELAUNAY_FLIP,
    (0, 1, 0, 0, 2, 1): TransitionKind.DISCONNECT,
    (1, 0, 0, 0, 1, 2): TransitionKind.RECONNECT,
    (0, 1, 0, 0, 1, 1): TransitionKind.DISCONNECT,
    (0, 1, 0, 0, 0, 1): TransitionKind.DISCONNECT,
    (1, 0, 0, 0, 1, 1): TransitionKind.RECONNECT,
    (1, 0, 0, 0, 1, 0): TransitionKind.RECONNECT,
}

CONNECTED_KINDS = frozenset([
    TransitionKind.ADD_EDGE, TransitionKind.REMOVE_EDGE,
    TransitionKind.ADD_2SIMPLEX, TransitionKind.REMOVE_2SIMPLEX,
    TransitionKind.ADD_PAIR, TransitionKind.REMOVE_PAIR,
    TransitionKind.DELAUNAY_FLIP,
])


def decode_cycle(cycle, stride):
    """Dart-code tuple -> ((tail, head), ...) in sensor ids."""
    return tuple((c // stride, c % stride) for c in cycle)


def cycle_vertices(cycle, stride):
    """Set of sensor ids visited by a boundary cycle."""
    return {c // stride for c in cycle}


@dataclass(frozen=True)
class StateSnapshot:
    """One time slice: complex, full boundary cycle set, and labelling.

    ``cycles`` includes the outer fence cycle (needed for the transition
    signatures); ``labelling`` never does.  In power-down mode the labelling
    also omits cycles of components disconnected from the fence, listed in
    ``fence_component``.
    """

    time: float
    ids: tuple
    pts: np.ndarray
    stride: int
    radius: float
    edge_codes: frozenset
    tri_codes: frozenset
    cycles: frozenset
    outer: tuple
    labelling: dict
    fence_ids: frozenset
    fence_component: frozenset
    rotation: tuple
    motion: object = None

    @cached_property
    def positions(self):
        return {i: (float(x), float(y))
                for i, (x, y) in zip(self.ids, self.pts)}

    @cached_property
    def complex(self):
        s = self.stride
        edges = frozenset((c // s, c % s) for c in self.edge_codes)
        triangles = frozenset((c // (s * s), (c // s) % s, c % s)
                              for c in self.tri_codes)
        return AlphaComplex(frozenset(self.ids), edges, triangles,
                            float(self.radius))

    def is_triangle_cycle(self, cycle):
        """True when the cycle bounds a 2-simplex of the complex."""
        if len(cycle) != 3:
            return False
        i, j, k = sorted(cycle_vertices(cycle, self.stride))
        return (i * self.stride + j) * self.stride + k in self.tri_codes


@dataclass
class ReebEvent:
    time: float
    kind: TransitionKind
    parents: tuple  # cycles as ((tail, head), ...) id pairs
    children: tuple
    labels_after: dict

    def to_json(self):
        return json.dumps({
            "t": self.time,
            "kind": self.kind.value,
            "parents": [[list(d) for d in c] for c in self.parents],
            "children": [[list(d) for d in c] for c in self.children],
            "labels": [[[list(d) for d in c], bool(v)]
                       for c, v in self.labels_after.items()],
        })


def transition_signature(prev, next_):
    """Set-difference counts between two snapshots (edges, triangles, cycles)."""
    e_add = len(next_.edge_codes - prev.edge_codes)
    e_rem = len(prev.edge_codes - next_.edge_codes)
    t_add = len(next_.tri_codes - prev.tri_codes)
    t_rem = len(prev.tri_codes - next_.tri_codes)
    b_add = len(next_.cycles - prev.cycles)
    b_rem = len(prev.cycles - next_.cycles)
    return (e_add, e_rem, t_add, t_rem, b_add, b_rem)


def classify_transition(prev, next_):
    return SIGNATURES.get(transition_signature(prev, next_),
                          TransitionKind.NON_ATOMIC)


def _rotation_tuples(pts, edges_ix, n):
    """CCW neighbor order at each vertex (index space); exact angular ties
    broken by ascending index for deterministic replay."""
    rotation = [()] * n
    if edges_ix.shape[0]:
        tails = np.concatenate([edges_ix[:, 0], edges_ix[:, 1]])
        heads = np.concatenate([edges_ix[:, 1], edges_ix[:, 0]])
        vec = pts[heads] - pts[tails]
        ang = np.arctan2(vec[:, 1], vec[:, 0])
        order = np.lexsort((heads, ang, tails))
        st = tails[order].tolist()
        sh = heads[order].tolist()
        start = 0
        total = len(st)
        for pos in range(1, total + 1):
            if pos == total or st[pos] != st[start]:
                rotation[st[start]] = tuple(sh[start:pos])
                start = pos
    return tuple(rotation)


def _cycles_from_rotation(rotation, ids, stride):
    """Boundary cycles as canonical dart-code tuples: orbits of sigma o alpha
    where sigma is the next CCW outgoing dart about the tail."""
    phi = {}
    for vi, nbrs in enumerate(rotation):
        if not nbrs:
            continue
        v = ids[vi]
        k = len(nbrs)
        base = v * stride
        for t in range(k):
            a = ids[nbrs[t]]
            b = ids[nbrs[(t + 1) % k]]
            phi[a * stride + v] = base + b
    cycles = []
    seen = set()
    for s in sorted(phi):
        if s in seen:
            continue
        orbit = [s]
        seen.add(s)
        d = phi[s]
        while d != s:
            orbit.append(d)
            seen.add(d)
            d = phi[d]
        cycles.append(tuple(orbit))
    return cycles


def _outer_index(areas):
    """Index of the cycle traversing the unbounded face, by signed area.

    Under the CCW rotation convention the unbounded face is traversed
    counter-clockwise (positive signed area) while interior holes come out
    clockwise; with disconnected components each contributes one positive
    cycle, and the fence's is the one of largest extent.
    """
    best = -1
    best_area = 0.0
    tie = False
    for i, a in enumerate(areas.tolist() if hasattr(areas, "tolist") else areas):
        if a <= 0.0:
            continue
        if a > best_area:
            best, best_area, tie = i, a, False
        elif a == best_area:
            tie = True
    if best < 0:
        raise NoFenceCycle("no counter-clockwise boundary cycle found")
    if tie:
        raise NoFenceCycle("ambiguous outer cycle")
    return best


def _identify_outer(cycles, pts, id2idx, stride):
    if not cycles:
        raise NoFenceCycle("no boundary cycles")
    flat = np.array([c for cyc in cycles for c in cyc], dtype=np.int64)
    offsets = np.zeros(len(cycles), dtype=np.int64)
    np.cumsum([len(c) for c in cycles[:-1]], out=offsets[1:])
    t = pts[id2idx[flat // stride]]
    h = pts[id2idx[flat % stride]]
    cross = t[:, 0] * h[:, 1] - h[:, 0] * t[:, 1]
    areas = 0.5 * np.add.reduceat(cross, offsets)
    return _outer_index(areas)


def _fence_component(ids, edges_ix, fence_ids):
    """Ids in the same 1-skeleton component as any fence sensor."""
    parent = list(range(len(ids)))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j in edges_ix.tolist():
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    roots = {}
    for vi, i in enumerate(ids):
        roots.setdefault(find(vi), set()).add(i)
    joined = set()
    for comp in roots.values():
        if comp & fence_ids:
            joined |= comp
    return frozenset(joined)


def build_snapshot(time, positions, r, fence_ids, powerdown=False, rng=None,
                   motion=None, prev=None):
    """Compute the alpha complex, cycles, and outer cycle for a time slice.

    ``positions`` maps sensor ids to (x, y); ``rng`` is accepted for call
    compatibility (the strict-inequality construction needs no jitter).  The
    returned snapshot carries an empty labelling; use initial_labelling or
    one of the update rules to fill it in.  When ``prev`` is given and the
    complex and rotation system are unchanged, cycles are reused: identical
    rotations force identical boundary cycles.
    """
    ids = tuple(sorted(positions))
    pts = np.array([positions[i] for i in ids], dtype=np.float64)
    return snapshot_from_arrays(time, ids, pts, r, fence_ids,
                                powerdown=powerdown, motion=motion, prev=prev)


def snapshot_from_arrays(time, ids, pts, r, fence_ids, powerdown=False,
                         motion=None, prev=None):
    if r <= 0:
        raise ValueError("sensing radius must be positive")
    n = len(ids)
    stride = (ids[-1] + 1) if n else 1
    pts_c = np.ascontiguousarray(pts, dtype=np.float64)
    edges_ix, tris_ix = local_complex(pts_c, float(r))
    ids_arr = np.asarray(ids, dtype=np.int64)
    if edges_ix.shape[0]:
        ecodes = ids_arr[edges_ix[:, 0]] * stride + ids_arr[edges_ix[:, 1]]
        edge_codes = frozenset(ecodes.tolist())
    else:
        edge_codes = frozenset()
    if tris_ix.shape[0]:
        tcodes = ((ids_arr[tris_ix[:, 0]] * stride
                   + ids_arr[tris_ix[:, 1]]) * stride
                  + ids_arr[tris_ix[:, 2]])
        tri_codes = frozenset(tcodes.tolist())
    else:
        tri_codes = frozenset()
    if fat_cycles is not None:
        off, nbr, tails, cyc_flat, cyc_off, areas = fat_cycles(
            pts_c, edges_ix, n)
        rotation = (off.tobytes(), nbr.tobytes())
    else:
        rotation = _rotation_tuples(pts, edges_ix, n)

    if (prev is not None and edge_codes == prev.edge_codes
            and tri_codes == prev.tri_codes and rotation == prev.rotation):
        return StateSnapshot(
            time=time, ids=ids, pts=pts, stride=stride, radius=float(r),
            edge_codes=edge_codes, tri_codes=tri_codes, cycles=prev.cycles,
            outer=prev.outer, labelling={}, fence_ids=prev.fence_ids,
            fence_component=prev.fence_component, rotation=rotation,
            motion=motion)

    if fat_cycles is not None:
        codes = (ids_arr[tails[cyc_flat]] * stride
                 + ids_arr[nbr[cyc_flat]]).tolist()
        bounds = cyc_off.tolist()
        cycles = [tuple(codes[a:b]) for a, b in zip(bounds[:-1], bounds[1:])]
        if not cycles:
            raise NoFenceCycle("no boundary cycles")
        outer = cycles[_outer_index(areas)]
    else:
        cycles = _cycles_from_rotation(rotation, ids, stride)
        id2idx = np.zeros(stride, dtype=np.int64)
        id2idx[ids_arr] = np.arange(n)
        outer = cycles[_identify_outer(cycles, pts, id2idx, stride)]
    fence_ids = frozenset(fence_ids)
    if fence_ids and not (cycle_vertices(outer, stride) & fence_ids):
        raise NoFenceCycle("outer cycle does not touch the fence")
    if powerdown:
        fc = _fence_component(ids, edges_ix, fence_ids)
    else:
        fc = frozenset(ids)
    return StateSnapshot(
        time=time, ids=ids, pts=pts, stride=stride, radius=float(r),
        edge_codes=edge_codes, tri_codes=tri_codes,
        cycles=frozenset(cycles), outer=outer, labelling={},
        fence_ids=fence_ids, fence_component=fc, rotation=rotation,
        motion=motion)


def _fence_connected(cycle, snapshot):
    return bool(cycle_vertices(cycle, snapshot.stride)
                & snapshot.fence_component)


def initial_labelling(snapshot, powerdown=False):
    """Worst-case labelling at t=0: every non-triangle face may hide an
    intruder; 2-simplex faces are clear; the outer cycle carries no label."""
    labels = {}
    for c in snapshot.cycles:
        if c == snapshot.outer:
            continue
        if powerdown and not _fence_connected(c, snapshot):
            continue
        labels[c] = not snapshot.is_triangle_cycle(c)
    return labels


def evasion_possible(labels):
    return any(labels.values())


def update_labelling(prev_cycles, next_cycles, next_snapshot, prev_labels):
    """Serialized label update for one atomic transition.

    Persisting cycles keep their labels, new cycles take the OR over vanished
    ones, and every 2-simplex face ends up clear.  Outer cycles must already
    be stripped from both cycle sets.
    """
    labels = {}
    for b in next_cycles & prev_cycles:
        if b not in prev_labels:
            raise MissingLabel(f"persisting cycle {b} has no prior label")
        labels[b] = prev_labels[b]
    merged = any(prev_labels.get(x, False) for x in prev_cycles - next_cycles)
    for b in next_cycles - prev_cycles:
        labels[b] = merged
    for b in labels:
        if labels[b] and next_snapshot.is_triangle_cycle(b):
            labels[b] = False
    return labels


def case_based_update(prev, next_, kind):
    """Per-case label update (independent oracle for update_labelling).

    ``prev`` and ``next_`` are StateSnapshots; ``kind`` must be one of the
    seven connected-network atomic kinds.
    """
    if kind not in CONNECTED_KINDS:
        raise ValueError(f"case_based_update got non-connected kind {kind}")
    prev_cycles = prev.cycles - {prev.outer}
    next_cycles = next_.cycles - {next_.outer}
    prev_labels = prev.labelling

    labels = {}
    for b in next_cycles & prev_cycles:
        if b not in prev_labels:
            raise MissingLabel(f"persisting cycle {b} has no prior label")
        labels[b] = prev_labels[b]
    added = next_cycles - prev_cycles
    removed = prev_cycles - next_cycles

    if kind is TransitionKind.ADD_EDGE:
        parent = any(prev_labels.get(x, False) for x in removed)
        for b in added:
            labels[b] = parent
    elif kind is TransitionKind.REMOVE_EDGE:
        merged = any(prev_labels.get(x, False) for x in removed)
        for b in added:
            labels[b] = merged
    elif kind is TransitionKind.ADD_2SIMPLEX:
        new_tri = next(iter(next_.tri_codes - prev.tri_codes))
        s = next_.stride
        for b in next_cycles:
            if len(b) == 3:
                i, j, k = sorted(cycle_vertices(b, s))
                if (i * s + j) * s + k == new_tri:
                    labels[b] = False
    elif kind is TransitionKind.REMOVE_2SIMPLEX:
        pass
    elif kind is TransitionKind.ADD_PAIR:
        parent = any(prev_labels.get(x, False) for x in removed)
        for b in added:
            labels[b] = False if next_.is_triangle_cycle(b) else parent
    elif kind is TransitionKind.REMOVE_PAIR:
        merged = any(prev_labels.get(x, False) for x in removed)
        for b in added:
            labels[b] = merged
    elif kind is TransitionKind.DELAUNAY_FLIP:
        for b in added:
            labels[b] = False
    return labels


def update_labelling_powerdown(prev, next_):
    """Label update when components may disconnect from the fence.

    Cycles on disconnected components are dropped from the labelling; a
    disconnect folds the vanished labels into the enclosing fence-side hole,
    and a reconnect spreads the enclosing label onto the newly joined cycles.
    """
    kind = classify_transition(prev, next_)
    prev_cycles = prev.cycles - {prev.outer}
    next_cycles = next_.cycles - {next_.outer}
    prev_labels = prev.labelling
    labels = {}

    def connected(cycle):
        return _fence_connected(cycle, next_)

    for b in next_cycles & prev_cycles:
        if not connected(b):
            continue
        if b in prev_labels:
            labels[b] = prev_labels[b]
        elif kind is not TransitionKind.RECONNECT:
            raise MissingLabel(f"persisting fence cycle {b} has no prior label")

    added = next_cycles - prev_cycles
    removed = prev_cycles - next_cycles

    if kind is TransitionKind.RECONNECT:
        merged = any(prev_labels.get(x, False) for x in removed)
        for b in next_cycles:
            if not connected(b):
                continue
            if b in prev_labels:
                labels[b] = prev_labels[b]
            else:
                labels[b] = merged
    elif kind is TransitionKind.DISCONNECT:
        stranded = any(prev_labels[x] for x in next_cycles
                       if not connected(x) and x in prev_labels)
        parent = any(prev_labels.get(x, False) for x in removed)
        for b in added:
            if connected(b):
                labels[b] = stranded or parent
    else:
        merged = any(prev_labels.get(x, False) for x in removed)
        for b in added:
            if connected(b):
                labels[b] = merged

    for b in labels:
        if labels[b] and next_.is_triangle_cycle(b):
            labels[b] = False
    return labels


def _with_labels(snapshot, labels):
    return StateSnapshot(
        time=snapshot.time, ids=snapshot.ids, pts=snapshot.pts,
        stride=snapshot.stride, radius=snapshot.radius,
        edge_codes=snapshot.edge_codes, tri_codes=snapshot.tri_codes,
        cycles=snapshot.cycles, outer=snapshot.outer, labelling=labels,
        fence_ids=snapshot.fence_ids,
        fence_component=snapshot.fence_component,
        rotation=snapshot.rotation, motion=snapshot.motion)


def _apply_update(prev, next_, kind, powerdown):
    if kind is TransitionKind.NO_CHANGE:
        return dict(prev.labelling)
    if powerdown:
        return update_labelling_powerdown(prev, next_)
    return update_labelling(prev.cycles - {prev.outer},
                            next_.cycles - {next_.outer},
                            next_, prev.labelling)


@dataclass
class StepDiagnostics:
    fallback_count: int = 0
    accepted: list = field(default_factory=list)


def adaptive_step(snapshot, model, dt, dt_min, rng, powerdown=False,
                  plan=None, diagnostics=None, record=False):
    """Advance one step, bisecting until the combinatorial change is atomic.

    Returns (new snapshot, list of ReebEvents).  When bisection reaches
    ``dt_min`` without finding an atomic sub-step, the serialized rule is
    applied anyway (it over-approximates intruder feasibility) and the
    fallback counter in ``diagnostics`` is incremented.
    """
    if diagnostics is None:
        diagnostics = StepDiagnostics()
    if plan is None:
        plan = model.make_plan(snapshot.motion, dt, rng)
    next_motion = model.apply(snapshot.motion, dt, plan)
    pts = (np.vstack([next_motion.positions, next_motion.fence])
           if len(next_motion.mobile_ids) else next_motion.fence)
    candidate = snapshot_from_arrays(
        next_motion.time, snapshot.ids, pts, snapshot.radius,
        snapshot.fence_ids, powerdown=powerdown, motion=next_motion,
        prev=snapshot)
    kind = classify_transition(snapshot, candidate)

    if kind is TransitionKind.NON_ATOMIC and dt > dt_min:
        half1, half2 = model.split_plan(snapshot.motion, dt, plan, rng)
        mid, ev1 = adaptive_step(snapshot, model, dt / 2.0, dt_min, rng,
                                 powerdown=powerdown, plan=half1,
                                 diagnostics=diagnostics, record=record)
        end, ev2 = adaptive_step(mid, model, dt / 2.0, dt_min, rng,
                                 powerdown=powerdown, plan=half2,
                                 diagnostics=diagnostics, record=record)
        return end, ev1 + ev2

    if kind is TransitionKind.NON_ATOMIC:
        diagnostics.fallback_count += 1
    labels = _apply_update(snapshot, candidate, kind, powerdown)
    result = _with_labels(candidate, labels)
    events = []
    if kind is not TransitionKind.NO_CHANGE:
        s = result.stride
        parents = tuple(decode_cycle(c, s)
                        for c in sorted(snapshot.cycles - candidate.cycles))
        children_codes = sorted(candidate.cycles - snapshot.cycles)
        children = tuple(decode_cycle(c, s) for c in children_codes)
        events.append(ReebEvent(
            time=result.time, kind=kind, parents=parents, children=children,
            labels_after={decode_cycle(c, s): labels[c]
                          for c in children_codes if c in labels}))
    if record:
        diagnostics.accepted.append(result)
    return result, events
