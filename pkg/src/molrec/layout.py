"""2D coordinate assignment: ring templates plus chain zigzag.

Single rings become regular polygons, fused pairs share an edge, spiro rings
share an atom; anything needing more (bridged polycycles) raises LayoutError
so the caller can supply coordinates instead. Chains zigzag at 120-degree
bond angles (alternating +-30 degrees from horizontal), unit bond length,
then everything is normalized into [0.1, 0.9]^2 with aspect preserved.
"""

from __future__ import annotations

import math

import networkx as nx

from .graph import MolGraph

__all__ = ["LayoutError", "layout"]

MARGIN = 0.1


class LayoutError(ValueError):
    pass


def _to_nx(graph: MolGraph, atoms: list[int]) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(atoms)
    members = set(atoms)
    for b in graph.bonds:
        if b.begin in members and b.end in members:
            g.add_edge(b.begin, b.end)
    return g


def _cycle_order(nodes: set[int], g: nx.Graph) -> list[int]:
    """Walk a node set that should induce a simple cycle into cyclic order."""
    sub = g.subgraph(nodes)
    start = next(iter(nodes))
    order = [start]
    prev = None
    cur = start
    while True:
        nbrs = [n for n in sub.neighbors(cur) if n != prev]
        if not nbrs:
            raise LayoutError("ring walk failed; not a simple cycle")
        nxt = min(nbrs)
        if nxt == start:
            break
        order.append(nxt)
        prev, cur = cur, nxt
        if len(order) > len(nodes):
            raise LayoutError("ring walk failed; not a simple cycle")
    if len(order) != len(nodes):
        raise LayoutError("ring walk failed; chords present")
    return order


def _regular_polygon(n: int, center: tuple[float, float], start_angle: float) -> list[tuple[float, float]]:
    r = 0.5 / math.sin(math.pi / n)
    return [
        (center[0] + r * math.cos(start_angle + 2 * math.pi * k / n),
         center[1] + r * math.sin(start_angle + 2 * math.pi * k / n))
        for k in range(n)
    ]


def _place_ring_system(cycles: list[list[int]], pos: dict[int, tuple[float, float]]) -> None:
    cycles = sorted(cycles, key=lambda c: (len(c), min(c)))
    first = cycles[0]
    verts = _regular_polygon(len(first), (0.0, 0.0), -math.pi / 2)
    for atom, v in zip(first, verts):
        pos[atom] = v
    remaining = cycles[1:]
    guard = 0
    while remaining:
        guard += 1
        if guard > 1000:
            raise LayoutError("ring system placement did not converge")
        progressed = False
        for cyc in list(remaining):
            placed = [a for a in cyc if a in pos]
            if len(placed) == len(cyc):
                remaining.remove(cyc)
                progressed = True
                continue
            if len(placed) == 2:
                i1, i2 = cyc.index(placed[0]), cyc.index(placed[1])
                adjacent = (abs(i1 - i2) == 1) or ({i1, i2} == {0, len(cyc) - 1})
                if not adjacent:
                    raise LayoutError("bridged ring system; supply coordinates")
                _place_fused(cyc, placed[0], placed[1], pos)
                remaining.remove(cyc)
                progressed = True
            elif len(placed) == 1:
                _place_spiro(cyc, placed[0], pos)
                remaining.remove(cyc)
                progressed = True
            elif len(placed) > 2:
                raise LayoutError("ring shares more than one edge; supply coordinates")
        if not progressed:
            # disconnected pieces of one "system" cannot happen (systems are
            # grouped by shared atoms), so lack of progress is a real failure
            raise LayoutError("ring system placement stuck")


def _rotate_cycle(cyc: list[int], anchor: int) -> list[int]:
    i = cyc.index(anchor)
    return cyc[i:] + cyc[:i]


def _place_fused(cyc: list[int], a: int, b: int,
                 pos: dict[int, tuple[float, float]]) -> None:
    """Place a ring that shares the placed edge (a, b)."""
    cyc = _rotate_cycle(cyc, a)
    if cyc[1] != b:
        cyc = [cyc[0]] + cyc[:0:-1]  # reverse walk so b comes second
    n = len(cyc)
    ax, ay = pos[a]
    bx, by = pos[b]
    mx, my = (ax + bx) / 2, (ay + by) / 2
    edge = math.hypot(bx - ax, by - ay)
    if edge < 1e-9:
        raise LayoutError("degenerate shared edge")
    apothem = edge / (2 * math.tan(math.pi / n))
    # perpendicular away from the mean of already placed neighbors
    px, py = -(by - ay) / edge, (bx - ax) / edge
    others = [pos[k] for k in pos if k not in (a, b)]
    if others:
        ox = sum(p[0] for p in others) / len(others)
        oy = sum(p[1] for p in others) / len(others)
        if (mx + px * apothem - ox) ** 2 + (my + py * apothem - oy) ** 2 < \
           (mx - px * apothem - ox) ** 2 + (my - py * apothem - oy) ** 2:
            px, py = -px, -py
    cx, cy = mx + px * apothem, my + py * apothem
    # walk vertices from a toward b around the center
    angle_a = math.atan2(ay - cy, ax - cx)
    angle_b = math.atan2(by - cy, bx - cx)
    step = 2 * math.pi / n
    diff = (angle_b - angle_a) % (2 * math.pi)
    direction = 1.0 if abs(diff - step) < abs(diff - (2 * math.pi - step)) else -1.0
    r = math.hypot(ax - cx, ay - cy)
    for k, atom in enumerate(cyc):
        if atom in pos:
            continue
        theta = angle_a + direction * step * k
        pos[atom] = (cx + r * math.cos(theta), cy + r * math.sin(theta))


def _place_spiro(cyc: list[int], a: int, pos: dict[int, tuple[float, float]]) -> None:
    cyc = _rotate_cycle(cyc, a)
    n = len(cyc)
    ax, ay = pos[a]
    others = [pos[k] for k in pos if k != a]
    if others:
        ox = sum(p[0] for p in others) / len(others)
        oy = sum(p[1] for p in others) / len(others)
        d = math.hypot(ax - ox, ay - oy)
        ux, uy = ((ax - ox) / d, (ay - oy) / d) if d > 1e-9 else (1.0, 0.0)
    else:
        ux, uy = 1.0, 0.0
    r = 0.5 / math.sin(math.pi / n)
    cx, cy = ax + ux * r, ay + uy * r
    base = math.atan2(ay - cy, ax - cx)
    for k, atom in enumerate(cyc):
        if atom in pos:
            continue
        theta = base + 2 * math.pi * k / n
        pos[atom] = (cx + r * math.cos(theta), cy + r * math.sin(theta))


_ZIG = math.radians(60)


def _zig_out(in_angle: float) -> float:
    return in_angle - _ZIG if in_angle > 0 else in_angle + _ZIG


def _candidate_angles(in_angle: float) -> list[float]:
    first = _zig_out(in_angle)
    second = in_angle + _ZIG if first == in_angle - _ZIG else in_angle - _ZIG
    return [first, second, in_angle, in_angle + 2 * _ZIG, in_angle - 2 * _ZIG,
            in_angle + math.pi / 2, in_angle - math.pi / 2]


def _norm_angle(a: float) -> float:
    while a > math.pi:
        a -= 2 * math.pi
    while a <= -math.pi:
        a += 2 * math.pi
    return a


def _grow_chains(graph: MolGraph, comp: list[int],
                 pos: dict[int, tuple[float, float]],
                 ring_atoms: set[int], centers: dict[int, tuple[float, float]]) -> None:
    in_angle: dict[int, float] = {}
    taken: dict[int, list[float]] = {a: [] for a in comp}
    if not pos:  # acyclic component: seed the first atom
        root = min(comp)
        pos[root] = (0.0, 0.0)
        in_angle[root] = math.radians(30)
    queue = sorted(pos)
    qi = 0
    while qi < len(queue):
        v = queue[qi]
        qi += 1
        vx, vy = pos[v]
        for w in sorted(graph.neighbors(v)):
            if w in pos:
                taken[v].append(math.atan2(pos[w][1] - vy, pos[w][0] - vx))
                continue
            if v in ring_atoms and v in centers:
                cx, cy = centers[v]
                base = math.atan2(vy - cy, vx - cx)
                cands = [base, base + math.pi / 6, base - math.pi / 6,
                         base + math.pi / 3, base - math.pi / 3]
            else:
                cands = _candidate_angles(in_angle.get(v, math.radians(30)))
            angle = None
            for cand in cands:
                cand = _norm_angle(cand)
                if all(abs(_norm_angle(cand - t)) > 1e-6 for t in taken[v]):
                    angle = cand
                    break
            if angle is None:
                angle = _norm_angle(cands[0] + 0.3 * (len(taken[v]) + 1))
            taken[v].append(angle)
            pos[w] = (vx + math.cos(angle), vy + math.sin(angle))
            in_angle[w] = angle
            queue.append(w)


def layout(graph: MolGraph) -> MolGraph:
    """Copy of the graph with coordinates assigned; graphs already carrying a
    full set of coordinates are returned untouched."""
    out = graph.copy()
    if len(out) == 0:
        return out
    if all(a.coords is not None for a in out.atoms):
        return out

    placed_components: list[dict[int, tuple[float, float]]] = []
    for comp in out.components():
        g = _to_nx(out, comp)
        pos: dict[int, tuple[float, float]] = {}
        cycles = [_cycle_order(set(c), g) for c in nx.minimum_cycle_basis(g)]
        ring_atoms = {a for c in cycles for a in c}
        systems = _group_ring_systems(cycles)
        offset_x = 0.0
        for system in systems:
            sys_pos: dict[int, tuple[float, float]] = {}
            _place_ring_system(system, sys_pos)
            if pos:
                # separate ring systems of one component connect via chains;
                # shift this system clear of what's already placed
                max_x = max(p[0] for p in pos.values())
                min_sys = min(p[0] for p in sys_pos.values())
                shift = max_x - min_sys + 2.0
                sys_pos = {a: (x + shift, y) for a, (x, y) in sys_pos.items()}
            pos.update(sys_pos)
            offset_x += 1.0
        centers = _ring_vertex_centers(cycles, pos)
        _grow_chains(out, comp, pos, ring_atoms, centers)
        placed_components.append(pos)

    _pack_and_normalize(out, placed_components)
    return out


def _group_ring_systems(cycles: list[list[int]]) -> list[list[list[int]]]:
    systems: list[tuple[set[int], list[list[int]]]] = []
    for cyc in cycles:
        merged = None
        for atoms, members in systems:
            if atoms & set(cyc):
                atoms |= set(cyc)
                members.append(cyc)
                merged = (atoms, members)
                break
        if merged is None:
            systems.append((set(cyc), [cyc]))
        else:
            # merging may connect previously separate systems
            changed = True
            while changed:
                changed = False
                for i in range(len(systems)):
                    for j in range(i + 1, len(systems)):
                        if systems[i][0] & systems[j][0]:
                            systems[i][0].update(systems[j][0])
                            systems[i][1].extend(systems[j][1])
                            del systems[j]
                            changed = True
                            break
                    if changed:
                        break
    return [members for _, members in systems]


def _ring_vertex_centers(cycles: list[list[int]],
                         pos: dict[int, tuple[float, float]]) -> dict[int, tuple[float, float]]:
    centers: dict[int, list[tuple[float, float]]] = {}
    for cyc in cycles:
        if not all(a in pos for a in cyc):
            continue
        cx = sum(pos[a][0] for a in cyc) / len(cyc)
        cy = sum(pos[a][1] for a in cyc) / len(cyc)
        for a in cyc:
            centers.setdefault(a, []).append((cx, cy))
    return {
        a: (sum(c[0] for c in lst) / len(lst), sum(c[1] for c in lst) / len(lst))
        for a, lst in centers.items()
    }


def _pack_and_normalize(graph: MolGraph,
                        components: list[dict[int, tuple[float, float]]]) -> None:
    # place components side by side with a one-bond gap
    all_pos: dict[int, tuple[float, float]] = {}
    cursor = 0.0
    for pos in components:
        min_x = min(p[0] for p in pos.values())
        max_x = max(p[0] for p in pos.values())
        for a, (x, y) in pos.items():
            all_pos[a] = (x - min_x + cursor, y)
        cursor += (max_x - min_x) + 1.5

    xs = [p[0] for p in all_pos.values()]
    ys = [p[1] for p in all_pos.values()]
    w, h = max(xs) - min(xs), max(ys) - min(ys)
    span = max(w, h)
    if span < 1e-12:
        for a in all_pos:
            graph.atoms[a].x, graph.atoms[a].y = 0.5, 0.5
        return
    scale = (1.0 - 2 * MARGIN) / span
    pad_x = (1.0 - 2 * MARGIN - w * scale) / 2
    pad_y = (1.0 - 2 * MARGIN - h * scale) / 2
    for a, (x, y) in all_pos.items():
        graph.atoms[a].x = MARGIN + pad_x + (x - min(xs)) * scale
        graph.atoms[a].y = MARGIN + pad_y + (y - min(ys)) * scale
