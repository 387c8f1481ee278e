"""Geometric tetrahedral parity perception from 2D coordinates and wedges.

Neighbors are lifted to 3D (solid wedge z=+1, dashed z=-1 at the far atom of
a wedge whose narrow end sits on the center; everything else stays in plane)
and the sign of the lifted tetrahedron volume decides between "@" (ccw) and
"@@" (cw). A wedge whose wide end touches the center contributes only to the
far atom's own environment. Coordinates use image orientation: x right,
y down, z toward the viewer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .graph import IMPLICIT_H, AtomKind, BondType, MolGraph

__all__ = [
    "StereoEnvironment",
    "DEGENERACY_EPS",
    "perceive",
    "build_environment",
    "overwrite_all",
    "NotAStereocenter",
]

logger = logging.getLogger(__name__)

# Collinear/degenerate layouts below this |volume| perceive as none.
DEGENERACY_EPS = 1e-9

WEDGE_NONE = "none"
WEDGE_SOLID = "solid_begin_here"
WEDGE_DASHED = "dashed_begin_here"

_WEDGE_Z = {WEDGE_NONE: 0.0, WEDGE_SOLID: 1.0, WEDGE_DASHED: -1.0}


class NotAStereocenter(ValueError):
    pass


@dataclass
class StereoEnvironment:
    center: int
    center_coords: tuple[float, float]
    # (atom index, coords, wedge) in the order the parity will refer to
    neighbors: list[tuple[int, tuple[float, float], str]]
    has_implicit_h: bool

    def parity_neighbor_list(self) -> tuple[int, ...]:
        """Neighbor order the perceived parity is relative to; the implicit H
        slot mirrors the SMILES convention (right after the first neighbor)."""
        ids = [n for n, _, _ in self.neighbors]
        if not self.has_implicit_h:
            return tuple(ids)
        if len(ids) >= 1:
            return (ids[0], IMPLICIT_H, *ids[1:])
        return (IMPLICIT_H,)


def _det3(u, v, w) -> float:
    return (
        u[0] * (v[1] * w[2] - v[2] * w[1])
        - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0])
    )


def perceive(env: StereoEnvironment, warn: bool = True) -> str:
    """Parity in {none, ccw, cw}; positive lifted volume means ccw ("@")."""
    k = len(env.neighbors)
    if k < 3:
        raise NotAStereocenter(
            f"atom {env.center} has {k} explicit neighbors; need 3 or 4")
    if k > 4 or (k == 4 and env.has_implicit_h):
        raise NotAStereocenter(f"atom {env.center} has too many neighbors")
    if all(wedge == WEDGE_NONE for _, _, wedge in env.neighbors):
        return "none"

    cx, cy = env.center_coords
    points = [(x, y, _WEDGE_Z[wedge]) for _, (x, y), wedge in env.neighbors]
    if env.has_implicit_h:
        # Opposite the mean neighbor displacement, z balancing the wedges.
        mx = sum(p[0] - cx for p in points) / len(points)
        my = sum(p[1] - cy for p in points) / len(points)
        mz = sum(p[2] for p in points)
        h_point = (cx - mx, cy - my, -mz)
        order = env.parity_neighbor_list()
        lifted = []
        by_id = {n: p for (n, _, _), p in zip(env.neighbors, points)}
        for n in order:
            lifted.append(h_point if n == IMPLICIT_H else by_id[n])
    else:
        lifted = points

    if len(lifted) == 4:
        p1, p2, p3, p4 = lifted
        vol = _det3(
            (p2[0] - p1[0], p2[1] - p1[1], p2[2] - p1[2]),
            (p3[0] - p1[0], p3[1] - p1[1], p3[2] - p1[2]),
            (p4[0] - p1[0], p4[1] - p1[1], p4[2] - p1[2]),
        )
    else:
        c = (cx, cy, 0.0)
        p1, p2, p3 = lifted
        vol = _det3(
            (p1[0] - c[0], p1[1] - c[1], p1[2] - c[2]),
            (p2[0] - c[0], p2[1] - c[1], p2[2] - c[2]),
            (p3[0] - c[0], p3[1] - c[1], p3[2] - c[2]),
        )

    if abs(vol) < DEGENERACY_EPS:
        if warn:
            logger.warning("degenerate stereo layout at atom %d; parity dropped", env.center)
        return "none"
    return "ccw" if vol > 0 else "cw"


def build_environment(graph: MolGraph, center: int) -> Optional[StereoEnvironment]:
    """Environment for one atom, neighbors in ascending index order; None when
    the atom cannot carry tetrahedral parity."""
    atom = graph.atoms[center]
    if atom.coords is None:
        return None
    nbrs = sorted(graph.neighbors(center))
    if not 3 <= len(nbrs) <= 4:
        return None
    entries = []
    for n in nbrs:
        other = graph.atoms[n]
        if other.coords is None:
            return None
        bond = graph.bond_between(center, n)
        wedge = WEDGE_NONE
        if bond.type == BondType.SOLID_WEDGE and bond.begin == center:
            wedge = WEDGE_SOLID
        elif bond.type == BondType.DASHED_WEDGE and bond.begin == center:
            wedge = WEDGE_DASHED
        entries.append((n, other.coords, wedge))
    has_h = False
    if len(nbrs) == 3 and atom.label.kind == AtomKind.ELEMENT:
        has_h = graph.implicit_hydrogens(center) == 1
    return StereoEnvironment(center, atom.coords, entries, has_h)


def overwrite_all(graph: MolGraph) -> tuple[MolGraph, list[str]]:
    """Replace every parity from geometry: atoms with an incident narrow-end
    wedge and 3-4 neighbors get perceive()'s verdict, everything else is
    cleared. Coordinates and bonds are untouched."""
    out = graph.copy()
    warnings: list[str] = []
    for i, atom in enumerate(out.atoms):
        atom.parity = "none"
        atom.parity_neighbors = ()
        has_narrow_wedge = any(
            b.type.is_wedge and b.begin == i for b in out.incident_bonds(i)
        )
        if not has_narrow_wedge:
            continue
        env = build_environment(out, i)
        if env is None:
            warnings.append(f"atom {i}: wedge on an atom without a 3-4 neighbor layout")
            continue
        parity = perceive(env)
        if parity == "none":
            warnings.append(f"atom {i}: degenerate geometry, parity dropped")
            continue
        atom.parity = parity
        atom.parity_neighbors = env.parity_neighbor_list()
    return out, warnings
