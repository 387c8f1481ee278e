"""Canonical atom ranking and canonical SMILES.

Morgan-style iterative refinement over atom invariants, with backtracking
tie-breaks that keep the minimum graph signature. Plain one-atom tie-breaking
is only order-independent when tied cells are automorphism orbits, which
refinement does not guarantee; exploring the first tied cell and keeping the
minimal signature makes the output invariant under input atom permutations.

Canonical equality is *our* contract: two strings compare equal iff this
module emits the same text for both. Aromatic and Kekulé depictions of the
same ring are distinct here by design (no aromaticity perception).
"""

from __future__ import annotations

from typing import Optional, Sequence

from .graph import (
    IMPLICIT_H,
    ORGANIC_SUBSET,
    AtomKind,
    Bond,
    BondDirection,
    BondType,
    MolGraph,
)
from . import smiles as _smiles

__all__ = ["canonical_ranks", "canonicalize", "canonical_graph", "normalize_parity_code"]

_KIND_CODE = {
    AtomKind.ELEMENT: 0,
    AtomKind.WILDCARD: 1,
    AtomKind.RGROUP: 2,
    AtomKind.ABBREVIATION: 3,
}

_BOND_CODE = {
    BondType.SINGLE: 1,
    BondType.DOUBLE: 2,
    BondType.TRIPLE: 3,
    BondType.AROMATIC: 4,
    BondType.SOLID_WEDGE: 5,
    BondType.DASHED_WEDGE: 6,
}

_PARITY_CODE = {"none": 0, "ccw": 1, "cw": 2}


def _initial_invariants(graph: MolGraph) -> list[tuple]:
    ring = graph.ring_atoms()
    invs = []
    for i, atom in enumerate(graph.atoms):
        label = atom.label
        if label.kind == AtomKind.ELEMENT:
            h = graph.implicit_hydrogens(i)
            key_text = label.element
        else:
            h = 0
            key_text = label.text
        invs.append((
            _KIND_CODE[label.kind],
            key_text,
            int(label.aromatic),
            label.charge,
            label.isotope or 0,
            graph.degree(i),
            h,
            int(i in ring),
        ))
    return invs


def _dense_ranks(keys: list) -> list[int]:
    lookup = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [lookup[k] for k in keys]


def _refine(adj: dict[int, list[tuple[int, int]]], ranks: list[int]) -> list[int]:
    nclasses = len(set(ranks))
    while True:
        keys = [
            (ranks[i], tuple(sorted((code, ranks[j]) for j, code in adj[i])))
            for i in range(len(ranks))
        ]
        new = _dense_ranks(keys)
        new_n = len(set(new))
        if new_n == nclasses:
            return new
        ranks, nclasses = new, new_n


def normalize_parity_code(graph: MolGraph, idx: int, ranks: Sequence[int]) -> int:
    """Parity re-expressed against neighbors sorted by rank (H slot first)."""
    atom = graph.atoms[idx]
    if atom.parity == "none" or not atom.parity_neighbors:
        return 0
    ref = sorted(atom.parity_neighbors,
                 key=lambda n: -1 if n == IMPLICIT_H else ranks[n])
    parity = atom.parity
    if _smiles._perm_sign(atom.parity_neighbors, ref) < 0:
        parity = "cw" if parity == "ccw" else "ccw"
    return _PARITY_CODE[parity]


def _signature(graph: MolGraph, invs: list[tuple], ranks: list[int]) -> tuple:
    by_rank = sorted(range(len(ranks)), key=lambda i: ranks[i])
    atom_part = tuple(
        invs[i] + (normalize_parity_code(graph, i, ranks),) for i in by_rank
    )
    bond_part = []
    for b in graph.bonds:
        rb, re_ = ranks[b.begin], ranks[b.end]
        if b.type.is_wedge:
            direction = 1 if rb < re_ else 2
        else:
            direction = 0
        bond_part.append((min(rb, re_), max(rb, re_), _BOND_CODE[b.type], direction))
    return (atom_part, tuple(sorted(bond_part)))


def _canonical_search(graph: MolGraph, invs: list[tuple],
                      adj: dict[int, list[tuple[int, int]]],
                      ranks: list[int]) -> tuple[tuple, list[int]]:
    ranks = _refine(adj, ranks)
    cells: dict[int, list[int]] = {}
    for i, r in enumerate(ranks):
        cells.setdefault(r, []).append(i)
    tied = [r for r, members in cells.items() if len(members) > 1]
    if not tied:
        return _signature(graph, invs, ranks), ranks
    cell = cells[min(tied)]
    best: Optional[tuple[tuple, list[int]]] = None
    for a in cell:
        keys = [(ranks[i], 0 if i == a else (1 if i in cell else 0)) for i in range(len(ranks))]
        cand = _canonical_search(graph, invs, adj, _dense_ranks(keys))
        if best is None or cand[0] < best[0]:
            best = cand
    return best


def canonical_ranks(graph: MolGraph) -> list[int]:
    """Unique rank per atom; identical graphs under any input atom permutation
    produce the same rank-ordered structure."""
    n = len(graph.atoms)
    if n == 0:
        return []
    adj: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    for b in graph.bonds:
        code = _BOND_CODE[b.type]
        adj[b.begin].append((b.end, code))
        adj[b.end].append((b.begin, code))
    invs = _initial_invariants(graph)
    _, ranks = _canonical_search(graph, invs, adj, _dense_ranks(invs))
    return ranks


def _normalize(graph: MolGraph) -> MolGraph:
    g = graph.copy()
    for i, atom in enumerate(g.atoms):
        label = atom.label
        if (label.kind == AtomKind.ELEMENT and label.explicit_h is not None
                and label.element in ORGANIC_SUBSET and label.charge == 0
                and label.isotope is None and atom.parity == "none"
                and not label.aromatic):
            stripped = _with_explicit_h(label, None)
            g.atoms[i].label = stripped
            if g.implicit_hydrogens(i) != label.explicit_h:
                g.atoms[i].label = label  # bracket H count is load-bearing
    for b in g.bonds:
        b.direction = BondDirection.NONE
        if b.type.is_wedge:
            b.type = BondType.SINGLE  # depiction artifact; parity carries stereo
    return g


def _with_explicit_h(label, h):
    from dataclasses import replace

    return replace(label, explicit_h=h)


def _extract_component(graph: MolGraph, atoms: list[int]) -> MolGraph:
    remap = {old: new for new, old in enumerate(atoms)}
    sub = MolGraph()
    for old in atoms:
        a = graph.atoms[old]
        idx = sub.add_atom(a.label)
        sub.atoms[idx].x, sub.atoms[idx].y = a.x, a.y
        sub.atoms[idx].parity = a.parity
        sub.atoms[idx].parity_neighbors = tuple(
            IMPLICIT_H if n == IMPLICIT_H else remap[n] for n in a.parity_neighbors
        )
    for b in graph.bonds:
        if b.begin in remap:
            sub.add_bond(remap[b.begin], remap[b.end], b.type, b.direction)
    return sub


def canonical_graph(graph: MolGraph) -> str:
    """Canonical string for an in-memory graph (no parse step)."""
    norm = _normalize(graph)
    parts = []
    for comp in norm.components():
        sub = _extract_component(norm, comp)
        ranks = canonical_ranks(sub)
        parts.append(_smiles.write(sub, ranks))
    return ".".join(sorted(parts))


def canonicalize(text: str, strict: bool = False) -> str:
    """Unique representative string; idempotent; cis/trans markers dropped."""
    return canonical_graph(_smiles.parse(text, strict=strict))
