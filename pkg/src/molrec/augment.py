"""Molecule augmentation: functional-group abbreviation substitution and
R-group addition, plus the inverse expansion applied at inference.

Substitution rules live in a TSV data file: `abbreviation<TAB>fragment`,
where the fragment is a pseudo-SMILES with exactly one '*' marking the
attachment bond. A matched fragment may touch the rest of the molecule only
through its attachment atom (clean cut), so removal and re-expansion are
exact inverses on formula and structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .graph import (
    DEFAULT_VALENCES,
    IMPLICIT_H,
    AtomKind,
    AtomLabel,
    BondType,
    GraphError,
    MolGraph,
)
from . import smiles as _smiles

__all__ = [
    "SubstitutionRule",
    "RuleTable",
    "ExpansionError",
    "RGROUP_LABELS",
    "match",
    "substitute",
    "add_rgroup",
    "expand",
    "default_rule_table",
]

RGROUP_LABELS = _smiles.RGROUP_LABELS


class ExpansionError(ValueError):
    def __init__(self, label: str):
        super().__init__(f"unknown abbreviation label: {label}")
        self.label = label


@dataclass(frozen=True)
class SubstitutionRule:
    abbreviation: str
    fragment: str  # pseudo-SMILES with one '*' attachment marker
    template: MolGraph
    attachment: int
    attachment_bond: BondType

    @classmethod
    def from_fragment(cls, abbreviation: str, fragment: str) -> "SubstitutionRule":
        g = _smiles.parse(fragment)
        stars = [i for i, a in enumerate(g.atoms) if a.label.kind == AtomKind.WILDCARD]
        if len(stars) != 1:
            raise GraphError(f"rule {abbreviation}: fragment needs exactly one '*'")
        star = stars[0]
        nbrs = g.neighbors(star)
        if len(nbrs) != 1:
            raise GraphError(f"rule {abbreviation}: '*' must have exactly one bond")
        bond = g.bond_between(star, nbrs[0])
        template = MolGraph()
        remap = {}
        for i, a in enumerate(g.atoms):
            if i == star:
                continue
            remap[i] = template.add_atom(a.label)
        for b in g.bonds:
            if star in (b.begin, b.end):
                continue
            template.add_bond(remap[b.begin], remap[b.end], b.type)
        attachment = remap[nbrs[0]]
        rule = cls(abbreviation, fragment, template, attachment, bond.type)
        if rule._free_valence(attachment, attached=True) < 0:
            raise GraphError(f"rule {abbreviation}: attachment atom has no free valence")
        return rule

    def _template_hydrogens(self, idx: int, attached: bool) -> int:
        """Implicit H of a template atom, counting the attachment bond when
        the molecule context is meant; clamped at 0 like the molecule side."""
        return max(0, self._free_valence(idx, attached))

    def _free_valence(self, idx: int, attached: bool) -> int:
        label = self.template.atoms[idx].label
        if label.explicit_h is not None:
            return label.explicit_h
        valence = DEFAULT_VALENCES.get(label.element, 0)
        if label.element in {"N", "O", "S"}:
            valence += label.charge
        total = self.template.bond_order_sum(idx)
        if attached and idx == self.attachment:
            total += self.attachment_bond.order
        return int(valence - math.floor(total))


class RuleTable:
    def __init__(self, rules: Sequence[SubstitutionRule]):
        self.rules = list(rules)
        self.by_label = {r.abbreviation: r for r in self.rules}

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def get(self, label: str) -> Optional[SubstitutionRule]:
        return self.by_label.get(label)

    @classmethod
    def load(cls, path) -> "RuleTable":
        rules = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                abbrev, fragment = line.split("\t")
                rules.append(SubstitutionRule.from_fragment(abbrev, fragment))
        return cls(rules)


def default_rule_table() -> RuleTable:
    with resources.as_file(resources.files("molrec.data") / "functional_groups.tsv") as p:
        return RuleTable.load(p)


def _labels_compatible(t_label: AtomLabel, g_label: AtomLabel) -> bool:
    return (
        t_label.kind == AtomKind.ELEMENT
        and g_label.kind == AtomKind.ELEMENT
        and t_label.element == g_label.element
        and t_label.aromatic == g_label.aromatic
        and t_label.charge == g_label.charge
        and t_label.isotope == g_label.isotope
    )


def match(graph: MolGraph, rule: SubstitutionRule) -> list[dict[int, int]]:
    """Anchored subgraph-isomorphism matches (template index -> graph index).

    The matched fragment may connect to the rest of the molecule only through
    the attachment atom, via a single bond of the rule's attachment type.
    Atoms carrying parity never match: abbreviating a stereocenter would lose
    information that expansion cannot restore.
    """
    t = rule.template
    if len(t) == 0 or len(t) > len(graph):
        return []

    def compatible(ti: int, gi: int) -> bool:
        if not _labels_compatible(t.atoms[ti].label, graph.atoms[gi].label):
            return False
        if graph.atoms[gi].parity != "none":
            return False
        is_anchor = ti == rule.attachment
        if graph.degree(gi) != t.degree(ti) + (1 if is_anchor else 0):
            return False
        try:
            g_h = graph.implicit_hydrogens(gi)
        except GraphError:
            return False
        return g_h == rule._template_hydrogens(ti, attached=is_anchor)

    # BFS order from the attachment so each later atom has a mapped neighbor
    order = [rule.attachment]
    seen = {rule.attachment}
    qi = 0
    while qi < len(order):
        v = order[qi]
        qi += 1
        for w in t.neighbors(v):
            if w not in seen:
                seen.add(w)
                order.append(w)

    matches: list[dict[int, int]] = []
    seen_keys: set[tuple] = set()

    def extend(pos: int, mapping: dict[int, int], used: set[int]) -> None:
        if pos == len(order):
            key = (mapping[rule.attachment], frozenset(mapping.values()))
            if key not in seen_keys:
                seen_keys.add(key)
                matches.append(dict(mapping))
            return
        ti = order[pos]
        anchors = [w for w in t.neighbors(ti) if w in mapping]
        ta = anchors[0]
        want = t.bond_between(ti, ta).type
        for gi in graph.neighbors(mapping[ta]):
            if gi in used or not compatible(ti, gi):
                continue
            if graph.bond_between(mapping[ta], gi).type != want:
                continue
            ok = True
            for other in anchors[1:]:
                gb = graph.bond_between(gi, mapping[other])
                tb = t.bond_between(ti, other)
                if gb is None or gb.type != tb.type:
                    ok = False
                    break
            if ok:
                mapping[ti] = gi
                used.add(gi)
                extend(pos + 1, mapping, used)
                del mapping[ti]
                used.discard(gi)

    for gi in range(len(graph)):
        if compatible(rule.attachment, gi):
            extend(1, {rule.attachment: gi}, {gi})

    # keep only clean cuts: every neighbor of a matched atom is matched,
    # except one attachment-bond neighbor of the anchor
    out = []
    for m in matches:
        atoms = set(m.values())
        anchor = m[rule.attachment]
        ok = True
        outside_seen = 0
        for gi in atoms:
            for n in graph.neighbors(gi):
                if n in atoms:
                    continue
                if gi != anchor:
                    ok = False
                    break
                outside_seen += 1
                if graph.bond_between(gi, n).type != rule.attachment_bond:
                    ok = False
                    break
            if not ok:
                break
        if ok and outside_seen == 1:
            out.append(m)
    return out


def substitute(graph: MolGraph, rules: RuleTable, p: float,
               rng: np.random.Generator) -> MolGraph:
    """Replace matched functional groups with abbreviation pseudo-atoms, each
    selected match independently with probability p, greedily non-overlapping
    in rng order. Bit-reproducible for a fixed seed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p == 0.0 or len(rules) == 0:
        return graph.copy()
    candidates = []
    for rule in rules:
        for m in match(graph, rule):
            candidates.append((rule, m, frozenset(m.values())))
    candidates.sort(key=lambda c: (min(c[2]), c[0].abbreviation))
    if not candidates:
        return graph.copy()
    order = rng.permutation(len(candidates))
    chosen = []
    used: set[int] = set()
    for k in order:
        rule, m, atoms = candidates[k]
        if atoms & used:
            continue
        if rng.random() < p:
            chosen.append((rule, m, atoms))
            used |= atoms
    if not chosen:
        return graph.copy()

    removed = set().union(*(atoms for _, _, atoms in chosen))
    pseudo_at: dict[int, tuple[SubstitutionRule, frozenset]] = {
        m[rule.attachment]: (rule, atoms) for rule, m, atoms in chosen
    }
    out = MolGraph()
    remap: dict[int, int] = {}
    for old, atom in enumerate(graph.atoms):
        if old in pseudo_at:
            rule, atoms = pseudo_at[old]
            coords = None
            members = [graph.atoms[a].coords for a in sorted(atoms)]
            if all(c is not None for c in members):
                coords = (
                    sum(c[0] for c in members) / len(members),
                    sum(c[1] for c in members) / len(members),
                )
            label = AtomLabel(kind=AtomKind.ABBREVIATION, text=rule.abbreviation)
            remap[old] = out.add_atom(label, coords)
        elif old in removed:
            continue
        else:
            new = out.add_atom(atom.label)
            out.atoms[new].x, out.atoms[new].y = atom.x, atom.y
            out.atoms[new].parity = atom.parity
            remap[old] = new
    for b in graph.bonds:
        if b.begin in remap and b.end in remap:
            bb, ee = remap[b.begin], remap[b.end]
            if out.bond_between(bb, ee) is None:
                out.add_bond(bb, ee, b.type, b.direction)
    for old, atom in enumerate(graph.atoms):
        if old in remap and atom.parity != "none" and old not in pseudo_at:
            out.atoms[remap[old]].parity_neighbors = tuple(
                IMPLICIT_H if n == IMPLICIT_H else remap[n] for n in atom.parity_neighbors
            )
    return out


def add_rgroup(graph: MolGraph, p: float, rng: np.random.Generator,
               labels: Sequence[str] = RGROUP_LABELS) -> MolGraph:
    """With probability p, bond one new R-group pseudo-atom (uniform label) to
    a uniformly chosen atom with a spare hydrogen."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    out = graph.copy()
    if p == 0.0 or rng.random() >= p:
        return out
    eligible = [
        i for i, a in enumerate(out.atoms)
        if a.label.kind == AtomKind.ELEMENT and out.implicit_hydrogens(i) >= 1
    ]
    if not eligible:
        return out
    target = int(eligible[rng.integers(len(eligible))])
    text = str(labels[rng.integers(len(labels))])
    coords = None
    t_atom = out.atoms[target]
    if t_atom.coords is not None:
        nbr_coords = [out.atoms[n].coords for n in out.neighbors(target)]
        if all(c is not None for c in nbr_coords):
            lengths = [
                math.dist(out.atoms[b.begin].coords, out.atoms[b.end].coords)
                for b in out.bonds
                if out.atoms[b.begin].coords and out.atoms[b.end].coords
            ]
            length = float(np.median(lengths)) if lengths else 0.1
            if nbr_coords:
                dx = sum(c[0] - t_atom.x for c in nbr_coords)
                dy = sum(c[1] - t_atom.y for c in nbr_coords)
                norm = math.hypot(dx, dy)
                direction = (-dx / norm, -dy / norm) if norm > 1e-12 else (1.0, 0.0)
            else:
                direction = (1.0, 0.0)
            coords = (
                min(max(t_atom.x + direction[0] * length, 0.0), 1.0 - 1e-9),
                min(max(t_atom.y + direction[1] * length, 0.0), 1.0 - 1e-9),
            )
    new = out.add_atom(AtomLabel(kind=AtomKind.RGROUP, text=text), coords)
    out.add_bond(target, new, BondType.SINGLE)
    label = t_atom.label
    if label.explicit_h is not None:
        out.atoms[target].label = replace(label, explicit_h=max(0, label.explicit_h - 1))
    if t_atom.parity != "none" and IMPLICIT_H in t_atom.parity_neighbors:
        # the R-group takes the implicit hydrogen's spatial slot
        out.atoms[target].parity_neighbors = tuple(
            new if n == IMPLICIT_H else n for n in t_atom.parity_neighbors
        )
    return out


def expand(graph: MolGraph, rules: RuleTable) -> MolGraph:
    """Replace abbreviation pseudo-atoms with their template subgraphs and
    relabel R-groups as wildcards. Unknown labels raise ExpansionError."""
    out = graph.copy()
    while True:
        pseudo = next(
            (i for i, a in enumerate(out.atoms) if a.label.kind == AtomKind.ABBREVIATION),
            None,
        )
        if pseudo is None:
            break
        rule = rules.get(out.atoms[pseudo].label.text)
        if rule is None:
            raise ExpansionError(out.atoms[pseudo].label.text)
        out = _expand_one(out, pseudo, rule)
    for i, a in enumerate(out.atoms):
        if a.label.kind == AtomKind.RGROUP:
            out.atoms[i].label = AtomLabel(kind=AtomKind.WILDCARD, text="*")
    return out


def _expand_one(graph: MolGraph, pseudo: int, rule: SubstitutionRule) -> MolGraph:
    t = rule.template
    coords = graph.atoms[pseudo].coords
    out = MolGraph()
    remap: dict[int, int] = {}
    t_remap: dict[int, int] = {}
    for old, atom in enumerate(graph.atoms):
        if old == pseudo:
            idx = out.add_atom(t.atoms[rule.attachment].label, coords)
            t_remap[rule.attachment] = idx
            remap[old] = idx
        else:
            idx = out.add_atom(atom.label)
            out.atoms[idx].x, out.atoms[idx].y = atom.x, atom.y
            out.atoms[idx].parity = atom.parity
            remap[old] = idx
    for ti, atom in enumerate(t.atoms):
        if ti == rule.attachment:
            continue
        t_remap[ti] = out.add_atom(atom.label, coords)
    for b in graph.bonds:
        out.add_bond(remap[b.begin], remap[b.end], b.type, b.direction)
    for b in t.bonds:
        out.add_bond(t_remap[b.begin], t_remap[b.end], b.type)
    for old, atom in enumerate(graph.atoms):
        if atom.parity != "none" and old != pseudo:
            out.atoms[remap[old]].parity_neighbors = tuple(
                IMPLICIT_H if n == IMPLICIT_H else remap[n] for n in atom.parity_neighbors
            )
    return out
