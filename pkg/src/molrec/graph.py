"""Molecular graph data model: atoms with 2D layout, typed ordered bonds.

Atom indices are stable under append-only construction; graphs are built
single-writer and treated as immutable values afterwards.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional

__all__ = [
    "AtomKind",
    "AtomLabel",
    "Atom",
    "BondType",
    "BondDirection",
    "Bond",
    "MolGraph",
    "ValenceViolation",
    "GraphError",
    "IMPLICIT_H",
    "DEFAULT_VALENCES",
    "ORGANIC_SUBSET",
    "SUPPORTED_ELEMENTS",
    "molecular_formula",
]


class GraphError(ValueError):
    """Invalid graph construction or query."""


# Sentinel used in parity neighbor lists for the implicit hydrogen slot.
IMPLICIT_H = -1

# Organic-subset elements may be written without brackets.
ORGANIC_SUBSET = frozenset({"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"})
AROMATIC_ORGANIC = frozenset({"b", "c", "n", "o", "p", "s"})

SUPPORTED_ELEMENTS = frozenset(
    {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I", "H", "Si", "Se", "As"}
)

# Elements beyond this table (bracket atoms) fall back to valence 0, i.e.
# hydrogens come only from an explicit bracket H count.
DEFAULT_VALENCES = {
    "B": 3,
    "C": 4,
    "N": 3,
    "O": 2,
    "P": 3,
    "S": 2,
    "F": 1,
    "Cl": 1,
    "Br": 1,
    "I": 1,
    "H": 1,
    "Si": 4,
    "Se": 2,
    "As": 3,
}

# +1 charge adds a bonding site on N/O/S, -1 removes one.
CHARGE_ADJUSTED = frozenset({"N", "O", "S"})

ATOMIC_NUMBERS = {
    "H": 1, "B": 5, "C": 6, "N": 7, "O": 8, "F": 9, "Si": 14, "P": 15,
    "S": 16, "Cl": 17, "As": 33, "Se": 34, "Br": 35, "I": 53,
}

MIN_CHARGE, MAX_CHARGE = -4, 4


class AtomKind(str, enum.Enum):
    ELEMENT = "element"
    ABBREVIATION = "abbreviation"
    RGROUP = "rgroup"
    WILDCARD = "wildcard"


class BondType(str, enum.Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"
    SOLID_WEDGE = "solid_wedge"
    DASHED_WEDGE = "dashed_wedge"

    @property
    def order(self) -> float:
        return _BOND_ORDERS[self]

    @property
    def is_wedge(self) -> bool:
        return self in (BondType.SOLID_WEDGE, BondType.DASHED_WEDGE)


_BOND_ORDERS = {
    BondType.SINGLE: 1.0,
    BondType.DOUBLE: 2.0,
    BondType.TRIPLE: 3.0,
    BondType.AROMATIC: 1.5,
    BondType.SOLID_WEDGE: 1.0,
    BondType.DASHED_WEDGE: 1.0,
}


class BondDirection(str, enum.Enum):
    """Cis/trans slash markers, recorded at parse time but never interpreted."""

    NONE = "none"
    UP = "up"      # "/" written from begin to end
    DOWN = "down"  # "\" written from begin to end


@dataclass(frozen=True)
class AtomLabel:
    """What an atom *is*: element or pseudo-atom, with SMILES bracket attributes."""

    kind: AtomKind = AtomKind.ELEMENT
    element: str = ""
    charge: int = 0
    isotope: Optional[int] = None
    explicit_h: Optional[int] = None
    text: str = ""
    aromatic: bool = False

    def __post_init__(self) -> None:
        if not MIN_CHARGE <= self.charge <= MAX_CHARGE:
            raise GraphError(f"charge {self.charge} outside [{MIN_CHARGE}, {MAX_CHARGE}]")
        if self.isotope is not None and self.isotope <= 0:
            raise GraphError(f"isotope {self.isotope} must be positive")
        if self.explicit_h is not None and self.explicit_h < 0:
            raise GraphError(f"explicit H count {self.explicit_h} must be >= 0")
        if self.kind == AtomKind.ELEMENT:
            if not self.element:
                raise GraphError("element atoms need an element symbol")
        elif not self.text:
            raise GraphError(f"{self.kind.value} atoms need a display text")

    @property
    def display(self) -> str:
        return self.element if self.kind == AtomKind.ELEMENT else self.text

    @property
    def is_pseudo(self) -> bool:
        return self.kind in (AtomKind.ABBREVIATION, AtomKind.RGROUP)


@dataclass
class Atom:
    label: AtomLabel
    x: Optional[float] = None
    y: Optional[float] = None
    parity: str = "none"  # none | ccw | cw
    # Ordered neighbor list the parity is relative to; IMPLICIT_H marks the
    # implicit-hydrogen slot. Empty when parity is none.
    parity_neighbors: tuple[int, ...] = ()

    @property
    def coords(self) -> Optional[tuple[float, float]]:
        if self.x is None or self.y is None:
            return None
        return (self.x, self.y)


@dataclass
class Bond:
    begin: int
    end: int
    type: BondType
    direction: BondDirection = BondDirection.NONE

    def other(self, idx: int) -> int:
        if idx == self.begin:
            return self.end
        if idx == self.end:
            return self.begin
        raise GraphError(f"atom {idx} not on bond {self.begin}-{self.end}")


@dataclass(frozen=True)
class ValenceViolation:
    atom: int
    element: str
    bond_order_sum: float
    allowed: int


def _check_coords(coords: tuple[float, float]) -> None:
    x, y = coords
    if not (math.isfinite(x) and math.isfinite(y)):
        raise GraphError(f"coordinates must be finite, got {coords}")
    if not (0.0 <= x < 1.0 and 0.0 <= y < 1.0):
        raise GraphError(f"coordinates must lie in [0,1), got {coords}")


@dataclass
class MolGraph:
    """Atoms plus typed bonds; bond (begin, end) order carries wedge semantics."""

    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)
    _pair_index: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.atoms)

    def add_atom(self, label: AtomLabel, coords: Optional[tuple[float, float]] = None) -> int:
        if coords is not None:
            _check_coords(coords)
            atom = Atom(label, coords[0], coords[1])
        else:
            atom = Atom(label)
        self.atoms.append(atom)
        return len(self.atoms) - 1

    def add_bond(self, begin: int, end: int, type: BondType,
                 direction: BondDirection = BondDirection.NONE) -> None:
        n = len(self.atoms)
        if not (0 <= begin < n and 0 <= end < n):
            raise GraphError(f"bond ({begin},{end}) references missing atoms (have {n})")
        if begin == end:
            raise GraphError(f"self-bond on atom {begin}")
        key = (min(begin, end), max(begin, end))
        if key in self._pair_index:
            raise GraphError(f"duplicate bond between atoms {begin} and {end}")
        self.bonds.append(Bond(begin, end, type, direction))
        self._pair_index[key] = len(self.bonds) - 1

    def bond_between(self, i: int, j: int) -> Optional[Bond]:
        idx = self._pair_index.get((min(i, j), max(i, j)))
        return None if idx is None else self.bonds[idx]

    def neighbors(self, i: int) -> list[int]:
        out = []
        for b in self.bonds:
            if b.begin == i:
                out.append(b.end)
            elif b.end == i:
                out.append(b.begin)
        return out

    def incident_bonds(self, i: int) -> list[Bond]:
        return [b for b in self.bonds if b.begin == i or b.end == i]

    def degree(self, i: int) -> int:
        return sum(1 for b in self.bonds if b.begin == i or b.end == i)

    def bond_order_sum(self, i: int) -> float:
        return sum(b.type.order for b in self.incident_bonds(i))

    def implicit_hydrogens(self, i: int) -> int:
        """Hydrogens implied by the valence model (bracket H counts win)."""
        label = self.atoms[i].label
        if label.kind != AtomKind.ELEMENT:
            raise GraphError(f"atom {i} ({label.kind.value}) has no hydrogen model")
        if label.explicit_h is not None:
            return label.explicit_h
        valence = DEFAULT_VALENCES.get(label.element, 0)
        if label.element in CHARGE_ADJUSTED:
            valence += label.charge
        return max(0, valence - math.floor(self.bond_order_sum(i)))

    def validate_valence(self) -> list[ValenceViolation]:
        """Report atoms whose bonds exceed the default valence; never mutates.

        Atoms with an explicit bracket H count are exempt (hypervalent P/S
        forms are accepted that way), as are pseudo-atoms.
        """
        violations = []
        for i, atom in enumerate(self.atoms):
            label = atom.label
            if label.kind != AtomKind.ELEMENT or label.explicit_h is not None:
                continue
            if label.element not in DEFAULT_VALENCES:
                continue
            allowed = DEFAULT_VALENCES[label.element]
            if label.element in CHARGE_ADJUSTED:
                allowed += label.charge
            total = self.bond_order_sum(i)
            if total > allowed:
                violations.append(ValenceViolation(i, label.element, total, allowed))
        return violations

    def components(self) -> list[list[int]]:
        seen: set[int] = set()
        comps = []
        adj: dict[int, list[int]] = {i: [] for i in range(len(self.atoms))}
        for b in self.bonds:
            adj[b.begin].append(b.end)
            adj[b.end].append(b.begin)
        for start in range(len(self.atoms)):
            if start in seen:
                continue
            comp = []
            stack = [start]
            seen.add(start)
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in adj[v]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def ring_atoms(self) -> set[int]:
        """Atoms incident to at least one non-bridge edge."""
        bridges = self._bridges()
        ring = set()
        for k, b in enumerate(self.bonds):
            if k not in bridges:
                ring.add(b.begin)
                ring.add(b.end)
        return ring

    def _bridges(self) -> set[int]:
        n = len(self.atoms)
        adj: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
        for k, b in enumerate(self.bonds):
            adj[b.begin].append((b.end, k))
            adj[b.end].append((b.begin, k))
        disc = [-1] * n
        low = [0] * n
        bridges: set[int] = set()
        counter = 0
        for root in range(n):
            if disc[root] != -1:
                continue
            stack: list[tuple[int, int, Iterator[tuple[int, int]]]] = [(root, -1, iter(adj[root]))]
            disc[root] = low[root] = counter
            counter += 1
            while stack:
                v, pedge, it = stack[-1]
                advanced = False
                for w, k in it:
                    if k == pedge:
                        continue
                    if disc[w] == -1:
                        disc[w] = low[w] = counter
                        counter += 1
                        stack.append((w, k, iter(adj[w])))
                        advanced = True
                        break
                    low[v] = min(low[v], disc[w])
                if not advanced:
                    stack.pop()
                    if stack:
                        u = stack[-1][0]
                        low[u] = min(low[u], low[v])
                        if low[v] > disc[u]:
                            bridges.add(pedge)
        return bridges

    def copy(self) -> "MolGraph":
        g = MolGraph()
        g.atoms = [replace(a) for a in self.atoms]
        g.bonds = [replace(b) for b in self.bonds]
        g._pair_index = dict(self._pair_index)
        return g

    def verify(self) -> None:
        """Check structural invariants; raises GraphError on the first failure."""
        n = len(self.atoms)
        seen_pairs: set[tuple[int, int]] = set()
        for b in self.bonds:
            if not (0 <= b.begin < n and 0 <= b.end < n):
                raise GraphError(f"bond ({b.begin},{b.end}) out of range")
            if b.begin == b.end:
                raise GraphError(f"self-bond on atom {b.begin}")
            key = (min(b.begin, b.end), max(b.begin, b.end))
            if key in seen_pairs:
                raise GraphError(f"duplicate bond {key}")
            seen_pairs.add(key)
        for i, atom in enumerate(self.atoms):
            if (atom.x is None) != (atom.y is None):
                raise GraphError(f"atom {i} has a half-set coordinate")
            if atom.coords is not None:
                _check_coords(atom.coords)
            if atom.parity != "none":
                explicit = self.degree(i)
                if not 3 <= explicit <= 4:
                    raise GraphError(
                        f"atom {i} has parity with {explicit} explicit neighbors")
                expected = set(self.neighbors(i))
                stored = set(atom.parity_neighbors)
                stored.discard(IMPLICIT_H)
                if stored != expected:
                    raise GraphError(f"atom {i} parity neighbor list {stored} != {expected}")


def molecular_formula(graph: MolGraph) -> dict[str, int]:
    """Element -> count including implicit hydrogens; R-groups/wildcards excluded."""
    counts: dict[str, int] = {}
    for i, atom in enumerate(graph.atoms):
        label = atom.label
        if label.kind == AtomKind.ELEMENT:
            counts[label.element] = counts.get(label.element, 0) + 1
            counts["H"] = counts.get("H", 0) + graph.implicit_hydrogens(i)
        elif label.kind == AtomKind.ABBREVIATION:
            # Abbreviations hide a subgraph; callers expand before comparing formulas.
            counts[f"[{label.text}]"] = counts.get(f"[{label.text}]", 0) + 1
    if counts.get("H") == 0:
        del counts["H"]
    return counts
