"""SMILES tokenizer, parser, and writer.

Accepts the organic subset plus bracket atoms, ring closures, branches, dots,
and tetrahedral stereo markers; pseudo-atoms like [Me] or [R1] extend the
grammar to pseudo-SMILES (rejected under strict=True). The accepted grammar
is documented in docs/smiles_grammar.ebnf.

Parity is stored relative to an explicit ordered neighbor list and transforms
by permutation sign when the writer emits neighbors in a different order.
Cis/trans slashes are parsed and recorded on bonds but never interpreted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .graph import (
    AROMATIC_ORGANIC,
    IMPLICIT_H,
    ORGANIC_SUBSET,
    Atom,
    AtomKind,
    AtomLabel,
    Bond,
    BondDirection,
    BondType,
    GraphError,
    MolGraph,
)

__all__ = [
    "SmilesToken",
    "ParseError",
    "WriteError",
    "tokenize",
    "parse",
    "write",
    "write_with_order",
    "atom_token_text",
    "parse_atom_token",
    "RGROUP_LABELS",
]


class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class WriteError(ValueError):
    pass


# Fixed R-group label set; bracket tokens matching these parse as rgroup
# pseudo-atoms, so [Ar] means an aryl placeholder rather than argon.
RGROUP_LABELS = (
    "R", "R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8", "R9", "R10",
    "R11", "R12", "Ra", "Rb", "Rc", "Rd", "X", "Y", "Z", "A", "Ar",
)
_RGROUP_SET = frozenset(RGROUP_LABELS)

_PERIODIC = frozenset("""
H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu
Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs
Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl
Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh
Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og
""".split())

# Bracket contents that collide with element symbols but mean functional-group
# abbreviations in this domain (tosyl, acetyl, propyl beat Ts/Ac/Pr metals).
_ABBREV_BEATS_ELEMENT = frozenset({"Ts", "Ac", "Pr"})

_AROMATIC_BRACKET = frozenset({"b", "c", "n", "o", "p", "s", "se", "as"})

_BRACKET_RE = re.compile(
    r"""^(?P<iso>\d+)?
         (?P<sym>[A-Z][a-z]?|as|se|[bcnops]|\*)
         (?P<chiral>@@|@)?
         (?P<hcount>H\d*)?
         (?P<charge>\+\+|--|\+\d*|-\d*)?$""",
    re.VERBOSE,
)

_PSEUDO_RE = re.compile(r"^[A-Za-z][A-Za-z0-9']*$")

_TWO_CHAR_ORGANIC = ("Cl", "Br")
_ONE_CHAR_ORGANIC = frozenset("BCNOPSFI")
_BOND_CHARS = frozenset("-=#:/\\")

_BOND_TYPE_FOR_SYMBOL = {
    "-": BondType.SINGLE,
    "=": BondType.DOUBLE,
    "#": BondType.TRIPLE,
    ":": BondType.AROMATIC,
    "/": BondType.SINGLE,
    "\\": BondType.SINGLE,
}


@dataclass(frozen=True)
class SmilesToken:
    kind: str  # atom | bond_symbol | open_paren | close_paren | ring_digit | dot
    text: str
    pos: int
    atom_payload: Optional[AtomLabel] = None


def _parse_bracket_body(body: str, offset: int) -> AtomLabel:
    if body in _RGROUP_SET:
        return AtomLabel(kind=AtomKind.RGROUP, text=body)
    m = _BRACKET_RE.match(body)
    if m and m.group("sym") != "*":
        sym = m.group("sym")
        aromatic = sym in _AROMATIC_BRACKET
        element = sym.capitalize() if aromatic else sym
        if element in _PERIODIC and body not in _ABBREV_BEATS_ELEMENT:
            iso = int(m.group("iso")) if m.group("iso") else None
            h = m.group("hcount")
            explicit_h = 0 if h is None else (1 if h == "H" else int(h[1:]))
            chg = m.group("charge")
            if chg is None:
                charge = 0
            elif chg == "++":
                charge = 2
            elif chg == "--":
                charge = -2
            elif chg in ("+", "-"):
                charge = 1 if chg == "+" else -1
            else:
                charge = int(chg) if chg[0] == "-" else int(chg[1:])
                if chg[0] == "+":
                    charge = abs(charge)
            try:
                return AtomLabel(
                    kind=AtomKind.ELEMENT, element=element, charge=charge,
                    isotope=iso, explicit_h=explicit_h, aromatic=aromatic,
                )
            except GraphError as exc:
                raise ParseError(str(exc), offset) from exc
    if m and m.group("sym") == "*" and not m.group("iso") and not m.group("hcount"):
        return AtomLabel(kind=AtomKind.WILDCARD, text="*")
    if _PSEUDO_RE.match(body):
        return AtomLabel(kind=AtomKind.ABBREVIATION, text=body)
    raise ParseError(f"cannot read bracket atom [{body}]", offset)


def parse_atom_token(text: str) -> AtomLabel:
    """Read a single atom lexeme ("C", "[NH3+]", "[Me]", "*") into a label."""
    tokens = tokenize(text)
    if len(tokens) != 1 or tokens[0].kind != "atom":
        raise ParseError(f"not a single atom token: {text!r}", 0)
    return tokens[0].atom_payload


def tokenize(text: str) -> list[SmilesToken]:
    """Lossless lexing: concatenating token texts reproduces the input."""
    tokens: list[SmilesToken] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "[":
            j = text.find("]", i + 1)
            if j < 0:
                raise ParseError("unbalanced bracket", i)
            body = text[i + 1 : j]
            payload = _parse_bracket_body(body, i)
            tokens.append(SmilesToken("atom", text[i : j + 1], i, payload))
            i = j + 1
        elif c == "(":
            tokens.append(SmilesToken("open_paren", c, i))
            i += 1
        elif c == ")":
            tokens.append(SmilesToken("close_paren", c, i))
            i += 1
        elif c == ".":
            tokens.append(SmilesToken("dot", c, i))
            i += 1
        elif c in _BOND_CHARS:
            tokens.append(SmilesToken("bond_symbol", c, i))
            i += 1
        elif c.isdigit():
            tokens.append(SmilesToken("ring_digit", c, i))
            i += 1
        elif c == "%":
            if i + 2 >= n or not text[i + 1 : i + 3].isdigit():
                raise ParseError("%% ring closure needs two digits", i)
            tokens.append(SmilesToken("ring_digit", text[i : i + 3], i))
            i += 3
        elif c == "*":
            tokens.append(SmilesToken("atom", c, i, AtomLabel(kind=AtomKind.WILDCARD, text="*")))
            i += 1
        elif text[i : i + 2] in _TWO_CHAR_ORGANIC:
            sym = text[i : i + 2]
            tokens.append(SmilesToken("atom", sym, i, AtomLabel(element=sym)))
            i += 2
        elif c in _ONE_CHAR_ORGANIC:
            tokens.append(SmilesToken("atom", c, i, AtomLabel(element=c)))
            i += 1
        elif c in "bcnops":
            tokens.append(SmilesToken(
                "atom", c, i, AtomLabel(element=c.upper(), aromatic=True)))
            i += 1
        else:
            raise ParseError(f"illegal character {c!r}", i)
    return tokens


def _ring_digit_value(text: str) -> int:
    return int(text[1:]) if text.startswith("%") else int(text)


_PLACEHOLDER = object()


def parse(text: str, strict: bool = False) -> MolGraph:
    """Build a MolGraph from a (pseudo-)SMILES string.

    strict=True rejects pseudo-atoms (abbreviations/R-groups), matching the
    formal grammar. Atoms appear in token order.
    """
    tokens = tokenize(text)
    graph = MolGraph()
    order: list[list] = []  # per-atom stereo neighbor slots, built in token order
    prev: Optional[int] = None
    pending: Optional[SmilesToken] = None
    branch_stack: list[Optional[int]] = []
    rings: dict[int, tuple[int, Optional[SmilesToken], int]] = {}

    def bond_from_symbol(tok: Optional[SmilesToken], a: int, b: int) -> tuple[BondType, BondDirection]:
        if tok is None:
            both_arom = graph.atoms[a].label.aromatic and graph.atoms[b].label.aromatic
            return (BondType.AROMATIC if both_arom else BondType.SINGLE, BondDirection.NONE)
        t = _BOND_TYPE_FOR_SYMBOL[tok.text]
        if tok.text == "/":
            return t, BondDirection.UP
        if tok.text == "\\":
            return t, BondDirection.DOWN
        return t, BondDirection.NONE

    for tok in tokens:
        if tok.kind == "atom":
            label = tok.atom_payload
            if strict and label.is_pseudo:
                raise ParseError(f"pseudo-atom {tok.text} not allowed in strict mode", tok.pos)
            idx = graph.add_atom(label)
            order.append([])
            if prev is not None:
                btype, bdir = bond_from_symbol(pending, prev, idx)
                try:
                    graph.add_bond(prev, idx, btype, bdir)
                except GraphError as exc:
                    raise ParseError(str(exc), tok.pos) from exc
                order[prev].append(idx)
                order[idx].append(prev)
            elif pending is not None:
                raise ParseError("bond symbol before any atom", pending.pos)
            if label.kind == AtomKind.ELEMENT and label.explicit_h == 1:
                # Implicit bracket H occupies the slot right after the
                # preceding atom (or first, when there is none).
                order[idx].append(IMPLICIT_H)
            if tok.text.startswith("[") and "@" in tok.text:
                graph.atoms[idx].parity = "cw" if "@@" in tok.text else "ccw"
            pending = None
            prev = idx
        elif tok.kind == "bond_symbol":
            if prev is None:
                raise ParseError("bond symbol with no preceding atom", tok.pos)
            if pending is not None:
                raise ParseError("two bond symbols in a row", tok.pos)
            pending = tok
        elif tok.kind == "open_paren":
            if prev is None:
                raise ParseError("branch with no attachment atom", tok.pos)
            if pending is not None:
                raise ParseError("bond symbol before branch open", pending.pos)
            branch_stack.append(prev)
        elif tok.kind == "close_paren":
            if not branch_stack:
                raise ParseError("unmatched ')'", tok.pos)
            if pending is not None:
                raise ParseError("dangling bond symbol before ')'", pending.pos)
            prev = branch_stack.pop()
        elif tok.kind == "dot":
            if pending is not None:
                raise ParseError("bond symbol before '.'", pending.pos)
            prev = None
        elif tok.kind == "ring_digit":
            if prev is None:
                raise ParseError("ring digit with no preceding atom", tok.pos)
            d = _ring_digit_value(tok.text)
            if d in rings:
                open_atom, open_sym, slot = rings.pop(d)
                if open_atom == prev:
                    raise ParseError(f"ring digit {d} closes on its own atom", tok.pos)
                if open_sym is not None and pending is not None and open_sym.text != pending.text:
                    raise ParseError(
                        f"conflicting bond symbols on ring closure {d}", tok.pos)
                sym = pending if pending is not None else open_sym
                btype, bdir = bond_from_symbol(sym, open_atom, prev)
                try:
                    graph.add_bond(open_atom, prev, btype, bdir)
                except GraphError as exc:
                    raise ParseError(str(exc), tok.pos) from exc
                order[open_atom][slot] = prev
                order[prev].append(open_atom)
            else:
                rings[d] = (prev, pending, len(order[prev]))
                order[prev].append(_PLACEHOLDER)
            pending = None
        else:  # pragma: no cover - tokenizer emits no other kinds
            raise ParseError(f"unexpected token {tok.kind}", tok.pos)

    if pending is not None:
        raise ParseError("dangling bond symbol at end of input", pending.pos)
    if branch_stack:
        raise ParseError("unclosed branch", len(text))
    if rings:
        digits = ", ".join(str(d) for d in sorted(rings))
        raise ParseError(f"unmatched ring digit(s): {digits}", len(text))

    for idx, atom in enumerate(graph.atoms):
        if atom.parity == "none":
            continue
        slots = [s for s in order[idx] if s is not _PLACEHOLDER]
        if not 3 <= len(slots) <= 4:
            atom.parity = "none"  # not a realizable tetrahedral center
            continue
        atom.parity_neighbors = tuple(slots)
    return graph


def _charge_text(charge: int) -> str:
    if charge == 0:
        return ""
    sign = "+" if charge > 0 else "-"
    mag = abs(charge)
    return sign if mag == 1 else f"{sign}{mag}"


def _perm_sign(src: Sequence[int], dst: Sequence[int]) -> int:
    pos = {x: i for i, x in enumerate(src)}
    perm = [pos[x] for x in dst]
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def atom_token_text(graph: MolGraph, idx: int,
                    emitted_neighbors: Optional[Sequence[int]] = None) -> str:
    """Atom lexeme for one atom; parity symbols follow the emitted order."""
    atom = graph.atoms[idx]
    label = atom.label
    if label.kind == AtomKind.WILDCARD:
        return "*"
    if label.is_pseudo:
        return f"[{label.text}]"
    bare_ok = (
        label.element in ORGANIC_SUBSET
        and (not label.aromatic or label.element.lower() in AROMATIC_ORGANIC)
        and label.charge == 0
        and label.isotope is None
        and label.explicit_h is None
        and atom.parity == "none"
    )
    sym = label.element.lower() if label.aromatic else label.element
    if bare_ok:
        return sym
    chiral = ""
    if atom.parity != "none" and atom.parity_neighbors:
        parity = atom.parity
        if emitted_neighbors is not None:
            if set(emitted_neighbors) != set(atom.parity_neighbors):
                raise WriteError(
                    f"emitted neighbors of atom {idx} do not cover its parity list")
            if _perm_sign(atom.parity_neighbors, emitted_neighbors) < 0:
                parity = "cw" if parity == "ccw" else "ccw"
        chiral = "@" if parity == "ccw" else "@@"
    h = label.explicit_h if label.explicit_h is not None else graph.implicit_hydrogens(idx)
    h_text = "" if h == 0 else ("H" if h == 1 else f"H{h}")
    iso = "" if label.isotope is None else str(label.isotope)
    return f"[{iso}{sym}{chiral}{h_text}{_charge_text(label.charge)}]"


def _bond_text(graph: MolGraph, bond: Bond) -> str:
    t = bond.type
    both_arom = (graph.atoms[bond.begin].label.aromatic
                 and graph.atoms[bond.end].label.aromatic)
    if t == BondType.DOUBLE:
        return "="
    if t == BondType.TRIPLE:
        return "#"
    if t == BondType.AROMATIC:
        return "" if both_arom else ":"
    # single and wedge types: implicit, unless both ends are aromatic
    return "-" if both_arom else ""


class _Writer:
    def __init__(self, graph: MolGraph, ranks: Optional[Sequence[int]]):
        self.g = graph
        self.key = (lambda i: ranks[i]) if ranks is not None else (lambda i: i)
        self.adj: dict[int, list[tuple[int, Bond]]] = {i: [] for i in range(len(graph))}
        for b in graph.bonds:
            self.adj[b.begin].append((b.end, b))
            self.adj[b.end].append((b.begin, b))
        for i in self.adj:
            self.adj[i].sort(key=lambda pair: self.key(pair[0]))
        self.parent: dict[int, Optional[int]] = {}
        self.children: dict[int, list[int]] = {}
        self.ring_at: dict[int, list[tuple[int, Bond]]] = {}
        self.pieces: list[str] = []
        self.order: list[int] = []
        self.open_digits: dict[int, int] = {}  # bond id -> digit
        self.free: list[int] = []
        self.next_digit = 1

    def component(self, start: int) -> None:
        self._discover(start)
        self._emit(start)

    def _discover(self, start: int) -> None:
        visited = {start}
        self.parent[start] = None
        stack = [(start, iter(self.adj[start]))]
        self.children[start] = []
        self.ring_at[start] = []
        ring_seen: set[int] = set()
        while stack:
            v, it = stack[-1]
            advanced = False
            for w, bond in it:
                if self.parent.get(v) == w and bond is self._parent_bond.get(v):
                    continue
                bid = id(bond)
                if w in visited:
                    if bid not in ring_seen:
                        ring_seen.add(bid)
                        self.ring_at[v].append((w, bond))
                        self.ring_at[w].append((v, bond))
                    continue
                visited.add(w)
                self.parent[w] = v
                self._parent_bond[w] = bond
                self.children[v].append(w)
                self.children[w] = []
                self.ring_at[w] = []
                stack.append((w, iter(self.adj[w])))
                advanced = True
                break
            if not advanced:
                stack.pop()

    _parent_bond: dict[int, Bond]

    def _alloc_digit(self) -> int:
        if self.free:
            self.free.sort()
            return self.free.pop(0)
        d = self.next_digit
        self.next_digit += 1
        if d > 99:
            raise WriteError("more than 99 simultaneously open ring closures")
        return d

    def _digit_text(self, d: int) -> str:
        return str(d) if d < 10 else f"%{d:02d}"

    def _emit(self, start: int) -> None:
        stack: list[tuple[str, object]] = [("atom", start)]
        while stack:
            op, arg = stack.pop()
            if op == "text":
                self.pieces.append(arg)
                continue
            v = arg
            self.order.append(v)
            ring_partners = [w for w, _ in self.ring_at[v]]
            emitted = []
            p = self.parent[v]
            if p is not None:
                emitted.append(p)
            if IMPLICIT_H in self.g.atoms[v].parity_neighbors:
                emitted.append(IMPLICIT_H)
            emitted.extend(ring_partners)
            emitted.extend(self.children[v])
            if self.g.atoms[v].parity != "none" and self.g.atoms[v].parity_neighbors:
                self.pieces.append(atom_token_text(self.g, v, emitted))
            else:
                self.pieces.append(atom_token_text(self.g, v))
            for w, bond in self.ring_at[v]:
                bid = id(bond)
                if bid in self.open_digits:
                    d = self.open_digits.pop(bid)
                    self.free.append(d)
                    self.pieces.append(self._digit_text(d))
                else:
                    d = self._alloc_digit()
                    self.open_digits[bid] = d
                    self.pieces.append(_bond_text(self.g, bond) + self._digit_text(d))
            kids = self.children[v]
            # push in reverse so the first child is processed first
            for pos in range(len(kids) - 1, -1, -1):
                w = kids[pos]
                bond = self._parent_bond[w]
                btext = _bond_text(self.g, bond)
                if pos < len(kids) - 1:
                    stack.append(("text", ")"))
                    stack.append(("atom", w))
                    stack.append(("text", "(" + btext))
                else:
                    stack.append(("atom", w))
                    stack.append(("text", btext))


def write_with_order(graph: MolGraph, ranks: Optional[Sequence[int]] = None) -> tuple[str, list[int]]:
    """Write SMILES; also return atom indices in emission (token) order."""
    comps = graph.components()
    if ranks is not None:
        comps.sort(key=lambda comp: min(ranks[i] for i in comp))
    parts: list[str] = []
    order: list[int] = []
    for comp in comps:
        w = _Writer(graph, ranks)
        w._parent_bond = {}
        if ranks is not None:
            start = min(comp, key=lambda i: ranks[i])
        else:
            start = min(comp)
        w.component(start)
        parts.append("".join(w.pieces))
        order.extend(w.order)
    return ".".join(parts), order


def write(graph: MolGraph, ranks: Optional[Sequence[int]] = None) -> str:
    """Spanning-tree SMILES emission; single bonds omitted, branches in parens."""
    return write_with_order(graph, ranks)[0]
