"""Sequence codec: (pseudo-)SMILES token stream with binned coordinate tokens.

Every atom token is immediately followed by its x and y coordinate tokens;
non-atom tokens (parentheses, digits, bond symbols) stay in place. x and y
tokens occupy disjoint vocabulary ranges so transposed coordinates are
detectable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .graph import AtomLabel, BondType, MolGraph
from . import smiles as _smiles

__all__ = [
    "CodecError",
    "MalformedSequenceError",
    "DEFAULT_BINS",
    "bin_coord",
    "unbin_coord",
    "x_token",
    "y_token",
    "AtomSeq",
    "encode",
    "decode",
    "DecodedAtoms",
    "Vocabulary",
    "PAD", "BOS", "EOS", "UNK",
]

DEFAULT_BINS = 64

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"

_X_RE = re.compile(r"^x(\d+)$")
_Y_RE = re.compile(r"^y(\d+)$")


class CodecError(ValueError):
    pass


class MalformedSequenceError(CodecError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (token {position})")
        self.position = position


def bin_coord(coord: float, bins: int = DEFAULT_BINS) -> int:
    """floor(coord*bins), clamped to the top bin for inputs marginally >= 1."""
    if isinstance(coord, float) and math.isnan(coord):
        raise CodecError("cannot bin NaN coordinate")
    if not math.isfinite(coord):
        raise CodecError(f"cannot bin non-finite coordinate {coord}")
    if coord < 0:
        raise CodecError(f"cannot bin negative coordinate {coord}")
    return min(int(coord * bins), bins - 1)


def unbin_coord(index: int, bins: int = DEFAULT_BINS) -> float:
    """Bin center; reconstruction error is at most half a bin."""
    if not 0 <= index < bins:
        raise CodecError(f"bin index {index} outside [0, {bins})")
    return (index + 0.5) / bins


def x_token(index: int) -> str:
    return f"x{index}"


def y_token(index: int) -> str:
    return f"y{index}"


@dataclass
class AtomSeq:
    """Token stream plus the derived (label, x bin, y bin) atom records."""

    tokens: list[str]
    atoms: list[tuple[AtomLabel, int, int]]
    bins: int = DEFAULT_BINS

    @classmethod
    def from_tokens(cls, tokens: Sequence[str], bins: int = DEFAULT_BINS) -> "AtomSeq":
        atoms = []
        i = 0
        toks = list(tokens)
        while i < len(toks):
            tok = toks[i]
            if _X_RE.match(tok) or _Y_RE.match(tok):
                raise MalformedSequenceError(f"stray coordinate token {tok}", i)
            if _is_atom_lexeme(tok):
                mx = _X_RE.match(toks[i + 1]) if i + 1 < len(toks) else None
                if mx is None:
                    raise MalformedSequenceError(
                        f"atom token {tok} not followed by an x token", i + 1)
                my = _Y_RE.match(toks[i + 2]) if i + 2 < len(toks) else None
                if my is None:
                    raise MalformedSequenceError(
                        f"atom token {tok} not followed by a y token", i + 2)
                xb, yb = int(mx.group(1)), int(my.group(1))
                if not (0 <= xb < bins and 0 <= yb < bins):
                    raise MalformedSequenceError(
                        f"coordinate bin outside [0,{bins})", i + 1)
                atoms.append((_smiles.parse_atom_token(tok), xb, yb))
                i += 3
            else:
                i += 1
        return cls(list(toks), atoms, bins)

    def skeleton_text(self) -> str:
        """The (pseudo-)SMILES string with coordinate tokens removed."""
        return "".join(
            t for t in self.tokens if not (_X_RE.match(t) or _Y_RE.match(t))
        )


def _is_atom_lexeme(tok: str) -> bool:
    try:
        toks = _smiles.tokenize(tok)
    except _smiles.ParseError:
        return False
    return len(toks) == 1 and toks[0].kind == "atom"


def encode(graph: MolGraph, bins: int = DEFAULT_BINS) -> AtomSeq:
    """Token stream for a laid-out graph; coordinate tokens follow each atom."""
    for i, atom in enumerate(graph.atoms):
        if atom.coords is None:
            raise CodecError(f"atom {i} has no coordinates; encode needs a layout")
    text, order = _smiles.write_with_order(graph)
    tokens: list[str] = []
    atoms: list[tuple[AtomLabel, int, int]] = []
    pos = 0
    for tok in _smiles.tokenize(text):
        tokens.append(tok.text)
        if tok.kind == "atom":
            atom = graph.atoms[order[pos]]
            xb, yb = bin_coord(atom.x, bins), bin_coord(atom.y, bins)
            tokens.append(x_token(xb))
            tokens.append(y_token(yb))
            atoms.append((atom.label, xb, yb))
            pos += 1
    return AtomSeq(tokens, atoms, bins)


@dataclass
class DecodedAtoms:
    """Sequence-order atoms with unbinned coordinates, plus advisory skeleton."""

    labels: list[AtomLabel]
    coords: list[tuple[float, float]]
    skeleton: Optional[str]
    advisory_bonds: list[tuple[int, int, BondType]] = field(default_factory=list)


def decode(seq: Union[AtomSeq, Sequence[str]], bins: int = DEFAULT_BINS) -> DecodedAtoms:
    """Recover atoms and coordinates; syntactic connectivity is advisory only
    (the bond predictor owns the bonds)."""
    if not isinstance(seq, AtomSeq):
        seq = AtomSeq.from_tokens(seq, bins)
    labels = [label for label, _, _ in seq.atoms]
    coords = [(unbin_coord(xb, seq.bins), unbin_coord(yb, seq.bins))
              for _, xb, yb in seq.atoms]
    skeleton = seq.skeleton_text()
    advisory: list[tuple[int, int, BondType]] = []
    try:
        g = _smiles.parse(skeleton)
        if len(g) == len(labels):
            advisory = [(b.begin, b.end, b.type) for b in g.bonds]
    except _smiles.ParseError:
        skeleton = None
    return DecodedAtoms(labels, coords, skeleton, advisory)


class Vocabulary:
    """Closed token inventory shared with any learned predictor.

    File format: one token per line, stable ordering. Core tokens come first
    (specials, structure, organic atoms, coordinate tokens), then sorted
    extras such as bracket-atom lexemes observed in a dataset.
    """

    STRUCTURAL = ["(", ")", ".", "-", "=", "#", ":", "/", "\\"]
    ORGANIC_ATOMS = ["B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I",
                     "b", "c", "n", "o", "p", "s", "*"]

    def __init__(self, tokens: Sequence[str], bins: int = DEFAULT_BINS):
        self.tokens = list(tokens)
        self.bins = bins
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise CodecError("duplicate tokens in vocabulary")

    @classmethod
    def build(cls, bins: int = DEFAULT_BINS,
              abbreviations: Iterable[str] = (),
              extra: Iterable[str] = ()) -> "Vocabulary":
        toks: list[str] = [PAD, BOS, EOS, UNK]
        toks += cls.STRUCTURAL
        toks += [str(d) for d in range(1, 10)] + [f"%{d:02d}" for d in range(10, 100)]
        toks += cls.ORGANIC_ATOMS
        toks += [f"[{a}]" for a in sorted(set(abbreviations))]
        toks += [f"[{r}]" for r in _smiles.RGROUP_LABELS]
        toks += [x_token(i) for i in range(bins)]
        toks += [y_token(i) for i in range(bins)]
        seen = set(toks)
        for t in sorted(set(extra)):
            if t not in seen:
                toks.append(t)
                seen.add(t)
        return cls(toks, bins)

    @classmethod
    def from_sequences(cls, sequences: Iterable[Sequence[str]],
                       bins: int = DEFAULT_BINS,
                       abbreviations: Iterable[str] = ()) -> "Vocabulary":
        extra = {t for seq in sequences for t in seq}
        return cls.build(bins, abbreviations, extra)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        if token not in self.index:
            raise CodecError(f"token {token!r} not in vocabulary")
        return self.index[token]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for t in self.tokens:
                fh.write(t + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        bins = sum(1 for t in tokens if _X_RE.match(t))
        return cls(tokens, bins or DEFAULT_BINS)
