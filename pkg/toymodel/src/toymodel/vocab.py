"""Vocabulary loaded from the pipeline's vocab file (one token per line).

Tokens are classified by lexeme shape: specials, x/y coordinate tokens, atom
lexemes, and structural tokens. The classification drives the constrained
decoding masks: after an atom only x tokens are legal, then only y tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"

_X_RE = re.compile(r"^x(\d+)$")
_Y_RE = re.compile(r"^y(\d+)$")
_ATOM_RE = re.compile(r"^(\[[^\]]+\]|Cl|Br|[BCNOPSFI]|[bcnops]|\*)$")


class VocabError(ValueError):
    pass


@dataclass
class Vocab:
    tokens: list[str]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise VocabError("duplicate tokens in vocabulary file")
        for special in (PAD, BOS, EOS):
            if special not in self.index:
                raise VocabError(f"vocabulary is missing {special}")
        self.pad_id = self.index[PAD]
        self.bos_id = self.index[BOS]
        self.eos_id = self.index[EOS]
        self.x_ids: dict[int, int] = {}
        self.y_ids: dict[int, int] = {}
        self.atom_ids: set[int] = set()
        for i, t in enumerate(self.tokens):
            mx, my = _X_RE.match(t), _Y_RE.match(t)
            if mx:
                self.x_ids[int(mx.group(1))] = i
            elif my:
                self.y_ids[int(my.group(1))] = i
            elif _ATOM_RE.match(t):
                self.atom_ids.add(i)
        if sorted(self.x_ids) != list(range(len(self.x_ids))) or \
           sorted(self.y_ids) != list(range(len(self.y_ids))):
            raise VocabError("coordinate tokens must cover 0..bins-1 per axis")
        if len(self.x_ids) != len(self.y_ids) or not self.x_ids:
            raise VocabError("x and y token ranges must match")

    @property
    def bins(self) -> int:
        return len(self.x_ids)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        if token not in self.index:
            raise VocabError(f"token {token!r} not in vocabulary")
        return self.index[token]

    def is_atom_id(self, i: int) -> bool:
        return i in self.atom_ids

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        return cls(tokens)


_LEXER = re.compile(r"\[[^\]]*\]|Cl|Br|%\d\d|[BCNOPSFIbcnops*]|[-=#:/\\().]|\d")


def tokenize_source(text: str) -> list[str]:
    """Lex a (pseudo-)SMILES string into vocabulary lexemes."""
    out = []
    pos = 0
    while pos < len(text):
        m = _LEXER.match(text, pos)
        if m is None:
            raise VocabError(f"cannot lex {text!r} at offset {pos}")
        out.append(m.group(0))
        pos = m.end()
    return out


def is_atom_lexeme(token: str) -> bool:
    return bool(_ATOM_RE.match(token))
