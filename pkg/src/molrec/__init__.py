"""Molecular image recognition toolkit.

Graph model, SMILES round-tripping and canonicalization, coordinate-token
codec, geometric chirality perception, molecule/image augmentation, synthetic
rendering, prediction consolidation, and evaluation.
"""

from .graph import Atom, AtomKind, AtomLabel, Bond, BondType, MolGraph
from .smiles import parse, tokenize, write
from .canon import canonical_ranks, canonicalize

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "AtomKind",
    "AtomLabel",
    "Bond",
    "BondType",
    "MolGraph",
    "parse",
    "tokenize",
    "write",
    "canonical_ranks",
    "canonicalize",
    "__version__",
]
