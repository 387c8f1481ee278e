"""Inference-side consolidation: predictions in, molecular graph + SMILES out.

A Prediction pairs the decoded atom sequence with an m-by-m bond matrix over
ordered atom pairs (including the "none" type). Consolidation symmetrizes the
two ordered entries by score (ties break toward i<j), overwrites chirality
from geometry, expands abbreviations, relabels R-groups as wildcards, and
reports (never repairs) valence violations.

Wire format, one JSON object per image:
  {"atoms": [{"label": "C", "x_bin": 32, "y_bin": 17}, ...],
   "bonds": [{"i": 0, "j": 1, "type": "single", "score": 0.98}, ...]}
Missing pairs imply none@1.0. External predictors speak this format over a
line-oriented subprocess protocol: image paths on stdin, one JSON per line
on stdout.
"""

from __future__ import annotations

import json
import subprocess
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .augment import ExpansionError, RuleTable
from .canon import canonical_graph
from .codec import AtomSeq, bin_coord, unbin_coord, x_token, y_token
from .chirality import overwrite_all
from .graph import AtomKind, BondType, MolGraph, ValenceViolation
from .render import RenderedSample
from . import augment as _augment
from . import smiles as _smiles

__all__ = [
    "BOND_TYPE_NAMES",
    "BondMatrix",
    "Prediction",
    "PipelineError",
    "ConsolidationResult",
    "consolidate",
    "mock_predict",
    "mock_predict_record",
    "MockPredictor",
    "SubprocessPredictor",
    "predict_file",
]

BOND_TYPE_NAMES = tuple(t.value for t in BondType) + ("none",)

_CORRUPT_ELEMENTS = ("C", "N", "O", "S", "P", "F", "Cl", "Br", "I", "B")


class PipelineError(ValueError):
    """Consolidation failure; carries the partial graph for diagnostics."""

    def __init__(self, message: str, partial_graph: Optional[MolGraph] = None):
        super().__init__(message)
        self.partial_graph = partial_graph


class BondMatrix:
    """Ordered-pair bond assignments with scores; missing pairs are none@1.0."""

    def __init__(self, n: int):
        self.n = n
        self.entries: dict[tuple[int, int], tuple[str, float]] = {}

    def set(self, i: int, j: int, type_name: str, score: float = 1.0) -> None:
        if not (0 <= i < self.n and 0 <= j < self.n) or i == j:
            raise PipelineError(f"bond entry ({i},{j}) invalid for {self.n} atoms")
        if type_name not in BOND_TYPE_NAMES:
            raise PipelineError(f"unknown bond type {type_name!r}")
        if not 0.0 <= score <= 1.0:
            raise PipelineError(f"bond score {score} outside [0,1]")
        self.entries[(i, j)] = (type_name, float(score))

    def get(self, i: int, j: int) -> tuple[str, float]:
        return self.entries.get((i, j), ("none", 1.0))


@dataclass
class Prediction:
    atom_seq: AtomSeq
    bond_matrix: BondMatrix

    def __post_init__(self) -> None:
        if self.bond_matrix.n != len(self.atom_seq.atoms):
            raise PipelineError(
                f"bond matrix size {self.bond_matrix.n} != atom count "
                f"{len(self.atom_seq.atoms)}")

    @classmethod
    def from_wire(cls, obj: dict, bins: int = 64) -> "Prediction":
        atoms = obj.get("atoms", [])
        tokens: list[str] = []
        records = []
        for a in atoms:
            label = _smiles.parse_atom_token(a["label"])
            xb, yb = int(a["x_bin"]), int(a["y_bin"])
            if not (0 <= xb < bins and 0 <= yb < bins):
                raise PipelineError(f"bin ({xb},{yb}) outside [0,{bins})")
            tokens += [a["label"], x_token(xb), y_token(yb)]
            records.append((label, xb, yb))
        seq = AtomSeq(tokens, records, bins)
        matrix = BondMatrix(len(records))
        for b in obj.get("bonds", []):
            matrix.set(int(b["i"]), int(b["j"]), b["type"], float(b.get("score", 1.0)))
        return cls(seq, matrix)

    def to_wire(self) -> dict:
        atoms = []
        for label, xb, yb in self.atom_seq.atoms:
            atoms.append({"label": _label_lexeme(label), "x_bin": xb, "y_bin": yb})
        bonds = [
            {"i": i, "j": j, "type": t, "score": s}
            for (i, j), (t, s) in sorted(self.bond_matrix.entries.items())
        ]
        return {"atoms": atoms, "bonds": bonds}


def _label_lexeme(label) -> str:
    g = MolGraph()
    g.add_atom(label)
    return _smiles.atom_token_text(g, 0)


@dataclass
class ConsolidationResult:
    graph: MolGraph
    smiles: str
    canonical_smiles: str
    valence_violations: list[ValenceViolation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def consolidate(pred: Prediction, rules: RuleTable) -> ConsolidationResult:
    """Pure function of (prediction, rules); see module docstring for steps."""
    n = len(pred.atom_seq.atoms)
    graph = MolGraph()
    for label, xb, yb in pred.atom_seq.atoms:
        graph.add_atom(label, (unbin_coord(xb, pred.atom_seq.bins),
                               unbin_coord(yb, pred.atom_seq.bins)))
    for i in range(n):
        for j in range(i + 1, n):
            fwd = pred.bond_matrix.get(i, j)
            rev = pred.bond_matrix.get(j, i)
            name, begin, end = (fwd[0], i, j) if fwd[1] >= rev[1] else (rev[0], j, i)
            if name == "none":
                continue
            graph.add_bond(begin, end, BondType(name))
    graph, warnings = overwrite_all(graph)
    try:
        expanded = _augment.expand(graph, rules)
    except ExpansionError as exc:
        raise PipelineError(str(exc), partial_graph=graph) from exc
    violations = expanded.validate_valence()
    smiles = _smiles.write(expanded)
    canonical = canonical_graph(expanded)
    return ConsolidationResult(expanded, smiles, canonical, violations, warnings)


def mock_predict_record(record: dict, corruption: float,
                        rng: np.random.Generator, bins: int = 64) -> Prediction:
    """Ground-truth Prediction from a dataset record, with independent
    per-atom and per-bond perturbations at the corruption rate."""
    if not 0.0 <= corruption <= 1.0:
        raise PipelineError(f"corruption {corruption} outside [0,1]")
    token_source = record.get("pseudo_smiles") or record["smiles"]
    lexemes = []
    structure = []  # (kind, text) to rebuild the token stream
    for tok in _smiles.tokenize(token_source):
        structure.append((tok.kind, tok.text))
        if tok.kind == "atom":
            lexemes.append(tok.text)
    atoms = record["atoms"]
    if len(lexemes) != len(atoms):
        raise PipelineError("record atoms do not align with its token source")

    out_lex = []
    out_bins = []
    for lex, a in zip(lexemes, atoms):
        if corruption and rng.random() < corruption:
            pool = [e for e in _CORRUPT_ELEMENTS if e != lex]
            lex = str(pool[rng.integers(len(pool))])
        xb, yb = bin_coord(a["x"], bins), bin_coord(a["y"], bins)
        if corruption and rng.random() < corruption:
            xb = int(np.clip(xb + (1 if rng.random() < 0.5 else -1), 0, bins - 1))
        if corruption and rng.random() < corruption:
            yb = int(np.clip(yb + (1 if rng.random() < 0.5 else -1), 0, bins - 1))
        out_lex.append(lex)
        out_bins.append((xb, yb))

    tokens = []
    records = []
    k = 0
    for kind, text in structure:
        if kind == "atom":
            lex = out_lex[k]
            xb, yb = out_bins[k]
            tokens += [lex, x_token(xb), y_token(yb)]
            records.append((_smiles.parse_atom_token(lex), xb, yb))
            k += 1
        else:
            tokens.append(text)
    seq = AtomSeq(tokens, records, bins)

    matrix = BondMatrix(len(records))
    for i, j, name in record["bonds"]:
        if corruption and rng.random() < corruption:
            pool = [t for t in BOND_TYPE_NAMES if t != name]
            name = str(pool[rng.integers(len(pool))])
        if name == "none":
            continue
        wedge = name in ("solid_wedge", "dashed_wedge")
        matrix.set(i, j, name, 1.0)
        matrix.set(j, i, name, 0.9 if wedge else 1.0)
    return Prediction(seq, matrix)


def mock_predict(sample: RenderedSample, corruption: float,
                 rng: np.random.Generator, bins: int = 64) -> Prediction:
    from .dataset import record_from_sample

    return mock_predict_record(record_from_sample(sample, "mem"), corruption, rng, bins)


class MockPredictor:
    """Test double: replays (optionally corrupted) dataset ground truth.

    Safe for concurrent calls; per-record seeds keep results independent of
    evaluation order.
    """

    def __init__(self, records: Sequence[dict], corruption: float = 0.0,
                 seed: int = 0, bins: int = 64):
        self.by_image: dict[str, tuple[int, dict]] = {}
        for k, rec in enumerate(records):
            self.by_image[rec["image"]] = (k, rec)
        self.corruption = corruption
        self.seed = seed
        self.bins = bins

    def __call__(self, image_path: str) -> Prediction:
        key = image_path
        if key not in self.by_image:
            import os

            matches = [k for k in self.by_image
                       if os.path.basename(k) == os.path.basename(image_path)]
            if len(matches) != 1:
                raise PipelineError(f"no ground-truth record for {image_path}")
            key = matches[0]
        index, rec = self.by_image[key]
        rng = np.random.default_rng(self.seed ^ (index + 1))
        return mock_predict_record(rec, self.corruption, rng, self.bins)


class SubprocessPredictor:
    """External predictor over the line protocol: send one image path, read
    one Prediction JSON. Calls are serialized per process."""

    def __init__(self, command: Union[str, Sequence[str]], bins: int = 64):
        self.command = command
        self.bins = bins
        self._proc: Optional[subprocess.Popen] = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                shell=isinstance(self.command, str),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
        return self._proc

    def __call__(self, image_path: str) -> Prediction:
        proc = self._ensure()
        proc.stdin.write(image_path + "\n")
        proc.stdin.flush()
        line = proc.stdout.readline()
        if not line:
            raise PipelineError(f"predictor produced no output for {image_path}")
        return Prediction.from_wire(json.loads(line), self.bins)

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)

    def __enter__(self) -> "SubprocessPredictor":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def predict_file(image_paths: Sequence[str], predictor, rules: RuleTable) -> list[dict]:
    """One result record per image; per-image failures become error records
    instead of aborting the batch."""
    results = []
    for path in image_paths:
        try:
            pred = predictor(path)
            res = consolidate(pred, rules)
            atoms = [
                {
                    "label": _smiles.atom_token_text(res.graph, i),
                    "x": res.graph.atoms[i].x,
                    "y": res.graph.atoms[i].y,
                }
                for i in range(len(res.graph))
            ]
            bonds = [[b.begin, b.end, b.type.value] for b in res.graph.bonds]
            results.append({
                "image": path,
                "smiles": res.smiles,
                "canonical_smiles": res.canonical_smiles,
                "atoms": atoms,
                "bonds": bonds,
                "valence_violations": [
                    {"atom": v.atom, "element": v.element,
                     "bond_order_sum": v.bond_order_sum, "allowed": v.allowed}
                    for v in res.valence_violations
                ],
            })
        except Exception as exc:
            results.append({"image": path, "error": f"{type(exc).__name__}: {exc}"})
    return results
