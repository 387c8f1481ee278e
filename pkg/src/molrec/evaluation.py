"""Evaluation: exact-match accuracy on canonical SMILES, chiral-subset
accuracy, validity rate, and per-sample mismatch categories.

A prediction is correct iff its canonical form equals the gold canonical form
byte for byte; cis/trans markers are already dropped by canonicalization.
Chiral molecules are those whose gold canonical string contains "@".
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .canon import canonical_graph, canonicalize
from .graph import AtomKind
from . import smiles as _smiles

__all__ = ["DatasetError", "EvalReport", "SampleResult", "exact_match", "evaluate",
           "evaluate_files"]

MISMATCH_REASONS = ("atom_set", "bond_set", "stereo_only", "parse_failure")


class DatasetError(ValueError):
    pass


@dataclass
class SampleResult:
    id: str
    match: bool
    reason: Optional[str] = None  # one of MISMATCH_REASONS when not a match


@dataclass
class EvalReport:
    n: int
    accuracy: float
    chiral_accuracy: Optional[float]
    chiral_n: int
    validity: float
    per_sample: list[SampleResult] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "n": self.n,
            "accuracy": self.accuracy,
            "chiral_accuracy": self.chiral_accuracy,
            "chiral_n": self.chiral_n,
            "validity": self.validity,
            "per_sample": [
                {"id": r.id, "match": r.match, "reason": r.reason}
                for r in self.per_sample
            ],
        }
        return json.dumps(payload, indent=2)

    def to_table(self) -> str:
        chiral = "-" if self.chiral_accuracy is None else f"{self.chiral_accuracy:.4f}"
        rows = [
            ("samples", str(self.n)),
            ("accuracy", f"{self.accuracy:.4f}"),
            ("chiral accuracy", f"{chiral} (n={self.chiral_n})"),
            ("validity", f"{self.validity:.4f}"),
        ]
        reasons: dict[str, int] = {}
        for r in self.per_sample:
            if r.reason:
                reasons[r.reason] = reasons.get(r.reason, 0) + 1
        for reason in MISMATCH_REASONS:
            if reason in reasons:
                rows.append((f"mismatch: {reason}", str(reasons[reason])))
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def exact_match(pred: str, gold: str) -> bool:
    """True iff both canonicalize to the same string; unparseable predictions
    are counted as mismatches, an unparseable gold is a dataset error."""
    try:
        gold_canonical = canonicalize(gold)
    except Exception as exc:
        raise DatasetError(f"gold SMILES does not parse: {gold!r}: {exc}") from exc
    try:
        return canonicalize(pred) == gold_canonical
    except Exception:
        return False


def _stereo_stripped(text: str) -> Optional[str]:
    try:
        g = _smiles.parse(text)
    except Exception:
        return None
    for atom in g.atoms:
        atom.parity = "none"
        atom.parity_neighbors = ()
    return canonical_graph(g)


def _atom_multiset(text: str) -> Optional[tuple]:
    try:
        g = _smiles.parse(text)
    except Exception:
        return None
    items = []
    for a in g.atoms:
        if a.label.kind == AtomKind.ELEMENT:
            items.append((a.label.element, a.label.charge, a.label.isotope or 0))
        else:
            items.append((a.label.text, 0, 0))
    return tuple(sorted(items))


def _categorize(pred: Optional[str], gold: str) -> str:
    if pred is None:
        return "parse_failure"
    try:
        canonicalize(pred)
    except Exception:
        return "parse_failure"
    if _stereo_stripped(pred) == _stereo_stripped(gold):
        return "stereo_only"
    if _atom_multiset(pred) != _atom_multiset(gold):
        return "atom_set"
    return "bond_set"


def evaluate(pred_records: list[dict], gold_records: list[dict]) -> EvalReport:
    """Join records on their 'image' id and score; ids must align 1:1."""
    import os

    def key(rec: dict) -> str:
        return os.path.basename(rec["image"])

    preds = {key(r): r for r in pred_records}
    golds = {key(r): r for r in gold_records}
    only_pred = sorted(set(preds) - set(golds))
    only_gold = sorted(set(golds) - set(preds))
    if only_pred or only_gold:
        raise DatasetError(
            f"id mismatch; prediction-only: {only_pred[:5]}, gold-only: {only_gold[:5]}")

    per_sample: list[SampleResult] = []
    matches = 0
    valid = 0
    chiral_n = 0
    chiral_matches = 0
    for sample_id in sorted(golds):
        gold = golds[sample_id]
        pred = preds[sample_id]
        gold_canonical = None
        try:
            gold_canonical = canonicalize(gold["smiles"])
        except Exception as exc:
            raise DatasetError(f"gold {sample_id} does not parse: {exc}") from exc
        pred_smiles = None if "error" in pred else pred.get("smiles")
        if pred_smiles is not None and not pred_smiles.strip():
            pred_smiles = None  # an empty prediction is no molecule at all
        parsed = False
        matched = False
        if pred_smiles is not None:
            try:
                matched = canonicalize(pred_smiles) == gold_canonical
                parsed = True
            except Exception:
                parsed = False
        valid += parsed
        is_chiral = "@" in gold_canonical
        chiral_n += is_chiral
        if matched:
            matches += 1
            chiral_matches += is_chiral
            per_sample.append(SampleResult(sample_id, True))
        else:
            reason = _categorize(pred_smiles if parsed else None, gold["smiles"])
            per_sample.append(SampleResult(sample_id, False, reason))

    n = len(golds)
    return EvalReport(
        n=n,
        accuracy=matches / n if n else 0.0,
        chiral_accuracy=(chiral_matches / chiral_n) if chiral_n else None,
        chiral_n=chiral_n,
        validity=valid / n if n else 0.0,
        per_sample=per_sample,
    )


def evaluate_files(pred_path: str, gold_path: str) -> EvalReport:
    from .dataset import read_jsonl

    return evaluate(read_jsonl(pred_path), read_jsonl(gold_path))
