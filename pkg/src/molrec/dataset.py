"""Synthetic dataset generation and the JSONL record schema.

One record per line:
  {"image": "<relpath>", "smiles": "<str>", "pseudo_smiles": "<str|null>",
   "atoms": [{"label": "C", "x": 0.5, "y": 0.25}, ...],
   "bonds": [[0, 1, "single"], ...]}

Atom records are stored in the emission order of the recorded
(pseudo-)SMILES, so the i-th atom record corresponds to the i-th atom token;
labels are the exact atom lexemes of that string. Coordinates are normalized
by the raster size. Per-sample randomness derives from seed XOR sample index,
so workers can run in parallel without changing the output.
"""

from __future__ import annotations

import json
import multiprocessing
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .augment import RuleTable, add_rgroup, default_rule_table, expand, substitute
from .canon import canonical_graph, canonicalize
from .codec import bin_coord
from .graph import AtomKind, BondType, MolGraph
from .imgaug import augment_image
from .layout import LayoutError, layout
from .render import RenderedSample, assign_wedges, draw, sample_style
from . import smiles as _smiles

__all__ = [
    "GenerateConfig",
    "load_molecule_list",
    "generate_dataset",
    "generate_sample",
    "record_from_sample",
    "read_jsonl",
    "write_jsonl",
    "verify_dataset",
]

_MAX_MOLECULE_TRIES = 25


@dataclass
class GenerateConfig:
    molecules_path: str
    out_dir: str
    count: int
    seed: int = 0
    bins: int = 64
    image_size: int = 384
    abbrev_prob: float = 0.5
    rgroup_prob: float = 0.5
    image_aug_prob: float = 0.5
    rule_table_path: Optional[str] = None
    upsample_large: int = 0
    large_atom_threshold: int = 50
    jobs: int = 1


def load_molecule_list(path: str) -> list[str]:
    lines = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                lines.append(line)
    if not lines:
        raise ValueError(f"no molecules found in {path}")
    return lines


def _emission_permuted(graph: MolGraph) -> tuple[MolGraph, str]:
    """Reorder atoms into the writer's emission order; the returned string's
    i-th atom token then corresponds to graph atom i."""
    text, order = _smiles.write_with_order(graph)
    perm = [0] * len(order)
    for new, old in enumerate(order):
        perm[old] = new
    from .graph import IMPLICIT_H

    out = MolGraph()
    for new in range(len(graph)):
        a = graph.atoms[order[new]]
        idx = out.add_atom(a.label)
        out.atoms[idx].x, out.atoms[idx].y = a.x, a.y
        out.atoms[idx].parity = a.parity
        out.atoms[idx].parity_neighbors = tuple(
            IMPLICIT_H if n == IMPLICIT_H else perm[n] for n in a.parity_neighbors
        )
    for b in graph.bonds:
        out.add_bond(perm[b.begin], perm[b.end], b.type, b.direction)
    text2, order2 = _smiles.write_with_order(out)
    assert text2 == text and order2 == list(range(len(out))), \
        "emission order must be a fixed point after reordering"
    return out, text


def generate_sample(index: int, cfg: GenerateConfig, molecules: list[str],
                    rules: RuleTable, pool: Optional[list[str]] = None) -> RenderedSample:
    rng = np.random.default_rng(cfg.seed ^ index)
    source = pool if pool is not None else molecules
    last_error: Optional[Exception] = None
    for _ in range(_MAX_MOLECULE_TRIES):
        text = source[int(rng.integers(len(source)))]
        try:
            g = _smiles.parse(text)
            g = substitute(g, rules, cfg.abbrev_prob, rng)
            g = add_rgroup(g, cfg.rgroup_prob, rng)
            g = layout(g)
            g = assign_wedges(g)
            g, emitted = _emission_permuted(g)
            has_pseudo = any(a.label.is_pseudo for a in g.atoms)
            if has_pseudo:
                pseudo_smiles = emitted
                smiles = _smiles.write(expand(g, rules))
            else:
                pseudo_smiles = None
                smiles = emitted
            style = sample_style(rng, cfg.image_size)
            sample = draw(g, style, smiles=smiles, pseudo_smiles=pseudo_smiles)
            if cfg.image_aug_prob > 0:
                sample = augment_image(sample, rng, probability=cfg.image_aug_prob)
            return sample
        except LayoutError as exc:
            last_error = exc
            continue
    raise RuntimeError(f"sample {index}: no molecule could be laid out: {last_error}")


def record_from_sample(sample: RenderedSample, image_relpath: str) -> dict:
    token_source = sample.pseudo_smiles if sample.pseudo_smiles else sample.smiles
    lexemes = [t.text for t in _smiles.tokenize(token_source) if t.kind == "atom"]
    graph = sample.graph
    if len(lexemes) != len(graph.atoms):
        raise ValueError("atom records do not align with the token source")
    atoms = [
        {"label": lexemes[i], "x": graph.atoms[i].x, "y": graph.atoms[i].y}
        for i in range(len(graph.atoms))
    ]
    bonds = [[b.begin, b.end, b.type.value] for b in graph.bonds]
    return {
        "image": image_relpath,
        "smiles": sample.smiles,
        "pseudo_smiles": sample.pseudo_smiles,
        "atoms": atoms,
        "bonds": bonds,
    }


def write_jsonl(records: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def read_jsonl(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _worker(args: tuple) -> tuple[int, dict]:
    index, cfg, molecules, pool = args
    rules = _load_rules(cfg)
    sample = generate_sample(index, cfg, molecules, rules, pool)
    relpath = os.path.join("images", f"{index:06d}.png")
    sample.image.save(os.path.join(cfg.out_dir, relpath))
    return index, record_from_sample(sample, relpath)


_RULES_CACHE: dict = {}


def _load_rules(cfg: GenerateConfig) -> RuleTable:
    key = cfg.rule_table_path or ""
    if key not in _RULES_CACHE:
        _RULES_CACHE[key] = (
            RuleTable.load(cfg.rule_table_path) if cfg.rule_table_path
            else default_rule_table()
        )
    return _RULES_CACHE[key]


def generate_dataset(cfg: GenerateConfig) -> str:
    """Render cfg.count samples (plus any large-molecule upsamples) into
    cfg.out_dir; returns the JSONL path."""
    molecules = load_molecule_list(cfg.molecules_path)
    os.makedirs(os.path.join(cfg.out_dir, "images"), exist_ok=True)
    tasks: list[tuple] = [(i, cfg, molecules, None) for i in range(cfg.count)]
    if cfg.upsample_large:
        large = [m for m in molecules
                 if len(_smiles.parse(m)) > cfg.large_atom_threshold]
        if large:
            tasks += [
                (cfg.count + k, cfg, molecules, large)
                for k in range(cfg.upsample_large)
            ]
        else:
            import logging

            logging.getLogger(__name__).warning(
                "no molecules above %d atoms; skipping upsampling",
                cfg.large_atom_threshold)
    if cfg.jobs > 1:
        with multiprocessing.Pool(cfg.jobs) as p:
            results = p.map(_worker, tasks)
    else:
        results = [_worker(t) for t in tasks]
    results.sort(key=lambda pair: pair[0])
    jsonl_path = os.path.join(cfg.out_dir, "dataset.jsonl")
    write_jsonl([rec for _, rec in results], jsonl_path)
    return jsonl_path


def verify_dataset(out_dir: str, rules: Optional[RuleTable] = None,
                   bins: int = 64) -> list[str]:
    """Ground-truth closure check; returns human-readable problems (empty
    when the dataset is internally consistent)."""
    rules = rules or default_rule_table()
    problems = []
    records = read_jsonl(os.path.join(out_dir, "dataset.jsonl"))
    for rec in records:
        tag = rec.get("image", "<?>")
        try:
            if not os.path.exists(os.path.join(out_dir, rec["image"])):
                problems.append(f"{tag}: missing image file")
                continue
            token_source = rec["pseudo_smiles"] or rec["smiles"]
            g = _smiles.parse(token_source)
            if len(g) != len(rec["atoms"]):
                problems.append(f"{tag}: atom count mismatch with token source")
                continue
            for i, a in enumerate(rec["atoms"]):
                if not (0.0 <= a["x"] < 1.0 and 0.0 <= a["y"] < 1.0):
                    problems.append(f"{tag}: atom {i} coordinates outside [0,1)")
                    break
            expanded = expand(g, rules)
            if canonical_graph(expanded) != canonicalize(rec["smiles"]):
                problems.append(f"{tag}: token source does not expand to the gold smiles")
            # the token source writes wedges as plain single bonds
            collapse = {"solid_wedge": "single", "dashed_wedge": "single"}
            want_bonds = {
                (min(b[0], b[1]), max(b[0], b[1]), collapse.get(b[2], b[2]))
                for b in rec["bonds"]
            }
            have_bonds = {
                (min(b.begin, b.end), max(b.begin, b.end), b.type.value)
                for b in g.bonds
            }
            if want_bonds != have_bonds:
                problems.append(f"{tag}: bond list mismatch with token source")
        except Exception as exc:
            problems.append(f"{tag}: {type(exc).__name__}: {exc}")
    return problems
