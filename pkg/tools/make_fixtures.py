#!/usr/bin/env python3
"""Freeze reference-toolkit fixtures into tests/data/.

Builds the 200-molecule H-count corpus and 500 curated equivalence pairs,
asks the RDKit WASM oracle (tools/oracle/oracle.mjs) for verdicts, and writes:

  tests/data/hcount_corpus.json      {smiles: total H count}
  tests/data/equivalence_pairs.jsonl {"a","b","cls","rdkit_equal"}
  tests/data/parse_counts.json       frozen atom/bond counts + stereo facts

Pairs are compared with cis/trans markers stripped, matching the evaluation
rule. Run from the repo root; needs node with @rdkit/rdkit installed in
tools/oracle. The pytest suite reads only the frozen files.
"""

from __future__ import annotations

import json
import os
import random
import subprocess
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from molgen import permute_graph, random_aromatic_ring, random_molecule  # noqa: E402

from molrec import canonicalize, parse, write  # noqa: E402
from molrec.dataset import load_molecule_list  # noqa: E402

ROOT = os.path.join(os.path.dirname(__file__), "..")
DATA = os.path.join(ROOT, "tests", "data")


def strip_cis_trans(text: str) -> str:
    return text.replace("/", "").replace("\\", "")


def run_oracle(smiles: list[str]) -> dict:
    with tempfile.TemporaryDirectory() as td:
        req = os.path.join(td, "request.json")
        resp = os.path.join(td, "response.json")
        with open(req, "w") as fh:
            json.dump({"smiles": sorted(set(smiles))}, fh)
        subprocess.run(
            ["node", os.path.join(ROOT, "tools", "oracle", "oracle.mjs"), req, resp],
            check=True,
        )
        with open(resp) as fh:
            return json.load(fh)


def flip_parity(text: str) -> str | None:
    if "@@" in text:
        return text.replace("@@", "\x00").replace("@", "@@").replace("\x00", "@")
    if "@" in text:
        return text.replace("@", "@@")
    return None


def build_corpus(rng: random.Random) -> list[str]:
    seen = set()
    corpus = []

    def push(smi: str) -> None:
        if smi not in seen:
            seen.add(smi)
            corpus.append(smi)

    for line in load_molecule_list(os.path.join(ROOT, "src", "molrec", "data", "molecules.smi")):
        push(line)
    while len(corpus) < 210:  # headroom for oracle-side parse rejects
        g = random_aromatic_ring(rng) if rng.random() < 0.15 else random_molecule(rng, 24)
        push(write(g))
    return corpus


def permuted_variant(text: str, rng: random.Random) -> str:
    g = parse(text)
    perm = list(range(len(g)))
    rng.shuffle(perm)
    return write(permute_graph(g, perm))


def build_pairs(corpus: list[str], rng: random.Random) -> list[dict]:
    pairs: list[dict] = []

    def add(a: str, b: str, cls: str) -> None:
        pairs.append({"a": a, "b": b, "cls": cls})

    # same molecule, permuted atom order
    k = 0
    while sum(p["cls"] == "permutation" for p in pairs) < 170:
        text = corpus[k % len(corpus)]
        k += 1
        add(text, permuted_variant(text, rng), "permutation")

    # different molecules
    while sum(p["cls"] == "different" for p in pairs) < 140:
        a, b = rng.sample(corpus, 2)
        add(a, b, "different")

    # stereo: flipped parity (opposite enantiomer) and permuted stereo (equal)
    stereo = [s for s in corpus if "@" in s]
    for text in stereo:
        flipped = flip_parity(text)
        if flipped:
            add(text, flipped, "parity_flip")
        add(text, permuted_variant(text, rng), "stereo_permutation")

    # redundant bracket hydrogen counts
    brackets = [
        ("C", "[CH4]"), ("CC", "C[CH3]"), ("CCO", "CC[OH]"), ("CN", "C[NH2]"),
        ("CCS", "CC[SH]"), ("CCC", "C[CH2]C"), ("CC(C)C", "CC([CH3])C"),
        ("OCC", "[OH][CH2][CH3]"), ("NCCO", "[NH2]CC[OH]"), ("CCl", "[CH3]Cl"),
    ]
    for a, b in brackets:
        add(a, b, "redundant_bracket")

    # cis/trans markers are dropped by the evaluation rule
    cis = [
        ("F/C=C/F", "F/C=C\\F"), ("C/C=C/C", "C/C=C\\C"),
        ("CC/C=C\\CC", "CC/C=C/CC"), ("F/C=C/F", "FC=CF"),
        ("C/C=C/C(=O)O", "CC=CC(=O)O"),
    ]
    for a, b in cis:
        add(a, b, "cis_trans")

    # declared disagreement class: aromatic vs Kekulé depiction
    kekule = [
        ("c1ccccc1", "C1=CC=CC=C1"),
        ("Cc1ccccc1", "CC1=CC=CC=C1"),
        ("c1ccncc1", "C1=CC=NC=C1"),
        ("Oc1ccccc1", "OC1=CC=CC=C1"),
    ]
    for a, b in kekule:
        add(a, b, "kekule")

    # single-atom mutations (near-miss unequal)
    while len(pairs) < 500:
        text = corpus[rng.randrange(len(corpus))]
        g = parse(text)
        carbons = [
            i for i, at in enumerate(g.atoms)
            if at.label.kind.value == "element" and at.label.element == "C"
            and not at.label.aromatic and g.bond_order_sum(i) <= 3 and at.parity == "none"
        ]
        if not carbons:
            continue
        from dataclasses import replace as _replace

        g2 = g.copy()
        i = carbons[rng.randrange(len(carbons))]
        g2.atoms[i].label = _replace(g2.atoms[i].label, element="N")
        add(text, write(g2), "mutation")
    return pairs[:500]


def main() -> None:
    rng = random.Random(20240817)
    os.makedirs(DATA, exist_ok=True)

    corpus = build_corpus(rng)
    pairs = build_pairs(corpus, rng)

    ask = set(corpus)
    for p in pairs:
        ask.add(strip_cis_trans(p["a"]))
        ask.add(strip_cis_trans(p["b"]))
    ask |= {"C1CCCCC1", "N[C@@H](C)C(=O)O", "C[C@H](N)C(=O)O", "CC=O"}
    oracle = run_oracle(sorted(ask))
    results = oracle["results"]

    unparseable = sorted(s for s, r in results.items() if r is None)
    if unparseable:
        print(f"WARNING: oracle could not parse {len(unparseable)}: {unparseable[:8]}")

    # H-count corpus: exactly 200 oracle-parseable molecules
    hcounts = {}
    for smi in corpus:
        r = results.get(smi)
        if r is not None and len(hcounts) < 200:
            hcounts[smi] = r["hcount"]
    with open(os.path.join(DATA, "hcount_corpus.json"), "w") as fh:
        json.dump({"toolkit": oracle["toolkit"], "version": oracle["version"],
                   "hcounts": hcounts}, fh, indent=1)
    print(f"hcount corpus: {len(hcounts)} molecules")

    kept = []
    agree = 0
    disagreements = []
    for p in pairs:
        ra = results.get(strip_cis_trans(p["a"]))
        rb = results.get(strip_cis_trans(p["b"]))
        if ra is None or rb is None:
            continue
        rdkit_equal = ra["canonical"] == rb["canonical"]
        ours_equal = canonicalize(p["a"]) == canonicalize(p["b"])
        kept.append({"a": p["a"], "b": p["b"], "cls": p["cls"], "rdkit_equal": rdkit_equal})
        if ours_equal == rdkit_equal:
            agree += 1
        else:
            disagreements.append((p["cls"], p["a"], p["b"], rdkit_equal, ours_equal))
    with open(os.path.join(DATA, "equivalence_pairs.jsonl"), "w") as fh:
        header = {"toolkit": oracle["toolkit"], "version": oracle["version"]}
        fh.write(json.dumps(header) + "\n")
        for rec in kept:
            fh.write(json.dumps(rec) + "\n")
    print(f"pairs kept: {len(kept)}, agreement {agree}/{len(kept)}")
    for d in disagreements:
        print("  disagree:", d)

    facts = {
        "toolkit": oracle["toolkit"],
        "version": oracle["version"],
        "cyclohexane": {
            "atoms": results["C1CCCCC1"]["atoms"],
            "bonds": results["C1CCCCC1"]["bonds"],
        },
        "acetaldehyde": {
            "atoms": results["CC=O"]["atoms"],
            "bonds": results["CC=O"]["bonds"],
        },
        "alanine_stereo_equal": results["N[C@@H](C)C(=O)O"]["canonical"]
        == results["C[C@H](N)C(=O)O"]["canonical"],
    }
    with open(os.path.join(DATA, "parse_counts.json"), "w") as fh:
        json.dump(facts, fh, indent=1)
    print("frozen facts:", facts)


if __name__ == "__main__":
    main()
