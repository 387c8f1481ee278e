"""Dataset adapter: reads the pipeline's JSONL + image directory and builds
training tensors.

Each record's token source ("pseudo_smiles" if set, else "smiles") is lexed,
coordinate tokens are inserted after every atom token (bins from the record's
normalized coordinates), and the whole thing is wrapped in BOS/EOS. The i-th
atom record is the i-th atom token by the dataset contract, so alignment
needs no side channel. Bond targets cover all ordered pairs with a none
class; wedge bonds get direction-reversed classes on the mirrored pair.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image

from .vocab import Vocab, VocabError, is_atom_lexeme, tokenize_source

BOND_CLASSES = [
    "none", "single", "double", "triple", "aromatic",
    "solid_wedge", "dashed_wedge", "solid_wedge_rev", "dashed_wedge_rev",
]
BOND_CLASS_ID = {name: i for i, name in enumerate(BOND_CLASSES)}
_REVERSED = {
    "single": "single", "double": "double", "triple": "triple",
    "aromatic": "aromatic",
    "solid_wedge": "solid_wedge_rev", "dashed_wedge": "dashed_wedge_rev",
}

IGNORE = -100


class DataError(ValueError):
    pass


def bin_of(coord: float, bins: int) -> int:
    return min(int(coord * bins), bins - 1)


@dataclass
class Sample:
    image_path: str
    token_ids: list[int]   # BOS ... EOS
    y_positions: list[int]  # index of each atom's y token within token_ids
    bond_target: np.ndarray  # (m, m) int, IGNORE on the diagonal


def build_sequence(record: dict, vocab: Vocab) -> tuple[list[int], list[int]]:
    source = record.get("pseudo_smiles") or record["smiles"]
    lexemes = tokenize_source(source)
    atoms = record["atoms"]
    ids = [vocab.bos_id]
    y_positions = []
    k = 0
    for lex in lexemes:
        ids.append(vocab.id(lex))
        if is_atom_lexeme(lex):
            if k >= len(atoms):
                raise DataError(f"more atom tokens than atom records in {source!r}")
            a = atoms[k]
            ids.append(vocab.x_ids[bin_of(a["x"], vocab.bins)])
            ids.append(vocab.y_ids[bin_of(a["y"], vocab.bins)])
            y_positions.append(len(ids) - 1)
            k += 1
    if k != len(atoms):
        raise DataError(f"atom records do not align with token source {source!r}")
    ids.append(vocab.eos_id)
    return ids, y_positions


def build_bond_target(record: dict) -> np.ndarray:
    m = len(record["atoms"])
    target = np.zeros((m, m), dtype=np.int64)
    np.fill_diagonal(target, IGNORE)
    for i, j, name in record["bonds"]:
        if name not in _REVERSED:
            raise DataError(f"unknown bond type {name!r}")
        target[i][j] = BOND_CLASS_ID[name]
        target[j][i] = BOND_CLASS_ID[_REVERSED[name]]
    return target


class MoleculeImageDataset(torch.utils.data.Dataset):
    def __init__(self, jsonl_path: str, vocab: Vocab, image_size: int,
                 max_seq_len: int):
        self.root = os.path.dirname(os.path.abspath(jsonl_path))
        self.vocab = vocab
        self.image_size = image_size
        self.samples: list[Sample] = []
        with open(jsonl_path, encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        for rec in records:
            ids, ypos = build_sequence(rec, vocab)
            if len(ids) > max_seq_len:
                raise DataError(
                    f"sequence length {len(ids)} exceeds max_seq_len {max_seq_len}; "
                    f"generate smaller molecules or raise the limit")
            self.samples.append(Sample(
                os.path.join(self.root, rec["image"]),
                ids, ypos, build_bond_target(rec)))

    def __len__(self) -> int:
        return len(self.samples)

    def load_image(self, path: str) -> torch.Tensor:
        img = Image.open(path).convert("L").resize(
            (self.image_size, self.image_size), Image.BILINEAR)
        arr = np.asarray(img, dtype=np.float32) / 255.0
        return torch.from_numpy(1.0 - arr).unsqueeze(0)  # ink is the signal

    def __getitem__(self, idx: int):
        s = self.samples[idx]
        return {
            "image": self.load_image(s.image_path),
            "token_ids": torch.tensor(s.token_ids, dtype=torch.long),
            "y_positions": torch.tensor(s.y_positions, dtype=torch.long),
            "bond_target": torch.from_numpy(s.bond_target),
        }


def collate(batch: list[dict], pad_id: int) -> dict:
    max_len = max(len(b["token_ids"]) for b in batch)
    max_atoms = max(len(b["y_positions"]) for b in batch)
    n = len(batch)
    tokens = torch.full((n, max_len), pad_id, dtype=torch.long)
    ypos = torch.zeros((n, max_atoms), dtype=torch.long)
    atom_mask = torch.zeros((n, max_atoms), dtype=torch.bool)
    bonds = torch.full((n, max_atoms, max_atoms), IGNORE, dtype=torch.long)
    images = torch.stack([b["image"] for b in batch])
    for k, b in enumerate(batch):
        L = len(b["token_ids"])
        m = len(b["y_positions"])
        tokens[k, :L] = b["token_ids"]
        ypos[k, :m] = b["y_positions"]
        atom_mask[k, :m] = True
        bonds[k, :m, :m] = b["bond_target"]
    return {"image": images, "tokens": tokens, "y_positions": ypos,
            "atom_mask": atom_mask, "bond_target": bonds}


def check_vocab_covers_dataset(jsonl_path: str, vocab: Vocab) -> None:
    """Abort-before-training guard: every dataset lexeme must be in vocab."""
    with open(jsonl_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            source = rec.get("pseudo_smiles") or rec["smiles"]
            for lex in tokenize_source(source):
                if lex not in vocab:
                    raise VocabError(
                        f"dataset token {lex!r} missing from the vocabulary; "
                        f"regenerate the vocab file from this dataset")
