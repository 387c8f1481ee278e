"""Constrained greedy decoding to the Prediction wire format.

A state machine masks the vocabulary so that an atom token must be followed
by one x token and then one y token; coordinate tokens are illegal anywhere
else, so decoded coordinates always fall in their axis's range by
construction. The bond head runs over the hidden states at each atom's y
token, and reversed-wedge classes fold back into the natural direction when
the wire entries are emitted.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image

from .data import BOND_CLASSES
from .model import GraphPredictor
from .vocab import Vocab

_STATE_NEUTRAL, _STATE_WANT_X, _STATE_WANT_Y = 0, 1, 2


def _masks(vocab: Vocab, device) -> dict[int, torch.Tensor]:
    V = len(vocab)
    x_mask = torch.zeros(V, dtype=torch.bool, device=device)
    y_mask = torch.zeros(V, dtype=torch.bool, device=device)
    for i in vocab.x_ids.values():
        x_mask[i] = True
    for i in vocab.y_ids.values():
        y_mask[i] = True
    neutral = ~(x_mask | y_mask)
    neutral[vocab.pad_id] = False
    neutral[vocab.bos_id] = False
    return {_STATE_NEUTRAL: neutral, _STATE_WANT_X: x_mask, _STATE_WANT_Y: y_mask}


def load_image(path: str, image_size: int) -> torch.Tensor:
    img = Image.open(path).convert("L").resize((image_size, image_size),
                                               Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0
    return torch.from_numpy(1.0 - arr).unsqueeze(0)


@torch.no_grad()
def greedy_decode(model: GraphPredictor, vocab: Vocab, image_path: str) -> dict:
    """Decode one image into a Prediction wire object."""
    model.eval()
    device = next(model.parameters()).device
    image = load_image(image_path, model.config.image_size).unsqueeze(0).to(device)
    memory = model.encode_image(image)
    masks = _masks(vocab, device)

    ids = [vocab.bos_id]
    state = _STATE_NEUTRAL
    flags: list[str] = []
    max_len = model.config.max_seq_len - 1
    while len(ids) < max_len:
        tokens = torch.tensor([ids], dtype=torch.long, device=device)
        hidden = model.decode_tokens(tokens, memory, vocab.pad_id)
        logits = model.atom_head(hidden[:, -1, :]).squeeze(0)
        logits = logits.masked_fill(~masks[state], float("-inf"))
        nxt = int(logits.argmax())
        if state == _STATE_NEUTRAL and nxt == vocab.eos_id:
            break
        ids.append(nxt)
        if state == _STATE_NEUTRAL:
            state = _STATE_WANT_X if vocab.is_atom_id(nxt) else _STATE_NEUTRAL
        elif state == _STATE_WANT_X:
            state = _STATE_WANT_Y
        else:
            state = _STATE_NEUTRAL
    if state != _STATE_NEUTRAL:
        # length cutoff mid-atom: repair with center bins and flag it
        flags.append("truncated_atom_repaired")
        center = vocab.bins // 2
        if state == _STATE_WANT_X:
            ids.append(vocab.x_ids[center])
            state = _STATE_WANT_Y
        if state == _STATE_WANT_Y:
            ids.append(vocab.y_ids[center])

    x_rev = {v: k for k, v in vocab.x_ids.items()}
    y_rev = {v: k for k, v in vocab.y_ids.items()}
    atoms = []
    y_positions = []
    k = 0
    while k < len(ids):
        t = ids[k]
        if vocab.is_atom_id(t):
            xb = x_rev[ids[k + 1]]
            yb = y_rev[ids[k + 2]]
            atoms.append({"label": vocab.tokens[t], "x_bin": xb, "y_bin": yb})
            y_positions.append(k + 2)
            k += 3
        else:
            k += 1

    bonds = []
    if atoms:
        tokens = torch.tensor([ids], dtype=torch.long, device=device)
        hidden = model.decode_tokens(tokens, memory, vocab.pad_id)
        idx = torch.tensor([y_positions], dtype=torch.long, device=device)
        idx = idx.unsqueeze(-1).expand(-1, -1, hidden.shape[-1])
        atom_repr = hidden.gather(1, idx)
        logits = model.bond_head(atom_repr).squeeze(0)  # (M, M, C)
        probs = F.softmax(logits, dim=-1)
        best: dict[tuple[int, int], tuple[str, float]] = {}
        m = len(atoms)
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                cls = int(probs[i, j].argmax())
                score = float(probs[i, j, cls])
                name = BOND_CLASSES[cls]
                if name.endswith("_rev"):
                    entry = (j, i)
                    name = name[: -len("_rev")]
                else:
                    entry = (i, j)
                if entry not in best or score > best[entry][1]:
                    best[entry] = (name, score)
        bonds = [
            {"i": i, "j": j, "type": name, "score": round(score, 6)}
            for (i, j), (name, score) in sorted(best.items())
        ]

    out = {"atoms": atoms, "bonds": bonds}
    if flags:
        out["flags"] = flags
    return out
