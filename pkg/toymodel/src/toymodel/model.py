"""Tiny encoder/decoder: patch-embedding image encoder, autoregressive token
decoder with an atom head over the vocabulary, and a pairwise bond head on
concatenated atom representations (the hidden state at each atom's second
coordinate token).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import torch
import torch.nn as nn
import torch.nn.functional as F

from .data import BOND_CLASSES, IGNORE


@dataclass
class ModelConfig:
    vocab_size: int
    bins: int
    image_size: int = 128
    patch_size: int = 16
    hidden_dim: int = 192
    encoder_layers: int = 2
    decoder_layers: int = 2
    attention_heads: int = 8
    max_seq_len: int = 160
    dropout: float = 0.1
    label_smoothing: float = 0.1

    def __post_init__(self) -> None:
        if self.image_size % self.patch_size:
            raise ValueError("patch size must divide image size")
        if self.hidden_dim % self.attention_heads:
            raise ValueError("heads must divide hidden dim")


def sinusoidal_positions(length: int, dim: int) -> torch.Tensor:
    pos = torch.arange(length, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float32)
                    * (-math.log(10000.0) / dim))
    out = torch.zeros(length, dim)
    out[:, 0::2] = torch.sin(pos * div)
    out[:, 1::2] = torch.cos(pos * div)
    return out


class BondHead(nn.Module):
    """2-layer feedforward over concatenated pair representations."""

    def __init__(self, hidden_dim: int, n_classes: int = len(BOND_CLASSES)):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(2 * hidden_dim, hidden_dim),
            nn.ReLU(),
            nn.Linear(hidden_dim, n_classes),
        )

    def forward(self, atom_repr: torch.Tensor) -> torch.Tensor:
        """atom_repr: (B, M, D) -> logits (B, M, M, C) over ordered pairs."""
        b, m, d = atom_repr.shape
        left = atom_repr.unsqueeze(2).expand(b, m, m, d)
        right = atom_repr.unsqueeze(1).expand(b, m, m, d)
        return self.net(torch.cat([left, right], dim=-1))


class GraphPredictor(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d = config.hidden_dim
        self.patch_embed = nn.Conv2d(1, d, kernel_size=config.patch_size,
                                     stride=config.patch_size)
        n_patches = (config.image_size // config.patch_size) ** 2
        self.register_buffer("enc_pos", sinusoidal_positions(n_patches, d))
        self.register_buffer("dec_pos", sinusoidal_positions(config.max_seq_len, d))
        enc_layer = nn.TransformerEncoderLayer(
            d, config.attention_heads, 4 * d, config.dropout, batch_first=True,
            norm_first=True)
        self.encoder = nn.TransformerEncoder(enc_layer, config.encoder_layers)
        self.token_embed = nn.Embedding(config.vocab_size, d)
        dec_layer = nn.TransformerDecoderLayer(
            d, config.attention_heads, 4 * d, config.dropout, batch_first=True,
            norm_first=True)
        self.decoder = nn.TransformerDecoder(dec_layer, config.decoder_layers)
        self.dropout = nn.Dropout(config.dropout)
        self.atom_head = nn.Linear(d, config.vocab_size)
        self.bond_head = BondHead(d)

    def encode_image(self, images: torch.Tensor) -> torch.Tensor:
        x = self.patch_embed(images)            # (B, D, H', W')
        x = x.flatten(2).transpose(1, 2)        # (B, P, D)
        x = x + self.enc_pos[: x.shape[1]]
        return self.encoder(self.dropout(x))

    def decode_tokens(self, token_ids: torch.Tensor, memory: torch.Tensor,
                      pad_id: int) -> torch.Tensor:
        """Hidden states for each input position (causal)."""
        L = token_ids.shape[1]
        if L > self.config.max_seq_len:
            raise ValueError(f"sequence length {L} exceeds max {self.config.max_seq_len}")
        x = self.token_embed(token_ids) + self.dec_pos[:L]
        causal = torch.triu(torch.ones(L, L, dtype=torch.bool,
                                       device=token_ids.device), diagonal=1)
        pad_mask = token_ids.eq(pad_id)
        return self.decoder(self.dropout(x), memory, tgt_mask=causal,
                            tgt_key_padding_mask=pad_mask)

    def forward(self, images: torch.Tensor, token_ids: torch.Tensor,
                y_positions: torch.Tensor, pad_id: int):
        """Teacher-forced pass: token logits for next-token prediction plus
        bond logits over atom pairs."""
        memory = self.encode_image(images)
        hidden = self.decode_tokens(token_ids[:, :-1], memory, pad_id)
        token_logits = self.atom_head(hidden)            # predicts token_ids[:, 1:]
        # h_{k+2}: hidden state at each atom's y token (positions are indices
        # into the full sequence; the input row is the sequence minus EOS, so
        # every y position is a valid input index)
        idx = y_positions.unsqueeze(-1).expand(-1, -1, hidden.shape[-1])
        atom_repr = hidden.gather(1, idx)
        bond_logits = self.bond_head(atom_repr)
        return token_logits, bond_logits


def joint_loss(token_logits: torch.Tensor, bond_logits: torch.Tensor,
               batch: dict, pad_id: int, label_smoothing: float = 0.1):
    targets = batch["tokens"][:, 1:]
    token_loss = F.cross_entropy(
        token_logits.reshape(-1, token_logits.shape[-1]), targets.reshape(-1),
        ignore_index=pad_id, label_smoothing=label_smoothing)
    pair_mask = batch["atom_mask"].unsqueeze(2) & batch["atom_mask"].unsqueeze(1)
    bond_target = batch["bond_target"].masked_fill(~pair_mask, IGNORE)
    bond_loss = F.cross_entropy(
        bond_logits.reshape(-1, bond_logits.shape[-1]), bond_target.reshape(-1),
        ignore_index=IGNORE)
    with torch.no_grad():
        keep = targets.ne(pad_id)
        token_acc = (token_logits.argmax(-1).eq(targets) & keep).sum() / keep.sum()
        bkeep = bond_target.ne(IGNORE)
        bond_acc = ((bond_logits.argmax(-1).eq(bond_target) & bkeep).sum()
                    / bkeep.sum().clamp(min=1))
    return token_loss, bond_loss, float(token_acc), float(bond_acc)


def save_checkpoint(path: str, model: GraphPredictor, vocab_tokens: list[str]) -> None:
    torch.save({
        "config": asdict(model.config),
        "state_dict": model.state_dict(),
        "vocab_tokens": vocab_tokens,
    }, path)


def load_checkpoint(path: str):
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = ModelConfig(**payload["config"])
    model = GraphPredictor(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload["vocab_tokens"]
