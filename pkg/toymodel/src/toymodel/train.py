"""Training loop: joint token + bond cross-entropy, warmup + cosine schedule,
JSONL curve log, checkpoint at the end."""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass

import torch
from torch.utils.data import DataLoader

from .data import MoleculeImageDataset, check_vocab_covers_dataset, collate
from .model import GraphPredictor, ModelConfig, joint_loss, save_checkpoint
from .vocab import Vocab


@dataclass
class TrainConfig:
    dataset_jsonl: str
    vocab_path: str
    out_checkpoint: str
    steps: int = 800
    batch_size: int = 25
    learning_rate: float = 4e-4
    warmup_fraction: float = 0.05
    seed: int = 0
    log_path: str | None = None
    image_size: int = 128
    patch_size: int = 16
    hidden_dim: int = 192
    encoder_layers: int = 2
    decoder_layers: int = 2
    attention_heads: int = 8
    max_seq_len: int = 160


def lr_at(step: int, cfg: TrainConfig) -> float:
    warmup = max(1, int(cfg.steps * cfg.warmup_fraction))
    if step < warmup:
        return cfg.learning_rate * (step + 1) / warmup
    t = (step - warmup) / max(1, cfg.steps - warmup)
    return cfg.learning_rate * 0.5 * (1 + math.cos(math.pi * t))


def train(cfg: TrainConfig) -> GraphPredictor:
    torch.manual_seed(cfg.seed)
    vocab = Vocab.load(cfg.vocab_path)
    check_vocab_covers_dataset(cfg.dataset_jsonl, vocab)

    model_cfg = ModelConfig(
        vocab_size=len(vocab), bins=vocab.bins, image_size=cfg.image_size,
        patch_size=cfg.patch_size, hidden_dim=cfg.hidden_dim,
        encoder_layers=cfg.encoder_layers, decoder_layers=cfg.decoder_layers,
        attention_heads=cfg.attention_heads, max_seq_len=cfg.max_seq_len)
    model = GraphPredictor(model_cfg)
    dataset = MoleculeImageDataset(cfg.dataset_jsonl, vocab, cfg.image_size,
                                   cfg.max_seq_len)
    loader = DataLoader(dataset, batch_size=cfg.batch_size, shuffle=True,
                        collate_fn=lambda b: collate(b, vocab.pad_id),
                        generator=torch.Generator().manual_seed(cfg.seed))
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.learning_rate)

    log_fh = open(cfg.log_path, "w") if cfg.log_path else None
    model.train()
    step = 0
    t0 = time.time()
    while step < cfg.steps:
        for batch in loader:
            if step >= cfg.steps:
                break
            for group in optimizer.param_groups:
                group["lr"] = lr_at(step, cfg)
            token_logits, bond_logits = model(
                batch["image"], batch["tokens"], batch["y_positions"], vocab.pad_id)
            token_loss, bond_loss, token_acc, bond_acc = joint_loss(
                token_logits, bond_logits, batch, vocab.pad_id,
                model_cfg.label_smoothing)
            loss = token_loss + bond_loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            if log_fh and (step % 20 == 0 or step == cfg.steps - 1):
                log_fh.write(json.dumps({
                    "step": step, "loss": float(loss),
                    "token_loss": float(token_loss), "bond_loss": float(bond_loss),
                    "token_acc": token_acc, "bond_acc": bond_acc,
                    "lr": lr_at(step, cfg), "seconds": round(time.time() - t0, 1),
                }) + "\n")
                log_fh.flush()
            step += 1
    if log_fh:
        log_fh.close()
    os.makedirs(os.path.dirname(os.path.abspath(cfg.out_checkpoint)), exist_ok=True)
    save_checkpoint(cfg.out_checkpoint, model, vocab.tokens)
    return model


def teacher_forced_token_accuracy(model: GraphPredictor, jsonl_path: str,
                                  vocab: Vocab, batch_size: int = 25) -> float:
    dataset = MoleculeImageDataset(jsonl_path, vocab, model.config.image_size,
                                   model.config.max_seq_len)
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False,
                        collate_fn=lambda b: collate(b, vocab.pad_id))
    model.eval()
    correct = total = 0
    with torch.no_grad():
        for batch in loader:
            token_logits, _ = model(batch["image"], batch["tokens"],
                                    batch["y_positions"], vocab.pad_id)
            targets = batch["tokens"][:, 1:]
            keep = targets.ne(vocab.pad_id)
            correct += int((token_logits.argmax(-1).eq(targets) & keep).sum())
            total += int(keep.sum())
    return correct / max(1, total)
