"""Training loop: shuffled mini-batches, Adam with decay, best-valid tracking.

Each batch's gradient is accumulated triple by triple through the same decode
path used everywhere else (every per-triple loss is scaled by 1/batch before
backprop, so the update matches the batch-mean loss), then clipped by global
norm and applied in one optimizer step.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .corpus import EncodedTriple, Triple, Vocabulary, encode_triple
from .model import SongwriterModel
from .nn.optim import AdamState, clip_gradients
from .nn.tensor import backward
from .nn import ops


@dataclass
class TrainOptions:
    epochs: int = 10
    batch_size: int = 64
    lr: float = 0.001
    decay: float = 0.9999
    clip_norm: float = 5.0
    seed: int = 0
    # stop early once the training-set pitch perplexity drops this low
    early_stop_pitch_ppl: Optional[float] = None
    log: Optional[Callable[[str], None]] = None


@dataclass
class EpochStats:
    epoch: int
    train_loss_per_note: float
    train_pitch_ppl: float
    valid_loss_per_note: Optional[float]
    lr: float
    seconds: float

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss_per_note": self.train_loss_per_note,
            "train_pitch_ppl": self.train_pitch_ppl,
            "valid_loss_per_note": self.valid_loss_per_note,
            "lr": self.lr,
            "seconds": self.seconds,
        }


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_valid_loss: float = math.inf
    stopped_early: bool = False

    def to_dict(self) -> dict:
        return {
            "epochs": [e.to_dict() for e in self.epochs],
            "best_epoch": self.best_epoch,
            "best_valid_loss": self.best_valid_loss,
            "stopped_early": self.stopped_early,
        }


def _ensure_encoded(vocab: Vocabulary, triples: Sequence) -> list[EncodedTriple]:
    out = []
    for t in triples:
        out.append(encode_triple(vocab, t) if isinstance(t, Triple) else t)
    return out


def _mean_nll(model: SongwriterModel, triples: list[EncodedTriple]) -> float:
    total, notes = 0.0, 0
    for t in triples:
        result = model.teacher_forcing_loss(t)
        total += result.loss.item()
        notes += result.note_count
    return total / max(notes, 1)


def train(model: SongwriterModel, vocab: Vocabulary, train_triples: Sequence,
          valid_triples: Sequence = (), options: TrainOptions = TrainOptions()) -> TrainReport:
    """Train in place; the model ends at the best-validation-loss weights."""
    encoded = _ensure_encoded(vocab, train_triples)
    valid = _ensure_encoded(vocab, valid_triples)
    if not encoded:
        raise ValueError("training set is empty")

    params = model.params()
    adam = AdamState(params, lr=options.lr, decay=options.decay)
    order_rng = random.Random(options.seed)
    report = TrainReport()
    best_snapshot = None

    for epoch in range(1, options.epochs + 1):
        started = time.perf_counter()
        order = list(range(len(encoded)))
        order_rng.shuffle(order)
        epoch_nll = {"pitch": 0.0, "duration": 0.0, "label": 0.0}
        epoch_notes = 0
        for start in range(0, len(order), options.batch_size):
            batch = order[start : start + options.batch_size]
            inv = 1.0 / len(batch)
            for idx in batch:
                result = model.teacher_forcing_loss(encoded[idx])
                backward(ops.scale(result.loss, inv))
                for attr in epoch_nll:
                    epoch_nll[attr] += result.nll[attr]
                epoch_notes += result.note_count
            clip_gradients(params, options.clip_norm)
            adam.step()

        train_loss = sum(epoch_nll.values()) / max(epoch_notes, 1)
        pitch_ppl = math.exp(epoch_nll["pitch"] / max(epoch_notes, 1))
        valid_loss = _mean_nll(model, valid) if valid else None
        stats = EpochStats(
            epoch=epoch, train_loss_per_note=train_loss, train_pitch_ppl=pitch_ppl,
            valid_loss_per_note=valid_loss, lr=adam.current_lr(),
            seconds=time.perf_counter() - started)
        report.epochs.append(stats)
        if options.log is not None:
            v = f"{valid_loss:.4f}" if valid_loss is not None else "-"
            options.log(
                f"epoch {epoch}: train {train_loss:.4f}/note, pitch ppl {pitch_ppl:.3f}, "
                f"valid {v}, lr {stats.lr:.6f}")

        tracked = valid_loss if valid_loss is not None else train_loss
        if tracked < report.best_valid_loss:
            report.best_valid_loss = tracked
            report.best_epoch = epoch
            best_snapshot = [p.data.copy() for p in params]

        if (options.early_stop_pitch_ppl is not None
                and pitch_ppl <= options.early_stop_pitch_ppl):
            report.stopped_early = True
            break

    # leave the model at the best weights seen
    if best_snapshot is not None and report.best_epoch != len(report.epochs):
        for p, data in zip(params, best_snapshot):
            p.data[...] = data
    return report
