"""End-to-end gradient verification on a tiny model.

Builds a small 64-bit model with single-digit layer sizes, runs one
teacher-forced line through it, and sweeps every parameter element with
central differences. This is the canonical correctness check for the whole
differentiable stack (embeddings, both encoders, attention, all three decoder
layers, and the output heads).
"""

from __future__ import annotations

from .baseline import Seq2seqModel
from .corpus import EncodedTriple
from .model import ModelConfig, SongwriterModel
from .nn import ops
from .nn.gradcheck import GradCheckReport, gradient_check

TINY_VOCAB = {
    "pitch_vocab": 8,
    "duration_vocab": 6,
    "syllable_vocab": 8,
    "phonetic_vocab": 8,
    "label_vocab": 3,
}

# The check target is the teacher-forcing loss scaled by an exact power of
# two. A raw loss near 20 leaves central-difference rounding noise around
# 1e-10 in the numeric gradient, which the 1e-8 relative-error floor cannot
# absorb for near-zero-gradient elements; scaling shrinks the noise while
# scaling every gradient exactly, so the comparison itself is unchanged.
LOSS_SCALE = 2.0 ** -12


def tiny_config(hidden: int = 8, context_uses_labels: bool = False) -> ModelConfig:
    return ModelConfig(
        hidden_size=hidden,
        pitch_emb=5,
        duration_emb=5,
        label_emb=3,
        syllable_emb=6,
        phonetic_emb=5,
        attention_size=hidden,
        context_window=8,
        context_uses_labels=context_uses_labels,
        dtype="float64",
        **TINY_VOCAB,
    )


def tiny_triple() -> EncodedTriple:
    # Hand-picked ids inside the tiny vocabulary; the context exercises the
    # attention path and the targets exercise a multi-note syllable group.
    return EncodedTriple(
        syllables=(2, 5, 3),
        phonetics=(4, 2, 6),
        context_pitch=(3, 2, 6),
        context_duration=(2, 3, 4),
        context_label=(1, 0, 1),
        target_pitch=(2, 4, 3, 5),
        target_duration=(3, 2, 2, 4),
        target_label=(1, 0, 1, 1),
    )


def gradcheck_tiny_model(arch: str = "songwriter", hidden: int = 8, seed: int = 0,
                         max_elements_per_param: int | None = None,
                         context_uses_labels: bool = False) -> GradCheckReport:
    config = tiny_config(hidden=hidden, context_uses_labels=context_uses_labels)
    cls = {"songwriter": SongwriterModel, "seq2seq": Seq2seqModel}[arch]
    model = cls(config, seed=seed)
    triple = tiny_triple()

    def loss_fn():
        return ops.scale(model.teacher_forcing_loss(triple).loss, LOSS_SCALE)

    return gradient_check(
        loss_fn, model.params(),
        max_elements_per_param=max_elements_per_param, seed=seed)
