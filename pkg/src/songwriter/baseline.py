"""Attention-only baseline.

Identical encoders, decoder layers, heads, initialization, and training to
the main model; the only difference is lyric access. Instead of indexing the
lyric vector by the running label count, every step attends over all lyric
vectors with a second additive-attention head. Generation still stops when
the number of emitted label-1 notes equals the syllable count.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .model import DecoderState, LyricsEncoding, SongwriterModel
from .nn.attention import AdditiveAttention
from .nn.tensor import Tensor


class Seq2seqModel(SongwriterModel):
    model_type = "seq2seq"

    def _extra_init(self, rng):
        h = self.config.hidden_size
        self.lyric_attention = AdditiveAttention(
            "attention.lyrics", query_size=3 * h, key_size=2 * h,
            attn_size=self.config.attn_size, rng=rng, dtype=self.dtype)
        self._params.extend(self.lyric_attention.params())

    def encode_lyrics(self, syllable_ids, phonetic_ids) -> LyricsEncoding:
        enc = super().encode_lyrics(syllable_ids, phonetic_ids)
        enc.projected = self.lyric_attention.project_keys(enc.stack)
        return enc

    def _lyric_access(self, state: DecoderState, lyrics: LyricsEncoding,
                      j: int) -> tuple[Tensor, Optional[np.ndarray]]:
        context, alpha = self.lyric_attention.context(
            state.combined, lyrics.stack, lyrics.projected)
        return context, alpha.data[0].copy()
