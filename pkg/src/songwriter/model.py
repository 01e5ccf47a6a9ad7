"""The melody composition model.

Two encoders and a three-layer decoder. The lyrics encoder is a bidirectional
GRU over concatenated syllable and phonetic embeddings. The context-melody
encoder is a two-layer bidirectional GRU: layer 1 reads pitch embeddings,
layer 2 reads duration embeddings concatenated with layer 1's output, and the
per-step context vector is the concatenation of both layers' states. The
decoder runs pitch, duration, and label layers in order; each step selects
the lyric vector for the syllable the note belongs to by counting label-1
emissions so far, attends over the encoded context melody, and feeds both to
the recurrent layers and the softmax output heads.

Dimension note: the attended context vector is 4*hidden wide while a lyric
vector is 2*hidden wide, so the per-step "dynamic context" joins them by
concatenation; their downstream consumers are affine maps and GRU inputs, for
which concatenation is the general form of any weighted combination.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import EncodedTriple, Vocabulary
from .score import AlignedLine, NoteEvent, Song, Syllable, validate_alignment
from .nn import ops
from .nn.attention import AdditiveAttention
from .nn.gru import GruCell, run_bidirectional
from .nn.init import embedding_uniform, xavier_uniform, zeros_bias
from .nn.tensor import Parameter, Tensor, constant


@dataclass(frozen=True)
class ModelConfig:
    pitch_vocab: int
    duration_vocab: int
    syllable_vocab: int
    phonetic_vocab: int
    label_vocab: int = 3
    hidden_size: int = 256
    pitch_emb: int = 128
    duration_emb: int = 128
    label_emb: int = 64
    syllable_emb: int = 256
    phonetic_emb: int = 128
    attention_size: int = 0  # 0 means hidden_size
    context_window: int = 40
    max_note_factor: int = 3
    context_uses_labels: bool = False
    dtype: str = "float32"

    def __post_init__(self):
        for name in ("pitch_vocab", "duration_vocab", "syllable_vocab", "phonetic_vocab",
                     "label_vocab", "hidden_size", "pitch_emb", "duration_emb",
                     "label_emb", "syllable_emb", "phonetic_emb", "max_note_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.context_window < 0:
            raise ValueError("context_window cannot be negative")

    @property
    def attn_size(self) -> int:
        return self.attention_size or self.hidden_size

    @classmethod
    def for_vocabulary(cls, vocab: Vocabulary, **overrides) -> "ModelConfig":
        return cls(
            pitch_vocab=vocab.pitch_size,
            duration_vocab=vocab.duration_size,
            syllable_vocab=vocab.syllable_size,
            phonetic_vocab=vocab.phonetic_size,
            label_vocab=vocab.label_size,
            **overrides,
        )

    def to_dict(self) -> dict:
        return {
            "pitch_vocab": self.pitch_vocab,
            "duration_vocab": self.duration_vocab,
            "syllable_vocab": self.syllable_vocab,
            "phonetic_vocab": self.phonetic_vocab,
            "label_vocab": self.label_vocab,
            "hidden_size": self.hidden_size,
            "pitch_emb": self.pitch_emb,
            "duration_emb": self.duration_emb,
            "label_emb": self.label_emb,
            "syllable_emb": self.syllable_emb,
            "phonetic_emb": self.phonetic_emb,
            "attention_size": self.attention_size,
            "context_window": self.context_window,
            "max_note_factor": self.max_note_factor,
            "context_uses_labels": self.context_uses_labels,
            "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class LyricsEncoding:
    vectors: list[Tensor]          # one (1, 2H) vector per syllable
    stack: Tensor                  # (|X|, 2H)
    projected: Optional[Tensor] = None  # lyric-attention key projection


@dataclass
class ContextEncoding:
    stack: Tensor                  # (K, 4H)
    projected: Tensor              # (K, A)
    last_backward_l1: Tensor       # (1, H)
    last_backward_l2: Tensor       # (1, H)


@dataclass
class DecoderState:
    s_pitch: Tensor
    s_duration: Tensor
    s_label: Tensor
    combined: Tensor               # (1, 3H), the attention query
    prev_context: Tensor           # (1, 6H), previous step's dynamic context
    prev_pitch: int
    prev_duration: int
    prev_label: int
    label_count: int
    step: int


@dataclass
class StepResult:
    state: DecoderState
    probs: dict[str, np.ndarray]
    losses: Optional[dict[str, Tensor]]
    emitted: tuple[int, int, int]
    j: int
    context_alpha: Optional[np.ndarray]
    lyric_alpha: Optional[np.ndarray]


@dataclass
class TeacherForcingResult:
    loss: Tensor
    nll: dict[str, float]
    note_count: int
    j_trace: list[int]


@dataclass
class LineTrace:
    """Per-step decode diagnostics for the --trace flag."""

    j: list[int] = field(default_factory=list)
    context_alpha: list[Optional[list[float]]] = field(default_factory=list)
    lyric_alpha: list[Optional[list[float]]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"j": self.j, "context_alpha": self.context_alpha,
                "lyric_alpha": self.lyric_alpha}


def _choose_id(probs: np.ndarray, allowed: list[int], policy: str,
               rng: Optional[random.Random], temperature: float) -> int:
    sub = probs.astype(np.float64)[allowed]
    if policy == "greedy":
        return allowed[int(np.argmax(sub))]
    if rng is None:
        raise ValueError("sampling policy requires an rng")
    if temperature != 1.0:
        sub = np.power(np.maximum(sub, 1e-30), 1.0 / temperature)
    total = sub.sum()
    if total <= 0:
        return allowed[int(np.argmax(sub))]
    sub /= total
    pick = rng.random()
    acc = 0.0
    for token, p in zip(allowed, sub):
        acc += p
        if pick < acc:
            return token
    return allowed[-1]


class SongwriterModel:
    """Label-counting decoder: lyric access by alignment index."""

    model_type = "songwriter"

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.dtype = np.dtype(config.dtype)
        rng = np.random.default_rng(seed)
        self._params: list[Parameter] = []
        c = config
        h = c.hidden_size

        def register(param):
            self._params.append(param)
            return param

        def emb(name, rows, cols):
            return register(Parameter(f"embed.{name}", embedding_uniform(rng, rows, cols, self.dtype)))

        def linear(name, fan_in, fan_out):
            w = register(Parameter(f"{name}.W", xavier_uniform(rng, fan_in, fan_out, self.dtype)))
            b = register(Parameter(f"{name}.b", zeros_bias(fan_out, self.dtype)))
            return w, b

        def cell(name, input_size):
            gru = GruCell(name, input_size, h, rng, self.dtype)
            self._params.extend(gru.params())
            return gru

        self.emb_syllable = emb("syllable", c.syllable_vocab, c.syllable_emb)
        self.emb_phonetic = emb("phonetic", c.phonetic_vocab, c.phonetic_emb)
        self.emb_pitch = emb("pitch", c.pitch_vocab, c.pitch_emb)
        self.emb_duration = emb("duration", c.duration_vocab, c.duration_emb)
        self.emb_label = emb("label", c.label_vocab, c.label_emb)

        lyrics_in = c.syllable_emb + c.phonetic_emb
        self.lyrics_fwd = cell("lyrics.fwd", lyrics_in)
        self.lyrics_bwd = cell("lyrics.bwd", lyrics_in)

        self.ctx_pitch_fwd = cell("context.pitch.fwd", c.pitch_emb)
        self.ctx_pitch_bwd = cell("context.pitch.bwd", c.pitch_emb)
        layer2_in = c.duration_emb + 2 * h
        if c.context_uses_labels:
            layer2_in += c.label_emb
        self.ctx_duration_fwd = cell("context.duration.fwd", layer2_in)
        self.ctx_duration_bwd = cell("context.duration.bwd", layer2_in)

        self.context_attention = AdditiveAttention(
            "attention.context", query_size=3 * h, key_size=4 * h,
            attn_size=c.attn_size, rng=rng, dtype=self.dtype)
        self._params.extend(self.context_attention.params())

        self.context_dim = 6 * h  # [attended context (4H) ; lyric vector (2H)]
        prev_note = c.pitch_emb + c.duration_emb + c.label_emb
        self.dec_pitch = cell("decoder.pitch.gru", self.context_dim + c.pitch_emb + 2 * h)
        self.dec_duration = cell("decoder.duration.gru", self.context_dim + c.duration_emb + c.pitch_emb + h)
        self.dec_label = cell(
            "decoder.label.gru",
            self.context_dim + c.label_emb + c.pitch_emb + c.duration_emb + h)

        self.init_pitch_w, self.init_pitch_b = linear("decoder.init.pitch", h, h)
        self.init_duration_w, self.init_duration_b = linear("decoder.init.duration", h, h)

        self.head_pitch_w, self.head_pitch_b = linear(
            "decoder.pitch.head", h + self.context_dim + prev_note, c.pitch_vocab)
        self.head_duration_w, self.head_duration_b = linear(
            "decoder.duration.head",
            h + self.context_dim + prev_note + c.pitch_emb, c.duration_vocab)
        self.head_label_w, self.head_label_b = linear(
            "decoder.label.head",
            h + self.context_dim + prev_note + c.pitch_emb + c.duration_emb, c.label_vocab)

        self._extra_init(rng)
        names = [p.name for p in self._params]
        assert len(names) == len(set(names)), "parameter names must be unique"

    def _extra_init(self, rng):
        """Hook for subclasses that add parameters (kept last for name stability)."""

    # -- parameter access -----------------------------------------------------
    def params(self) -> list[Parameter]:
        return list(self._params)

    def param(self, name: str) -> Parameter:
        for p in self._params:
            if p.name == name:
                return p
        raise KeyError(name)

    def manifest(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(p.name, p.data.shape) for p in self._params]

    def _zeros(self, cols: int) -> Tensor:
        return constant(np.zeros((1, cols)), self.dtype)

    # -- encoders ---------------------------------------------------------------
    def encode_lyrics(self, syllable_ids, phonetic_ids) -> LyricsEncoding:
        if len(syllable_ids) == 0:
            raise ValueError("cannot encode an empty lyric line")
        inputs = [
            ops.concat_cols([
                ops.gather_rows(self.emb_syllable, [s]),
                ops.gather_rows(self.emb_phonetic, [p]),
            ])
            for s, p in zip(syllable_ids, phonetic_ids)
        ]
        vectors = run_bidirectional(self.lyrics_fwd, self.lyrics_bwd, inputs)
        enc = LyricsEncoding(vectors=vectors, stack=ops.stack_rows(vectors))
        return enc

    def encode_context(self, pitch_ids, duration_ids, label_ids=None) -> Optional[ContextEncoding]:
        if len(pitch_ids) == 0:
            return None
        h = self.config.hidden_size
        pitch_in = [ops.gather_rows(self.emb_pitch, [p]) for p in pitch_ids]
        layer1 = run_bidirectional(self.ctx_pitch_fwd, self.ctx_pitch_bwd, pitch_in)
        layer2_in = []
        for t, d in enumerate(duration_ids):
            parts = [ops.gather_rows(self.emb_duration, [d]), layer1[t]]
            if self.config.context_uses_labels:
                lab = label_ids[t] if label_ids is not None else 0
                parts.insert(1, ops.gather_rows(self.emb_label, [lab]))
            layer2_in.append(ops.concat_cols(parts))
        layer2 = run_bidirectional(self.ctx_duration_fwd, self.ctx_duration_bwd, layer2_in)
        merged = [ops.concat_cols([a, b]) for a, b in zip(layer1, layer2)]
        stack = ops.stack_rows(merged)
        return ContextEncoding(
            stack=stack,
            projected=self.context_attention.project_keys(stack),
            last_backward_l1=ops.slice_cols(layer1[0], h, 2 * h),
            last_backward_l2=ops.slice_cols(layer2[0], h, 2 * h),
        )

    # -- decoder ----------------------------------------------------------------
    def init_decoder(self, context: Optional[ContextEncoding]) -> DecoderState:
        h = self.config.hidden_size
        if context is None:
            s_pitch = self._zeros(h)
            s_duration = self._zeros(h)
        else:
            s_pitch = ops.affine(context.last_backward_l1, self.init_pitch_w, self.init_pitch_b)
            s_duration = ops.affine(context.last_backward_l2, self.init_duration_w, self.init_duration_b)
        s_label = self._zeros(h)
        return DecoderState(
            s_pitch=s_pitch,
            s_duration=s_duration,
            s_label=s_label,
            combined=ops.concat_cols([s_pitch, s_duration, s_label]),
            prev_context=self._zeros(self.context_dim),
            prev_pitch=1,      # pitch <bos>
            prev_duration=1,   # duration <bos>
            prev_label=Vocabulary.LABEL_BOS,
            label_count=0,
            step=0,
        )

    def _lyric_access(self, state: DecoderState, lyrics: LyricsEncoding,
                      j: int) -> tuple[Tensor, Optional[np.ndarray]]:
        return lyrics.vectors[j - 1], None

    def decode_step(self, state: DecoderState, lyrics: LyricsEncoding,
                    context: Optional[ContextEncoding], num_syllables: int,
                    forced: Optional[tuple[int, int, int]] = None,
                    policy: str = "greedy", rng: Optional[random.Random] = None,
                    temperature: float = 1.0,
                    allowed_pitch: Optional[list[int]] = None,
                    allowed_duration: Optional[list[int]] = None,
                    allowed_label: Optional[list[int]] = None,
                    rest_pitch_ids: frozenset = frozenset()) -> StepResult:
        """Advance the decoder one note.

        With `forced` the gold ids are used as the emissions (teacher forcing)
        and per-head cross-entropy losses are returned. Otherwise emissions
        follow the decode policy restricted to the allowed id lists; a rest
        pitch forces label 0 so a rest can never close a syllable group.
        """
        if state.label_count >= num_syllables:
            raise ValueError("line already complete: label count reached the syllable count")

        j = min(1 + state.label_count, num_syllables)
        lyric_vec, lyric_alpha = self._lyric_access(state, lyrics, j)

        if context is None:
            c_con = self._zeros(4 * self.config.hidden_size)
            context_alpha = None
        else:
            c_con, alpha_t = self.context_attention.context(
                state.combined, context.stack, context.projected)
            context_alpha = alpha_t.data[0].copy()
        c_i = ops.concat_cols([c_con, lyric_vec])

        prev_pitch_e = ops.gather_rows(self.emb_pitch, [state.prev_pitch])
        prev_duration_e = ops.gather_rows(self.emb_duration, [state.prev_duration])
        prev_label_e = ops.gather_rows(self.emb_label, [state.prev_label])
        prev_note_e = ops.concat_cols([prev_pitch_e, prev_duration_e, prev_label_e])

        losses: Optional[dict[str, Tensor]] = {} if forced is not None else None
        probs: dict[str, np.ndarray] = {}

        # pitch layer
        x_pitch = ops.concat_cols([state.prev_context, prev_pitch_e, lyric_vec])
        s_pitch = self.dec_pitch.step(state.s_pitch, x_pitch)
        pitch_logits = ops.affine(
            ops.concat_cols([s_pitch, c_i, prev_note_e]),
            self.head_pitch_w, self.head_pitch_b)
        if forced is not None:
            loss, probs["pitch"] = ops.softmax_cross_entropy(pitch_logits, forced[0])
            losses["pitch"] = loss
            pitch_id = forced[0]
        else:
            probs["pitch"] = ops.stable_softmax(pitch_logits.data[0])
            pitch_id = _choose_id(
                probs["pitch"],
                allowed_pitch if allowed_pitch is not None else list(range(self.config.pitch_vocab)),
                policy, rng, temperature)
        pitch_e = ops.gather_rows(self.emb_pitch, [pitch_id])

        # duration layer
        x_duration = ops.concat_cols([state.prev_context, prev_duration_e, pitch_e, s_pitch])
        s_duration = self.dec_duration.step(state.s_duration, x_duration)
        duration_logits = ops.affine(
            ops.concat_cols([s_duration, c_i, prev_note_e, pitch_e]),
            self.head_duration_w, self.head_duration_b)
        if forced is not None:
            loss, probs["duration"] = ops.softmax_cross_entropy(duration_logits, forced[1])
            losses["duration"] = loss
            duration_id = forced[1]
        else:
            probs["duration"] = ops.stable_softmax(duration_logits.data[0])
            duration_id = _choose_id(
                probs["duration"],
                allowed_duration if allowed_duration is not None else list(range(self.config.duration_vocab)),
                policy, rng, temperature)
        duration_e = ops.gather_rows(self.emb_duration, [duration_id])

        # label layer
        x_label = ops.concat_cols(
            [state.prev_context, prev_label_e, pitch_e, duration_e, s_duration])
        s_label = self.dec_label.step(state.s_label, x_label)
        label_logits = ops.affine(
            ops.concat_cols([s_label, c_i, prev_note_e, pitch_e, duration_e]),
            self.head_label_w, self.head_label_b)
        if forced is not None:
            loss, probs["label"] = ops.softmax_cross_entropy(label_logits, forced[2])
            losses["label"] = loss
            label_id = forced[2]
        else:
            probs["label"] = ops.stable_softmax(label_logits.data[0])
            if pitch_id in rest_pitch_ids:
                label_choices = [0]
            else:
                label_choices = allowed_label if allowed_label is not None else [0, 1]
            label_id = _choose_id(probs["label"], label_choices, policy, rng, temperature)

        new_state = DecoderState(
            s_pitch=s_pitch,
            s_duration=s_duration,
            s_label=s_label,
            combined=ops.concat_cols([s_pitch, s_duration, s_label]),
            prev_context=c_i,
            prev_pitch=pitch_id,
            prev_duration=duration_id,
            prev_label=label_id,
            label_count=state.label_count + (1 if label_id == 1 else 0),
            step=state.step + 1,
        )
        return StepResult(
            state=new_state, probs=probs, losses=losses,
            emitted=(pitch_id, duration_id, label_id), j=j,
            context_alpha=context_alpha, lyric_alpha=lyric_alpha)

    # -- losses -------------------------------------------------------------------
    def teacher_forcing_loss(self, triple: EncodedTriple) -> TeacherForcingResult:
        """Sum of the three heads' negative log likelihoods over the gold line."""
        lyrics = self.encode_lyrics(triple.syllables, triple.phonetics)
        context = self.encode_context(
            triple.context_pitch, triple.context_duration, triple.context_label)
        state = self.init_decoder(context)
        n = len(triple.syllables)
        terms: list[Tensor] = []
        nll = {"pitch": 0.0, "duration": 0.0, "label": 0.0}
        j_trace = []
        for i in range(len(triple.target_pitch)):
            forced = (triple.target_pitch[i], triple.target_duration[i], triple.target_label[i])
            result = self.decode_step(state, lyrics, context, n, forced=forced)
            for attr in ("pitch", "duration", "label"):
                term = result.losses[attr]
                terms.append(term)
                nll[attr] += term.item()
            j_trace.append(result.j)
            state = result.state
        total = ops.sum_all(ops.stack_rows(terms))
        return TeacherForcingResult(
            loss=total, nll=nll, note_count=len(triple.target_pitch), j_trace=j_trace)

    # -- generation -----------------------------------------------------------------
    def generate_line(self, vocab: Vocabulary, syllables: list[Syllable],
                      context_notes: list[NoteEvent], policy: str = "greedy",
                      max_len: Optional[int] = None, rng: Optional[random.Random] = None,
                      temperature: float = 1.0, collect_trace: bool = False,
                      alpha_check=None):
        """Generate an aligned melody line for the given syllables.

        Decoding stops once every syllable's group is closed. If the length
        cap (max_note_factor * |syllables| by default) is reached first, the
        remaining syllables are force-closed with label-1 notes drawn from the
        head argmaxes, so the output always satisfies the alignment invariant.
        """
        if not syllables:
            raise ValueError("generate_line requires at least one syllable")
        n = len(syllables)
        cap = max_len if max_len is not None else self.config.max_note_factor * n
        if cap < n:
            raise ValueError(f"max_len {cap} cannot cover {n} syllables")
        window = self.config.context_window
        context_notes = list(context_notes)[-window:] if window > 0 else []

        lyrics = self.encode_lyrics(
            [vocab.syllable_id(s.surface) for s in syllables],
            [vocab.phonetic_id(s.phonetic) for s in syllables])
        context = self.encode_context(
            [vocab.pitch_id(m.pitch) for m in context_notes],
            [vocab.duration_id(m.duration) for m in context_notes],
            [m.label for m in context_notes])
        state = self.init_decoder(context)

        pitch_ids = vocab.real_pitch_ids(include_rest=True)
        pitch_ids_no_rest = vocab.real_pitch_ids(include_rest=False)
        duration_ids = vocab.real_duration_ids()
        rest_ids = frozenset(set(pitch_ids) - set(pitch_ids_no_rest))
        trace = LineTrace() if collect_trace else None

        notes: list[NoteEvent] = []
        while state.label_count < n:
            closing = len(notes) >= cap
            result = self.decode_step(
                state, lyrics, context, n,
                policy="greedy" if closing else policy,
                rng=rng, temperature=temperature,
                allowed_pitch=pitch_ids_no_rest if closing else pitch_ids,
                allowed_duration=duration_ids,
                allowed_label=[1] if closing else [0, 1],
                rest_pitch_ids=rest_ids)
            pitch_id, duration_id, label_id = result.emitted
            notes.append(NoteEvent(
                vocab.pitch_token(pitch_id), vocab.duration_token(duration_id), label_id))
            if trace is not None:
                trace.j.append(result.j)
                trace.context_alpha.append(
                    None if result.context_alpha is None else result.context_alpha.tolist())
                trace.lyric_alpha.append(
                    None if result.lyric_alpha is None else result.lyric_alpha.tolist())
            if alpha_check is not None:
                alpha_check(result.context_alpha, result.lyric_alpha)
            state = result.state

        line = AlignedLine(syllables, notes)
        report = validate_alignment(line)
        assert report.ok, f"generated line violates alignment: {report.problems}"
        if collect_trace:
            return line, trace
        return line

    def compose_song(self, vocab: Vocabulary, lyric_lines: list[list[Syllable]],
                     song_id: str = "generated", policy: str = "greedy",
                     rng: Optional[random.Random] = None,
                     temperature: float = 1.0) -> Song:
        """Generate a whole song line by line, feeding generated melody forward."""
        if not lyric_lines:
            raise ValueError("compose_song requires at least one lyric line")
        window = self.config.context_window
        history: list[NoteEvent] = []
        lines = []
        for syllables in lyric_lines:
            line = self.generate_line(
                vocab, syllables, history[-window:] if window > 0 else [],
                policy=policy, rng=rng, temperature=temperature)
            lines.append(line)
            history.extend(line.notes)
        return Song(song_id, "C", 60, lines)
