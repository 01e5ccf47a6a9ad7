"""Compare the compiled kernel backend against the numpy fallback.

Times the recurrent-step kernels in isolation across sizes, then a full
teacher-forced loss + backprop through the tiny verification model, with each
backend. Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import argparse
import time

import numpy as np

from songwriter.corpus import EncodedTriple
from songwriter.model import ModelConfig, SongwriterModel
from songwriter.nn import kernels
from songwriter.nn.tensor import backward


def time_fn(fn, min_seconds=0.4):
    fn()  # warm up
    started = time.perf_counter()
    calls = 0
    while time.perf_counter() - started < min_seconds:
        fn()
        calls += 1
    return (time.perf_counter() - started) / calls


def kernel_case(backend, batch, input_size, hidden, dtype):
    rng = np.random.default_rng(0)

    def mat(rows, cols):
        return rng.normal(size=(rows, cols)).astype(dtype)

    x = mat(batch, input_size)
    h = mat(batch, hidden)
    weights = [mat(input_size, hidden), mat(hidden, hidden), mat(1, hidden)] * 3
    module = kernels.get_backend(backend)

    fwd = lambda: module.gru_forward(x, h, *weights)
    _, z, r, hc, rh = module.gru_forward(x, h, *weights)
    g = rng.normal(size=h.shape).astype(dtype)
    w_xz, w_hz, _, w_xr, w_hr, _, w_xh, w_hh, _ = weights
    bwd = lambda: module.gru_backward(
        g, x, h, z, r, hc, rh, w_xz, w_hz, w_xr, w_hr, w_xh, w_hh)
    return time_fn(fwd), time_fn(bwd)


def desk_scale_triple(rng):
    """A realistic training example: 10 syllables, 40 context notes, 20 targets."""
    labels = [0, 1] * 10  # alternating two-note groups

    def ids(high, count):
        return tuple(int(v) for v in rng.integers(2, high, size=count))

    return EncodedTriple(
        syllables=ids(20, 10), phonetics=ids(20, 10),
        context_pitch=ids(12, 40), context_duration=ids(5, 40),
        context_label=tuple(rng.integers(0, 2, size=40).tolist()),
        target_pitch=ids(12, 20), target_duration=ids(5, 20),
        target_label=tuple(labels))


def model_case(backend):
    kernels.use_backend(backend)
    config = ModelConfig(
        pitch_vocab=13, duration_vocab=5, syllable_vocab=22, phonetic_vocab=22,
        hidden_size=64, pitch_emb=32, duration_emb=16, label_emb=8,
        syllable_emb=32, phonetic_emb=16)
    model = SongwriterModel(config, seed=0)
    triple = desk_scale_triple(np.random.default_rng(1))

    def step():
        result = model.teacher_forcing_loss(triple)
        backward(result.loss)
        for p in model.params():
            p.zero_grad()

    return time_fn(step, min_seconds=1.0)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    args = parser.parse_args()
    dtype = np.dtype(args.dtype)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("note: compiled extension unavailable, timing numpy only")

    print(f"\nGRU kernel step ({args.dtype}), microseconds per call")
    header = f"{'batch':>5} {'input':>6} {'hidden':>6}"
    for b in backends:
        header += f" {b + ' fwd':>14} {b + ' bwd':>14}"
    print(header)
    for batch, input_size, hidden in [(1, 64, 32), (1, 384, 64), (1, 768, 256),
                                      (16, 384, 64), (64, 768, 256)]:
        row = f"{batch:>5} {input_size:>6} {hidden:>6}"
        for backend in backends:
            fwd, bwd = kernel_case(backend, batch, input_size, hidden, dtype)
            row += f" {fwd * 1e6:>14.1f} {bwd * 1e6:>14.1f}"
        print(row)

    print("\nEnd to end: teacher-forced loss + backprop, desk-scale example "
          "(hidden 64, 40-note context, 20 target notes)")
    times = {}
    original = kernels.backend_name()
    try:
        for backend in backends:
            times[backend] = model_case(backend)
            print(f"  {backend:>9}: {times[backend] * 1e3:.2f} ms")
    finally:
        kernels.use_backend(original)
    if len(times) == 2:
        print(f"  speedup: {times['numpy'] / times['compiled']:.2f}x")


if __name__ == "__main__":
    main()
