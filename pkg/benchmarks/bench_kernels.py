"""Compiled vs numpy-fallback kernels, plus one training epoch under each backend.

    python benchmarks/bench_kernels.py [--repeat 20]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from jitterloss import _fallback

try:
    from jitterloss import _kernels
except ImportError:
    _kernels = None

EPOCH_SNIPPET = """
import time
from jitterloss import data, kernels, nn, trainer
from jitterloss.losses import Flooding
from jitterloss.samplers import RngStream
ds = data.synthetic_blobs(1000, 20, 4, 3.0, 0.2, RngStream(0, 3))
model = nn.init_mlp([20, 64, 32, 4], RngStream(0, 0))
opt = trainer.OptimizerConfig(batch_size={bs})
t = time.perf_counter()
trainer.run_training(model, ds, ds, Flooding(0.02), opt, {epochs}, 0)
print(kernels.BACKEND, (time.perf_counter() - t) / {epochs})
"""


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=10)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    r = np.random.default_rng(0)
    impls = [("python", _fallback)] + ([("compiled", _kernels)] if _kernels else [])

    print(f"{'kernel':<34}" + "".join(f"{n:>14}" for n, _ in impls))
    for shape in [(8, 20, 64), (128, 20, 64), (128, 64, 32), (1000, 64, 32), (256, 784, 128)]:
        n, m, p = shape
        a, b = r.normal(size=(n, m)), r.normal(size=(m, p))
        a[a < 0] = 0.0  # ReLU-like sparsity
        row = [bench(lambda: impl.matmul(a, b), args.repeat) for _, impl in impls]
        print(f"{'matmul ' + str(shape):<34}" + "".join(f"{t * 1e6:>12.1f}us" for t in row))

    loss, alpha = r.exponential(0.05, 1_000_000), r.normal(0, 0.1, 1_000_000)
    row = [bench(lambda: impl.jitter_transform_many(loss, alpha), args.repeat) for _, impl in impls]
    print(f"{'jitter_transform_many 1e6':<34}" + "".join(f"{t * 1e6:>12.1f}us" for t in row))
    row = [bench(lambda: impl.positive_part_mean(alpha), args.repeat) for _, impl in impls]
    print(f"{'positive_part_mean 1e6':<34}" + "".join(f"{t * 1e6:>12.1f}us" for t in row))

    print()
    for bs in (8, 128):
        for backend in [n for n, _ in impls]:
            env = dict(os.environ, JITTERLOSS_BACKEND=backend)
            code = EPOCH_SNIPPET.format(bs=bs, epochs=args.epochs)
            res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
            name, sec = res.stdout.split()
            print(f"epoch (n=1000, MLP 20-64-32-4, batch {bs:>3}) [{name}]: {float(sec) * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
