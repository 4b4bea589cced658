"""Streaming moments over disorder samples with a deterministic reduction order.

Samples are grouped into fixed-size blocks. Each block is accumulated
sequentially (Welford), and block results are merged along a fixed binary
tree (Chan et al.). The block layout depends only on the sample count, so the
result is bitwise independent of how many worker threads evaluate blocks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

BLOCK_SIZE = 32


@dataclass
class RunningMoments:
    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def empty(cls, shape=()) -> "RunningMoments":
        return cls(0, np.zeros(shape), np.zeros(shape))

    def push(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if self.count == 0:
            self.mean = np.zeros_like(x)
            self.m2 = np.zeros_like(x)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def merge(self, other: "RunningMoments") -> "RunningMoments":
        if other.count == 0:
            return RunningMoments(self.count, self.mean.copy(), self.m2.copy())
        if self.count == 0:
            return RunningMoments(other.count, other.mean.copy(), other.m2.copy())
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / n)
        return RunningMoments(n, mean, m2)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased sample variance."""
        if self.count < 2:
            return np.full_like(self.mean, np.nan)
        return self.m2 / (self.count - 1)

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(self.variance / self.count)


def tree_reduce(parts: list[RunningMoments]) -> RunningMoments:
    parts = list(parts)
    if not parts:
        return RunningMoments.empty()
    while len(parts) > 1:
        nxt = [parts[i].merge(parts[i + 1]) for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def streamed_moments(sample_fn: Callable[[int], np.ndarray], n_samples: int, *,
                     threads: int = 1, block_size: int = BLOCK_SIZE,
                     progress: Callable[[int], None] | None = None) -> RunningMoments:
    """Mean and variance of ``sample_fn(i)`` over ``i = 0..n_samples-1``."""
    blocks = [range(s, min(s + block_size, n_samples)) for s in range(0, n_samples, block_size)]

    def run(block):
        rm = RunningMoments.empty()
        for i in block:
            rm.push(sample_fn(i))
        if progress is not None:
            progress(len(block))
        return rm

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return tree_reduce(parts)
