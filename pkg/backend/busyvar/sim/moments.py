"""Streaming central moments up to order four.

Batches are reduced with numpy and merged with the pairwise update for central
moment sums, so the result depends only on the batch sequence and merge order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike


@dataclass(slots=True)
class StreamingMoments:
    """Count, mean and central moment sums ``M_k = sum (x - mean) ** k``."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0

    @classmethod
    def from_batch(cls, batch: ArrayLike) -> StreamingMoments:
        values = np.asarray(batch, dtype=np.float64).ravel()
        if values.size == 0:
            return cls()
        mean = float(np.mean(values))
        centred = values - mean
        squared = centred * centred
        return cls(
            n=int(values.size),
            mean=mean,
            m2=float(np.sum(squared)),
            m3=float(np.dot(squared, centred)),
            m4=float(np.dot(squared, squared)),
        )

    def push(self, batch: ArrayLike) -> None:
        """Fold a batch of observations into the running moments."""
        self.merge(StreamingMoments.from_batch(batch))

    def merge(self, other: StreamingMoments) -> None:
        """Fold another accumulator into this one."""
        if other.n == 0:
            return
        if self.n == 0:
            self.n, self.mean = other.n, other.mean
            self.m2, self.m3, self.m4 = other.m2, other.m3, other.m4
            return
        na, nb = float(self.n), float(other.n)
        n = na + nb
        delta = other.mean - self.mean
        delta_n = delta / n
        m2 = self.m2 + other.m2 + delta * delta_n * na * nb
        m3 = (
            self.m3
            + other.m3
            + delta * delta_n * delta_n * na * nb * (na - nb)
            + 3.0 * delta_n * (na * other.m2 - nb * self.m2)
        )
        m4 = (
            self.m4
            + other.m4
            + delta * delta_n**3 * na * nb * (na * na - na * nb + nb * nb)
            + 6.0 * delta_n * delta_n * (na * na * other.m2 + nb * nb * self.m2)
            + 4.0 * delta_n * (na * other.m3 - nb * self.m3)
        )
        self.mean += delta_n * nb
        self.n += other.n
        self.m2, self.m3, self.m4 = m2, m3, m4

    @property
    def variance(self) -> float:
        """Unbiased variance (``n - 1`` denominator)."""
        if self.n < 2:
            return 0.0
        return max(self.m2 / (self.n - 1), 0.0)

    @property
    def central_moment4(self) -> float:
        return self.m4 / self.n if self.n else 0.0

    @property
    def standard_error(self) -> float:
        if self.n < 2:
            return math.inf
        return math.sqrt(self.variance / self.n)


__all__ = ["StreamingMoments"]
