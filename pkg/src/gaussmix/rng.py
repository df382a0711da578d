"""Reproducible, splittable random streams.

Every randomized routine takes an :class:`RngStream` and draws each random
object from its own sub-stream, so adding or removing a draw in one place never
shifts the draws made elsewhere. Sub-streams are Philox (counter-based)
generators keyed by ``(seed, stream_id, substream)``.

Sub-stream assignment (fixed):

    SKETCH       the Gaussian sketch S
    NOISE        the additive noise xi_1 on the sketched matrix
    EIGEN        the normal draw z used by the private minimum-eigenvalue release
    NOISE_AUX    secondary additive noise (xi_2 in the Sheffet baselines, the
                 response-noise vector in AdaSSP)
    THRESHOLD    Laplace draw of the Sheffet threshold test
    MATRIX_NOISE symmetric noise matrix of AdaSSP
    PERTURB      linear perturbation vector of objective perturbation
    DATA         synthetic data generation
    SPLIT        train/test shuffling
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SKETCH = 0
NOISE = 1
EIGEN = 2
NOISE_AUX = 3
THRESHOLD = 4
MATRIX_NOISE = 5
PERTURB = 6
DATA = 7
SPLIT = 8

_MAX_SEED = 2**64


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise ValueError(f"stream_id must be nonnegative, got {self.stream_id}")

    def generator(self, substream: int) -> np.random.Generator:
        """Fresh generator for one sub-stream; identical inputs give identical draws."""
        seq = np.random.SeedSequence([int(self.seed), int(self.stream_id), int(substream)])
        return np.random.Generator(np.random.Philox(seq))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def as_stream(rng) -> RngStream:
    """Accept an RngStream or a plain integer seed."""
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError(f"expected RngStream or int seed, got {type(rng).__name__}")
