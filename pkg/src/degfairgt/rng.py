"""Seeded randomness built on the counter-based Philox generator.

All stochastic pieces of the pipeline (Gumbel noise, dropout masks, split
draws, graph synthesis) derive their streams from here, so a fixed master
seed pins every draw bit-for-bit regardless of how the work is scheduled.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["derive_seed", "generator", "uniform", "gumbel_noise"]

# Keep uniform draws strictly inside (0, 1) so -log(-log(u)) stays finite.
_U_FLOOR = 1e-12


def _as_entropy(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part)
    if isinstance(part, str):
        return int.from_bytes(hashlib.sha256(part.encode()).digest()[:8], "little")
    raise TypeError(f"seed parts must be int or str, got {type(part).__name__}")


def derive_seed(*parts) -> int:
    """Deterministically fold seed components (ints or tags) into one u64."""
    ss = np.random.SeedSequence([_as_entropy(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def generator(*parts) -> np.random.Generator:
    ss = np.random.SeedSequence([_as_entropy(p) for p in parts])
    return np.random.Generator(np.random.Philox(ss))


def uniform(shape, *parts) -> np.ndarray:
    u = generator(*parts).random(shape)
    return np.clip(u, _U_FLOOR, 1.0 - _U_FLOOR)


def gumbel_noise(shape, *parts) -> np.ndarray:
    """I.i.d. standard Gumbel samples g = -log(-log(u)), u ~ U(0,1).

    Draw i of a given (seed parts, shape) call is reproducible; the
    uniforms are clamped away from {0, 1} so every sample is finite.
    """
    return -np.log(-np.log(uniform(shape, *parts)))
