"""Deterministic labeled random streams.

Every stochastic decision in the pipeline draws from its own substream so
that adding or removing a draw in one place never shifts the values seen
anywhere else. Streams are counter-based Philox-4x64 generators (10
rounds, as implemented by ``numpy.random.Philox``); doubles come from the
top 53 bits of each 64-bit word, so identical keys give identical draws on
every platform.

Keys are derived by hashing the label tuple: the first 16 bytes of
``SHA-256("<seed>:<label>:<label>...")`` become the 128-bit Philox key.
Per-scene seeds use the same construction over ``("scene", global_seed,
scene_index)`` truncated to 64 bits.
"""

import hashlib

import numpy as np


def derive_seed(global_seed: int, scene_index: int) -> int:
    """64-bit per-scene seed: first 8 bytes of SHA-256 over the pair."""
    h = hashlib.sha256(f"scene:{global_seed}:{scene_index}".encode()).digest()
    return int.from_bytes(h[:8], "big")


def stream(seed: int, *labels) -> np.random.Generator:
    """Independent generator for the substream named by (seed, *labels)."""
    text = ":".join([str(seed)] + [str(x) for x in labels])
    h = hashlib.sha256(text.encode()).digest()
    key = int.from_bytes(h[:16], "big")
    return np.random.Generator(np.random.Philox(key=key))
