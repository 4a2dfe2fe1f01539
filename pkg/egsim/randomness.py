"""Named, stable random streams derived from one master seed.

Streams are keyed by a component name (``"sensor:A"``, ``"overlay:EG-A->EG-B"``)
through ``crc32`` rather than ``hash()`` so they survive interpreter restarts
and worker processes, and adding a component never shifts another's stream.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def stable_hash(name: str) -> int:
    """Process-independent 32-bit hash of a component name."""
    return zlib.crc32(name.encode("utf-8"))


def _entropy(seed: int) -> int:
    return int(seed) & _MASK64


def substream(seed: int, name: str) -> np.random.Generator:
    """Return the generator for component ``name`` under master ``seed``."""
    ss = np.random.SeedSequence(entropy=_entropy(seed), spawn_key=(stable_hash(name),))
    return np.random.default_rng(ss)


def keyed_normal(seed: int, *keys: int) -> float:
    """A standard normal draw that depends only on ``seed`` and ``keys``.

    Stateless: the same arguments always give the same value, whatever was
    drawn before.
    """
    words = [_entropy(seed)] + [int(k) & 0xFFFFFFFF for k in keys]
    return float(np.random.default_rng(np.random.SeedSequence(words)).standard_normal())
