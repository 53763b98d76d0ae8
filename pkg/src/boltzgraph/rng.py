"""Counter-based random streams.

Every stochastic component draws from its own Philox stream keyed by
(master_seed, purpose_tag, replica_id), so replicas can run in any order or
process and still produce bitwise-identical output.  Normals for the
disorder are generated by Box-Muller on Philox uniforms, which pins the
exact bit pattern to the (seed, site index) key independent of library
internals.
"""

from __future__ import annotations

import numpy as np

_TAGS = {}


def _tag_int(tag: str) -> int:
    # stable, order-independent tag hash (fnv-1a, 32 bit)
    h = 2166136261
    for b in tag.encode():
        h = ((h ^ b) * 16777619) & 0xFFFFFFFF
    return h


def stream(master_seed: int, tag: str, replica: int = 0) -> np.random.Generator:
    """Independent Generator for (master_seed, tag, replica)."""
    ss = np.random.SeedSequence(entropy=int(master_seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(_tag_int(tag), int(replica)))
    return np.random.Generator(np.random.Philox(ss))


def box_muller_normals(master_seed: int, tag: str, replica: int, n: int) -> np.ndarray:
    """n standard normals via Box-Muller on the keyed Philox stream.

    The stream is consumed in a fixed order (2*ceil(n/2) uniforms), so the
    output is a pure function of the key.
    """
    g = stream(master_seed, tag, replica)
    m = (n + 1) // 2
    u1 = g.random(m)
    u2 = g.random(m)
    # u1 in [0,1): flip to (0,1] so log is finite
    r = np.sqrt(-2.0 * np.log(1.0 - u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:n]
