"""Splittable, counter-based random streams.

Every random draw in the package is keyed by a path (root_seed, part, part, ...)
whose parts are nonnegative ints, short role strings, or floats. Equal paths
give bitwise-identical streams; distinct paths give independent streams.
Philox is counter-based, so streams never depend on draw order elsewhere.
"""

import zlib

import numpy as np


def _encode(part):
    # bool is an int subclass; treating True/False as 1/0 would invite silent
    # path collisions, so reject it outright.
    if isinstance(part, bool):
        raise TypeError("seed path parts must be ints, floats, or strings")
    if isinstance(part, (int, np.integer)):
        part = int(part)
        if part < 0:
            raise ValueError("seed path ints must be nonnegative")
        return part
    if isinstance(part, (float, np.floating)):
        return zlib.crc32(repr(float(part)).encode("ascii"))
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    raise TypeError(f"unsupported seed path part: {part!r}")


def stream(seed, *path):
    """Return a numpy Generator for the stream keyed by (seed, *path)."""
    entropy = [_encode(seed)] + [_encode(p) for p in path]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def subseed(seed, *path):
    """Derive a fresh root seed from (seed, *path), for handing a namespaced
    seed to a component that builds its own streams."""
    entropy = [_encode(seed)] + [_encode(p) for p in path]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])
