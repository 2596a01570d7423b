"""Deterministic stream-splitting on top of the Philox counter-based generator.

Every stochastic routine in this package draws from an explicitly keyed
Philox-4x64 stream.  The 128-bit key is (seed, purpose << 48 | index), so

  * streams never collide across purposes,
  * per-graph streams depend only on (seed, graph index): the first m graphs
    sampled under a seed are a bit-exact prefix of any longer run, and
  * work can be farmed out to any number of workers without changing output.

Within a stream the draw order is fixed and documented by the caller
(e.g. loadings first, then one uniform per upper-triangle entry in
row-major order).
"""

import numpy as np

# Purpose tags for stream keys.  Never reuse a value.
GRAPH = 1        # per-graph sampling (index = graph index)
EMBED_INIT = 2   # random initializations (index = dimension << 20 | restart)
KMEANS = 3       # k-means++ restarts (index = restart)
GENERIC = 4      # one-off draws in experiments (index = caller-chosen)

_MAX_U64 = 2**64


def stream(seed, purpose, index=0):
    """Return a fresh Generator for the (seed, purpose, index) stream."""
    if not 0 <= seed < _MAX_U64:
        raise ValueError(f"seed must be a u64, got {seed}")
    if not 0 <= index < 2**48:
        raise ValueError(f"stream index out of range: {index}")
    key = np.array([seed, (purpose << 48) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def categorical(rng, weights, size):
    """Draw `size` indices from a categorical distribution.

    Uses inverse-CDF on a cumulative table rather than Generator.choice so
    the draw order is a plain uniform block, stable across numpy versions.
    """
    edges = np.cumsum(weights)
    edges[-1] = max(edges[-1], 1.0)  # guard rounding at the top bin
    return np.searchsorted(edges, rng.random(size), side="right")
