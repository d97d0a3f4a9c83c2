"""Hot-kernel backend selection.

Prefers the compiled Cython extension; falls back to the vectorized numpy
implementation when the extension is missing or when the environment
variable ``ACTIVESCAN_NO_EXT`` is set (used by the benchmark to compare
both backends).
"""

import os

from . import _fallback

if os.environ.get("ACTIVESCAN_NO_EXT"):
    _impl = _fallback
    BACKEND = "numpy"
else:
    try:
        from . import _entropy as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "numpy"

pairwise_entropy = _impl.pairwise_entropy
pairwise_entropy_numpy = _fallback.pairwise_entropy

__all__ = ["pairwise_entropy", "pairwise_entropy_numpy", "BACKEND"]
