import numpy as np
import pytest

from activescan import _kernels


def test_backend_reports_itself():
    assert _kernels.BACKEND in ("cython", "numpy")


@pytest.mark.skipif(_kernels.BACKEND != "cython", reason="compiled backend unavailable")
def test_compiled_matches_numpy_fallback(rng):
    for n_p in (2, 4, 7):
        p = np.ascontiguousarray(rng.standard_normal((n_p, 333)))
        fast = _kernels.pairwise_entropy(p, 0.04)
        slow = _kernels.pairwise_entropy_numpy(p, 0.04)
        assert np.allclose(fast, slow, atol=1e-12)


def test_fallback_forced_by_env(rng, monkeypatch):
    # the selector honors ACTIVESCAN_NO_EXT at import time
    import importlib
    import activescan._kernels as k

    monkeypatch.setenv("ACTIVESCAN_NO_EXT", "1")
    reloaded = importlib.reload(k)
    try:
        assert reloaded.BACKEND == "numpy"
        p = rng.standard_normal((3, 50))
        assert np.allclose(reloaded.pairwise_entropy(p, 0.1),
                           reloaded.pairwise_entropy_numpy(p, 0.1))
    finally:
        monkeypatch.delenv("ACTIVESCAN_NO_EXT")
        importlib.reload(k)
