import numpy as np
import pytest

from spherecue import _kernels_py as pure
from spherecue import kernels


def _compiled_or_skip():
    try:
        from spherecue import _speckern
    except ImportError:
        pytest.skip("compiled kernel extension not built")
    return _speckern


def test_backend_selected():
    assert kernels.BACKEND in ("compiled", "python")


def test_backend_parity_bessel():
    comp = _compiled_or_skip()
    rng = np.random.default_rng(0)
    for _ in range(100):
        lmax = int(rng.integers(0, 48))
        x = float(10 ** rng.uniform(-3, 1.6))
        jp_a = pure.sph_jn_arr(lmax, x)
        jp_b = comp.sph_jn_arr(lmax, x)
        assert np.array_equal(jp_a[0], jp_b[0])
        assert np.array_equal(jp_a[1], jp_b[1])
        yp_a = pure.sph_yn_arr(lmax, x)
        yp_b = comp.sph_yn_arr(lmax, x)
        assert np.array_equal(yp_a[0], yp_b[0])
        assert np.array_equal(yp_a[1], yp_b[1])


def test_backend_parity_harmonics():
    comp = _compiled_or_skip()
    rng = np.random.default_rng(1)
    for _ in range(60):
        lmax = int(rng.integers(0, 25))
        th = rng.uniform(0, np.pi)
        ph = rng.uniform(0, 2 * np.pi)
        for a, b in zip(pure.harm_row_grad(lmax, th, ph),
                        comp.harm_row_grad(lmax, th, ph)):
            assert np.max(np.abs(a - b)) < 1e-15


def test_pure_python_env_override(monkeypatch):
    import importlib
    import spherecue.kernels as km

    monkeypatch.setenv("SPHERECUE_PURE_PYTHON", "1")
    importlib.reload(km)
    assert km.BACKEND == "python"
    monkeypatch.delenv("SPHERECUE_PURE_PYTHON")
    importlib.reload(km)
