"""Benchmark the compiled kernel extension against the pure NumPy twin.

Times the recurrence kernels (the hot inner loop of cue synthesis) and an
end-to-end localization descent with each backend.  Run from the repo
root:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np


def _time(fn, *args, repeat=2000):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernels():
    from spherecue import _kernels_py as pure

    try:
        from spherecue import _speckern as comp
    except ImportError:
        comp = None
        print("compiled extension not built; showing pure-Python timings only")

    cases = [
        ("sph_jn_arr(lmax=20, x=4.2)", "sph_jn_arr", (20, 4.2), 4000),
        ("sph_yn_arr(lmax=20, x=4.2)", "sph_yn_arr", (20, 4.2), 4000),
        ("norm_legendre_grad(lmax=17)", "norm_legendre_grad", (17, 0.3, np.sqrt(1 - 0.09)), 2000),
        ("harm_row_grad(lmax=17)", "harm_row_grad", (17, 1.1, 2.2), 2000),
    ]
    print(f"{'kernel':36s} {'pure':>10s} {'compiled':>10s} {'speedup':>8s}")
    for label, name, args, repeat in cases:
        t_pure = _time(getattr(pure, name), *args, repeat=repeat)
        if comp is not None:
            t_comp = _time(getattr(comp, name), *args, repeat=repeat)
            print(f"{label:36s} {t_pure * 1e6:9.1f}u {t_comp * 1e6:9.1f}u "
                  f"{t_pure / t_comp:7.1f}x")
        else:
            print(f"{label:36s} {t_pure * 1e6:9.1f}u {'-':>10s} {'-':>8s}")


def bench_pipeline():
    import importlib
    import os

    def run_with_backend(force_pure):
        if force_pure:
            os.environ["SPHERECUE_PURE_PYTHON"] = "1"
        else:
            os.environ.pop("SPHERECUE_PURE_PYTHON", None)
        import spherecue.kernels

        importlib.reload(spherecue.kernels)
        import spherecue.field
        import spherecue.localize

        importlib.reload(spherecue.field)
        importlib.reload(spherecue.localize)
        from spherecue.localize import OptimizerConfig, localize, observe
        from spherecue.field import CueSynthesizer
        from spherecue.scene import default_scene

        synth = CueSynthesizer(default_scene())
        obs = observe(synth.cues(1.9, 0.8))
        cfg = OptimizerConfig(max_iters=50, patience=50, starts=((1.2, 1.4),))
        t0 = time.perf_counter()
        localize(obs, synth, cfg)
        per_run = time.perf_counter() - t0
        t0 = time.perf_counter()
        for _ in range(200):
            synth.cues_and_grad(1.3, 2.1)
        per_grad = (time.perf_counter() - t0) / 200
        return spherecue.kernels.BACKEND, per_run, per_grad

    print()
    print(f"{'pipeline (50-iter descent / cue grad)':36s} {'descent':>10s} {'cue+grad':>10s}")
    for force_pure in (True, False):
        backend, per_run, per_grad = run_with_backend(force_pure)
        print(f"{'backend = ' + backend:36s} {per_run * 1e3:8.1f}ms {per_grad * 1e6:8.0f}us")
    os.environ.pop("SPHERECUE_PURE_PYTHON", None)


if __name__ == "__main__":
    bench_kernels()
    bench_pipeline()
