"""Compare the compiled stencil kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--sizes 64 128 256] [--repeat 20]

Also times one coupled AGG step with each backend, where the sparse
factorizations dominate and the kernel choice matters much less.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from aggflow import kernels


def _args(n: int, rng: np.random.Generator):
    h = 1.0 / n
    u = rng.standard_normal((n + 1, n))
    w = rng.standard_normal((n, n + 1))
    u[0], u[-1], w[:, 0], w[:, -1] = 0, 0, 0, 0
    c = rng.standard_normal((n, n))
    ku, kw = rng.uniform(0.5, 2, (n + 1, n)), rng.uniform(0.5, 2, (n, n + 1))
    eta = rng.uniform(0.5, 2, (n, n))
    eta_n = np.ascontiguousarray(kernels.eta_to_nodes(eta))
    return {
        "div_faces": (u, w, h, h),
        "laplace_neumann": (c, ku, kw, h, h),
        "skew_convection": (u, w, u, w, h, h),
        "strain_dissipation": (u, w, eta, eta_n, h, h),
        "viscous_apply": (u, w, eta, eta_n, h, h),
    }


def bench_kernels(sizes, repeat: int) -> None:
    if kernels.compiled is None:
        print("compiled extension not built; only the numpy backend is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<20s} {'n':>5s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for n in sizes:
        for name, args in _args(n, rng).items():
            t_py = min(timeit.repeat(lambda: getattr(kernels.python, name)(*args),
                                     number=1, repeat=repeat)) * 1e3
            if kernels.compiled is not None:
                t_c = min(timeit.repeat(lambda: getattr(kernels.compiled, name)(*args),
                                        number=1, repeat=repeat)) * 1e3
                print(f"{name:<20s} {n:5d} {t_py:12.4f} {t_c:12.4f} {t_py / t_c:8.2f}")
            else:
                print(f"{name:<20s} {n:5d} {t_py:12.4f} {'-':>12s} {'-':>8s}")


_STEP_SNIPPET = """
import time
import numpy as np
from aggflow import kernels
from aggflow.grid import MacGrid
from aggflow.model import ModelParams
from aggflow.scenarios import spinodal
from aggflow.stepper import StepperConfig, initial_state, step
g = MacGrid(32, 32, 6.4, 6.4)
p = ModelParams(rho1=1.0, rho2=3.0)
s = initial_state(g, p, spinodal(g, seed=1, amplitude=0.3))
cfg = StepperConfig(h=1e-3)
step(g, p, s, cfg)
t = time.perf_counter()
for _ in range(5):
    s, _ = step(g, p, s, cfg)
print(kernels.BACKEND, (time.perf_counter() - t) / 5)
"""


def bench_step() -> None:
    print("\ncoupled AGG step, 32x32 (mean of 5 steps)")
    for pure in ("0", "1"):
        env = dict(os.environ, AGGFLOW_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", _STEP_SNIPPET], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        print(f"  {out[0]:<8s} {float(out[1]) * 1e3:9.1f} ms")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--no-step", action="store_true", help="skip the coupled-step timing")
    a = ap.parse_args()
    bench_kernels(a.sizes, a.repeat)
    if not a.no_step:
        bench_step()


if __name__ == "__main__":
    main()
