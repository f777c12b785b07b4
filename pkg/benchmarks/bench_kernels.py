"""Compare the numba kernels with the pure-numpy fallback.

The backend is fixed at import time, so each backend runs in its own
child process with NLPRENDER_BACKEND set.

    python benchmarks/bench_kernels.py [--size 256] [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best(fn, repeat):
    fn()  # warm up (numba compiles on first call)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def child(size, repeat):
    import nlprender
    from nlprender.dither import DitherConfig, greedy_dither, receptive_field_radius
    from nlprender.metric import Nlpd
    from nlprender.pyramid import build, collapse, default_n_levels

    rng = np.random.default_rng(0)
    S = rng.uniform(0.78, 16200, (size, size))
    I = rng.uniform(5, 300, (size, size))
    n = default_n_levels(S.shape)
    obj = Nlpd(S)
    small = S[:48, :48]
    init = rng.uniform(5, 300, small.shape)
    cfg = DitherConfig((5.0, 300.0), receptive_field_radius(3))
    out = {
        "backend": nlprender.BACKEND,
        "build+collapse": _best(lambda: collapse(build(I, n)), repeat),
        "nlpd": _best(lambda: obj(I), repeat),
        "nlpd+grad": _best(lambda: obj.value_and_grad(I), repeat),
        "dither 48x48 windowed": _best(lambda: greedy_dither(small, cfg, continuous_init=init), 1),
    }
    print(json.dumps(out))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    a = ap.parse_args()
    if a.child:
        child(a.size, a.repeat)
        return

    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, NLPRENDER_BACKEND=backend)
        cmd = [sys.executable, __file__, "--child", "--size", str(a.size), "--repeat", str(a.repeat)]
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        results[backend] = json.loads(proc.stdout.strip().splitlines()[-1])

    if results["numba"]["backend"] != "numba":
        print("numba is not installed; both runs used numpy", file=sys.stderr)
    print(f"image {a.size}x{a.size}, best of {a.repeat}")
    print(f"{'kernel':<24}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for key in results["numba"]:
        if key == "backend":
            continue
        fast, slow = results["numba"][key], results["numpy"][key]
        print(f"{key:<24}{fast * 1e3:>12.2f}{slow * 1e3:>12.2f}{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
