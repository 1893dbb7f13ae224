"""Time the numba kernels against their pure-numpy fallbacks.

Run ``python3 benchmarks/bench_kernels.py``; each line reports the median
wall time of both backends, the speedup and the largest relative difference
between their outputs.
"""

import argparse
import time

import numpy as np

from tricrit import _accel
from tricrit.mc_walk import simulate
from tricrit.model import ModelParams
from tricrit.potential import Potential, rule_sums
from tricrit.specfun import bessel_ihat_scaled


def _median_time(fn, repeat):
    fn()  # warm-up (compilation, caches)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def _max_rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def cases(scale):
    z = np.geomspace(1e-6, 1e4, int(200_000 * scale))
    yield "bessel_ihat n=0..2", lambda: np.stack([bessel_ihat_scaled(n, z) for n in range(3)])

    pot = Potential(ModelParams(1.0, -2.7, 1.2))
    ts = np.linspace(0.0, 60.0, int(4000 * scale))
    nodes, base = pot.rule.nodes, pot.base
    yield (f"rule_sums {ts.size} t x {nodes.size} s",
           lambda: (lambda r: r[1] * np.exp(r[0]))(rule_sums(ts, nodes, base)))

    T = np.linspace(0.0, 20.0, 2001)
    n = int(20_000 * scale)
    yield (f"mc simulate N=3 n={n}",
           lambda: simulate(ModelParams(1.0, 0.0, 1.0), 3, T, n, seed=1).I)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    args = ap.parse_args(argv)
    print(f"{'kernel':<36} {'numba s':>10} {'numpy s':>10} {'speedup':>8} {'max rel diff':>13}")
    for name, fn in cases(args.scale):
        with _accel.backend("numba"):
            t_nb = _median_time(fn, args.repeat)
            out_nb = fn()
        with _accel.backend("numpy"):
            t_np = _median_time(fn, args.repeat)
            out_np = fn()
        print(f"{name:<36} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>8.1f} "
              f"{_max_rel(out_nb, out_np):>13.2e}")


if __name__ == "__main__":
    main()
