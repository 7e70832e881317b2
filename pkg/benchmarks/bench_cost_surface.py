"""
Compare the compiled and NumPy cost-surface kernels on the acceptance fixture.

    python benchmarks/bench_cost_surface.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from memscal import _kernels_py
from memscal.calibration import SearchSpec
from memscal.fixtures import fixture_pattern, fixture_scene
from memscal.simulator import MisalignmentSpec, NoiseSpec, simulate_frames

try:
    from memscal import _ckernels
except ImportError:
    _ckernels = None

CASES = {
    "calibrate 50x11": SearchSpec.around(450, m_max=49, k_halfwidth=5),
    "track 401x1": SearchSpec((0, 400), (452, 452)),
    "wide 200x41": SearchSpec.around(450, m_max=199, k_halfwidth=20),
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    pattern = fixture_pattern()
    frame = simulate_frames(fixture_scene(), pattern, MisalignmentSpec(37, 0, 452),
                            NoiseSpec(0.0, 0.02, 0.01, 1), 1).frames[0]
    print(f"frame: {frame.size} pulses, serpentine={pattern.serpentine}")
    print(f"{'case':<18}{'cells':>8}{'numpy [ms]':>13}{'cython [ms]':>13}{'speedup':>9}")
    for name, search in CASES.items():
        ms, ks = search.m_values, search.k_values
        t_py, (s_py, p_py) = best_of(lambda: _kernels_py.cost_surface(frame, ms, ks, True), args.repeat)
        if _ckernels is None:
            print(f"{name:<18}{ms.size * ks.size:>8}{t_py * 1e3:>13.1f}{'n/a':>13}{'':>9}")
            continue
        t_c, (s_c, p_c) = best_of(lambda: _ckernels.cost_surface(frame, ms, ks, True), args.repeat)
        assert np.array_equal(p_py, p_c) and np.allclose(s_py, s_c, rtol=1e-12)
        print(f"{name:<18}{ms.size * ks.size:>8}{t_py * 1e3:>13.1f}{t_c * 1e3:>13.1f}{t_py / t_c:>8.1f}x")


if __name__ == "__main__":
    main()
