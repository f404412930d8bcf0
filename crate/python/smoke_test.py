"""Build the extension with cargo, import it and exercise the main entry points.

Usage: python3 python/smoke_test.py [--no-build]
"""

import math
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent
MHZ = 2 * math.pi * 1e6


def build():
    if "--no-build" not in sys.argv:
        subprocess.run(
            ["cargo", "build", "--release", "-p", "bec-memory-py", "--features", "extension-module"],
            cwd=ROOT,
            check=True,
        )
    lib = ROOT / "target" / "release" / "libbec_memory_py.so"
    dest = pathlib.Path(tempfile.mkdtemp()) / "bec_memory_py.so"
    shutil.copy(lib, dest)
    sys.path.insert(0, str(dest.parent))


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    build()
    import bec_memory_py as bm

    s = bm.StokesVector.from_intensities(1.0, 0.0, 0.5, 0.5, 0.5, 0.5)
    assert s.as_tuple() == (1.0, 1.0, 0.0, 0.0)
    assert s.poincare() == (1.0, 0.0, 0.0)
    close(bm.fidelity((1, 0, 0), (0, 1, 0)), 0.5, 1e-15)

    close(bm.faraday_frequency(0.14) / MHZ, 0.196, 1e-12)
    close(bm.sigma_alpha_from_noise(2e-3) * 1e3, 0.0568, 1e-3)
    close(bm.average_process_fidelity(bm.damping_factor(800e-6, 1e-3)), 0.9087, 1e-3)

    p = bm.MemoryParams(0.3, 0.9, 0.4)
    ex = bm.extract_memory_params(bm.process_tomography(
        [[sum(r[j] * v[j] for j in range(4)) for r in p.mueller()] for v in
         ([1, 1, 0, 0], [1, 0, 1, 0], [1, 0, 0, 1], [1, 0, 0, -1])]))
    for got, want in zip(ex[:3], (0.3, 0.9, 0.4)):
        close(got, want, 1e-12)

    model = bm.EfficiencyModel(1 / 26e-9, 94e-9, 0.0)
    comp, trans, total = model.eta_total(15 * MHZ, 230e-9, 127.0)
    close(total, comp * trans, 1e-15)
    avg = model.transverse_average(15 * MHZ, 230e-9, 127.0, 8e-6)
    assert 0.5 < avg < total

    xs = [i * 2e-5 for i in range(60)]
    ys = [0.7 * math.exp(-x * x / (2 * 0.5e-3 ** 2)) for x in xs]
    fit = bm.fit_gaussian_decay(xs, ys)
    assert fit["converged"]
    close(fit["sigma"], 0.5e-3, 1e-12)

    csv = bm.run_figure("fig7", {"fig7.points": "41"})
    rows = [l for l in csv.splitlines() if not l.startswith("#")]
    assert rows[0] == "omega_c_mhz,eta_comp,eta_trans,eta_on_axis,eta_averaged"
    assert len(rows) == 42

    try:
        bm.run_figure("fig3", {"bogus.key": "1"})
    except ValueError as e:
        assert "bogus.key" in str(e)
    else:
        raise AssertionError("unknown key accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
