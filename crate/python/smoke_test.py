"""Smoke test for the nlcalc Python bindings.

Builds the extension in release mode, copies it next to this script and
exercises the main entry points.
"""

import math
import pathlib
import shutil
import subprocess
import sys

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent


def build():
    subprocess.run(["cargo", "build", "-p", "nlcalc-py", "--release"], cwd=ROOT, check=True)
    lib = ROOT / "target" / "release" / "libnlcalc_py.so"
    shutil.copy(lib, HERE / "nlcalc_py.so")
    sys.path.insert(0, str(HERE))


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    build()
    import nlcalc_py as nl

    exp = nl.Kernel("exponential")
    close(exp.c_alpha(), 8 * math.pi**3, 1e-9)
    s = exp.scale(0.1)
    close(s.transform(1.0), 2 * math.pi / (1 + (0.2 * math.pi) ** 2), 1e-12)
    close(nl.transform(exp, 0.1, -1.0), -s.transform(1.0), 1e-15)

    report = exp.check()
    assert report["admissible"], report
    assert not nl.Kernel("indicator").satisfies(["positivity"])

    sine = nl.Kernel("sine")
    zeros = [xi for xi, _ in sine.find_zeros(3.0)]
    assert len(zeros) == 6 and zeros[0] == 0.0, zeros
    close(zeros[1], 1.0, 1e-10)
    modes = nl.homogeneous_basis(sine, 0.25, 5.0)
    assert (4.0, 0) in [(round(x, 9), k) for x, k in modes], modes

    # linear functions are reproduced exactly, constants annihilated
    d = s.apply(lambda t: 3.0 * t + 2.0, [-1.0, 0.0, 2.5])
    for v in d:
        close(v, 3.0, 1e-10)
    g = s.apply(lambda t: math.exp(-t * t), [0.3])[0]
    close(g, -0.6 * math.exp(-0.09), 5e-2)
    grid = [math.exp(-((-8 + 16 * i / 2048) ** 2)) for i in range(2048)]
    close(s.apply_grid(-8.0, 8.0, grid, [0.3])[0], g, 1e-4)

    try:
        s.apply(lambda t: 1 / 0, [0.0])
    except ZeroDivisionError:
        pass
    else:
        raise AssertionError("callback error was swallowed")

    try:
        nl.Kernel("power", k_alpha=-2.5)
    except ValueError:
        pass
    else:
        raise AssertionError("inadmissible exponent accepted")

    res = s.solve(lambda t: 1 / (1 + t * t), 40.0, n=16384)
    ref = [nl.closed_form_reference("exp-arctan", 0.1, t) for t in res["t"]]
    diff = [v - r for v, r, t in zip(res["values"], ref, res["t"]) if abs(t) <= 10]
    assert max(diff) - min(diff) < 1e-6, max(diff) - min(diff)
    assert res["residual"] < 1e-6 and res["null_modes"][0]["xi"] == 0.0

    res = sine.scale(0.25).solve([math.exp(-((-16 + 32 * i / 1024) ** 2)) for i in range(1024)], 16.0)
    assert any(abs(m["xi"] - 4.0) < 1e-9 for m in res["null_modes"])

    cert = exp.scale(0.5).near_field_certificate([0.1, 0.5, 0.9])
    assert cert["ok"], cert
    print("python smoke test: ok")


if __name__ == "__main__":
    main()
