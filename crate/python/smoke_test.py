#!/usr/bin/env python3
"""Smoke test for the cfheat_py extension module.

Build the module first, then run this script from the repository root:

    cargo build -p cfheat-py --release
    python3 python/smoke_test.py

The script locates the compiled cdylib under target/, links it into a
temporary directory under the importable name, and exercises the bindings
end to end.
"""

import math
import os
import shutil
import sys
import tempfile


def locate_cdylib():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates = [
        os.path.join(root, "target", profile, name)
        for profile in ("release", "debug")
        for name in ("libcfheat_py.so", "libcfheat_py.dylib", "cfheat_py.dll")
    ]
    for path in candidates:
        if os.path.exists(path):
            return path
    sys.exit(
        "could not find the compiled extension; run "
        "`cargo build -p cfheat-py --release` first"
    )


def import_module():
    src = locate_cdylib()
    staging = tempfile.mkdtemp(prefix="cfheat-py-")
    suffix = ".pyd" if src.endswith(".dll") else ".so"
    shutil.copy(src, os.path.join(staging, "cfheat_py" + suffix))
    sys.path.insert(0, staging)
    import cfheat_py

    return cfheat_py


def approx(a, b, tol):
    return abs(a - b) <= tol * (1.0 + abs(b))


def main():
    m = import_module()
    checks = 0

    # Expression parsing, evaluation, differentiation.
    e = m.Expr("t^4*sin(pi*x)")
    assert approx(e.eval(2.0, 0.5), 16.0, 1e-12), e.eval(2.0, 0.5)
    dt = e.diff("t")
    assert approx(dt.eval(1.0, 0.5), 4.0, 1e-12)
    d4x = m.Expr("sin(pi*x)").diff("x", 4)
    assert approx(d4x.eval(0.0, 0.5), math.pi**4, 1e-9)
    checks += 3

    # Fractional derivative of the ramp: (1/alpha)(1 - e^{-beta t}).
    ramp = m.Expr("t")
    got = m.cf_derivative(ramp, 0.5, 1.0)
    want = 2.0 * (1.0 - math.exp(-1.0))
    assert approx(got, want, 1e-7), (got, want)
    # Expansion route agrees with the composition route.
    quad = m.Expr("t^2")
    a = m.cf_expansion(quad, 0.5, 1, 1.0, richardson=True)
    b = m.cf_derivative_higher(quad, 0.5, 1, 1.0, richardson=True)
    assert approx(a, b, 1e-8), (a, b)
    checks += 2

    # Cubic classification ground truth.
    c = m.classify_cubic(-6.0, 11.0, -6.0)
    assert c["discriminant"] == 4.0
    assert c["case"] == "three_distinct_real"
    roots = sorted(z.real for z in c["roots"])
    assert all(approx(r, w, 1e-8) for r, w in zip(roots, (1.0, 2.0, 3.0)))
    checks += 1

    # Reduced-ODE coefficients for alpha = 1/2, lambda = (0, 0, 1), m = 1.
    coeffs = m.transform_coefficients(0.5, [0.0, 0.0, 1.0], 1, 1.0)
    assert approx(coeffs[2], -3.0, 1e-12)
    assert approx(coeffs[1], 3.0 + math.pi**2 / 2.0, 1e-12)
    assert approx(coeffs[0], -1.0, 1e-12)
    checks += 1

    # Sine analysis and compatibility checks.
    sine = m.sine_coefficients("sin(2*pi*x)", 4, 0.0)
    assert approx(sine[1], 1.0, 1e-9) and abs(sine[0]) < 1e-9
    compat = m.validate_compatibility("t^4*sin(pi*x)")
    assert compat["pass"] and len(compat["conditions"]) == 7
    bad = m.validate_compatibility("t*sin(pi*x)")
    assert not bad["pass"]
    checks += 3

    # Full solve: boundary exactness and certified residual.
    sol = m.solve_problem(0.5, [1.0, 1.0, 1.0], 1.0, "t^4*sin(pi*x)", 2, nt=16, nx=16)
    assert sol.compatibility_pass
    assert sol.boundary_violation == 0.0
    assert sol.mode_residual_sup <= 1e-4, sol.mode_residual_sup
    assert all(abs(row[0]) == 0.0 and abs(row[-1]) == 0.0 for row in sol.values)
    assert sol.mode_sup[1] < 1e-10  # single-mode forcing leaves mode 2 silent
    checks += 1

    print(f"smoke test ok ({checks} check groups, solver = {sol.solver})")


if __name__ == "__main__":
    main()
