"""Smoke test for the Python bindings.

Build and install first:
    pip install maturin
    maturin develop --release -m crates/py/Cargo.toml
then run
    python3 python/smoke_test.py
"""

import math
import os
import sys
import tempfile

import emhydro

TAU = 2.0 * math.pi


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    k = emhydro.Constants(eps0=2.0)
    field = emhydro.Field.plane_wave(1.0, TAU, 16, constants=k)
    assert field.dims == (1, 1, 16)
    assert close(field.period, 1.0, 1e-15)
    assert close(field.energy(0.0), field.energy(0.37), 1e-12)

    # Point conversions invert each other.
    e, b = (0.3, -0.2, 0.1), (0.05, 0.4, -0.7)
    g = emhydro.spinor_from_em(e, b, k)
    e2, b2 = emhydro.em_from_spinor(g, k)
    assert max(abs(x - y) for x, y in zip(e + b, e2 + b2)) < 1e-14

    # Plane-wave labels move in straight lines at speed c / sin(alpha).
    alpha, beta, gamma = 0.7, 0.4, 1.1
    h = field.hydro(0.0, (0.0, 0.0, 0.1), (alpha, beta, gamma))
    speed = math.sqrt(sum(v * v for v in h["velocity"]))
    assert close(speed, 1.0 / math.sin(alpha), 1e-10), speed
    [tr] = field.trace([(0.0, 0.0, 0.1, alpha, beta, gamma)], 0.5, 0.01, 10)
    assert tr.error is None, tr.error
    v = tr.qdot[0]
    for t, q in zip(tr.times, tr.q):
        expect = (v[0] * t, v[1] * t, 0.1 + v[2] * t)
        assert max(abs(x - y) for x, y in zip(q, expect)) < 1e-12

    # Reconstruction reproduces the exact field.
    rec = field.reconstruct(0.25, quadrature=(2, 4, 1), dt=0.01)
    err = rec.errors()
    assert rec.failures == 0
    assert err["spinor_l2"] < 1e-9, err
    again = emhydro.compare_spinors(rec.reference, rec.spinor, k)
    assert close(again["spinor_l2"], err["spinor_l2"], 1e-15)

    # Snapshots round trip.
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "field.emh")
        field.write_snapshot(0.5, path)
        t, k2, dims, spacing, spinor = emhydro.read_snapshot(path)
        assert t == 0.5 and dims == (1, 1, 16) and k2.eps0 == 2.0
        assert spinor == field.spinor(0.5)

    # Invalid input raises.
    try:
        emhydro.Constants(hbar=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative hbar accepted")

    print("python smoke test: OK")
    return 0


if __name__ == "__main__":
    sys.exit(main())
