"""Smoke test for the fockslice Python bindings.

Build and install first:  maturin develop -m crates/python/Cargo.toml
"""

import cmath

import fockslice_py as fs


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    space = fs.ModeSpace(1, 24)
    assert space.dim == 25

    kerr = fs.Symbol.preset("kerr")
    assert kerr.is_real() and kerr.degree == 4
    round_trip = fs.Symbol.from_text(kerr.to_text())
    assert close(round_trip([0.3 + 0.2j]), kerr([0.3 + 0.2j]), 1e-14)

    # Berezin and Wick symbols of |psi|^2 differ by the constant 1.
    shift = fs.Symbol.number(1).berezin_from_wick()
    assert close(shift([0.5j]), 0.25 - 1.0, 1e-14)

    w = fs.wick_quantize(kerr, space)
    assert w.hermitian_deviation() < 1e-12
    h = w + space.free_hamiltonian()
    u = fs.exact_propagator(h, 0.5)
    assert (u.adjoint() @ u).max_abs_diff(fs.exact_propagator(h, 0.0)) < 1e-12

    psi_in, psi_out = [0.6], [0.4]
    assert close(space.free_hamiltonian().coherent_element([0.0], [0.0]), 0.0, 1e-15)
    assert close(fs.overlap(psi_out, psi_in), cmath.exp(0.24), 1e-15)

    study = fs.convergence_study("theorem1", kerr, space, 0.5, [8, 16, 32, 64], psi_in, psi_out)
    errors = [p[2] for p in study["points"]]
    assert all(b < a for a, b in zip(errors, errors[1:])), errors
    assert 0.8 <= study["fitted_order"] <= 1.5, study["fitted_order"]
    oracle = fs.oracle_element("theorem1", kerr, space, 0.5, psi_in, psi_out)
    assert close(oracle, study["oracle"], 1e-14)

    checks = fs.verify(preset="kerr")
    assert all(c[1] for c in checks), [c for c in checks if not c[1]]

    out = fs.run_experiment(preset="free")
    assert out["failures"] == [], out["summary"]
    assert out["csv"].startswith("construction,N,")

    print("fockslice python smoke test: ok")


if __name__ == "__main__":
    main()
