"""Quick check that the compiled extension imports and agrees with itself.

Build first:  maturin develop --release -m crates/py/Cargo.toml
"""

import cmath
import json
import math

import nhse


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    m = nhse.Model.from_g(0.25, 2.0, 12)
    assert close(m.g, 0.25)
    assert m.size == 12

    h = m.hamiltonian()
    assert close(h[0][1], cmath.exp(0.25))
    assert close(h[1][0], cmath.exp(-0.25))
    assert close(h[0][2], cmath.exp(0.25) / 4)

    spec = nhse.eig(m)
    assert len(spec) == 12
    assert spec.max_residual < 1e-8
    re = [e.real for e in spec.eigenvalues]
    assert re == sorted(re)

    # same matrix through the generic entry point
    spec2 = nhse.eig_matrix(h)
    assert all(close(a, b, 1e-8) for a, b in zip(spec.eigenvalues, spec2.eigenvalues))

    # nearest-neighbour chain: real spectrum, xi = 1/g
    nn = nhse.Model.from_g(0.5, math.inf, 40)
    assert nhse.eig(nn).complex_fraction == 0.0
    assert close(nhse.analytic_xi(nn), 2.0)
    psi = [math.exp(-0.5 * j) for j in range(40)]
    fit = nhse.fit_localization_length(psi)
    assert close(fit["xi"], 2.0, 1e-8)

    lc = nhse.predict_critical_length(2.0, 0.25)
    assert lc is not None and 10 < lc < 30
    fractions, critical = nhse.scan_critical_length(m, list(range(4, 40)))
    assert critical is not None

    assert close(nhse.polylog(2.0, 1.0), math.pi**2 / 6, 1e-5)
    assert nhse.winding_number(nhse.Model.from_g(0.3, 2.0, 10)) == -1

    s = nhse.steady_state_entropy(nhse.Model(1.2 + 0.3j, 0.8, 1.0, 10))
    assert len(s["entropy"]) == 9
    assert all(x >= 0 for x in s["entropy"])

    records = json.loads(
        nhse.run_sweep("g = 0.25\nalpha = 2\nL = 6:10:2", task="transition")
    )
    assert [r["point"]["size"] for r in records] == [6, 8, 10]

    try:
        nhse.Model.from_g(0.1, 1.0, 1)
    except nhse.NhseError:
        pass
    else:
        raise AssertionError("size 1 accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
