#!/usr/bin/env python3
"""Smoke test for the permsum_py extension module.

Builds expected: `cargo build -p permsum-py` (or --release). The script
locates the compiled cdylib under target/ and imports it directly, then
exercises one call from each binding group.
"""

import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / "release" / "libpermsum_py.so",
        ROOT / "target" / "debug" / "libpermsum_py.so",
    ]
    for path in candidates:
        if path.exists():
            spec = importlib.util.spec_from_file_location("permsum_py", path)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("build the extension first: cargo build -p permsum-py")


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    ps = load_module()

    # polynomials and the brute-force oracle
    poly = ps.Polynomial(2, [(math.pi, [0, 1])])
    assert poly.num_vars == 2
    assert approx(poly.evaluate([True, True]), math.pi)
    assert approx(poly.exp_sum(), 2 + 0j, 1e-12)

    # graph encoding: multiplier * per(G) == exp_sum
    graph = ps.encode_polynomial(poly)
    assert graph.vertex_count == 5
    assert approx(graph.encoded_sum(), poly.exp_sum(), 1e-10)
    round_trip = ps.EncodedGraph.from_json(graph.to_json())
    assert round_trip.vertex_count == graph.vertex_count

    # permanent engines agree
    rows = [[1 + 1j, 2], [3j, -1 + 0.5j]]
    expected = rows[0][0] * rows[1][1] + rows[0][1] * rows[1][0]
    for method in ("naive", "ryser", "cycle_cover", "block_auto"):
        assert approx(ps.permanent_of(rows, method), expected, 1e-12)
    est, stderr = ps.gurvits_estimate(rows, 20000, seed=1)
    assert abs(est - expected) <= 5 * stderr + 1e-9

    # circuit amplitudes: the 3-qubit worked example, both paths
    circuit = (
        "iqp q=3\n"
        "p 0.39269908169872414 0 1 2\n"
        "p 0.7853981633974483 0 1\n"
        "p 1.5707963267948966 2\n"
    )
    direct = ps.amplitude(circuit, "000", "000", via="direct")
    via_graph = ps.amplitude(circuit, "000", "000", via="graph")
    assert approx(direct, 0.348 + 0.511j, 5e-3)
    assert approx(direct, via_graph, 1e-8)

    g, scale = ps.encode_zero_zero(circuit)
    assert g.vertex_count == 12 and approx(scale, 0.125)
    assert approx(g.encoded_sum() * scale, direct, 1e-8)
    assert 1.0 <= g.spectral_norm() <= 4.53

    # gadgets: library verifies, the radical-corner cubic variant does not
    report = ps.verify_gadget(3, math.pi)
    assert report["pass"] and not report["failing"]
    bad = ps.verify_gadget(3, math.pi, radical_variant=True)
    assert not bad["pass"] and bad["failing"]
    assert "x_0_0" in ps.constraint_system(1, 0, math.pi)

    # resource analysis
    assert approx(ps.prob_alpha_lt_1(10) / 2.979e-13, 1.0, 0.01)
    assert approx(ps.prob_fewer_photons(3), 1 / 128)
    table = ps.resource_table(3, 1, 1, 1)
    assert table["klm_photons"] == 17 and table["graph_photons"] == 12
    _, (cx, cy, cq) = ps.ccz_threshold(1, 0, 0)
    assert approx(cx, 5.68, 0.01) and approx(cy, 12.14, 0.01) and approx(cq, 3.07, 0.01)
    assert ps.hoeffding_samples(0.1, 0.05) == 185
    assert ps.ensemble_stats(3)["size"] == "128"

    # sampling simulation and the shift recovery
    run = ps.simulate_estimation("iqp q=2\ncz 0 1\n", "klm", 5000, seed=7)
    assert run["samples"] == 5000
    assert approx(run["exact_probability"], 0.25, 1e-12)
    assert abs(run["estimate"] - 0.25) < 0.1

    coeffs = ps.eps_poly_coeffs(rows)
    assert approx(coeffs[0], expected, 1e-12) and approx(coeffs[-1], 1.0, 1e-12)
    recovered = ps.boost_recover(rows)
    assert approx(recovered, abs(expected) ** 2, 1e-6)

    print("smoke test passed")


if __name__ == "__main__":
    main()
