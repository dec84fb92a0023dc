"""Smoke test for the pysuplab extension. Run after building it with
`pip install --no-build-isolation ./crates/python`."""

import pathlib
import sys
import tempfile
from fractions import Fraction

import pysuplab as s

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    space = s.FiniteSpace.uniform(4)
    singles = s.FunctionTable.from_indicators(4, [[0], [1], [2], [3]])
    assert space.weights() == [Fraction(1, 4)] * 4
    assert s.exact_sup_tail(singles, space, 2, 2) == Fraction(1, 4)
    assert s.exact_sup_tail(singles, space, 2, "1", strict=True) == Fraction(1, 4)

    est = s.mc_estimate(singles, space, 2, 2, samples=20000, seed=1, workers=2)
    assert est["ci_low"] <= 0.25 <= est["ci_high"], est
    again = s.mc_estimate(singles, space, 2, 2, samples=20000, seed=1, workers=1)
    assert again["hit_count"] == est["hit_count"]

    weighted = s.FiniteSpace([Fraction(1, 2), "1/4", 0.25])
    table = s.FunctionTable([[1, 0, "1/2"], [0, 1, 1]])
    assert table.rows()[0][2] == Fraction(1, 2)
    assert 0 <= s.exact_sup_tail(table, weighted, 3, 2) <= 1

    assert s.bp_measure_table(singles, space, 2) == Fraction(1, 4)
    assert s.bp_measure_pieces(2, [([0], Fraction(1, 4)), ([0, 1], Fraction(1, 4))], 1) == Fraction(1, 2)
    assert s.cover_sizes(singles, space, Fraction(1, 2)) == (4, 4)
    d, l = s.fit_dense(singles, space, ["1/2", "1/4"], [1.0, 2.0])
    assert d >= 1 and l in (1.0, 2.0)

    pairs = [[i, j] for i in range(5) for j in range(i + 1, 5)] + [[i] for i in range(5)] + [[]]
    assert s.vc_dimension(5, pairs) == 2
    assert s.shatter_coefficient(5, pairs, 3) == 7

    levels = s.halving_schedule(Fraction(1, 1000), 2048, 1)
    assert abs(levels[1]["rho_low"] - 4.6368e-4) < 1e-7 and not levels[1]["half_rho_holds"]
    ratio, product = s.counting_factor_forms(10, 4)
    assert ratio == product
    assert s.level_threshold(41, 1) == 12
    assert s.round_masses(["3/10", "3/10", "2/5"], 2) == [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]
    lhs, rhs = s.subadditivity(singles, space, 2, 2)
    assert lhs <= rhs

    with tempfile.TemporaryDirectory() as out:
        assert s.run_scenario(str(ROOT / "scenarios" / "tail_singletons.toml"), out) == 0
        assert "1/4" in (pathlib.Path(out) / "tail.csv").read_text()

    try:
        s.FiniteSpace(["1/2", "1/4"])
    except ValueError as e:
        assert "sum" in str(e)
    else:
        raise AssertionError("bad weights accepted")
    print("pysuplab smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
