"""Conormal symbol evaluation and pole lattices against root-finding oracles."""

import numpy as np
import pytest

from conetool import MellinSymbol, build_cross_section, eval_symbol, \
    indicial_roots, is_elliptic_on_line, poles_of_inverse
from conetool.mellin import UnderResolvedSpectrumError


def roots_oracle(n, lam):
    """Companion-matrix roots of the per-mode quadratic."""
    return np.sort(np.roots([1.0, -(n - 1.0), lam]).real)


def quartic_roots_oracle(n, lam):
    """Roots (with multiplicity) of the per-mode order-4 factor polynomial."""
    quad = np.array([1.0, -(n - 1.0), lam])
    shifted = np.polynomial.polynomial.polyfromroots(
        np.roots(quad) - 2.0)[::-1]
    quartic = np.polymul(quad, shifted)
    return np.sort(np.roots(quartic).real)


@pytest.fixture
def circle1_rich():
    return build_cross_section("circle", 10, scale=1.0)


@pytest.fixture
def sphere2_rich():
    return build_cross_section("sphere", 8, dim_n=2)


class TestEvalSymbol:
    def test_mode0_vanishes_at_origin(self, circle1_rich):
        sym = MellinSymbol(circle1_rich, 2)
        assert eval_symbol(sym, 0.0)[0] == 0.0

    def test_sphere_mode1_at_one(self, sphere2_rich):
        sym = MellinSymbol(sphere2_rich, 2)
        val = eval_symbol(sym, 1.0)[1]
        # independent polynomial-evaluation oracle
        oracle = np.polyval([1.0, -1.0, -2.0], 1.0)
        assert val == pytest.approx(oracle, abs=1e-14)
        assert val == pytest.approx(-2.0, abs=1e-14)

    def test_order4_product_structure(self, sphere2_rich):
        sym4 = MellinSymbol(sphere2_rich, 4)
        val = eval_symbol(sym4, 0.0)[0]
        # oracle: numerically expanded root factors (z-1) z (z+1) (z+2)
        roots = quartic_roots_oracle(2, 0.0)
        oracle = np.prod(0.0 - roots)
        assert val == pytest.approx(oracle, abs=1e-12)
        assert val == pytest.approx(0.0, abs=1e-14)
        # off the roots the product identity holds pointwise
        sym2 = MellinSymbol(sphere2_rich, 2)
        for z in (0.3 + 0.2j, -1.7, 2.5j):
            assert np.allclose(eval_symbol(sym4, z),
                               eval_symbol(sym2, z + 2) * eval_symbol(sym2, z))

    def test_vanishes_at_every_pole(self, sphere2_rich, circle1_rich):
        for spec in (sphere2_rich, circle1_rich):
            sym = MellinSymbol(spec, 2)
            for j, lam in enumerate(spec.eigenvalues):
                for q in indicial_roots(spec.dim_n, lam):
                    val = abs(eval_symbol(sym, q)[j])
                    assert val < 1e-9 * (1.0 + q * q)


class TestPolesOfInverse:
    def test_circle_window_with_double_pole(self, circle1_rich):
        lat = poles_of_inverse(MellinSymbol(circle1_rich, 2), (-2.5, 2.5))
        locs = [round(p.location, 12) for p in lat.poles]
        assert locs == [-2.0, -1.0, 0.0, 1.0, 2.0]
        orders = {p.location: p.order for p in lat.poles}
        assert orders[0.0] == 2
        assert all(o == 1 for loc, o in orders.items() if loc != 0.0)

    def test_sphere_window(self, sphere2_rich):
        lat = poles_of_inverse(MellinSymbol(sphere2_rich, 2), (-2.5, 2.5))
        table = {round(p.location, 12): p for p in lat.poles}
        assert table[-1.0].order == 1 and table[-1.0].modes == {1}
        assert table[2.0].order == 1 and table[2.0].modes == {1}
        assert table[0.0].modes == {0} and table[0.0].sign == "minus"
        assert table[1.0].modes == {0} and table[1.0].sign == "plus"

    def test_roots_against_companion_oracle(self, sphere2_rich):
        for n, spec in ((2, sphere2_rich),
                        (1, build_cross_section("circle", 6, scale=2.0))):
            for j, lam in enumerate(spec.eigenvalues):
                mine = np.sort(indicial_roots(n, lam))
                oracle = roots_oracle(n, lam)
                assert np.abs(mine - oracle).max() < 1e-10

    def test_order4_merge_and_modes(self, sphere2_rich):
        lat = poles_of_inverse(MellinSymbol(sphere2_rich, 4), (-1.5, 0.5))
        pole = lat.at_location(-1.0)
        assert pole is not None
        assert pole.order == 1
        assert pole.modes >= {0, 1}

    def test_order4_orders_against_root_clustering(self):
        # the unit circle: shifted and plain roots of mode 1 coincide at -1
        spec = build_cross_section("circle", 8, scale=1.0)
        lat = poles_of_inverse(MellinSymbol(spec, 4), (-4.5, 2.5))
        for pole in lat.poles:
            best = 0
            for j, lam in enumerate(spec.eigenvalues):
                roots = quartic_roots_oracle(1, lam)
                # double roots split by ~sqrt(eps) under companion solves
                count = int(np.sum(np.abs(roots - pole.location) < 1e-6))
                best = max(best, count)
            assert pole.order == best, f"order mismatch at {pole.location}"
        assert lat.at_location(-1.0).order == 2
        assert lat.at_location(0.0).order == 2

    def test_under_resolved_window(self):
        spec = build_cross_section("circle", 3, scale=1.0)
        with pytest.raises(UnderResolvedSpectrumError):
            poles_of_inverse(MellinSymbol(spec, 2), (-5.0, 5.0))

    def test_window_validation(self, circle1_rich):
        sym = MellinSymbol(circle1_rich, 2)
        with pytest.raises(ValueError):
            poles_of_inverse(sym, (2.0, -2.0))
        with pytest.raises(ValueError):
            poles_of_inverse(sym, (-np.inf, 0.0))


class TestEllipticity:
    def test_sphere_clear_line(self, sphere2_rich):
        res = is_elliptic_on_line(MellinSymbol(sphere2_rich, 2), 1.25)
        assert res.elliptic
        assert res.line == pytest.approx(0.25)
        assert res.principal_symbol_ok

    def test_zero_always_blocks_the_centered_line(self):
        for spec in (build_cross_section("circle", 6, scale=1.0),
                     build_cross_section("sphere", 6, dim_n=3),
                     build_cross_section("custom", dim_n=2,
                                         eigenvalues=[0, -3, -8, -15])):
            n = spec.dim_n
            res = is_elliptic_on_line(MellinSymbol(spec, 2), (n + 1) / 2.0)
            assert not res.elliptic
            assert res.witness.location == pytest.approx(0.0, abs=1e-12)

    def test_half_frequency_circle(self):
        spec = build_cross_section("circle", 8, scale=2.0)
        sym = MellinSymbol(spec, 2)
        res = is_elliptic_on_line(sym, 1.0)  # line at 0
        assert not res.elliptic
        assert res.witness.location == pytest.approx(0.0, abs=1e-12)
        assert is_elliptic_on_line(sym, 0.75).elliptic  # line at 0.25


class TestStructuralInvariants:
    def test_sphere_root_identities(self):
        for n in (2, 3, 4):
            spec = build_cross_section("sphere", 8, dim_n=n)
            for j, lam in enumerate(spec.eigenvalues):
                qm, qp = indicial_roots(n, lam)
                assert abs(qm + j) < 1e-10
                assert abs(qp - (n - 1 + j)) < 1e-10

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 6))
            lam = -float(rng.uniform(0, 50))
            qm, qp = indicial_roots(n, lam)
            assert abs(qm + qp - (n - 1)) < 1e-12

    def test_order4_set_is_shifted_union(self):
        from conetool.verification import check_order4_pole_set
        assert all(r.ok for r in check_order4_pole_set())

    def test_positive_eigenvalue_rejected(self):
        with pytest.raises(ValueError):
            indicial_roots(2, 0.5)

    def test_lattice_json(self, circle1_rich):
        lat = poles_of_inverse(MellinSymbol(circle1_rich, 2), (-1.5, 1.5))
        import json
        data = json.loads(lat.to_json())
        assert {"q", "order", "modes", "sign"} <= set(data[0])
