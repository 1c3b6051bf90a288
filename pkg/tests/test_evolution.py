"""Time steppers: stationarity, conservation, ordering and cross-validation."""

import numpy as np
import pytest

from conetool import BlowUpError, ConeField, PositivityLossError, \
    SolverConfig, build_cone_grid, build_cross_section, comparison_check, \
    constant_field, field_from_function, mass, run, step
from conetool.evolve import make_stepper
from conetool.verification import check_heat_oracle


@pytest.fixture
def pme_grid():
    spec = build_cross_section("circle", 3, scale=1.0, grid_points=8)
    return build_cone_grid(spec, n_x=96, x_min=0.05)


class TestStationaryStates:
    def test_pme_constant_is_stationary(self, pme_grid):
        cfg = SolverConfig("pme", dt=1e-3, t_end=1e-3, m=2.0)
        st = make_stepper(pme_grid, cfg)
        u = constant_field(pme_grid, 1.3).values
        for _ in range(5):
            u = st.step(u, 0.0)
        assert np.abs(u - 1.3).max() < 5e-13

    def test_pme_frozen_coefficient_constant(self, pme_grid):
        cfg = SolverConfig("pme", dt=1e-3, t_end=1e-3, m=0.5,
                           linearization="frozen_coefficient")
        st = make_stepper(pme_grid, cfg)
        u = st.step(constant_field(pme_grid, 0.7).values, 0.0)
        assert np.abs(u - 0.7).max() < 1e-13

    def test_yamabe_flat_cone_is_stationary(self):
        # normalized link metric makes the exact cone scalar-flat, so a
        # vanishing source keeps the unit conformal factor in place
        spec = build_cross_section("sphere", 3, dim_n=2, grid_points=6)
        grid = build_cone_grid(spec, n_x=64, x_min=0.05)
        cfg = SolverConfig("yamabe", dt=1e-3, t_end=1e-3)
        st = make_stepper(grid, cfg)
        u = constant_field(grid, 1.0).values
        for _ in range(5):
            u = st.step(u, 0.0)
        assert np.abs(u - 1.0).max() < 1e-13

    def test_heat_constant(self, pme_grid):
        cfg = SolverConfig("heat", dt=1e-3, t_end=1e-2)
        traj = run(pme_grid, constant_field(pme_grid, 2.0), cfg, save_every=10)
        assert abs(traj.rows[-1]["max"] - 2.0) < 1e-12
        assert abs(traj.rows[-1]["min"] - 2.0) < 1e-12


class TestHeatOracle:
    def test_against_matrix_exponential(self):
        results = check_heat_oracle()
        assert all(r.ok for r in results), [r.line() for r in results]


class TestMassAndBounds:
    def test_pme_mass_multimode(self, pme_grid):
        u0 = field_from_function(
            pme_grid, lambda x, th: 1.0 + 0.2 * x * np.cos(th) + 0.1 * x**2)
        cfg = SolverConfig("pme", dt=5e-4, t_end=0.05, m=2.0)
        traj = run(pme_grid, u0, cfg, save_every=10)
        masses = [r["mass"] for r in traj.rows]
        assert abs(masses[-1] - masses[0]) < 1e-12 * abs(masses[0])

    def test_pme_respects_initial_bounds(self, pme_grid):
        u0 = field_from_function(
            pme_grid, lambda x, th: 1.0 + 0.3 * np.sin(th) * x)
        cfg = SolverConfig("pme", dt=2.5e-4, t_end=0.02, m=2.0)
        traj = run(pme_grid, u0, cfg, save_every=5)
        for row in traj.rows:
            assert row["min"] >= u0.min() - 1e-8
            assert row["max"] <= u0.max() + 1e-8


class TestComparison:
    def test_equal_data_has_zero_margin(self, pme_grid):
        u0 = field_from_function(pme_grid, lambda x, th: 1.0 + 0.1 * x)
        cfg = SolverConfig("pme", dt=5e-4, t_end=0.01, m=2.0)
        t1 = run(pme_grid, u0, cfg, save_every=4, keep_snapshots=True)
        t2 = run(pme_grid, u0, cfg, save_every=4, keep_snapshots=True)
        verdict = comparison_check(t1, t2, tol=1e-8)
        assert verdict.status == "pass"
        assert verdict.max_violation == pytest.approx(0.0, abs=1e-15)

    def test_crossing_data_is_a_precondition_violation(self, pme_grid):
        cfg = SolverConfig("pme", dt=5e-4, t_end=0.005, m=2.0)
        u0 = field_from_function(pme_grid, lambda x, th: 1.0 + 0.2 * x)
        v0 = field_from_function(pme_grid, lambda x, th: 1.2 - 0.2 * x)
        tu = run(pme_grid, u0, cfg, save_every=2, keep_snapshots=True)
        tv = run(pme_grid, v0, cfg, save_every=2, keep_snapshots=True)
        verdict = comparison_check(tu, tv, tol=1e-8)
        assert verdict.status == "precondition_violated"


class TestPhaseSeparation:
    def test_wide_link_separates_and_narrow_link_relaxes(self):
        # soft cross-section modes sit inside the spinodal band on a wide
        # link, so the zero state loses stability and the flow must settle
        # below the zero-state energy; on a unit link every mode is stiff
        # and the same data relaxes to zero
        from conetool.diagnostics import mass
        from conetool.verification import _random_positive_field

        def quench(scale, t_end):
            rng = np.random.default_rng(3)
            spec = build_cross_section("circle", 4, scale=scale,
                                       grid_points=16)
            grid = build_cone_grid(spec, n_x=64, x_min=0.05)
            u0 = _random_positive_field(grid, rng, base=0.0, amp=0.05)
            u0.values -= mass(u0) / grid.volume()
            cfg = SolverConfig("cahn_hilliard", dt=5e-3, t_end=t_end)
            traj = run(grid, u0, cfg, save_every=2000)
            energies = [r["energy_phi"] for r in traj.rows]
            return grid, traj, energies

        grid, traj, energies = quench(6.0, 60.0)
        zero_state = 0.25 * grid.volume()
        assert energies[-1] < 0.9 * zero_state
        assert np.abs(traj.snapshots[-1][1]).max() > 0.5
        assert max(np.diff(energies)) <= 1e-8

        grid, traj, energies = quench(1.0, 20.0)
        assert energies[-1] == pytest.approx(0.25 * grid.volume(), rel=1e-6)
        assert np.abs(traj.snapshots[-1][1]).max() < 1e-6


class TestFormSubstitution:
    def test_u_form_and_v_form_agree(self, pme_grid):
        # the substituted flow evolves v = u^m; both discretizations must
        # approximate the same solution
        m = 2.0
        u0 = field_from_function(
            pme_grid, lambda x, th: 1.0 + 0.2 * x * np.cos(th) + 0.1 * x**2)
        cu = SolverConfig("pme", dt=2e-4, t_end=0.02, m=m)
        cv = SolverConfig("pme_v", dt=2e-4, t_end=0.02, m=m)
        tu = run(pme_grid, u0, cu, save_every=100)
        tv = run(pme_grid, ConeField(pme_grid, u0.values**m), cv,
                 save_every=100)
        uf = tu.snapshots[-1][1] ** m
        vf = tv.snapshots[-1][1]
        assert np.abs(uf - vf).max() / np.abs(vf).max() < 2e-3


class TestFailureModes:
    def test_blowup_detector(self, pme_grid):
        cfg = SolverConfig("heat", dt=1e-3, t_end=1.0,
                           forcing=lambda t, u: 50.0 * u,
                           blowup_threshold=1e3)
        with pytest.raises(BlowUpError):
            run(pme_grid, constant_field(pme_grid, 1.0), cfg)

    def test_positivity_loss_reports_node(self, pme_grid):
        cfg = SolverConfig("pme", dt=1e-3, t_end=1.0, m=2.0,
                           forcing=lambda t, u: -30.0)
        with pytest.raises(PositivityLossError) as err:
            run(pme_grid, constant_field(pme_grid, 0.5), cfg)
        assert "node" in str(err.value)

    def test_positive_initial_data_required(self, pme_grid):
        cfg = SolverConfig("pme", dt=1e-3, t_end=0.01, m=2.0)
        u0 = field_from_function(pme_grid, lambda x, th: np.cos(th))
        with pytest.raises(ValueError):
            run(pme_grid, u0, cfg)

    def test_custom_spectrum_rejects_nonlinear(self):
        spec = build_cross_section("custom", dim_n=2, eigenvalues=[0, -2])
        grid = build_cone_grid(spec, n_x=32, x_min=0.1)
        cfg = SolverConfig("pme", dt=1e-3, t_end=0.01, m=2.0)
        with pytest.raises(ValueError):
            make_stepper(grid, cfg)

    def test_custom_spectrum_allows_linear(self):
        spec = build_cross_section("custom", dim_n=2, eigenvalues=[0, -2])
        grid = build_cone_grid(spec, n_x=32, x_min=0.1)
        u0 = constant_field(grid, 1.0)
        for cfg in (SolverConfig("heat", dt=1e-3, t_end=0.01),
                    SolverConfig("fpme", dt=1e-3, t_end=0.01,
                                 m=1.0, sigma=0.5)):
            traj = run(grid, u0, cfg, save_every=5)
            assert abs(traj.rows[-1]["mass"] - traj.rows[0]["mass"]) < 1e-12

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig("advection", dt=1e-3, t_end=1.0)
        with pytest.raises(ValueError):
            SolverConfig("heat", dt=-1e-3, t_end=1.0)
        with pytest.raises(ValueError):
            SolverConfig("pme", dt=1e-3, t_end=1.0, m=0.0)
        with pytest.raises(ValueError):
            SolverConfig("fpme", dt=1e-3, t_end=1.0, sigma=1.2)
        with pytest.raises(ValueError):
            SolverConfig("heat", dt=1e-3, t_end=1.0, bc_inner="weird")

    def test_yamabe_needs_higher_dimension(self):
        spec = build_cross_section("circle", 3, scale=1.0, grid_points=8)
        grid = build_cone_grid(spec, n_x=32, x_min=0.1)
        with pytest.raises(ValueError):
            make_stepper(grid, SolverConfig("yamabe", dt=1e-3, t_end=0.01))


class TestSelfConvergence:
    def _u0(self, grid):
        spec = grid.spectrum
        return field_from_function(
            grid, lambda x, th: 2.0 + (1.0 + x**2) * np.cos(th))

    def test_heat_first_order_in_time(self):
        spec = build_cross_section("circle", 3, scale=1.0, grid_points=6)
        grid = build_cone_grid(spec, n_x=64, x_min=0.1)
        u0 = self._u0(grid)
        ref = run(grid, u0, SolverConfig("heat", dt=2.5e-5, t_end=0.04),
                  save_every=1600).snapshots[-1][1]
        errs = []
        for dt in (4e-3, 2e-3, 1e-3):
            out = run(grid, u0, SolverConfig("heat", dt=dt, t_end=0.04),
                      save_every=int(0.04 / dt)).snapshots[-1][1]
            errs.append(np.abs(out - ref).max())
        orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
        for p in orders:
            assert p == pytest.approx(1.0, abs=0.15)

    def test_heat_second_order_in_space(self):
        spec = build_cross_section("circle", 3, scale=1.0, grid_points=6)
        dt = 5e-5

        def solve(n_x):
            grid = build_cone_grid(spec, n_x=n_x, x_min=0.1)
            u0 = self._u0(grid)
            return run(grid, u0, SolverConfig("heat", dt=dt, t_end=0.01),
                       save_every=int(0.01 / dt)).snapshots[-1][1]

        sols = {n_x: solve(n_x) for n_x in (33, 65, 129, 257)}
        # consecutive-level differences at shared nodes
        d1 = np.abs(sols[33] - sols[65][::2]).max()
        d2 = np.abs(sols[65] - sols[129][::2]).max()
        d3 = np.abs(sols[129] - sols[257][::2]).max()
        orders = [np.log2(d1 / d2), np.log2(d2 / d3)]
        for p in orders:
            assert p == pytest.approx(2.0, abs=0.3)


class TestThreadCap:
    def test_results_independent_of_thread_count(self, pme_grid, monkeypatch):
        u0 = field_from_function(
            pme_grid, lambda x, th: 1.0 + 0.2 * x * np.cos(th))
        cfg = SolverConfig("heat", dt=1e-3, t_end=0.01)
        monkeypatch.setenv("CONETOOL_THREADS", "1")
        serial = run(pme_grid, u0, cfg, save_every=5).snapshots[-1][1]
        monkeypatch.setenv("CONETOOL_THREADS", "4")
        threaded = run(pme_grid, u0, cfg, save_every=5).snapshots[-1][1]
        assert np.array_equal(serial, threaded)


class TestStepFunction:
    def test_single_step_wrapper(self, pme_grid):
        cfg = SolverConfig("heat", dt=1e-3, t_end=1e-3)
        u0 = constant_field(pme_grid, 1.0)
        out = step(u0, cfg)
        assert isinstance(out, ConeField)
        assert np.abs(out.values - 1.0).max() < 1e-12

    def test_forcing_enters_explicitly(self, pme_grid):
        cfg = SolverConfig("heat", dt=1e-3, t_end=1e-3,
                           forcing=lambda t, u: np.ones_like(u))
        out = step(constant_field(pme_grid, 1.0), cfg)
        # a uniform source shifts the constant state by dt
        assert np.abs(out.values - 1.001).max() < 1e-12


class TestTrajectory:
    def test_table_columns(self, pme_grid):
        cfg = SolverConfig("pme", dt=5e-4, t_end=0.005, m=2.0)
        u0 = field_from_function(
            pme_grid, lambda x, th: 1.0 + 0.05 * np.exp(-1.0 / x) * np.cos(th))
        traj = run(pme_grid, u0, cfg, save_every=2, slope_modes=(1,),
                   fit_window=(0.1, 0.6))
        cols, rows = traj.as_table()
        assert cols == ["t", "mass", "energy_phi", "min", "max",
                        "slope_mode_1"]
        assert len(rows) == len(traj.times)
        assert all(len(r) == len(cols) for r in rows)

    def test_snapshots_cover_endpoints(self, pme_grid):
        cfg = SolverConfig("heat", dt=1e-3, t_end=0.01)
        traj = run(pme_grid, constant_field(pme_grid, 1.0), cfg,
                   save_every=3, keep_snapshots=True)
        assert traj.snapshots[0][0] == 0.0
        assert traj.snapshots[-1][0] == pytest.approx(0.01)
