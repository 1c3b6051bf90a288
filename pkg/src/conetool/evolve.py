"""Time stepping for the heat, porous-medium, fractional porous-medium,
Cahn-Hilliard and Yamabe-type equations on the discrete cone.

Schemes (L is the assembled cone Laplacian):

* heat            : implicit Euler,  (I - dt L) u1 = u0
* pme             : one Newton step of implicit Euler on d_t u = L(u^m),
                    (I - dt L diag(m u0^(m-1))) u1
                        = u0 + dt L(u0^m - m u0^(m-1) u0);
                    with ``frozen_coefficient`` the lagged form
                    (I - dt L diag(u0^(m-1))) u1 = u0 is used instead.
                    Both updates are discrete divergences, so mass is
                    conserved to roundoff.
* pme_v           : the substituted form d_t v = m v^((m-1)/m) L v for
                    v = u^m, stepped with a frozen coefficient outside
                    the operator; not conservative in v, provided for
                    cross-validation of the primary u-form.
* fpme            : semi-implicit splitting of d_t u = -(-L)^sigma(u^m)
                    around the frozen scalar abar = mean(m u0^(m-1)),
                    solved exactly in the mode-wise eigenbasis.
* cahn_hilliard   : implicit biharmonic, explicit nonlinearity,
                    (I + dt L^2) u1 = u0 - dt L(u0 - u0^3)
* yamabe          : frozen-coefficient implicit step on
                    n u0^(-4/(n-1)) L with the curvature source term;
                    the straight cone with the normalized link metric is
                    scalar-flat, so a zero source keeps u == 1 stationary.

Stability is not controlled adaptively: a blow-up detector aborts runs
whose sup norm passes the configured threshold, and per-equation step
sizes that keep the invariant checks green are listed in the README.
"""

from dataclasses import dataclass, field
import os

import numpy as np
from numpy.linalg import LinAlgError
import scipy.sparse
import scipy.sparse.linalg

from .grid import ConeField
from .operators import BC_INNER, FractionalApplier, \
    build_cone_laplacian, solve_shifted

EQUATIONS = ("heat", "pme", "pme_v", "fpme", "cahn_hilliard", "yamabe")
LINEARIZATIONS = ("newton_one_step", "frozen_coefficient")


class BlowUpError(RuntimeError):
    """The iterate passed the blow-up threshold (likely dt instability)."""


class PositivityLossError(RuntimeError):
    """A positivity-constrained iterate dropped to zero or below."""


class LinearSolveError(RuntimeError):
    """A linear sub-solve failed."""


@dataclass
class SolverConfig:
    equation: str
    dt: float
    t_end: float
    m: float = 2.0
    sigma: float = 1.0
    forcing: object = None          # callable (t, values) -> array, or None
    r_source: object = None         # yamabe curvature source (array or scalar)
    bc_inner: str = "asymptotic_robin"
    linearization: str = "newton_one_step"
    blowup_threshold: float = 1e12

    def __post_init__(self):
        if self.equation not in EQUATIONS:
            raise ValueError(f"unknown equation {self.equation!r}")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.equation in ("pme", "pme_v", "fpme") and self.m <= 0:
            raise ValueError(f"the diffusion exponent m must be positive, got {self.m}")
        if self.equation == "fpme" and not 0.0 < self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.bc_inner not in BC_INNER:
            raise ValueError(f"unknown inner boundary condition {self.bc_inner!r}")
        if self.linearization not in LINEARIZATIONS:
            raise ValueError(f"unknown linearization {self.linearization!r}")

    @property
    def needs_positive(self):
        return self.equation in ("pme", "pme_v", "fpme", "yamabe")

    @property
    def needs_pointwise(self):
        # nonlinear terms need pointwise values; custom spectra are
        # restricted to per-mode linear equations
        if self.forcing is not None:
            return True
        if self.equation in ("pme", "pme_v", "cahn_hilliard", "yamabe"):
            return True
        return self.equation == "fpme" and self.m != 1.0


def thread_count():
    try:
        return max(1, int(os.environ.get("CONETOOL_THREADS", "1")))
    except ValueError:
        return 1


def _row_solve_all(solvers, coeffs):
    """Apply per-row factorized solvers; parallel rows write disjoint columns."""
    out = np.empty_like(coeffs)
    workers = min(thread_count(), len(solvers))
    if workers <= 1:
        for r, solve in enumerate(solvers):
            out[:, r] = solve(coeffs[:, r])
        return out
    from concurrent.futures import ThreadPoolExecutor

    def work(r):
        out[:, r] = solvers[r](coeffs[:, r])

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(work, range(len(solvers))))
    return out


class _StepperBase:
    def __init__(self, grid, cfg):
        self.grid = grid
        self.cfg = cfg
        self.lap = build_cone_laplacian(grid, cfg.bc_inner)
        if cfg.needs_pointwise and not grid.spectrum.has_grid:
            raise ValueError(
                "custom spectra carry no mode basis; only linear unforced "
                "equations can be stepped on them"
            )

    def _forcing(self, t, values):
        if self.cfg.forcing is None:
            return None
        return np.asarray(self.cfg.forcing(t, values), dtype=float)


class HeatStepper(_StepperBase):
    def __init__(self, grid, cfg):
        super().__init__(grid, cfg)
        self.solvers = []
        for op in self.lap.radial:
            mat = scipy.sparse.identity(grid.n_x, format="csc") \
                - cfg.dt * op.as_sparse().tocsc()
            self.solvers.append(scipy.sparse.linalg.factorized(mat))

    def step(self, values, t):
        spec = self.grid.spectrum
        rhs = values
        f = self._forcing(t, values)
        if f is not None:
            rhs = values + self.cfg.dt * f
        coeffs = spec.to_coefficients(rhs)
        coeffs = _row_solve_all(self.solvers, coeffs)
        return spec.from_coefficients(coeffs)


class PMEStepper(_StepperBase):
    def step(self, values, t):
        cfg = self.cfg
        m = cfg.m
        if cfg.linearization == "newton_one_step":
            a = m * values ** (m - 1.0)
            corr = self.lap.apply(values**m - a * values)
            rhs = values + cfg.dt * corr
        else:
            a = values ** (m - 1.0)
            rhs = values
        f = self._forcing(t, values)
        if f is not None:
            rhs = rhs + cfg.dt * f
        try:
            out = solve_shifted(self.lap, cfg.dt, rhs, diag_right=a)
        except LinAlgError as exc:  # pragma: no cover
            raise LinearSolveError(str(exc)) from exc
        return self.grid.spectrum.reconstruct(out)


class PMEVFormStepper(_StepperBase):
    def step(self, values, t):
        cfg = self.cfg
        b = cfg.m * values ** ((cfg.m - 1.0) / cfg.m)
        rhs = values
        f = self._forcing(t, values)
        if f is not None:
            rhs = rhs + cfg.dt * f
        out = solve_shifted(self.lap, cfg.dt, rhs, diag_left=b)
        return self.grid.spectrum.reconstruct(out)


class FPMEStepper(_StepperBase):
    def __init__(self, grid, cfg):
        super().__init__(grid, cfg)
        self.frac = FractionalApplier(self.lap)

    def step(self, values, t):
        cfg = self.cfg
        spec = self.grid.spectrum
        a = cfg.m * values ** (cfg.m - 1.0)
        abar = float(np.mean(a))
        w = values**cfg.m - abar * values
        rhs = spec.to_coefficients(values) \
            - cfg.dt * self.frac.apply_modes(spec.to_coefficients(w), cfg.sigma)
        f = self._forcing(t, values)
        if f is not None:
            rhs = rhs + cfg.dt * spec.to_coefficients(f)
        coeffs = self.frac.apply_modes(rhs, cfg.sigma, shift_solve=(cfg.dt, abar))
        return spec.from_coefficients(coeffs)


class CahnHilliardStepper(_StepperBase):
    """Implicit biharmonic resolvent applied in the per-row eigenbasis.

    The biharmonic conditions like the fourth power of the inner radius,
    so LU factors of I + dt L^2 leak mass at stiff truncations; the
    eigenbasis resolvent keeps every damping factor exact, and the mean
    of the mass-carrying rows (exact kernel of the sealed radial
    operator) is carried through unchanged.
    """

    def __init__(self, grid, cfg):
        super().__init__(grid, cfg)
        self.frac = FractionalApplier(self.lap)
        lam = grid.spectrum.row_eigenvalue
        self.deflate = [
            bool(lam[r] == 0.0 and self.lap.radial[r].robin0 == 0.0)
            for r in range(len(lam))
        ]
        self._wsum = float(np.sum(grid.radial_weights))

    def _resolvent(self, coeffs):
        out = np.empty_like(coeffs)
        dt = self.cfg.dt
        for r, (mu, V, W) in enumerate(self.frac._decompose()):
            c = coeffs[:, r]
            if self.deflate[r]:
                mean = float(np.dot(self.lap.grid.radial_weights, c)) / self._wsum
                dev = c - mean
                ch = W @ dev
                sol = V @ (ch / (1.0 + dt * mu**2))
                sol -= float(np.dot(self.lap.grid.radial_weights, sol)) / self._wsum
                out[:, r] = mean + sol
            else:
                ch = W @ c
                out[:, r] = V @ (ch / (1.0 + dt * mu**2))
        return out

    def step(self, values, t):
        spec = self.grid.spectrum
        w = values - values**3
        # d_t u = -Lap^2 u - Lap(u - u^3); the anti-diffusive explicit term
        # drives the phase separation
        rhs = values - self.cfg.dt * self.lap.apply(w)
        f = self._forcing(t, values)
        if f is not None:
            rhs = rhs + self.cfg.dt * f
        coeffs = self._resolvent(spec.to_coefficients(rhs))
        return spec.from_coefficients(coeffs)


class YamabeStepper(_StepperBase):
    def __init__(self, grid, cfg):
        super().__init__(grid, cfg)
        if grid.n < 2:
            raise ValueError("the Yamabe flow needs a cross-section dimension >= 2")
        src = cfg.r_source
        if src is None:
            src = 0.0
        self.r_source = np.broadcast_to(
            np.asarray(src, dtype=float), (grid.n_x, grid.cross_size)
        ).copy()

    def step(self, values, t):
        cfg = self.cfg
        n = self.grid.n
        b = n * values ** (-4.0 / (n - 1.0))
        source = -0.25 * (n - 1.0) * values ** ((n - 5.0) / (n - 1.0)) * self.r_source
        rhs = values + cfg.dt * source
        f = self._forcing(t, values)
        if f is not None:
            rhs = rhs + cfg.dt * f
        out = solve_shifted(self.lap, cfg.dt, rhs, diag_left=b)
        return self.grid.spectrum.reconstruct(out)


_STEPPERS = {
    "heat": HeatStepper,
    "pme": PMEStepper,
    "pme_v": PMEVFormStepper,
    "fpme": FPMEStepper,
    "cahn_hilliard": CahnHilliardStepper,
    "yamabe": YamabeStepper,
}


def make_stepper(grid, cfg):
    return _STEPPERS[cfg.equation](grid, cfg)


def step(u, cfg, t=0.0, stepper=None):
    """Advance a field one time step; see the module docstring for schemes."""
    st = stepper or make_stepper(u.grid, cfg)
    values = st.step(u.values, t)
    _check_iterate(values, cfg, t + cfg.dt, pointwise=u.is_pointwise)
    return ConeField(u.grid, values)


def _check_iterate(values, cfg, t, pointwise=True):
    amax = float(np.max(np.abs(values)))
    if not np.isfinite(amax) or amax > cfg.blowup_threshold:
        raise BlowUpError(
            f"iterate reached sup norm {amax} at t={t}; reduce dt"
        )
    # positivity is a pointwise notion; coefficient fields are exempt
    if cfg.needs_positive and pointwise:
        vmin = float(values.min())
        if vmin <= 0.0:
            node = np.unravel_index(int(np.argmin(values)), values.shape)
            raise PositivityLossError(
                f"positivity lost at node {node} (value {vmin}) at t={t}"
            )


@dataclass
class Trajectory:
    """Recorded run: scalar diagnostics per save time plus optional snapshots."""

    grid: object
    cfg: SolverConfig
    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)      # dict per save time
    snapshots: list = field(default_factory=list)  # (t, values) pairs
    slope_modes: tuple = ()

    @property
    def final(self):
        return ConeField(self.grid, self.snapshots[-1][1]) if self.snapshots \
            else None

    def columns(self):
        cols = ["t", "mass", "energy_phi", "min", "max"]
        cols += [f"slope_mode_{j}" for j in self.slope_modes]
        return cols

    def as_table(self):
        cols = self.columns()
        return cols, [[row[c] for c in cols] for row in self.rows]


def run(grid, u0, cfg, *, save_every=1, keep_snapshots=False,
        slope_modes=(), fit_window=None):
    """Step ``u0`` to ``t_end`` recording diagnostics every ``save_every`` steps.

    ``slope_modes`` adds fitted tip slopes (over ``fit_window``) to the
    diagnostics at each save time.  Snapshots, when kept, store full field
    values and always include the initial and final states.
    """
    from .diagnostics import energy_phi, fit_tip_exponent, mass

    if isinstance(u0, ConeField):
        u = u0.copy()
    else:
        u = ConeField(grid, np.array(u0, dtype=float))
    if cfg.needs_positive and u.is_pointwise and u.min() <= 0.0:
        raise ValueError(
            f"{cfg.equation} needs strictly positive initial data "
            f"(min is {u.min()})"
        )
    if save_every < 1:
        raise ValueError("save_every must be >= 1")

    n_steps = int(round(cfg.t_end / cfg.dt))
    if abs(n_steps * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, cfg.t_end):
        n_steps = int(np.ceil(cfg.t_end / cfg.dt))
    stepper = make_stepper(grid, cfg)
    traj = Trajectory(grid=grid, cfg=cfg, slope_modes=tuple(slope_modes))

    def record(t, fld):
        row = {
            "t": t,
            "mass": mass(fld),
            "min": fld.min(),
            "max": fld.max(),
        }
        try:
            row["energy_phi"] = energy_phi(fld)
        except ValueError:
            row["energy_phi"] = float("nan")
        for j in traj.slope_modes:
            try:
                row[f"slope_mode_{j}"] = fit_tip_exponent(fld, j, fit_window).slope
            except ValueError:
                row[f"slope_mode_{j}"] = float("nan")
        traj.times.append(t)
        traj.rows.append(row)
        if keep_snapshots:
            traj.snapshots.append((t, fld.values.copy()))

    record(0.0, u)
    t = 0.0
    for k in range(1, n_steps + 1):
        u = step(u, cfg, t, stepper=stepper)
        t = k * cfg.dt
        if k % save_every == 0 or k == n_steps:
            record(t, u)
    if not keep_snapshots:
        traj.snapshots.append((t, u.values.copy()))
    return traj
