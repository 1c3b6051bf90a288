"""Quadrature diagnostics and structural verifiers for cone fields.

Mass and energy integrate against the cone volume element; the gradient
part of the energy is taken through the quadratic form of the assembled
operator, so sealed caps and the tip decay condition enter consistently.
Weighted norms use the radial weight x**((n+1)/2 - gamma) on the log
grid, matching the power-law membership rule: x**(-q) profiles have
finite weighted norm exactly when q < (n+1)/2 - gamma.
"""

from dataclasses import dataclass
import math

import numpy as np

from .operators import build_cone_laplacian


class NoSignalError(ValueError):
    """The requested mode coefficient is below the detection floor."""


def mass(field):
    """Integral of the field against the cone volume element."""
    g = field.grid
    if g.spectrum.has_grid:
        return float(np.sum(field.values * g.measure()))
    # coefficient fields: only the constant mode carries volume
    return float(np.dot(g.radial_weights, field.values[:, 0])
                 * math.sqrt(g.spectrum.volume))


def gradient_energy(field, bc_inner="asymptotic_robin", laplacian=None):
    """Dirichlet energy through the operator form, -<L u, u>."""
    lap = laplacian or build_cone_laplacian(field.grid, bc_inner)
    lu = lap.apply(field.values)
    w = field.grid.measure() if field.grid.spectrum.has_grid else \
        field.grid.radial_weights[:, None]
    return float(-np.sum(lu * field.values * w))


def energy_phi(field, bc_inner="asymptotic_robin", laplacian=None):
    """Double-well energy: half the Dirichlet energy plus quarter of
    the L2 distance of u**2 from 1."""
    if not field.grid.spectrum.has_grid:
        raise ValueError("the double-well energy needs pointwise values")
    w = field.grid.measure()
    grad = gradient_energy(field, bc_inner, laplacian)
    well = float(np.sum((field.values**2 - 1.0) ** 2 * w))
    return 0.5 * grad + 0.25 * well


def weighted_norm(field, gamma, s=0):
    """Weighted Sobolev norm of smoothness s in {0, 1} at weight gamma."""
    if s not in (0, 1):
        raise ValueError("only s = 0 or 1 are provided")
    g = field.grid
    n = g.n
    radial = g.x ** (n + 1.0 - 2.0 * gamma) * g.dtau
    radial[0] *= 0.5
    radial[-1] *= 0.5
    cw = g.cross_weights if g.spectrum.has_grid else np.ones(g.cross_size)

    total = float(np.sum(radial[:, None] * cw[None, :] * field.values**2))
    if s == 1:
        # radial derivative at faces, face-centered weight
        du = (field.values[1:] - field.values[:-1]) / g.dtau
        xf = np.exp(0.5 * (g.tau[1:] + g.tau[:-1]))
        wf = xf ** (n + 1.0 - 2.0 * gamma) * g.dtau
        total += float(np.sum(wf[:, None] * cw[None, :] * du**2))
        # cross-section derivative through the eigen-expansion
        coeffs = field.to_modes()
        lam = g.spectrum.row_eigenvalue
        total += float(np.sum(radial[:, None] * (-lam)[None, :] * coeffs**2))
    return math.sqrt(total)


# -- comparison ---------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonVerdict:
    status: str              # "pass" | "fail" | "precondition_violated"
    max_violation: float     # worst amount by which u exceeded v
    time: float | None       # when the worst violation occurred

    def __bool__(self):
        return self.status == "pass"


def comparison_check(u_traj, v_traj, tol):
    """Pointwise ordering u <= v + tol across all stored snapshots.

    Initial data must already be ordered; crossing initial data is a
    precondition violation, not a comparison failure.
    """
    if u_traj.grid is not v_traj.grid and \
            u_traj.grid.n_x != v_traj.grid.n_x:
        raise ValueError("trajectories live on different grids")
    tu = [t for t, _ in u_traj.snapshots]
    tv = [t for t, _ in v_traj.snapshots]
    if len(tu) != len(tv) or any(abs(a - b) > 1e-12 for a, b in zip(tu, tv)):
        raise ValueError("trajectories store different time points")

    u0, v0 = u_traj.snapshots[0][1], v_traj.snapshots[0][1]
    if np.any(u0 > v0 + 1e-14):
        return ComparisonVerdict("precondition_violated",
                                 float(np.max(u0 - v0)), tu[0])
    worst, when = -np.inf, None
    for (t, uu), (_, vv) in zip(u_traj.snapshots, v_traj.snapshots):
        gap = float(np.max(uu - vv))
        if gap > worst:
            worst, when = gap, t
    status = "pass" if worst <= tol else "fail"
    return ComparisonVerdict(status, worst, when)


# -- tip exponents ------------------------------------------------------------


@dataclass(frozen=True)
class TipFit:
    slope: float
    stderr: float
    n_points: int
    window: tuple


def fit_amplitude_series(x, amp, fit_window, floor=1e-13, label="mode"):
    """Least-squares slope of log amplitude against log x over a window."""
    lo, hi = fit_window
    x = np.asarray(x, dtype=float)
    amp = np.asarray(amp, dtype=float)
    sel = (x >= lo) & (x <= hi)
    if sel.sum() < 3:
        raise ValueError(f"fit window ({lo}, {hi}) holds fewer than 3 nodes")
    amp = amp[sel]
    if float(amp.max(initial=0.0)) < floor:
        raise NoSignalError(f"{label} amplitude below {floor} in the fit window")
    if float(amp.min()) <= 0.0:
        raise NoSignalError(f"{label} amplitude crosses zero in the fit window")
    lx = np.log(x[sel])
    ly = np.log(amp)
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    dof = max(1, len(lx) - 2)
    var = (res[0] / dof if res.size else 0.0)
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    stderr = math.sqrt(var / sxx) if sxx > 0 else float("inf")
    return TipFit(slope=float(coef[0]), stderr=stderr,
                  n_points=int(sel.sum()), window=(lo, hi))


def fit_tip_exponent(field, j, fit_window, floor=1e-13):
    """Least-squares slope of log mode amplitude against log x.

    The expected tip behavior of mode j is the power |q_j^-|, so the
    fitted slope of a settled solution approaches that value.
    """
    return fit_amplitude_series(field.grid.x, field.mode_amplitude(j),
                                fit_window, floor=floor, label=f"mode {j}")


# -- weak form ----------------------------------------------------------------


def _grad_pairing(grid, a, b, laplacian):
    """<grad a, grad b> integrated over the cone, via the operator form."""
    la = laplacian.apply(a)
    w = grid.measure() if grid.spectrum.has_grid else grid.radial_weights[:, None]
    return float(-np.sum(la * b * w))


def weak_residual(traj, phi, dphi=None, m=None, bc_inner=None):
    """Residual of the distributional identity satisfied by diffusion flows.

    For a trajectory v of d_t v = Lap(v^m) and a test field phi(t) that
    vanishes at the final time, the quadrature of

        integral( <grad phi, grad v^m> - (d_t phi) v ) dt d(mu)
            - integral( phi(0) v(0) ) d(mu)

    is returned; it shrinks with grid and step refinement for strong
    solutions.  ``phi`` maps a time to field values; ``dphi`` may supply
    the exact time derivative, otherwise centered differences of the
    sampled test field are used.
    """
    if not traj.snapshots or len(traj.snapshots) < 3:
        raise ValueError("the trajectory must store snapshots at every step")
    grid = traj.grid
    if m is None:
        m = traj.cfg.m if traj.cfg.equation in ("pme", "fpme") else 1.0
    lap = build_cone_laplacian(grid, bc_inner or traj.cfg.bc_inner)
    times = np.array([t for t, _ in traj.snapshots])
    phis = [np.asarray(phi(t), dtype=float) for t in times]
    if float(np.max(np.abs(phis[-1]))) > 1e-12:
        raise ValueError("the test field must vanish at the final time")

    if dphi is not None:
        dphis = [np.asarray(dphi(t), dtype=float) for t in times]
    else:
        dphis = []
        for i in range(len(times)):
            if i == 0:
                d = (phis[1] - phis[0]) / (times[1] - times[0])
            elif i == len(times) - 1:
                d = (phis[-1] - phis[-2]) / (times[-1] - times[-2])
            else:
                d = (phis[i + 1] - phis[i - 1]) / (times[i + 1] - times[i - 1])
            dphis.append(d)

    w = grid.measure() if grid.spectrum.has_grid else grid.radial_weights[:, None]
    integrand = np.empty(len(times))
    for i, (t, v) in enumerate(traj.snapshots):
        vm = v**m if m != 1.0 else v
        integrand[i] = _grad_pairing(grid, phis[i], vm, lap) \
            - float(np.sum(dphis[i] * v * w))
    trapz = getattr(np, "trapezoid", None) or np.trapz
    time_integral = float(trapz(integrand, times))
    initial = float(np.sum(phis[0] * traj.snapshots[0][1] * w))
    return time_integral - initial
