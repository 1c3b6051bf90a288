"""Discrete straight model cone: log-radial grid times cross-section.

The radial coordinate is tau = log(x) on [log(x_min), 0], uniformly
spaced, so the grid resolves the tip with geometrically shrinking cells.
Quadrature weights are trapezoidal in tau against the cone volume element
x**(n+1) dtau (that is, x**n dx), tensored with the cross-section weights.

Fields over spectra with a grid basis (circle, sphere) store pointwise
values of shape (n_x, K); fields over custom spectra store per-mode
coefficients.  Nonlinear operations are only defined in the first case.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class ConeGrid:
    spectrum: object
    n: int
    x_min: float
    n_x: int
    tau: np.ndarray
    x: np.ndarray
    dtau: float
    radial_weights: np.ndarray  # x**(n+1) * dtau with trapezoid end factors

    @property
    def cross_size(self):
        return self.spectrum.grid_size

    @property
    def cross_weights(self):
        if self.spectrum.kind == "custom":
            return np.ones(self.spectrum.n_modes)
        return self.spectrum.weights

    def volume(self):
        """Quadrature volume of the truncated cone."""
        return float(self.radial_weights.sum() * self.spectrum.volume)

    def exact_volume(self):
        return (1.0 - self.x_min ** (self.n + 1)) / (self.n + 1) * self.spectrum.volume

    def measure(self):
        """Full (n_x, K) quadrature weights for integrals against x**n dx dy."""
        return np.outer(self.radial_weights, self.cross_weights)


def build_cone_grid(spectrum, n_x=256, x_min=1e-3):
    if not 0.0 < x_min < 1.0:
        raise ValueError(f"x_min must lie in (0, 1), got {x_min}")
    if n_x < 4:
        raise ValueError(f"need at least 4 radial nodes, got {n_x}")
    tau = np.linspace(np.log(x_min), 0.0, n_x)
    x = np.exp(tau)
    dtau = tau[1] - tau[0]
    w = x ** (spectrum.dim_n + 1) * dtau
    w[0] *= 0.5
    w[-1] *= 0.5
    return ConeGrid(
        spectrum=spectrum,
        n=spectrum.dim_n,
        x_min=float(x_min),
        n_x=int(n_x),
        tau=tau,
        x=x,
        dtau=float(dtau),
        radial_weights=w,
    )


@dataclass(eq=False)
class ConeField:
    """Scalar field on the cone grid (pointwise values or mode coefficients)."""

    grid: ConeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.grid.n_x, self.grid.cross_size)
        if self.values.shape != expected:
            raise ValueError(
                f"field values have shape {self.values.shape}, expected {expected}"
            )

    def copy(self):
        return ConeField(self.grid, self.values.copy())

    @property
    def is_pointwise(self):
        return self.grid.spectrum.has_grid

    def min(self):
        return float(self.values.min())

    def max(self):
        return float(self.values.max())

    def to_modes(self):
        """Coefficients against the basis rows, shape (n_x, n_rows)."""
        return self.grid.spectrum.to_coefficients(self.values)

    def mode_coefficients(self, j):
        """Coefficients of mode j per radius, shape (n_x, rows_of_mode_j)."""
        return self.grid.spectrum.project_mode(self.values, j)

    def mode_amplitude(self, j):
        """Euclidean size of the mode-j coefficient vector per radius."""
        c = self.mode_coefficients(j)
        return np.sqrt(np.sum(c * c, axis=1))


def constant_field(grid, value=1.0):
    if grid.spectrum.has_grid:
        vals = np.full((grid.n_x, grid.cross_size), float(value))
    else:
        # coefficient representation: the constant sits on mode 0
        vals = np.zeros((grid.n_x, grid.cross_size))
        vals[:, 0] = float(value)
    return ConeField(grid, vals)


def field_from_function(grid, fn):
    """Sample ``fn(x, node)`` on the grid (pointwise spectra only).

    ``node`` is the angle for a circle and cos(colatitude) for a sphere.
    """
    if not grid.spectrum.has_grid:
        raise ValueError("custom spectra have no pointwise grid")
    X, Y = np.meshgrid(grid.x, grid.spectrum.nodes, indexing="ij")
    return ConeField(grid, np.asarray(fn(X, Y), dtype=float))


def field_from_mode_profiles(grid, profiles):
    """Build a field from radial profiles per mode.

    ``profiles`` maps a mode index to a callable of x (or an array); each
    profile multiplies the first basis row of its mode.
    """
    spec = grid.spectrum
    rows = np.zeros((grid.n_x, spec.basis.shape[0] if spec.has_grid else spec.n_modes))
    for j, prof in profiles.items():
        radial = prof(grid.x) if callable(prof) else np.asarray(prof, dtype=float)
        rows[:, spec.mode_rows(j)[0]] = radial
    return ConeField(grid, spec.from_coefficients(rows))
