"""Cross-section spectra of the Laplace-Beltrami operator on the cone link.

Three kinds of cross-sections are supported:

* ``circle``  -- a circle of circumference ``2*pi*scale`` (metric
  ``scale**2 dtheta**2``), eigenvalues ``-(j/scale)**2``.  The discrete
  representation is a uniform angular grid; the stored modes are sampled
  trigonometric functions, which are exact eigenvectors of the continuum
  operator on that grid.
* ``sphere``  -- the round unit n-sphere, n >= 2, eigenvalues
  ``-j*(j+n-1)``.  Only the zonal (rotation invariant) sector is carried
  on a Gauss-Jacobi grid in cos(colatitude); the reported multiplicities
  are the full eigenspace dimensions.
* ``custom``  -- a user supplied eigenvalue list with no mode basis.
  Fields over a custom spectrum live in coefficient space and only
  per-mode linear equations can be solved on them.

All discrete mode bases are orthonormal with respect to the quadrature
inner product weighted by the cross-section volume element.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import eval_gegenbauer, roots_jacobi

# eigenvalues closer than this are merged into one multiplicity class
MERGE_TOL = 1e-9


def sphere_eigenvalue(j, n):
    """j-th distinct eigenvalue of the Laplacian on the round unit n-sphere."""
    return -float(j * (j + n - 1)) if j else 0.0


def sphere_multiplicity(j, n):
    """Dimension of the degree-j eigenspace on the n-sphere."""
    if j == 0:
        return 1
    if j == 1:
        return n + 1
    return math.comb(n + j, j) - math.comb(n + j - 2, j - 2)


def sphere_volume(n):
    """Riemannian volume of the round unit n-sphere."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


@dataclass(frozen=True, eq=False)
class CrossSectionSpectrum:
    """Eigenvalues, multiplicities and discrete eigenmodes of the link Laplacian.

    ``eigenvalues`` are strictly decreasing with ``eigenvalues[0] == 0``;
    ``multiplicities`` are the true eigenspace dimensions.  For discretized
    kinds, ``basis`` holds orthonormal grid vectors stacked row-wise; row
    ``r`` belongs to mode ``row_mode[r]``.  Custom spectra have no grid:
    ``basis`` is the identity on coefficient space and ``weights`` sum to 1.
    """

    kind: str
    dim_n: int
    eigenvalues: tuple
    multiplicities: tuple
    scale: float | None = None
    nodes: np.ndarray | None = None     # circle: angles; sphere: cos(colatitude)
    weights: np.ndarray | None = None   # quadrature weights, sum = volume
    basis: np.ndarray | None = None     # (n_rows, K) orthonormal rows
    row_mode: np.ndarray | None = None  # (n_rows,) mode index per basis row

    @property
    def n_modes(self):
        return len(self.eigenvalues)

    @property
    def grid_size(self):
        return self.n_modes if self.kind == "custom" else len(self.nodes)

    @property
    def volume(self):
        if self.kind == "custom":
            return 1.0
        return float(np.sum(self.weights))

    @property
    def has_grid(self):
        return self.kind != "custom"

    @property
    def row_eigenvalue(self):
        lam = np.asarray(self.eigenvalues)
        return lam[self.row_mode]

    def mode_rows(self, j):
        """Indices of the basis rows spanning the discrete eigenspace of mode j."""
        if not 0 <= j < self.n_modes:
            raise IndexError(f"mode index {j} out of range (have {self.n_modes})")
        return np.nonzero(self.row_mode == j)[0]

    # -- inner product and projections ------------------------------------

    def inner(self, u, v):
        """Discrete L2 inner product on the cross-section."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.kind == "custom":
            return float(np.dot(u, v))
        return float(np.dot(u * self.weights, v))

    def to_coefficients(self, values):
        """Expand grid values in the orthonormal mode basis.

        Returns coefficients for every basis row; also works on stacked
        input of shape (..., K).
        """
        values = np.asarray(values, dtype=float)
        if self.kind == "custom":
            return values.copy()
        return values @ (self.basis * self.weights).T

    def from_coefficients(self, coeffs):
        """Reconstruct grid values from basis-row coefficients."""
        coeffs = np.asarray(coeffs, dtype=float)
        if self.kind == "custom":
            return coeffs.copy()
        return coeffs @ self.basis

    def project_mode(self, values, j):
        """Coefficients of ``values`` against the orthonormal basis of mode j."""
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.grid_size:
            raise ValueError(
                f"values have length {values.shape[-1]}, grid has {self.grid_size}"
            )
        rows = self.mode_rows(j)
        if self.kind == "custom":
            return values[..., rows]
        return values @ (self.basis[rows] * self.weights).T

    def apply_cross_laplacian(self, values):
        """Apply the link Laplacian through its eigen-expansion."""
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite values")
        coeffs = self.to_coefficients(values)
        coeffs = coeffs * self.row_eigenvalue
        return self.from_coefficients(coeffs)

    def reconstruct(self, values):
        """Project grid values onto the resolved mode span."""
        return self.from_coefficients(self.to_coefficients(values))

    def to_json_dict(self):
        return {
            "kind": self.kind,
            "n": self.dim_n,
            "eigenvalues": list(self.eigenvalues),
            "multiplicities": list(self.multiplicities),
        }


def _merge_close(eigenvalues, multiplicities):
    """Merge eigenvalues closer than MERGE_TOL into one multiplicity class."""
    merged_vals = []
    merged_mult = []
    for lam, mult in zip(eigenvalues, multiplicities):
        if merged_vals and abs(lam - merged_vals[-1]) < MERGE_TOL:
            merged_mult[-1] += mult
        else:
            merged_vals.append(lam)
            merged_mult.append(mult)
    return merged_vals, merged_mult


def _build_circle(n_modes, scale, grid_points):
    if scale is None or scale <= 0:
        raise ValueError(f"circle scale must be positive, got {scale}")
    if grid_points is None:
        grid_points = max(8, 4 * (n_modes - 1))
    top = n_modes - 1
    if 2 * top >= grid_points and top > 0:
        raise ValueError(
            f"{n_modes} modes need more than {grid_points} grid points "
            "(highest frequency must stay below the Nyquist limit)"
        )
    theta = 2.0 * math.pi * np.arange(grid_points) / grid_points
    weights = np.full(grid_points, scale * 2.0 * math.pi / grid_points)
    volume = 2.0 * math.pi * scale

    eigenvalues = [0.0 if j == 0 else -((j / scale) ** 2) for j in range(n_modes)]
    multiplicities = [1] + [2] * (n_modes - 1)

    rows = [np.full(grid_points, 1.0 / math.sqrt(volume))]
    row_mode = [0]
    for j in range(1, n_modes):
        norm = math.sqrt(math.pi * scale)
        rows.append(np.cos(j * theta) / norm)
        rows.append(np.sin(j * theta) / norm)
        row_mode += [j, j]
    return CrossSectionSpectrum(
        kind="circle",
        dim_n=1,
        eigenvalues=tuple(eigenvalues),
        multiplicities=tuple(multiplicities),
        scale=float(scale),
        nodes=theta,
        weights=weights,
        basis=np.array(rows),
        row_mode=np.array(row_mode),
    )


def _build_sphere(n_modes, dim_n, grid_points):
    if dim_n is None or dim_n < 2:
        raise ValueError(f"sphere cross-section needs dimension >= 2, got {dim_n}")
    if grid_points is None:
        grid_points = max(8, 2 * (n_modes - 1) + 2)
    if n_modes > grid_points:
        raise ValueError(
            f"{n_modes} modes exceed the {grid_points}-point quadrature resolution"
        )
    # zonal sector: Gauss-Jacobi nodes in u = cos(colatitude),
    # weight (1-u^2)^((n-2)/2); basis rows are normalized Gegenbauer polynomials
    alpha = (dim_n - 2) / 2.0
    u, w = roots_jacobi(grid_points, alpha, alpha)
    weights = w * sphere_volume(dim_n - 1)

    eigenvalues = [sphere_eigenvalue(j, dim_n) for j in range(n_modes)]
    multiplicities = [sphere_multiplicity(j, dim_n) for j in range(n_modes)]

    rows = []
    for j in range(n_modes):
        vals = eval_gegenbauer(j, (dim_n - 1) / 2.0, u) if j > 0 else np.ones_like(u)
        norm = math.sqrt(np.dot(vals * weights, vals))
        rows.append(vals / norm)
    return CrossSectionSpectrum(
        kind="sphere",
        dim_n=dim_n,
        eigenvalues=tuple(eigenvalues),
        multiplicities=tuple(multiplicities),
        nodes=u,
        weights=weights,
        basis=np.array(rows),
        row_mode=np.arange(n_modes),
    )


def _build_custom(eigenvalues, multiplicities, dim_n):
    if dim_n is None or dim_n < 1:
        raise ValueError(f"custom spectrum needs a cross-section dimension, got {dim_n}")
    if eigenvalues is None or len(eigenvalues) == 0:
        raise ValueError("custom spectrum needs a non-empty eigenvalue list")
    lam = sorted(float(v) for v in eigenvalues)[::-1]
    if multiplicities is None:
        mult = [1] * len(lam)
    else:
        if len(multiplicities) != len(eigenvalues):
            raise ValueError("multiplicities must align with eigenvalues")
        order = np.argsort([-float(v) for v in eigenvalues], kind="stable")
        mult = [int(multiplicities[i]) for i in order]
    lam, mult = _merge_close(lam, mult)
    if np.iscomplexobj(np.asarray(eigenvalues)):
        raise ValueError("complex eigenvalues are not supported")
    if abs(lam[0]) > MERGE_TOL:
        raise ValueError(f"leading eigenvalue must be 0, got {lam[0]}")
    lam[0] = 0.0
    if any(v > 0 for v in lam):
        raise ValueError("eigenvalues must be nonpositive")
    if any(m < 1 for m in mult):
        raise ValueError("multiplicities must be positive")
    return CrossSectionSpectrum(
        kind="custom",
        dim_n=dim_n,
        eigenvalues=tuple(lam),
        multiplicities=tuple(mult),
        basis=np.eye(len(lam)),
        row_mode=np.arange(len(lam)),
    )


def build_cross_section(kind, n_modes=4, *, scale=1.0, dim_n=None,
                        eigenvalues=None, multiplicities=None, grid_points=None):
    """Construct a :class:`CrossSectionSpectrum`.

    Parameters
    ----------
    kind : "circle" | "sphere" | "custom"
    n_modes : number of distinct eigenvalues to resolve (>= 1)
    scale : circle circumference divided by 2*pi (circle only)
    dim_n : cross-section dimension (sphere: >= 2; custom: >= 1)
    eigenvalues, multiplicities : custom spectra only
    grid_points : override the default discretization resolution
    """
    if kind != "custom" and n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    if kind == "circle":
        if dim_n not in (None, 1):
            raise ValueError("a circle cross-section has dimension 1")
        return _build_circle(n_modes, scale, grid_points)
    if kind == "sphere":
        return _build_sphere(n_modes, dim_n, grid_points)
    if kind == "custom":
        return _build_custom(eigenvalues, multiplicities, dim_n)
    raise ValueError(f"unknown cross-section kind {kind!r}")
