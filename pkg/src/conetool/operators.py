"""Discrete cone Laplacian: radial flux form, full-field application,
coupled implicit solves and spectral fractional powers.

Per cross-section mode the operator is

    L_j u = x**(-(n+1)) d_tau( x**(n-1) d_tau u ) + lambda_j x**(-2) u,

discretized in conservative flux form on the tau grid so that it is
symmetric under the measure-weighted inner product and exactly
mass-conserving with sealed caps.  The outer boundary always carries a
zero-flux cap.  The inner cap either imposes zero flux (``neumann_tau``)
or the tip-decay condition d_tau u = -q_j^- u (``asymptotic_robin``),
which is exact on the pure power profile x**(-q_j^-).
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .mellin import indicial_roots

BC_INNER = ("asymptotic_robin", "neumann_tau")


@dataclass(eq=False)
class RadialOperator:
    """Radial operator of one mode in conservative flux form.

    ``matvec`` evaluates fluxes through the value jumps directly, so
    constants are annihilated exactly (for the zero eigenvalue); the
    assembled tridiagonal is used by the implicit solvers.
    """

    a_face: np.ndarray    # flux coefficient per interior face
    inv_w: np.ndarray     # reciprocal radial measure weights
    weights: np.ndarray   # radial measure weights (symmetrizing diagonal)
    zeroth: np.ndarray    # lambda / x**2 diagonal term
    robin0: float         # inner-cap decay term added at the first node

    @property
    def n(self):
        return len(self.inv_w)

    def matvec(self, u):
        flux = self.a_face * (u[1:] - u[:-1])
        out = np.zeros_like(u)
        out[:-1] += flux
        out[1:] -= flux
        out *= self.inv_w
        out += self.zeroth * u
        out[0] += self.robin0 * u[0]
        return out

    @property
    def bands(self):
        """(3, n_x) banded form: super, diagonal, sub rows."""
        b = np.zeros((3, self.n))
        sup = self.a_face * self.inv_w[:-1]
        sub = self.a_face * self.inv_w[1:]
        b[0][1:] = sup
        b[2][:-1] = sub
        b[1][:-1] -= sup
        b[1][1:] -= sub
        b[1] += self.zeroth
        b[1][0] += self.robin0
        return b

    def as_sparse(self):
        b = self.bands
        return scipy.sparse.diags(
            [b[2][:-1], b[1], b[0][1:]],
            offsets=[-1, 0, 1], shape=(self.n, self.n), format="csr")

    def as_dense(self):
        return self.as_sparse().toarray()

    def symmetric_eigh(self):
        """Eigenpairs of the operator, orthonormal in the weighted inner product.

        Returns (mu, V) with columns of V satisfying  L v = -mu v  and
        V.T diag(w) V = I; mu >= 0 up to roundoff.
        """
        d = np.sqrt(self.weights)
        sym = self.as_dense() * (d[:, None] / d[None, :])
        sym = 0.5 * (sym + sym.T)
        mu, U = np.linalg.eigh(-sym)
        return mu, U / d[:, None]


def assemble_laplacian(grid, j, bc_inner="asymptotic_robin"):
    """Radial operator of mode j in conservative flux form."""
    if bc_inner not in BC_INNER:
        raise ValueError(f"unknown inner boundary condition {bc_inner!r}")
    lam = grid.spectrum.eigenvalues[j]
    n = grid.n
    qm = indicial_roots(n, lam)[0]

    tau, dtau, x, w = grid.tau, grid.dtau, grid.x, grid.radial_weights
    x_face = np.exp(0.5 * (tau[1:] + tau[:-1]))
    a_face = x_face ** (n - 1) / dtau  # flux per unit value jump

    robin0 = 0.0
    if bc_inner == "asymptotic_robin":
        robin0 = qm * x[0] ** (n - 1) / w[0]
    return RadialOperator(
        a_face=a_face,
        inv_w=1.0 / w,
        weights=w.copy(),
        zeroth=lam / x**2,
        robin0=float(robin0),
    )


@dataclass(eq=False)
class ConeLaplacian:
    """Full cone Laplacian with per-mode radial parts and cross coupling."""

    grid: object
    bc_inner: str
    radial: list            # RadialOperator per basis row
    cross: np.ndarray       # (K, K) link Laplacian on the cross grid
    robin: np.ndarray       # (K, K) inner-cap decay-rate operator
    a_face: np.ndarray      # mode-independent radial flux coefficients
    inv_w: np.ndarray       # reciprocal radial measure weights

    @property
    def row_count(self):
        return len(self.radial)

    @property
    def base_bands(self):
        """(3, n_x) banded form of the lambda-free radial stencil."""
        b = np.zeros((3, self.grid.n_x))
        sup = self.a_face * self.inv_w[:-1]
        sub = self.a_face * self.inv_w[1:]
        b[0][1:] = sup
        b[2][:-1] = sub
        b[1][:-1] -= sup
        b[1][1:] -= sub
        return b

    def apply_modes(self, coeffs):
        """Apply to basis-row coefficients of shape (n_x, n_rows)."""
        out = np.empty_like(coeffs)
        for r, op in enumerate(self.radial):
            out[:, r] = op.matvec(coeffs[:, r])
        return out

    def apply(self, values):
        """Apply to pointwise values of shape (n_x, K).

        The field is expanded in the resolved modes, so content outside
        the resolved span is projected away.
        """
        spec = self.grid.spectrum
        if not spec.has_grid:
            return self.apply_modes(values)
        return spec.from_coefficients(self.apply_modes(spec.to_coefficients(values)))

    def block_apply(self, values):
        """Flux-form application in physical space (no mode projection
        of the radial part)."""
        g = self.grid
        flux = self.a_face[:, None] * (values[1:] - values[:-1])
        out = np.zeros_like(values)
        out[:-1] += flux
        out[1:] -= flux
        out *= self.inv_w[:, None]
        out += (values @ self.cross.T) / g.x[:, None] ** 2
        out[0] += (g.x[0] ** (g.n - 1) * self.inv_w[0]) * (self.robin @ values[0])
        return out


def build_cone_laplacian(grid, bc_inner="asymptotic_robin"):
    spec = grid.spectrum
    radial = [
        assemble_laplacian(grid, int(j), bc_inner) for j in spec.row_mode
    ]
    lam_rows = spec.row_eigenvalue
    q_rows = np.array([indicial_roots(grid.n, lam)[0] for lam in lam_rows])
    if spec.has_grid:
        bt = spec.basis * spec.weights  # rows scaled for the weighted transform
        cross = (spec.basis * lam_rows[:, None]).T @ bt
        robin = (spec.basis * q_rows[:, None]).T @ bt
    else:
        cross = np.diag(lam_rows)
        robin = np.diag(q_rows)
    if bc_inner == "neumann_tau":
        robin = np.zeros_like(robin)

    x_face = np.exp(0.5 * (grid.tau[1:] + grid.tau[:-1]))
    a_face = x_face ** (grid.n - 1) / grid.dtau
    return ConeLaplacian(
        grid=grid, bc_inner=bc_inner, radial=radial,
        cross=cross, robin=robin,
        a_face=a_face, inv_w=1.0 / grid.radial_weights,
    )


def apply_full_laplacian(field, bc_inner="asymptotic_robin", laplacian=None):
    """Cone Laplacian of a field: per-mode radial parts, recomposed."""
    from .grid import ConeField

    lap = laplacian or build_cone_laplacian(field.grid, bc_inner)
    return ConeField(field.grid, lap.apply(field.values))


# -- coupled implicit solves --------------------------------------------------


def solve_shifted(lap, dt, rhs, diag_right=None, diag_left=None):
    """Solve (I - dt * B) u = rhs with B built from the cone Laplacian.

    ``diag_right`` multiplies before the Laplacian (B = Lap o diag),
    ``diag_left`` after it (B = diag o Lap); both are (n_x, K) arrays.
    The system is banded with bandwidth K on either side.
    """
    g = lap.grid
    nx, K = rhs.shape
    kl = ku = K
    ab = np.zeros((2 * K + 1, nx * K))

    base = lap.base_bands
    sub, dia, sup = base[2], base[1], base[0]
    x2 = g.x**2
    robin_scale = g.x[0] ** (g.n - 1) / g.radial_weights[0]

    # dense diagonal blocks: D_i = dia_i I + cross / x_i^2 (+ robin at i=0)
    blocks = np.broadcast_to(lap.cross, (nx, K, K)) / x2[:, None, None]
    blocks = blocks + dia[:, None, None] * np.eye(K)[None, :, :]
    blocks = blocks.copy()
    blocks[0] += robin_scale * lap.robin
    if diag_right is not None:
        blocks = blocks * diag_right[:, None, :]
    if diag_left is not None:
        blocks = blocks * diag_left[:, :, None]
    blocks = -dt * blocks
    blocks += np.eye(K)[None, :, :]

    idx = np.arange(nx * K)
    for r in range(K):
        for c in range(K):
            cols = idx.reshape(nx, K)[:, c]
            ab[K + r - c, cols] = blocks[:, r, c]

    # off-diagonal radial neighbors are diagonal in the cross index
    up = sup[1:]        # couples row block i to block i+1, i = 0..nx-2
    dn = sub[:-1]       # couples row block i to block i-1, i = 1..nx-1
    for c in range(K):
        cols_up = idx.reshape(nx, K)[1:, c]     # column j = (i+1)*K + c
        cols_dn = idx.reshape(nx, K)[:-1, c]    # column j = (i-1)*K + c
        scale_up = diag_right[1:, c] if diag_right is not None else 1.0
        scale_dn = diag_right[:-1, c] if diag_right is not None else 1.0
        left_up = diag_left[:-1, c] if diag_left is not None else 1.0
        left_dn = diag_left[1:, c] if diag_left is not None else 1.0
        ab[K + (-K), cols_up] = -dt * up * scale_up * left_up
        ab[K + K, cols_dn] = -dt * dn * scale_dn * left_dn
    sol = scipy.linalg.solve_banded((kl, ku), ab, rhs.reshape(-1))
    return sol.reshape(nx, K)


# -- fractional powers ---------------------------------------------------------


class FractionalApplier:
    """Spectral fractional powers of the positive cone operator, per mode row.

    Eigendecompositions are cached; the zero eigenvalue of the sealed
    constant mode maps to zero, extending the power by 0 on constants.
    Rows with an exact constant kernel are deflated by their weighted
    mean first, so constants map to zero exactly and eigen-roundoff
    cannot leak through the kernel at stiff truncations.
    """

    def __init__(self, lap):
        self.lap = lap
        self._eigs = None
        lam = lap.grid.spectrum.row_eigenvalue
        self._kernel_row = [
            bool(lam[r] == 0.0 and lap.radial[r].robin0 == 0.0)
            for r in range(len(lam))
        ]
        self._w = lap.grid.radial_weights
        self._wsum = float(np.sum(self._w))

    def _decompose(self):
        if self._eigs is not None:
            return self._eigs
        eigs = []
        for op in self.lap.radial:
            mu, V = op.symmetric_eigh()
            scale = max(1.0, float(mu.max()))
            if mu.min() < -1e-10 * scale:
                raise ValueError(
                    f"negative eigenvalue {mu.min()} of the positive operator; "
                    "boundary assembly is inconsistent"
                )
            # the sealed constant mode is an exact kernel vector; roundoff
            # leaves it at eps * ||L||, which small powers would amplify
            mu[np.abs(mu) < 1e-12 * scale] = 0.0
            mu = np.clip(mu, 0.0, None)
            W = (V * op.weights[:, None]).T  # maps values to eigen-coefficients
            eigs.append((mu, V, W))
        self._eigs = eigs
        return eigs

    def apply_modes(self, coeffs, sigma, shift_solve=None):
        """Apply (-L)**sigma row-wise to mode coefficients.

        With ``shift_solve = (dt, abar)`` the result is instead
        (I + dt*abar*(-L)**sigma)^{-1} coeffs, used by the semi-implicit
        fractional stepper.
        """
        out = np.empty_like(coeffs)
        for r, (mu, V, W) in enumerate(self._decompose()):
            col = coeffs[:, r]
            mean = 0.0
            if self._kernel_row[r]:
                mean = float(np.dot(self._w, col)) / self._wsum
                col = col - mean
            c = W @ col
            if shift_solve is None:
                res = V @ (mu**sigma * c)
                if self._kernel_row[r]:
                    res -= float(np.dot(self._w, res)) / self._wsum
            else:
                dt, abar = shift_solve
                res = V @ (c / (1.0 + dt * abar * mu**sigma))
                if self._kernel_row[r]:
                    res -= float(np.dot(self._w, res)) / self._wsum
                    res += mean
            out[:, r] = res
        return out

    def apply(self, values, sigma):
        spec = self.lap.grid.spectrum
        if not 0.0 < sigma <= 1.0:
            raise ValueError(f"sigma must lie in (0, 1], got {sigma}")
        if not spec.has_grid:
            return self.apply_modes(values, sigma)
        coeffs = spec.to_coefficients(values)
        return spec.from_coefficients(self.apply_modes(coeffs, sigma))


def fractional_apply(field, sigma, bc_inner="asymptotic_robin", applier=None):
    """(-Laplacian)**sigma of a field through the mode-wise eigendecomposition."""
    from .grid import ConeField

    app = applier or FractionalApplier(build_cone_laplacian(field.grid, bc_inner))
    return ConeField(field.grid, app.apply(field.values, sigma))
