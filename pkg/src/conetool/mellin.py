"""Conormal symbol of the cone Laplacian and pole lattice of its inverse.

Per cross-section mode j the conormal symbol of the Laplacian is the
quadratic polynomial ``z**2 - (n-1) z + lambda_j``; its roots are the
indicial roots

    q_j[-+] = (n-1)/2 -+ sqrt(((n-1)/2)**2 - lambda_j).

The symbol of the squared Laplacian factors as ``sym(z+2) * sym(z)``, so
its inverse has candidate poles at the indicial roots and at the roots
shifted by -2.  Pole orders count coinciding root factors per mode; the
order of a location shared by several modes is the per-mode maximum,
because orthogonal eigenprojections cannot cancel each other.
"""

from dataclasses import dataclass
import json
import math

import numpy as np

# locations closer than this are one pole; also the line-hit tolerance
POLE_MERGE_TOL = 1e-9
LINE_TOL = 1e-9


class UnderResolvedSpectrumError(ValueError):
    """The spectrum does not resolve every mode whose poles may enter the window."""


def indicial_roots(n, lam):
    """(q_minus, q_plus) for one eigenvalue of the cross-section Laplacian."""
    if lam > 0:
        raise ValueError(f"cross-section eigenvalues must be <= 0, got {lam}")
    half = 0.5 * (n - 1)
    s = math.sqrt(half * half - lam)
    return half - s, half + s


@dataclass(frozen=True, eq=False)
class MellinSymbol:
    """Conormal symbol of the cone Laplacian (order 2) or its square (order 4)."""

    spectrum: object
    order: int = 2

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError(f"symbol order must be 2 or 4, got {self.order}")

    @property
    def n(self):
        return self.spectrum.dim_n

    def mode_polynomial(self, z, j):
        lam = self.spectrum.eigenvalues[j]
        return z * z - (self.n - 1) * z + lam

    def eval(self, z):
        """Per-mode multiplier of the symbol at a point z (complex allowed)."""
        z = complex(z)
        lam = np.asarray(self.spectrum.eigenvalues, dtype=complex)
        quad = z * z - (self.n - 1) * z + lam
        if self.order == 2:
            return quad
        zs = z + 2.0
        return (zs * zs - (self.n - 1) * zs + lam) * quad

    def mode_root_candidates(self, j):
        """All root locations of the per-mode factor polynomial (with repeats)."""
        qm, qp = indicial_roots(self.n, self.spectrum.eigenvalues[j])
        cands = [(qm, "minus"), (qp, "plus")]
        if self.order == 4:
            cands += [(qm - 2.0, "minus"), (qp - 2.0, "plus")]
        return cands


def eval_symbol(sym, z):
    """Per-mode values of the conormal symbol at z."""
    return sym.eval(z)


@dataclass(frozen=True)
class Pole:
    """One pole of the inverse conormal symbol."""

    location: float
    order: int
    modes: frozenset
    sign: str  # "minus" | "plus" | "both"

    def to_json_dict(self):
        return {
            "q": self.location,
            "order": self.order,
            "modes": sorted(self.modes),
            "sign": self.sign,
        }


@dataclass(frozen=True)
class PoleLattice:
    """Sorted poles of the inverse symbol inside a real window."""

    n: int
    order: int
    window: tuple
    poles: tuple
    eigenvalues: tuple      # from the spectrum, to recover per-mode roots
    multiplicities: tuple   # per-mode eigenspace dimensions

    def locations(self):
        return np.array([p.location for p in self.poles])

    def covers(self, lo, hi):
        return self.window[0] <= lo and hi <= self.window[1]

    def in_interval(self, lo, hi, tol=0.0):
        return [p for p in self.poles if lo + tol < p.location < hi - tol]

    def nearest(self, loc):
        if not self.poles:
            return None
        return min(self.poles, key=lambda p: abs(p.location - loc))

    def at_location(self, loc, tol=POLE_MERGE_TOL):
        p = self.nearest(loc)
        if p is not None and abs(p.location - loc) < tol:
            return p
        return None

    def mode_roots(self, j):
        """(q_minus, q_plus) of mode j."""
        return indicial_roots(self.n, self.eigenvalues[j])

    @property
    def n_modes(self):
        return len(self.eigenvalues)

    def to_json(self):
        return json.dumps([p.to_json_dict() for p in self.poles], indent=2)


def _check_resolution(sym, lo, hi):
    spec = sym.spectrum
    qm, qp = indicial_roots(sym.n, spec.eigenvalues[-1])
    left_ok = qm <= lo + POLE_MERGE_TOL
    right_edge = qp - 2.0 if sym.order == 4 else qp
    right_ok = right_edge >= hi - POLE_MERGE_TOL
    if not (left_ok and right_ok):
        raise UnderResolvedSpectrumError(
            f"spectrum with {spec.n_modes} modes does not safely cover "
            f"({lo}, {hi}); deepest mode has roots ({qm}, {qp})"
        )


def poles_of_inverse(sym, window):
    """All poles of the inverse symbol inside an open real window.

    The spectrum must resolve every mode whose poles could enter the
    window, which is checked through the roots of its deepest mode.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError(f"window must be a nonempty interval, got ({lo}, {hi})")
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("window must be bounded")
    _check_resolution(sym, lo, hi)

    entries = []  # (location, mode, sign)
    for j in range(sym.spectrum.n_modes):
        for loc, sign in sym.mode_root_candidates(j):
            if lo - POLE_MERGE_TOL < loc < hi + POLE_MERGE_TOL:
                entries.append((loc, j, sign))
    entries.sort(key=lambda e: e[0])

    poles = []
    cluster = []
    for entry in entries:
        if cluster and entry[0] - cluster[0][0] > POLE_MERGE_TOL:
            poles.append(_finish_cluster(cluster))
            cluster = []
        cluster.append(entry)
    if cluster:
        poles.append(_finish_cluster(cluster))
    poles = [p for p in poles if lo < p.location < hi]
    return PoleLattice(
        n=sym.n,
        order=sym.order,
        window=(lo, hi),
        poles=tuple(poles),
        eigenvalues=tuple(sym.spectrum.eigenvalues),
        multiplicities=tuple(sym.spectrum.multiplicities),
    )


def _finish_cluster(cluster):
    locs = [e[0] for e in cluster]
    per_mode = {}
    signs = set()
    for loc, j, sign in cluster:
        per_mode[j] = per_mode.get(j, 0) + 1
        signs.add(sign)
    order = max(per_mode.values())
    sign = signs.pop() if len(signs) == 1 else "both"
    return Pole(
        location=float(np.mean(locs)),
        order=order,
        modes=frozenset(per_mode),
        sign=sign,
    )


@dataclass(frozen=True)
class EllipticityResult:
    elliptic: bool
    line: float
    gamma: float
    witness: Pole | None
    # the rescaled principal symbol of the Laplacian never vanishes away
    # from the zero section, so only the line condition can fail
    principal_symbol_ok: bool = True

    def __bool__(self):
        return self.elliptic


def is_elliptic_on_line(sym, gamma):
    """Check invertibility of the symbol on the weight line of ``gamma``.

    The line sits at real part ``(n+1)/2 - gamma``.  Returns an
    :class:`EllipticityResult`; when not elliptic the offending pole is
    attached as witness.
    """
    line = (sym.n + 1) / 2.0 - gamma
    spec = sym.spectrum
    qm_last, qp_last = indicial_roots(sym.n, spec.eigenvalues[-1])
    hi_edge = qp_last - 2.0 if sym.order == 4 else qp_last
    if not (qm_last - POLE_MERGE_TOL <= line <= hi_edge + POLE_MERGE_TOL):
        raise UnderResolvedSpectrumError(
            f"spectrum does not resolve the line at {line}"
        )
    hits = []
    for j in range(spec.n_modes):
        for loc, sign in sym.mode_root_candidates(j):
            if abs(loc - line) < LINE_TOL:
                hits.append((loc, j, sign))
    if not hits:
        return EllipticityResult(True, line, gamma, None)
    return EllipticityResult(False, line, gamma, _finish_cluster(hits))
