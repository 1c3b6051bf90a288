"""Weight windows, asymptotics spaces, closed-extension domains and
functional-calculus admissibility for the cone Laplacian.

A weight ``gamma`` positions the reference line at ``(n+1)/2 - gamma``.
The open interval between that line and its shift by the operator order
collects the power-law profiles ``x**(-q)`` that can be adjoined to the
minimal Sobolev core; each pole of the inverse conormal symbol inside the
interval contributes one finite-dimensional asymptotics space.

Admissibility of a domain choice for the bounded holomorphic functional
calculus is decided by an orthocomplement pairing across mirrored pole
locations ``q <-> n-1-q`` on the symmetric part of the window, together
with full-space / zero-space requirements on the one-sided part.  Only
three selection granularities appear: the zero space, the full space, and
the constants slice at exponent 0.
"""

from dataclasses import dataclass

import numpy as np

from .mellin import POLE_MERGE_TOL

ENDPOINT_TOL = 1e-9
DEFAULT_INTERP_EPS = 1e-3

WINDOW_MODES = ("constants", "all_modes", "bilaplacian")
DOMAIN_FLAVORS = ("minimal", "maximal", "constants", "full_tail", "bilaplacian", "custom")


class WeightOnPoleError(ValueError):
    """A weight line (or its shift) sits on a pole of the inverse symbol."""


class IncompatibleDomainError(ValueError):
    """The requested domain preset cannot be formed in the given window."""


@dataclass(frozen=True)
class WeightConfig:
    """Address of a cone Sobolev space: dimension, smoothness, weight, p, q."""

    n: int
    s: float
    gamma: float
    p: float
    q: float

    def __post_init__(self):
        if not 1.0 < self.p < np.inf:
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if not 1.0 < self.q < np.inf:
            raise ValueError(f"q must lie in (1, inf), got {self.q}")

    def line(self, shift=0.0):
        """Real part of the reference weight line, optionally shifted down."""
        return (self.n + 1) / 2.0 - self.gamma - shift


def interval_for(config, mu):
    """Open exponent window between the shifted and unshifted weight lines."""
    if mu not in (2, 4):
        raise ValueError(f"operator order must be 2 or 4, got {mu}")
    return (config.line(mu), config.line(0.0))


def membership_x_power(q_loc, k, gamma, n):
    """Whether ``x**(-q_loc) * log(x)**k`` profiles lie in the weight-gamma scale.

    Membership is strict and independent of the logarithmic power k;
    exponents within 1e-12 of the threshold count as the boundary case
    and are excluded.
    """
    if k < 0:
        raise ValueError("log power must be >= 0")
    bound = (n + 1) / 2.0 - gamma
    if abs(q_loc - bound) < 1e-12:
        return False
    return q_loc < bound


@dataclass(frozen=True, order=True)
class AsymptoticsSpace:
    """Span of tip profiles ``omega(x) x**(-exponent) log(x)**k e(y)``.

    ``dimension`` is the eigenspace multiplicity, doubled when the
    logarithmic branch is present (k up to ``log_power``).
    """

    exponent: float
    mode: int
    log_power: int
    dimension: int


def asymptotics_in_window(lattice, window):
    """One asymptotics space per (pole, contributing mode) strictly inside the window.

    A pole within tolerance of a window endpoint is an error: the calculus
    assumes weight lines stay off the poles.
    """
    lo, hi = float(window[0]), float(window[1])
    if not lattice.covers(lo, hi):
        raise ValueError(
            f"pole lattice over {lattice.window} does not cover ({lo}, {hi})"
        )
    for p in lattice.poles:
        if abs(p.location - lo) < ENDPOINT_TOL or abs(p.location - hi) < ENDPOINT_TOL:
            raise WeightOnPoleError(
                f"weight on pole: window endpoint at {p.location}"
            )
    spaces = []
    for p in lattice.in_interval(lo, hi):
        log_power = p.order - 1
        for j in sorted(p.modes):
            mult = lattice.multiplicities[j]
            spaces.append(
                AsymptoticsSpace(
                    exponent=p.location,
                    mode=j,
                    log_power=log_power,
                    dimension=mult * (1 + log_power),
                )
            )
    return sorted(spaces)


# -- gamma windows ---------------------------------------------------------


@dataclass(frozen=True)
class GammaWindow:
    """Admissible open gamma intervals for one window rule."""

    mode: str
    intervals: tuple        # open (lo, hi) pieces, ascending
    base: tuple             # the base interval before pole-hit excisions
    removed: tuple          # gamma points excised inside the base interval
    k: int                  # largest mode index whose decay root exceeds -2

    @property
    def empty(self):
        return not self.intervals

    def contains(self, gamma):
        return any(lo < gamma < hi for lo, hi in self.intervals)

    def sample(self, count, margin=0.02):
        """Evenly spaced interior samples across all interval pieces."""
        out = []
        total = sum(hi - lo for lo, hi in self.intervals)
        if total <= 0:
            return np.array(out)
        for lo, hi in self.intervals:
            m = max(2, int(round(count * (hi - lo) / total)))
            pad = (hi - lo) * margin
            out.append(np.linspace(lo + pad, hi - pad, m))
        return np.concatenate(out)

    def to_json_dict(self):
        return {
            "mode": self.mode,
            "intervals": [list(iv) for iv in self.intervals],
            "base": list(self.base),
            "removed": list(self.removed),
            "k": self.k,
            "empty": self.empty,
        }


def _decay_roots(lattice):
    """q_j^- per mode, j = 0 .. n_modes-1."""
    return [lattice.mode_roots(j)[0] for j in range(lattice.n_modes)]


def tail_index(lattice):
    """Largest mode index whose decay root lies strictly above -2."""
    k = 0
    for j, qm in enumerate(_decay_roots(lattice)):
        if qm > -2.0 + POLE_MERGE_TOL:
            k = j
    return k


def gamma_window(lattice, n, mode):
    """Admissible gamma ranges for the named window rule.

    ``constants``    : the shifted line sits between max(-2, q_1^-) and 0,
                       so only the constants profile joins the domain.
    ``all_modes``    : the shifted line sits between -2 and q_k^-, putting
                       every decay root above -2 inside the window.
    ``bilaplacian``  : the constants window with the order-4 shifted line
                       also kept off the poles.

    Gamma points where the line or a shifted line hits a pole are excised.
    The returned ``k`` is the largest mode index with decay root above -2.
    """
    if mode not in WINDOW_MODES:
        raise ValueError(f"unknown window mode {mode!r}")
    if lattice.order != 2:
        raise ValueError("gamma windows are defined through the order-2 lattice")
    if not lattice.covers(-4.0, 2.0):
        raise ValueError(
            f"pole lattice over {lattice.window} must cover [-4, 2]"
        )
    qminus = _decay_roots(lattice)
    k = tail_index(lattice)

    # base interval in beta = (n+1)/2 - gamma - 2
    if mode in ("constants", "bilaplacian"):
        q1 = qminus[1] if len(qminus) > 1 else -np.inf
        beta_lo, beta_hi = max(-2.0, q1), 0.0
    else:
        beta_lo, beta_hi = -2.0, qminus[k]
    # translate to gamma (orientation flips)
    g_lo = (n + 1) / 2.0 - 2.0 - beta_hi
    g_hi = (n + 1) / 2.0 - 2.0 - beta_lo
    base = (g_lo, g_hi)
    if not g_lo < g_hi - POLE_MERGE_TOL:
        return GammaWindow(mode, (), base, (), k)

    shifts = [0.0, 2.0] + ([4.0] if mode == "bilaplacian" else [])
    removed = set()
    for p in lattice.poles:
        for shift in shifts:
            g = (n + 1) / 2.0 - shift - p.location
            if g_lo + POLE_MERGE_TOL < g < g_hi - POLE_MERGE_TOL:
                removed.add(g)
    removed = sorted(removed)

    points = [g_lo] + removed + [g_hi]
    intervals = tuple(
        (a, b) for a, b in zip(points[:-1], points[1:]) if b - a > POLE_MERGE_TOL
    )
    return GammaWindow(mode, intervals, base, tuple(removed), k)


# -- domains ---------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """A closed-extension domain: Sobolev core plus selected tip profiles.

    ``constants_slice`` adjoins the profiles that are constant near the tip
    (the slice ``omega(x) e(y)`` of the exponent-0 space); when the full
    exponent-0 space is wanted instead it appears in ``selected``.
    """

    core_s: float
    core_gamma: float
    p: float
    mu: int
    selected: tuple
    flavor: str
    constants_slice: bool = False

    def selected_exponents(self):
        return sorted({sp.exponent for sp in self.selected})

    def describe_core(self):
        return {"s": self.core_s, "gamma": self.core_gamma, "p": self.p}

    def to_json_dict(self):
        return {
            "core": self.describe_core(),
            "order": self.mu,
            "flavor": self.flavor,
            "constants_slice": self.constants_slice,
            "selected": [
                {
                    "exponent": sp.exponent,
                    "mode": sp.mode,
                    "log_power": sp.log_power,
                    "dimension": sp.dimension,
                }
                for sp in self.selected
            ],
        }


def _require_lines_off_poles(config, lattice, shifts):
    for shift in shifts:
        line = config.line(shift)
        hit = lattice.at_location(line, tol=ENDPOINT_TOL)
        if hit is not None:
            raise WeightOnPoleError(
                f"weight on pole: line at {line} meets the pole at {hit.location}"
            )


def build_domain(config, flavor, mu, lattice):
    """Build a :class:`DomainSpec` over the weight of ``config``.

    Flavors: ``minimal`` (core only), ``maximal`` (core plus every window
    space), ``constants`` (core plus the constants slice), ``full_tail``
    (core plus every decay space above -2 plus the constants slice) and
    ``bilaplacian`` (order-4 core plus the spaces compatible with the
    order-2 constants extension).

    The order-2 lattice is expected except for ``maximal``/``bilaplacian``
    with mu=4, which need the order-4 lattice.
    """
    if flavor not in DOMAIN_FLAVORS or flavor == "custom":
        raise ValueError(f"unknown domain flavor {flavor!r}")
    if mu not in (2, 4):
        raise ValueError(f"operator order must be 2 or 4, got {mu}")
    if flavor == "bilaplacian" and mu != 4:
        raise IncompatibleDomainError("the bilaplacian preset is an order-4 domain")
    if flavor in ("constants", "full_tail") and mu != 2:
        raise IncompatibleDomainError(f"the {flavor} preset is an order-2 domain")
    if lattice.order != mu:
        raise ValueError(f"lattice order {lattice.order} does not match mu={mu}")

    if flavor == "bilaplacian":
        shifts = (0.0, 2.0, 4.0)
    elif flavor in ("constants", "full_tail"):
        shifts = (0.0, 2.0)
    else:
        shifts = (0.0, float(mu))
    _require_lines_off_poles(config, lattice, shifts)
    window = interval_for(config, mu)
    core = dict(core_s=config.s + mu, core_gamma=config.gamma + mu, p=config.p, mu=mu)

    if flavor == "minimal":
        return DomainSpec(selected=(), flavor="minimal", **core)

    if flavor == "maximal":
        spaces = asymptotics_in_window(lattice, window)
        return DomainSpec(selected=tuple(spaces), flavor="maximal", **core)

    if flavor == "constants":
        if not window[0] < 0.0 < window[1]:
            raise IncompatibleDomainError(
                f"constants preset needs exponent 0 inside the window {window}"
            )
        return DomainSpec(selected=(), flavor="constants",
                          constants_slice=True, **core)

    if flavor == "full_tail":
        k = tail_index(lattice)
        if k < 1:
            raise IncompatibleDomainError(
                "full_tail preset needs at least one decay root above -2"
            )
        if not window[0] < 0.0 < window[1]:
            raise IncompatibleDomainError(
                f"full_tail preset needs exponent 0 inside the window {window}"
            )
        spaces = []
        for j in range(1, k + 1):
            qm = lattice.mode_roots(j)[0]
            if not window[0] < qm < window[1]:
                raise IncompatibleDomainError(
                    f"decay root {qm} of mode {j} falls outside the window {window}"
                )
            pole = lattice.at_location(qm)
            spaces.append(
                AsymptoticsSpace(
                    exponent=pole.location,
                    mode=j,
                    log_power=pole.order - 1,
                    dimension=lattice.multiplicities[j] * pole.order,
                )
            )
        return DomainSpec(selected=tuple(sorted(spaces)), flavor="full_tail",
                          constants_slice=True, **core)

    # bilaplacian: spaces with exponent below the order-2 shifted line,
    # i.e. the order-4 window minus the part already handled at order 2
    inner = (config.line(4.0), config.line(2.0))
    if not config.line(2.0) < 0.0 < config.line(0.0):
        raise IncompatibleDomainError(
            "bilaplacian preset needs exponent 0 inside the order-2 window"
        )
    spaces = asymptotics_in_window(lattice, inner)
    return DomainSpec(selected=tuple(spaces), flavor="bilaplacian",
                      constants_slice=True, **core)


def custom_domain(config, mu, selected, constants_slice=False):
    """Hand-assembled domain; selection validity is the caller's concern."""
    return DomainSpec(
        core_s=config.s + mu,
        core_gamma=config.gamma + mu,
        p=config.p,
        mu=mu,
        selected=tuple(sorted(selected)),
        flavor="custom",
        constants_slice=constants_slice,
    )


# -- functional-calculus admissibility --------------------------------------


@dataclass(frozen=True)
class AdmissibilityCheck:
    kind: str        # "precondition" | "pairing" | "full_space" | "zero_space"
    location: float | None
    ok: bool
    detail: str


@dataclass(frozen=True)
class AdmissibilityVerdict:
    admissible: bool
    checks: tuple

    def __bool__(self):
        return self.admissible

    def failures(self):
        return [c for c in self.checks if not c.ok]

    def failed_kinds(self):
        return {c.kind for c in self.checks if not c.ok}

    def to_json_dict(self):
        return {
            "admissible": self.admissible,
            "checks": [
                {"kind": c.kind, "location": c.location, "ok": c.ok, "detail": c.detail}
                for c in self.checks
            ],
        }


def _selection_of(domain, pole):
    """Selection granularity at a pole: ``zero``, ``full`` or ``constants``."""
    for sp in domain.selected:
        if abs(sp.exponent - pole.location) < POLE_MERGE_TOL:
            return "full"
    if domain.constants_slice and abs(pole.location) < POLE_MERGE_TOL:
        return "constants"
    return "zero"


def _complement(selection, double_pole):
    """Orthocomplement of a selection within one eigenspace.

    At the order-2 pole of the one-dimensional cross-section the space
    carries a logarithmic branch and the complement follows the special
    table: zero <-> full, constants <-> constants.  Elsewhere the constants
    slice at exponent 0 is the full space.
    """
    if double_pole:
        return {"zero": "full", "constants": "constants", "full": "zero"}[selection]
    if selection == "constants":
        selection = "full"
    return {"zero": "full", "full": "zero"}[selection]


def check_hinfty_admissible(domain, config, lattice):
    """Decide admissibility of a domain for the bounded functional calculus.

    Preconditions: |gamma| < (n+1)/2 and both weight lines off the poles.
    For each pole q inside the window: on the symmetric part of the window
    the selection at q must be the orthocomplement of the selection at
    n-1-q; on the one-sided part the selection must be the full space for
    gamma >= 0 and the zero space for gamma <= 0.  Selections richer than
    zero / constants-slice / full are not supported.
    """
    if domain.mu != 2:
        raise ValueError("admissibility is decided for order-2 domains")
    if lattice.order != 2:
        raise ValueError("an order-2 pole lattice is required")
    n, gamma = config.n, config.gamma
    checks = []

    ok = abs(gamma) < (n + 1) / 2.0
    checks.append(AdmissibilityCheck(
        "precondition", None, ok,
        f"|gamma|={abs(gamma)} vs (n+1)/2={(n + 1) / 2.0}"))
    for shift in (0.0, 2.0):
        line = config.line(shift)
        hit = lattice.at_location(line, tol=ENDPOINT_TOL)
        checks.append(AdmissibilityCheck(
            "precondition", line, hit is None,
            "weight line off the poles" if hit is None
            else f"weight line at {line} meets pole {hit.location}"))
    # reject selections outside the supported granularities
    for sp in domain.selected:
        if domain.constants_slice and abs(sp.exponent) < POLE_MERGE_TOL:
            checks.append(AdmissibilityCheck(
                "precondition", sp.exponent, False,
                "both the full exponent-0 space and the constants slice selected"))
    if not all(c.ok for c in checks):
        # the pairing conditions are meaningless off the preconditions
        return AdmissibilityVerdict(False, tuple(checks))

    window = interval_for(config, 2)
    mirror = ((n + 1) / 2.0 + gamma - 2.0, (n + 1) / 2.0 + gamma)
    inter = (max(window[0], mirror[0]), min(window[1], mirror[1]))

    for pole in lattice.in_interval(*window):
        q = pole.location
        sel = _selection_of(domain, pole)
        double = pole.order > 1
        if sel == "constants" and not (abs(q) < POLE_MERGE_TOL):
            checks.append(AdmissibilityCheck(
                "precondition", q, False,
                "constants slice is only supported at exponent 0"))
            continue
        in_symmetric = inter[0] < q < inter[1]
        if in_symmetric:
            partner_loc = n - 1.0 - q
            partner = lattice.at_location(partner_loc)
            if partner is None:
                checks.append(AdmissibilityCheck(
                    "pairing", q, False,
                    f"mirror location {partner_loc} carries no pole"))
                continue
            want = _complement(sel, double)
            got = _selection_of(domain, partner)
            if not double and got == "constants":
                got = "full"
            ok = want == got
            checks.append(AdmissibilityCheck(
                "pairing", q, ok,
                f"selection {sel} at {q} pairs with {got} at {partner_loc}"
                f" (needs {want})"))
        elif gamma >= 0.0:
            effective = "full" if (sel == "constants" and not double) else sel
            ok = effective == "full"
            checks.append(AdmissibilityCheck(
                "full_space", q, ok,
                f"one-sided location {q} needs the full space, selection is {sel}"))
        else:
            ok = sel == "zero"
            checks.append(AdmissibilityCheck(
                "zero_space", q, ok,
                f"one-sided location {q} needs the zero space, selection is {sel}"))

    return AdmissibilityVerdict(all(c.ok for c in checks), tuple(checks))


# -- p,q feasibility ---------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityCheck:
    name: str
    value: float
    bound: float
    strict: bool
    slack: float

    @property
    def ok(self):
        return self.slack > 0 if self.strict else self.slack >= 0


@dataclass(frozen=True)
class FeasibilityReport:
    mode: str
    checks: tuple

    @property
    def ok(self):
        return all(c.ok for c in self.checks)

    def __bool__(self):
        return self.ok

    def to_json_dict(self):
        return {
            "mode": self.mode,
            "ok": self.ok,
            "checks": [
                {"name": c.name, "value": c.value, "bound": c.bound,
                 "slack": c.slack, "ok": c.ok}
                for c in self.checks
            ],
        }


def pq_feasible(config, mode, sigma=None):
    """Evaluate the integrability constraints on (p, q) with their slack.

    ``pme``  : (n+1)/p + 2/q < 1 and shifted line + 4/q < 0
    ``fpme`` : (n+1)/p + 2*sigma/q < 2*sigma
    ``ch``   : p >= n+1 and q > 2
    """
    n, p, q = config.n, config.p, config.q
    if mode == "pme":
        v1 = (n + 1) / p + 2.0 / q
        v2 = config.line(2.0) + 4.0 / q
        checks = (
            FeasibilityCheck("pme-integrability", v1, 1.0, True, 1.0 - v1),
            FeasibilityCheck("pme-weight-line", v2, 0.0, True, -v2),
        )
    elif mode == "fpme":
        if sigma is None or not 0.0 < sigma <= 1.0:
            raise ValueError(f"fpme needs sigma in (0, 1], got {sigma}")
        v1 = (n + 1) / p + 2.0 * sigma / q
        checks = (
            FeasibilityCheck("fpme-integrability", v1, 2.0 * sigma, True,
                             2.0 * sigma - v1),
        )
    elif mode == "ch":
        checks = (
            FeasibilityCheck("ch-p", p, n + 1.0, False, p - (n + 1.0)),
            FeasibilityCheck("ch-q", q, 2.0, True, q - 2.0),
        )
    else:
        raise ValueError(f"unknown feasibility mode {mode!r}")
    return FeasibilityReport(mode, checks)


# -- interpolation -----------------------------------------------------------


@dataclass(frozen=True)
class InterpolationDescriptor:
    """Bracket description of the initial-value interpolation space.

    The space is sandwiched between two Sobolev cores whose exponents
    differ by 2*epsilon; the retained tip spaces are those whose decay
    root stays above the shifted line raised by 2/q + epsilon.
    """

    inner_core: tuple      # (s, gamma) of the core embedded into the space
    outer_core: tuple      # (s, gamma) of the core the space embeds into
    epsilon: float
    threshold: float       # shifted line + 2/q + epsilon
    r: int
    retained: tuple
    constants_slice: bool

    def to_json_dict(self):
        return {
            "inner_core": list(self.inner_core),
            "outer_core": list(self.outer_core),
            "epsilon": self.epsilon,
            "threshold": self.threshold,
            "r": self.r,
            "retained": [
                {"exponent": sp.exponent, "mode": sp.mode, "dimension": sp.dimension}
                for sp in self.retained
            ],
            "constants_slice": self.constants_slice,
        }


def interpolation_descriptor(config, domain, lattice, epsilon=DEFAULT_INTERP_EPS):
    """Describe the interpolation space between the base space and a domain.

    ``r`` is the largest mode index whose decay root exceeds
    ``(n+1)/2 - gamma - 2 + 2/q + epsilon``; the retained asymptotics
    spaces are the selected decay spaces of modes 1..r, plus the constants
    slice when the domain carries it.
    """
    if domain.mu != 2:
        raise ValueError("interpolation is described for order-2 domains")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    gap = 2.0 - 2.0 / config.q
    if epsilon >= gap:
        raise ValueError(
            f"epsilon={epsilon} degenerates the bracket (needs < {gap})"
        )
    level = config.s + gap
    weight = config.gamma + gap
    threshold = config.line(2.0) + 2.0 / config.q + epsilon

    r = 0
    for j in range(lattice.n_modes):
        if lattice.mode_roots(j)[0] > threshold:
            r = j
    retained = tuple(
        sp for sp in domain.selected
        if sp.mode <= r and sp.exponent < 0.0 - POLE_MERGE_TOL
    )
    return InterpolationDescriptor(
        inner_core=(level + epsilon, weight + epsilon),
        outer_core=(level - epsilon, weight - epsilon),
        epsilon=epsilon,
        threshold=threshold,
        r=r,
        retained=retained,
        constants_slice=domain.constants_slice,
    )
