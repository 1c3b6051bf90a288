"""Flat key = value run configuration.

The format is one ``key = value`` pair per line; ``#`` starts a comment
and blank lines are ignored.  Keys are validated against the schema
below, values are coerced to the declared type, and every parse problem
reports its line number.  Unset keys take their defaults.
"""

from dataclasses import dataclass

import numpy as np

from .grid import ConeField, build_cone_grid
from .evolve import SolverConfig
from .mellin import indicial_roots
from .spectrum import build_cross_section
from .weights import WeightConfig


class ConfigError(ValueError):
    def __init__(self, message, line=0, path=None):
        self.line = line
        self.path = path
        where = f"{path or '<config>'}:{line}" if line else (path or "<config>")
        super().__init__(f"{where}: {message}")


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_floats(text):
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _parse_ints(text):
    return tuple(int(tok) for tok in text.replace(",", " ").split())


# key -> (parser, default, help)
SCHEMA = {
    # cross-section
    "kind": (str, "circle", "cross-section kind: circle | sphere | custom"),
    "scale": (float, 1.0, "circle scale (circumference / 2 pi)"),
    "n": (int, 1, "cross-section dimension (circle: 1, sphere: >= 2)"),
    "n_modes": (int, 4, "number of resolved distinct eigenvalues"),
    "grid_points": (int, 0, "cross-section grid resolution override (0 = auto)"),
    "eigenvalues": (_parse_floats, (), "custom spectrum eigenvalues"),
    "multiplicities": (_parse_ints, (), "custom spectrum multiplicities"),
    # weight-space address
    "s": (float, 0.0, "smoothness index of the base space"),
    "gamma": (float, 1.0, "weight of the base space"),
    "p": (float, 8.0, "spatial integrability"),
    "q": (float, 8.0, "temporal integrability"),
    # analysis
    "pole_window_lo": (float, -4.5, "left end of the analyzed pole window"),
    "pole_window_hi": (float, 2.5, "right end of the analyzed pole window"),
    "domain_flavor": (str, "constants",
                      "domain preset: minimal | maximal | constants | "
                      "full_tail | bilaplacian"),
    "interp_epsilon": (float, 1e-3, "bracket width for interpolation reports"),
    # solver
    "equation": (str, "heat",
                 "heat | pme | fpme | cahn_hilliard | yamabe"),
    "m": (float, 2.0, "diffusion exponent of pme / fpme"),
    "sigma": (float, 0.5, "fractional power for fpme"),
    "dt": (float, 1e-4, "time step"),
    "t_end": (float, 0.01, "final time"),
    "x_min": (float, 1e-3, "inner truncation radius"),
    "n_x": (int, 256, "number of log-radial nodes"),
    "bc_inner": (str, "asymptotic_robin",
                 "inner cap: asymptotic_robin | neumann_tau"),
    "linearization": (str, "newton_one_step",
                      "newton_one_step | frozen_coefficient"),
    "blowup_threshold": (float, 1e12, "abort when the sup norm passes this"),
    "r_source": (float, 0.0, "yamabe curvature source (constant)"),
    # initial data
    "u0": (str, "constant",
           "constant | constant_plus_mode | random_positive | random_mean_zero"),
    "u0_constant": (float, 1.0, "base level of the initial data"),
    "u0_amplitude": (float, 0.1, "perturbation amplitude"),
    "u0_mode": (int, 1, "perturbed cross-section mode"),
    # outputs
    "keep_snapshots": (_parse_bool, False, "store full field snapshots"),
    "fit_modes": (_parse_ints, (), "modes whose tip slopes go to the trajectory"),
    "fit_window_lo": (float, 0.0, "tip fit window start (0 = 3 x_min)"),
    "fit_window_hi": (float, 0.0, "tip fit window end (0 = 30 x_min)"),
}

U0_KINDS = ("constant", "constant_plus_mode", "random_positive", "random_mean_zero")


@dataclass
class RunConfig:
    values: dict
    path: str | None = None

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def as_dict(self):
        return dict(self.values)


def parse_config(text, path=None):
    values = {k: default for k, (_, default, _) in SCHEMA.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}",
                              lineno, path)
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        seen.add(key)
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, path)
    _validate(values, path)
    return RunConfig(values=values, path=path)


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), path=str(path))


def _validate(values, path):
    if values["kind"] not in ("circle", "sphere", "custom"):
        raise ConfigError(f"unknown cross-section kind {values['kind']!r}",
                          path=path)
    if values["kind"] == "custom" and not values["eigenvalues"]:
        raise ConfigError("custom spectra need an eigenvalue list", path=path)
    if values["equation"] not in ("heat", "pme", "fpme", "cahn_hilliard", "yamabe"):
        raise ConfigError(f"unknown equation {values['equation']!r}", path=path)
    if values["u0"] not in U0_KINDS:
        raise ConfigError(f"unknown initial data kind {values['u0']!r}", path=path)


# -- builders -----------------------------------------------------------------


def modes_covering_window(kind, lo, hi, *, scale=1.0, dim_n=2):
    """Fewest resolved modes whose deepest roots straddle the window."""
    j = 1
    while True:
        lam = -((j / scale) ** 2) if kind == "circle" else -j * (j + dim_n - 1)
        qm, qp = indicial_roots(1 if kind == "circle" else dim_n, lam)
        if qm <= lo and qp >= hi:
            return j + 1
        j += 1
        if j > 10_000:
            raise ValueError("window too wide to resolve")


def spectrum_from_config(cfg, *, for_window=None):
    kind = cfg["kind"]
    n_modes = cfg["n_modes"]
    gp = cfg["grid_points"] or None
    if for_window is not None and kind in ("circle", "sphere"):
        need = modes_covering_window(
            kind, for_window[0], for_window[1],
            scale=cfg["scale"], dim_n=cfg["n"])
        n_modes = max(n_modes, need)
    if kind == "circle":
        return build_cross_section("circle", n_modes, scale=cfg["scale"],
                                   grid_points=gp)
    if kind == "sphere":
        return build_cross_section("sphere", n_modes, dim_n=cfg["n"],
                                   grid_points=gp)
    return build_cross_section(
        "custom", dim_n=cfg["n"],
        eigenvalues=cfg["eigenvalues"],
        multiplicities=cfg["multiplicities"] or None)


def weight_config_from_config(cfg):
    return WeightConfig(n=cfg["n"] if cfg["kind"] != "circle" else 1,
                        s=cfg["s"], gamma=cfg["gamma"],
                        p=cfg["p"], q=cfg["q"])


def grid_from_config(cfg, spectrum=None):
    spec = spectrum or spectrum_from_config(cfg)
    return build_cone_grid(spec, n_x=cfg["n_x"], x_min=cfg["x_min"])


def solver_config_from_config(cfg):
    eq = cfg["equation"]
    return SolverConfig(
        equation=eq,
        dt=cfg["dt"],
        t_end=cfg["t_end"],
        m=cfg["m"],
        sigma=cfg["sigma"],
        r_source=cfg["r_source"] if eq == "yamabe" else None,
        bc_inner=cfg["bc_inner"],
        linearization=cfg["linearization"],
        blowup_threshold=cfg["blowup_threshold"],
    )


def initial_field_from_config(cfg, grid, seed=42):
    kind = cfg["u0"]
    c0 = cfg["u0_constant"]
    amp = cfg["u0_amplitude"]
    spec = grid.spectrum
    if kind == "constant":
        from .grid import constant_field
        return constant_field(grid, c0)
    if kind == "constant_plus_mode":
        j = cfg["u0_mode"]
        if not spec.has_grid:
            raise ConfigError("mode perturbations need a gridded cross-section",
                              path=cfg.path)
        row = spec.basis[spec.mode_rows(j)[0]]
        row = row / np.abs(row).max()
        bump = np.exp(-1.0 / grid.x)  # flat at the tip to all orders
        return ConeField(grid, c0 + amp * bump[:, None] * row[None, :])
    rng = np.random.default_rng(seed)
    if not spec.has_grid:
        raise ConfigError("random initial data needs a gridded cross-section",
                          path=cfg.get("path"))
    coeffs = rng.standard_normal((grid.n_x, spec.basis.shape[0]))
    # smooth radially so the data sits in the resolved scales
    for _ in range(8):
        coeffs[1:-1] = 0.25 * coeffs[:-2] + 0.5 * coeffs[1:-1] + 0.25 * coeffs[2:]
        coeffs[0] = coeffs[1]
        coeffs[-1] = coeffs[-2]
    vals = spec.from_coefficients(coeffs)
    vals *= amp / max(1e-300, np.abs(vals).max())
    fld = ConeField(grid, vals)
    if kind == "random_mean_zero":
        from .diagnostics import mass
        fld.values -= mass(fld) / grid.volume()
        return fld
    fld.values += c0
    if fld.min() <= 0:
        fld.values += abs(fld.min()) + 0.1 * c0
    return fld
