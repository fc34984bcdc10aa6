"""INI run configuration, defaults and hypothesis validation."""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import weights as W
from .eigenbasis import FAMILIES, build_basis
from .grid import Grid
from .nonlinearity import Nonlinearity, from_config as nl_from_config

P_MAX = 8.0 / 3.0
OUTPUT_ENV = "KZK_OUTPUT_ROOT"
DECAY_PRESETS = ("decay_weak", "decay_strong")
PRESETS = DECAY_PRESETS + ("continuous_dependence", "oracle_convergence", "conservation_drift")

DEFAULTS = {
    "equation": {"b": "0.0", "nonlinearity": "quadratic", "p": "1.0", "a": "1.0",
                 "sign": "1.0", "h": "0.0"},
    "domain": {"L": "1.0", "X_max": "30.0", "family": "a"},
    "discretization": {"nx": "601", "ny_modes": "32", "dt": "1e-3", "T": "1.0",
                       "sponge": "0.0", "truncate_data": "false"},
    "initial": {"kind": "gaussian", "amplitude": "0.01", "width": "1.0", "y_mode": "1"},
    "forcing": {"kind": "zero"},
    "diagnostics": {"cadence": "100", "lambda_plus": "", "store_fields": "0"},
    "output": {"dir": "kzk_output"},
}


class ConfigError(ValueError):
    """Unparseable or structurally invalid configuration."""


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _sponge(v) -> float:
    s = str(v).strip().lower()
    if s in ("on", "true", "yes"):
        return 50.0
    if s in ("off", "false", "no", ""):
        return 0.0
    return float(s)


@dataclass
class RunConfig:
    b: float = 0.0
    nonlinearity: str = "quadratic"
    p: float = 1.0
    a: float = 1.0
    sign: float = 1.0
    h: float = 0.0
    L: float = 1.0
    X_max: float = 30.0
    family: str = "a"
    nx: int = 601
    ny_modes: int = 32
    dt: float = 1e-3
    T: float = 1.0
    sponge: float = 0.0
    truncate_data: bool = False
    weights: dict = field(default_factory=dict)
    initial: dict = field(default_factory=lambda: dict(DEFAULTS["initial"]))
    forcing: dict = field(default_factory=lambda: {"kind": "zero"})
    cadence: int = 100
    lambda_plus: tuple = ()
    store_fields: int = 0
    output_dir: str = "kzk_output"
    experiment: dict = field(default_factory=dict)
    uniqueness: dict = field(default_factory=dict)
    source: str | None = None

    @property
    def preset(self) -> str | None:
        return self.experiment.get("preset")

    def output_path(self) -> Path:
        root = os.environ.get(OUTPUT_ENV)
        out = Path(self.output_dir)
        return Path(root) / out if root and not out.is_absolute() else out

    def build_basis(self):
        return build_basis(self.family, self.L, self.ny_modes)

    def build_grid(self, basis=None) -> Grid:
        return Grid(self.X_max, self.nx, basis or self.build_basis(), self.dt, self.T)

    def build_nonlinearity(self) -> Nonlinearity:
        return nl_from_config(self.nonlinearity, self.p, self.a, self.sign, self.h)

    def effective_p(self) -> float:
        k = self.nonlinearity.strip().lower()
        if k in ("quadratic", "kzk", "quad"):
            return 1.0
        if k == "cubic":
            return 2.0
        return self.p


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    return cp


def parse_config(text: str, source: str | None = None) -> RunConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source or "<string>")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return _from_parser(cp, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


def load_preset(name: str) -> RunConfig:
    """A shipped preset config (see ``kzk/presets``)."""
    if name not in PRESETS + ("baseline",):
        raise ConfigError(f"unknown preset {name!r}")
    text = resources.files("kzk.presets").joinpath(f"{name}.cfg").read_text()
    return parse_config(text, f"preset:{name}")


def _from_parser(cp: configparser.ConfigParser, source) -> RunConfig:
    def sec(name):
        out = dict(DEFAULTS.get(name, {}))
        if cp.has_section(name):
            out.update(cp[name])
        return out

    try:
        eq, dom, disc = sec("equation"), sec("domain"), sec("discretization")
        diag, outp = sec("diagnostics"), sec("output")
        cfg = RunConfig(
            b=float(eq["b"]), nonlinearity=eq["nonlinearity"].strip().lower(), p=float(eq["p"]),
            a=float(eq["a"]), sign=float(eq["sign"]), h=float(eq["h"]),
            L=float(dom["L"]), X_max=float(dom["X_max"]), family=dom["family"].strip().lower(),
            nx=int(disc["nx"]), ny_modes=int(disc["ny_modes"]), dt=float(disc["dt"]),
            T=float(disc["T"]), sponge=_sponge(disc["sponge"]),
            truncate_data=_to_bool(disc["truncate_data"]),
            initial=sec("initial"), forcing=sec("forcing"),
            cadence=int(diag["cadence"]),
            lambda_plus=tuple(s.strip() for s in diag["lambda_plus"].split(",") if s.strip()),
            store_fields=int(diag["store_fields"]),
            output_dir=outp["dir"],
            experiment=dict(cp["experiment"]) if cp.has_section("experiment") else {},
            uniqueness=dict(cp["uniqueness"]) if cp.has_section("uniqueness") else {},
            source=source,
        )
        for name in cp.sections():
            if name.startswith("weight:"):
                s = cp[name]
                alpha = s.get("alpha")
                cfg.weights[name.split(":", 1)[1].strip()] = W.from_config(
                    s.get("kind", "exp"), None if alpha is None else float(alpha),
                    float(s.get("x0", 0.0)))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid configuration value: {exc}") from exc
    return cfg


def dump_config(cfg: RunConfig) -> str:
    """Serialize back to INI text (round-trips through :func:`parse_config`)."""
    cp = _parser()
    cp["equation"] = {"b": repr(cfg.b), "nonlinearity": cfg.nonlinearity, "p": repr(cfg.p),
                      "a": repr(cfg.a), "sign": repr(cfg.sign), "h": repr(cfg.h)}
    cp["domain"] = {"L": repr(cfg.L), "X_max": repr(cfg.X_max), "family": cfg.family}
    cp["discretization"] = {"nx": str(cfg.nx), "ny_modes": str(cfg.ny_modes),
                            "dt": repr(cfg.dt), "T": repr(cfg.T), "sponge": repr(cfg.sponge),
                            "truncate_data": str(cfg.truncate_data).lower()}
    for name, w in cfg.weights.items():
        entry = {"kind": w.kind}
        if w.kind in ("exp", "pow"):
            entry["alpha"] = repr(w.alpha)
        if w.kind == "rho0_shifted":
            entry["x0"] = repr(w.x0)
        cp[f"weight:{name}"] = entry
    cp["initial"] = {k: str(v) for k, v in cfg.initial.items()}
    cp["forcing"] = {k: str(v) for k, v in cfg.forcing.items()}
    cp["diagnostics"] = {"cadence": str(cfg.cadence), "lambda_plus": ",".join(cfg.lambda_plus),
                         "store_fields": str(cfg.store_fields)}
    cp["output"] = {"dir": cfg.output_dir}
    if cfg.experiment:
        cp["experiment"] = {k: str(v) for k, v in cfg.experiment.items()}
    if cfg.uniqueness:
        cp["uniqueness"] = {k: str(v) for k, v in cfg.uniqueness.items()}
    import io
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def _trace_at_zero(cfg: RunConfig) -> float | None:
    """max_y |u0(0, y)| relative to max |u0|, or None if data cannot be built."""
    from .data import initial_values
    try:
        grid = cfg.build_grid()
        vals = initial_values(grid, cfg.initial)
    except Exception:  # reported by the structural checks
        return None
    peak = float(np.max(np.abs(vals)))
    return 0.0 if peak == 0 else float(np.max(np.abs(vals[0]))) / peak


def validate(cfg: RunConfig) -> list[str]:
    """Human-readable hypothesis and structure violations; empty means valid."""
    v: list[str] = []
    kind = cfg.nonlinearity
    if kind not in ("none", "quadratic", "kzk", "quad", "cubic", "power"):
        v.append(f"unknown nonlinearity {kind!r}")
    p = cfg.effective_p()
    if not 0.0 <= p < P_MAX:
        v.append("p outside [0, 8/3)")
    if cfg.h < 0:
        v.append("cut-off parameter h must be non-negative")
    if cfg.family not in FAMILIES:
        v.append(f"unknown boundary family {cfg.family!r} (expected a, b, c or d)")
    if not cfg.L > 0:
        v.append("L must be positive")
    if not cfg.X_max > 0:
        v.append("X_max must be positive")
    if cfg.nx < 16:
        v.append("nx must be at least 16")
    if cfg.ny_modes < 1 or (cfg.family == "d" and cfg.ny_modes < 2):
        v.append("ny_modes too small for the boundary family")
    if not cfg.dt > 0:
        v.append("dt must be positive")
    if cfg.T < 0:
        v.append("T must be non-negative")
    if cfg.cadence < 1:
        v.append("diagnostics cadence must be a positive step count")
    for name in cfg.lambda_plus:
        if name not in ("u_xx", "u_y", "u_xxxx", "u_yy"):
            v.append(f"unknown lambda_plus field {name!r}")
    for name, w in cfg.weights.items():
        rep = W.check_admissibility(w)
        if not rep.passed:
            v.append(f"weight {name!r} is not admissible on the sample grid")

    regime = cfg.uniqueness.get("regime", "none").strip().lower()
    if regime in ("weak", "strong") and not v:
        q = float(cfg.uniqueness.get("q", 0.0))
        for name, w in cfg.weights.items():
            rep = W.check_theorem_hypotheses(w, p, q)
            if regime == "weak" and not rep.weak_uniqueness_ok:
                v.append(f"weight {name!r} fails the weak uniqueness condition for p = {p:g}")
            if regime == "strong" and not rep.strong_uniqueness_ok:
                v.append(f"weight {name!r} fails the strong uniqueness condition for q = {q:g}")
    elif regime not in ("none", "weak", "strong"):
        v.append(f"unknown uniqueness regime {regime!r}")

    preset = cfg.preset
    if preset is not None and preset not in PRESETS:
        v.append(f"unknown experiment preset {preset!r}")
    needs_trace = regime == "strong" or preset == "decay_strong"
    if preset in DECAY_PRESETS:
        v.extend(decay_gate(cfg))
    if needs_trace and not v:
        tr = _trace_at_zero(cfg)
        tol = float(cfg.uniqueness.get("trace_tol", 1e-8))
        if tr is not None and tr > tol:
            v.append(f"initial data violate u0(0, y) = 0 (relative trace {tr:.3g})")
    return v


def decay_gate(cfg: RunConfig) -> list[str]:
    """Hypotheses of the decay theorems for a decay preset."""
    from .diagnostics import decay_constants
    v = []
    if cfg.family not in ("a", "c"):
        v.append(f"decay presets require family a or c, got {cfg.family!r}")
        return v
    if not cfg.L > 0:
        return v
    dc = decay_constants(cfg.b, cfg.L, cfg.family, cfg.effective_p())
    v.extend(dc.violations)
    alpha = float(cfg.experiment.get("alpha", 0.1))
    if not 0 < alpha <= dc.alpha0 + 1e-12:
        v.append(f"alpha = {alpha:g} exceeds alpha0 = {dc.alpha0:.6g} "
                 f"(8a^2 + 32a^4 must not exceed beta = {dc.beta:.6g})")
    eps = cfg.experiment.get("epsilon0")
    if eps is not None and not math.isnan(float(eps)):
        amp = float(cfg.initial.get("amplitude", 0.0))
        if amp > float(eps):
            v.append(f"initial amplitude {amp:g} exceeds epsilon0 = {float(eps):g}")
    return v
