"""Strict JSON run configuration.

Unknown keys are errors; every violated constraint is reported, not just the
first.  Defaults: cutoff_eps = 1/8, integrator rk4-fixed, s0 = d/2 + 0.1,
s = s0 + 2.5, tol_fix = 1e-9, n_max = 40; dt defaults to the largest step
allowed by the rk4 guard for the flat generator at the configured grid.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cutoff import CutoffParams
from .ek import EKParams
from .flow import FlowConfig
from .grid import TorusGrid
from .scheme import SchemeConfig


class ConfigError(ValueError):
    """Invalid configuration; message lists every violation."""


def _constant_K(value):
    K = lambda r: np.full_like(np.asarray(r, dtype=float), value)
    Kp = lambda r: np.zeros_like(np.asarray(r, dtype=float))
    return K, Kp


def _qhd_K(kappa):
    K = lambda r: kappa / np.asarray(r, dtype=float)
    Kp = lambda r: -kappa / np.asarray(r, dtype=float) ** 2
    return K, Kp


K_REGISTRY = {"constant": _constant_K, "qhd": _qhd_K}


def _polytropic_g(coeff, exponent):
    return lambda r: coeff * np.asarray(r, dtype=float) ** exponent


G_REGISTRY = {"polytropic": _polytropic_g}


@dataclass
class RunConfig:
    grid: TorusGrid
    params: EKParams
    cutoff: CutoffParams
    flow: FlowConfig
    scheme: SchemeConfig
    seed: int
    out_dir: str


def _take(d, key, default, errors, where):
    if key in d:
        return d.pop(key)
    if default is _REQUIRED:
        errors.append(f"{where}: missing required key '{key}'")
        return None
    return default


_REQUIRED = object()


def cfl_dt(grid, p, safety=0.4):
    """Largest rk4-safe step for the flat second-order generator."""
    jmax = float(grid.max_mode) * np.sqrt(grid.dim)
    return safety / (p.sqrt_mK * p.lambda_max * jmax**2)


def build_config(raw):
    """Validate a plain dict into a RunConfig, listing all violations."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    raw = {k: v for k, v in raw.items()}
    errors = []

    grid_d = _take(raw, "grid", _REQUIRED, errors, "root") or {}
    ek_d = _take(raw, "ek", _REQUIRED, errors, "root") or {}
    cutoff_eps = _take(raw, "cutoff_eps", 0.125, errors, "root")
    flow_d = _take(raw, "flow", {}, errors, "root")
    scheme_d = _take(raw, "scheme", {}, errors, "root")
    seed = _take(raw, "seed", 0, errors, "root")
    out_dir = _take(raw, "out_dir", ".", errors, "root")
    if raw:
        errors.append(f"root: unknown keys {sorted(raw)}")

    grid_d = dict(grid_d)
    d = _take(grid_d, "d", 1, errors, "grid")
    N_ax = _take(grid_d, "N_ax", _REQUIRED, errors, "grid")
    if grid_d:
        errors.append(f"grid: unknown keys {sorted(grid_d)}")
    grid = None
    if N_ax is not None:
        try:
            grid = TorusGrid(int(d), int(N_ax))
        except Exception as exc:
            errors.append(f"grid: {exc}")

    ek_d = dict(ek_d)
    mbar = _take(ek_d, "mbar", 1.0, errors, "ek")
    K_spec = dict(_take(ek_d, "K", {"kind": "constant", "value": 1.0},
                        errors, "ek"))
    g_spec = dict(_take(ek_d, "g", {"kind": "polytropic", "coeff": 1.0,
                                    "exponent": 1.0}, errors, "ek"))
    m1 = _take(ek_d, "m1", 0.5 * mbar, errors, "ek")
    m2 = _take(ek_d, "m2", 2.0 * mbar, errors, "ek")
    delta = _take(ek_d, "delta", 0.25 * min(mbar - m1, m2 - mbar),
                  errors, "ek")
    if ek_d:
        errors.append(f"ek: unknown keys {sorted(ek_d)}")

    if not (0.0 < m1 < m2):
        errors.append(f"ek: need 0 < m1 < m2, got m1={m1}, m2={m2}")
    if not (m1 < mbar < m2):
        errors.append(f"ek: need m1 < mbar < m2, got mbar={mbar}")

    params = None
    kind = K_spec.pop("kind", "constant")
    if kind not in K_REGISTRY:
        errors.append(f"ek.K: unknown kind {kind!r}, have {sorted(K_REGISTRY)}")
        K = Kp = None
    else:
        try:
            K, Kp = K_REGISTRY[kind](**K_spec)
        except TypeError as exc:
            errors.append(f"ek.K: {exc}")
            K = Kp = None
    gkind = g_spec.pop("kind", "polytropic")
    if gkind not in G_REGISTRY:
        errors.append(f"ek.g: unknown kind {gkind!r}, have {sorted(G_REGISTRY)}")
        gfun = None
    else:
        try:
            gfun = G_REGISTRY[gkind](**g_spec)
        except TypeError as exc:
            errors.append(f"ek.g: {exc}")
            gfun = None
    if K is not None and gfun is not None and not errors:
        try:
            params = EKParams(mbar=float(mbar), K=K, Kp=Kp, g=gfun,
                              m1=float(m1), m2=float(m2), delta=float(delta))
        except Exception as exc:
            errors.append(f"ek: {exc}")

    if not (0.0 < cutoff_eps < 0.25):
        errors.append(f"cutoff_eps must lie in (0, 1/4), got {cutoff_eps}")
        cutoff = None
    else:
        cutoff = CutoffParams(cutoff_eps=float(cutoff_eps))

    scheme_d = dict(scheme_d)
    dim = grid.dim if grid is not None else int(d)
    s0 = _take(scheme_d, "s0", dim / 2.0 + 0.1, errors, "scheme")
    s = _take(scheme_d, "s", s0 + 2.5, errors, "scheme")
    tol_fix = _take(scheme_d, "tol_fix", 1e-9, errors, "scheme")
    n_max = _take(scheme_d, "n_max", 40, errors, "scheme")
    if scheme_d:
        errors.append(f"scheme: unknown keys {sorted(scheme_d)}")
    if not (dim / 2.0 < s0):
        errors.append(f"scheme: need d/2 < s0 strictly, got s0={s0}")
    if not (s0 < s - 2.0):
        errors.append(f"scheme: need s0 < s - 2 strictly, got s0={s0}, s={s}")
    scheme = None
    if not errors:
        scheme = SchemeConfig(s0=float(s0), s=float(s), tol_fix=float(tol_fix),
                              n_max=int(n_max))

    flow_d = dict(flow_d)
    flow_eps = _take(flow_d, "flow_eps", None, errors, "flow")
    dt = _take(flow_d, "dt", None, errors, "flow")
    T = _take(flow_d, "T", 0.1, errors, "flow")
    integrator = _take(flow_d, "integrator", "rk4-fixed", errors, "flow")
    tol = _take(flow_d, "tol", 1e-8, errors, "flow")
    refresh = _take(flow_d, "coeff_refresh", 10, errors, "flow")
    if flow_d:
        errors.append(f"flow: unknown keys {sorted(flow_d)}")
    if flow_eps is not None and not flow_eps > 0.0:
        errors.append(f"flow: flow_eps must be positive or null, got {flow_eps}")
    flow = None
    if not errors and grid is not None and params is not None:
        if dt is None:
            dt = cfl_dt(grid, params)
        try:
            flow = FlowConfig(dt=float(dt), T=float(T),
                              flow_eps=None if flow_eps is None
                              else float(flow_eps),
                              integrator=str(integrator), tol=float(tol),
                              coeff_refresh=int(refresh))
        except Exception as exc:
            errors.append(f"flow: {exc}")

    if errors:
        raise ConfigError("invalid config:\n  - " + "\n  - ".join(errors))
    return RunConfig(grid=grid, params=params, cutoff=cutoff, flow=flow,
                     scheme=scheme, seed=int(seed), out_dir=str(out_dir))


def parse_config(path):
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}")
    return build_config(raw)
