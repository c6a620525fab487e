"""Scenario configuration: parsing, validation, and canonical echo.

Configs are JSON objects.  Group elements enter as axis-angle triples
(radians) for SO(3) and as plain vectors for the abelian model.  The field
``interval.nodes`` is the integration step count; the sample grid has
nodes + 1 points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cubics import CubicState
from .errors import ConfigInvalid
from .groups import GroupModel, abelian, so3
from .potentials import SHAPES, ObstaclePotential

MODES = ("ivp", "bvp", "check", "sweep")

TOLERANCE_DEFAULTS = {
    "bvp_tol": 1e-8,
    "bvp_max_iters": 100,
    "rel_tol": 1e-8,
    "burn_in": 3,
}
_SCALED_TOLERANCES = ("bvp_tol", "rel_tol")


def _need(cfg, key, path, kind=None):
    if key not in cfg:
        raise ConfigInvalid(f"{path}.{key}" if path else key, "missing required field")
    value = cfg[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigInvalid(f"{path}.{key}" if path else key,
                            f"expected {kind.__name__ if not isinstance(kind, tuple) else 'number'}")
    return value


def _vector(value, n, path):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ConfigInvalid(path, f"expected a length-{n} vector")
    if not np.all(np.isfinite(arr)):
        raise ConfigInvalid(path, "entries must be finite")
    return arr


def _group_element(model, value, path):
    vec = _vector(value, model.n, path)
    if model.is_matrix_group:
        return model.exp(vec)
    return vec


@dataclass
class Scenario:
    mode: str
    model: GroupModel
    potential: ObstaclePotential
    span: tuple
    steps: int
    initial: CubicState | None
    boundary: tuple | None
    sweep_parameter: str | None
    sweep_values: list | None
    tolerances: dict
    resolved: dict = field(repr=False, default=None)


def _build_group(cfg):
    kind = _need(cfg, "kind", "group", str)
    if kind == "so3":
        inertia = cfg.get("inertia", [1.0, 1.0, 1.0])
        try:
            return so3(inertia=np.asarray(inertia, dtype=float)), {
                "kind": "so3", "inertia": np.asarray(inertia, dtype=float).tolist()}
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise ConfigInvalid("group.inertia", str(exc)) from exc
    if kind == "abelian":
        n = _need(cfg, "n", "group", int)
        if n < 1:
            raise ConfigInvalid("group.n", "dimension must be positive")
        return abelian(n), {"kind": "abelian", "n": n}
    raise ConfigInvalid("group.kind", f"unknown group kind {kind!r}")


def _build_potential(cfg, model):
    shape = cfg.get("shape", "zero")
    if shape not in SHAPES:
        raise ConfigInvalid("potential.shape", f"unknown shape {shape!r}")
    params = cfg.get("params", {})
    tau = float(params.get("tau", 0.0))
    rho = float(params.get("rho", 1.0))
    sigma2 = float(params.get("sigma2", 1.0))
    if tau < 0:
        raise ConfigInvalid("potential.params.tau", "must be non-negative")
    if shape == "inverse_shift" and rho <= 0:
        raise ConfigInvalid("potential.params.rho", "must be positive")
    if shape == "gaussian_bump" and sigma2 <= 0:
        raise ConfigInvalid("potential.params.sigma2", "must be positive")
    obstacle_cfg = cfg.get("obstacle", [0.0] * model.n)
    obstacle = _group_element(model, obstacle_cfg, "potential.obstacle")
    pot = ObstaclePotential(model=model, obstacle=obstacle, shape=shape,
                            tau=tau, rho=rho, sigma2=sigma2)
    echo = {
        "shape": shape,
        "params": {"tau": tau, "rho": rho, "sigma2": sigma2},
        "obstacle": list(np.asarray(obstacle_cfg, dtype=float)),
    }
    return pot, echo


def load_scenario(source, mode_override=None, tol_scale=1.0):
    """Parse and validate a scenario from a path, JSON string, or dict."""
    if isinstance(source, dict):
        cfg = source
    else:
        text = source
        if not str(source).lstrip().startswith("{"):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid("<root>", f"not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigInvalid("<root>", "top-level config must be an object")

    mode = mode_override or _need(cfg, "mode", "", str)
    if mode not in MODES:
        raise ConfigInvalid("mode", f"must be one of {MODES}")

    model, group_echo = _build_group(_need(cfg, "group", "", dict))
    potential, pot_echo = _build_potential(cfg.get("potential", {}), model)

    interval = _need(cfg, "interval", "", dict)
    a = float(_need(interval, "a", "interval", (int, float)))
    b = float(_need(interval, "b", "interval", (int, float)))
    steps = _need(interval, "nodes", "interval", int)
    if b <= a:
        raise ConfigInvalid("interval.b", "must satisfy b > a")
    if steps < 16:
        raise ConfigInvalid("interval.nodes", "need at least 16 integration steps")

    has_initial = "initial" in cfg
    has_boundary = "boundary" in cfg
    if has_initial == has_boundary:
        raise ConfigInvalid("initial", "exactly one of initial/boundary must be present")
    if mode == "ivp" and not has_initial:
        raise ConfigInvalid("initial", "mode 'ivp' requires initial data")
    if mode == "bvp" and not has_boundary:
        raise ConfigInvalid("boundary", "mode 'bvp' requires boundary data")

    n = model.n
    initial = boundary = None
    if has_initial:
        ic = cfg["initial"]
        initial = CubicState(
            g=_group_element(model, _need(ic, "g_a", "initial"), "initial.g_a"),
            xi0=_vector(_need(ic, "xi0", "initial"), n, "initial.xi0"),
            xi1=_vector(_need(ic, "xi1", "initial"), n, "initial.xi1"),
            xi2=_vector(_need(ic, "xi2", "initial"), n, "initial.xi2"),
        )
        data_echo = {"initial": {k: list(map(float, ic[k]))
                                 for k in ("g_a", "xi0", "xi1", "xi2")}}
    else:
        bc = cfg["boundary"]
        boundary = (
            _group_element(model, _need(bc, "g_a", "boundary"), "boundary.g_a"),
            _vector(_need(bc, "xi0_a", "boundary"), n, "boundary.xi0_a"),
            _group_element(model, _need(bc, "g_b", "boundary"), "boundary.g_b"),
            _vector(_need(bc, "xi0_b", "boundary"), n, "boundary.xi0_b"),
        )
        data_echo = {"boundary": {k: list(map(float, bc[k]))
                                  for k in ("g_a", "xi0_a", "g_b", "xi0_b")}}

    sweep_parameter = sweep_values = None
    if "sweep" in cfg:
        sw = cfg["sweep"]
        sweep_parameter = sw.get("parameter")
        values = sw.get("values")
        sweep_values = None if values is None else [float(v) for v in values]
    if mode == "sweep" and sweep_parameter is None:
        raise ConfigInvalid("sweep.parameter", "mode 'sweep' requires a parameter path")

    tolerances = dict(TOLERANCE_DEFAULTS)
    for key, value in cfg.get("tolerances", {}).items():
        if key not in TOLERANCE_DEFAULTS:
            raise ConfigInvalid(f"tolerances.{key}", "unknown tolerance")
        tolerances[key] = value
    for key in _SCALED_TOLERANCES:
        tolerances[key] = float(tolerances[key]) * float(tol_scale)
    tolerances["bvp_max_iters"] = int(tolerances["bvp_max_iters"])
    tolerances["burn_in"] = int(tolerances["burn_in"])

    resolved = {
        "mode": mode,
        "group": group_echo,
        "potential": pot_echo,
        "interval": {"a": a, "b": b, "nodes": steps},
        "tolerances": tolerances,
        **data_echo,
    }
    if sweep_parameter is not None:
        resolved["sweep"] = {"parameter": sweep_parameter, "values": sweep_values}

    return Scenario(
        mode=mode, model=model, potential=potential, span=(a, b), steps=steps,
        initial=initial, boundary=boundary, sweep_parameter=sweep_parameter,
        sweep_values=sweep_values, tolerances=tolerances, resolved=resolved,
    )


def set_config_path(cfg, dotted, value):
    """Assign into a nested config dict by dotted path; validates resolution."""
    parts = dotted.split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigInvalid(dotted, "parameter path does not resolve")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigInvalid(dotted, "parameter path does not resolve")
    if not isinstance(node[leaf], (int, float)) or isinstance(node[leaf], bool):
        raise ConfigInvalid(dotted, "parameter path must point at a scalar")
    node[leaf] = float(value)
