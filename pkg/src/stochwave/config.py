"""Run-configuration file: schema, defaults, and construction of the simulation objects.

The configuration is a single JSON document.  Every key is validated before
any computation starts, unknown keys are rejected with the offending path,
and all defaults are filled in so that the resolved document written next to
a run's outputs reproduces it exactly.

Schema (defaults in parentheses):

    domain      {"kind": "interval", "length": L}
                or {"kind": "rectangle", "lx": Lx, "ly": Ly}
    modes       int or [mx, my]            modes per axis
    grid        int or [nx, ny]            grid points per axis (4*modes + 1)
    exponents   {"q": >=2, "p": >2}
    cutoff      null or level > 0          (null: raw source term)
    yosida_lambda  null or > 0             (null: exact damping)
    dt          > 0                        (0.25 / sqrt(mu_max))
    horizon     > 0
    blowup_threshold  > 0                  (1e6)
    noise       {"eps": >=0 (0), "kappa": >=0 (0),
                 "spectrum": {"kind": "power", "gamma": g, "lambda0": l}
                             or {"kind": "explicit", "values": [...]}
                             ({"kind": "power", "gamma": 2, "lambda0": 1}),
                 "sigma0": {"kind": "constant", "value": v}
                           or {"kind": "modal", "coeffs": [...]}
                           or {"kind": "fundamental_sine", "amplitude": a}
                           ({"kind": "constant", "value": 1})}
    initial     {"u0": <field>, "u1": <field>} where <field> is
                {"kind": "zero"} | {"kind": "modal", "coeffs": [...]}
                | {"kind": "fundamental_sine", "amplitude": a}   (zero)
    ensemble    {"paths": >=1 (1), "master_seed": int (0),
                 "record_stride": >=1 (1)}
    analysis    {"alpha": null or in (0, 1/2) (null: derived from p, q),
                 "mu": >0 (1e-3), "beta": >0 (0.1), "K": null or >0 (null)}

Modal coefficient lists shorter than the mode count are zero padded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .basis import Domain, SpectralBasis, build_basis
from .dynamics import SimConfig
from .ensemble import EnsembleConfig
from .nonlinear import CutoffLevel, Exponents
from .noise import NoiseSpec, power_spectrum

__all__ = ["ConfigError", "ResolvedRun", "load_config", "resolve_config"]


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass
class ResolvedRun:
    """Validated configuration together with the constructed objects."""

    ensemble: EnsembleConfig
    analysis: dict
    payload: dict  # fully resolved document, suitable for config.json


def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected an object, got {type(node).__name__}")
    return node


def _check_keys(node: dict, allowed: set[str], path: str) -> None:
    unknown = set(node) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}; allowed: {sorted(allowed)}")


def _number(node: dict, key: str, path: str, default=None, minimum=None, strict=False, allow_none=False):
    if key not in node or node[key] is None:
        if allow_none and node.get(key, default) is None and default is None:
            return None
        if default is None and not allow_none:
            raise ConfigError(f"{path}.{key}: required")
        value = default
    else:
        value = node[key]
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key}: must be finite")
    if minimum is not None:
        if strict and not value > minimum:
            raise ConfigError(f"{path}.{key}: must be > {minimum}, got {value:g}")
        if not strict and not value >= minimum:
            raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {value:g}")
    return value


def _int_or_pair(value, d: int, path: str):
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected integer(s), got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, list) and len(value) == d and all(isinstance(v, int) for v in value):
        return tuple(value)
    raise ConfigError(f"{path}: expected an int or a list of {d} ints, got {value!r}")


def _parse_domain(node, path="domain") -> Domain:
    node = _require_mapping(node, path)
    kind = node.get("kind")
    if kind == "interval":
        _check_keys(node, {"kind", "length"}, path)
        return Domain.interval(_number(node, "length", path, minimum=0, strict=True))
    if kind == "rectangle":
        _check_keys(node, {"kind", "lx", "ly"}, path)
        return Domain.rectangle(
            _number(node, "lx", path, minimum=0, strict=True),
            _number(node, "ly", path, minimum=0, strict=True),
        )
    raise ConfigError(f"{path}.kind: expected 'interval' or 'rectangle', got {kind!r}")


def _parse_field(node, basis: SpectralBasis, path: str) -> np.ndarray:
    node = _require_mapping(node, path)
    kind = node.get("kind")
    if kind == "zero":
        _check_keys(node, {"kind"}, path)
        return np.zeros(basis.m)
    if kind == "modal":
        _check_keys(node, {"kind", "coeffs"}, path)
        coeffs = node.get("coeffs")
        if not isinstance(coeffs, list) or not all(isinstance(v, (int, float)) for v in coeffs):
            raise ConfigError(f"{path}.coeffs: expected a list of numbers")
        if len(coeffs) > basis.m:
            raise ConfigError(f"{path}.coeffs: {len(coeffs)} coefficients exceed the {basis.m} modes")
        out = np.zeros(basis.m)
        out[: len(coeffs)] = coeffs
        return out
    if kind == "fundamental_sine":
        _check_keys(node, {"kind", "amplitude"}, path)
        amp = _number(node, "amplitude", path, default=1.0)
        # A * prod_a sin(pi x_a / L_a) is exactly the lowest mode with
        # coefficient A * sqrt(prod L_a / 2^d)
        out = np.zeros(basis.m)
        out[0] = amp * math.sqrt(basis.domain.volume / 2**basis.d)
        return out
    raise ConfigError(f"{path}.kind: expected 'zero', 'modal' or 'fundamental_sine', got {kind!r}")


def _field_payload(node) -> dict:
    node = dict(node)
    node.setdefault("kind", "zero")
    return node


def _parse_sigma0(node, basis: SpectralBasis, path: str):
    node = _require_mapping(node, path)
    kind = node.get("kind")
    if kind == "constant":
        _check_keys(node, {"kind", "value"}, path)
        return _number(node, "value", path, default=1.0)
    if kind in ("modal", "fundamental_sine"):
        return _parse_field(node, basis, path)
    raise ConfigError(
        f"{path}.kind: expected 'constant', 'modal' or 'fundamental_sine', got {kind!r}"
    )


def load_config(path) -> dict:
    """Read and parse a JSON configuration file."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration file {path} is not valid JSON: {exc}")


_TOP_KEYS = {
    "domain",
    "modes",
    "grid",
    "exponents",
    "cutoff",
    "yosida_lambda",
    "dt",
    "horizon",
    "blowup_threshold",
    "noise",
    "initial",
    "ensemble",
    "analysis",
}


def resolve_config(doc: dict, overrides: dict | None = None) -> ResolvedRun:
    """Validate a configuration document and build the simulation objects.

    ``overrides`` (from command-line flags) take precedence over file values;
    recognized keys: paths, master_seed, out ignored here.
    """
    doc = _require_mapping(doc, "config")
    _check_keys(doc, _TOP_KEYS, "config")
    overrides = overrides or {}

    domain = _parse_domain(doc.get("domain", {"kind": "interval", "length": 1.0}))
    if "modes" not in doc:
        raise ConfigError("config.modes: required")
    m = _int_or_pair(doc["modes"], domain.d, "modes")
    n = _int_or_pair(doc["grid"], domain.d, "grid") if doc.get("grid") is not None else None
    try:
        basis = build_basis(domain, m, n)
    except ValueError as exc:
        raise ConfigError(f"basis: {exc}")

    exp_node = _require_mapping(doc.get("exponents"), "exponents") if "exponents" in doc else None
    if exp_node is None:
        raise ConfigError("config.exponents: required")
    _check_keys(exp_node, {"q", "p"}, "exponents")
    try:
        exponents = Exponents(
            q=_number(exp_node, "q", "exponents"),
            p=_number(exp_node, "p", "exponents"),
            d=domain.d,
        )
    except ValueError as exc:
        raise ConfigError(f"exponents: {exc}")

    cutoff_val = _number(doc, "cutoff", "config", default=None, allow_none=True, minimum=0, strict=True)
    yosida_val = _number(
        doc, "yosida_lambda", "config", default=None, allow_none=True, minimum=0, strict=True
    )

    noise_node = _require_mapping(doc.get("noise", {}), "noise")
    _check_keys(noise_node, {"eps", "kappa", "spectrum", "sigma0"}, "noise")
    eps = _number(noise_node, "eps", "noise", default=0.0, minimum=0)
    kappa = _number(noise_node, "kappa", "noise", default=0.0, minimum=0)
    spec_node = _require_mapping(
        noise_node.get("spectrum", {"kind": "power", "gamma": 2.0, "lambda0": 1.0}),
        "noise.spectrum",
    )
    kind = spec_node.get("kind")
    if kind == "power":
        _check_keys(spec_node, {"kind", "gamma", "lambda0"}, "noise.spectrum")
        gamma = _number(spec_node, "gamma", "noise.spectrum", default=2.0)
        lambda0 = _number(spec_node, "lambda0", "noise.spectrum", default=1.0, minimum=0, strict=True)
        lam = power_spectrum(basis, gamma, lambda0)
        spec_payload = {"kind": "power", "gamma": gamma, "lambda0": lambda0}
    elif kind == "explicit":
        _check_keys(spec_node, {"kind", "values"}, "noise.spectrum")
        values = spec_node.get("values")
        if not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values):
            raise ConfigError("noise.spectrum.values: expected a list of numbers")
        if len(values) > basis.m:
            raise ConfigError(
                f"noise.spectrum.values: {len(values)} entries exceed the {basis.m} modes"
            )
        lam = np.zeros(basis.m)
        lam[: len(values)] = values
        if np.any(lam < 0):
            raise ConfigError("noise.spectrum.values: eigenvalues must be nonnegative")
        spec_payload = {"kind": "explicit", "values": [float(v) for v in values]}
    else:
        raise ConfigError(f"noise.spectrum.kind: expected 'power' or 'explicit', got {kind!r}")
    sigma0_node = noise_node.get("sigma0", {"kind": "constant", "value": 1.0})
    sigma0 = _parse_sigma0(sigma0_node, basis, "noise.sigma0")
    try:
        noise = NoiseSpec(lam=lam, eps=eps, sigma0=sigma0, kappa=kappa)
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}")

    init_node = _require_mapping(doc.get("initial", {}), "initial")
    _check_keys(init_node, {"u0", "u1"}, "initial")
    u0 = _parse_field(init_node.get("u0", {"kind": "zero"}), basis, "initial.u0")
    u1 = _parse_field(init_node.get("u1", {"kind": "zero"}), basis, "initial.u1")

    dt_default = 0.25 / math.sqrt(float(basis.mu[-1]))
    dt = _number(doc, "dt", "config", default=dt_default, minimum=0, strict=True)
    horizon = _number(doc, "horizon", "config", minimum=0, strict=True)
    threshold = _number(doc, "blowup_threshold", "config", default=1.0e6, minimum=0, strict=True)

    try:
        sim = SimConfig(
            basis=basis,
            exponents=exponents,
            noise=noise,
            u0=u0,
            u1=u1,
            dt=dt,
            T=horizon,
            cutoff=None if cutoff_val is None else CutoffLevel(cutoff_val),
            yosida_lam=yosida_val,
            blowup_threshold=threshold,
        )
    except ValueError as exc:
        raise ConfigError(f"config: {exc}")

    ens_node = _require_mapping(doc.get("ensemble", {}), "ensemble")
    _check_keys(ens_node, {"paths", "master_seed", "record_stride"}, "ensemble")
    paths = ens_node.get("paths", 1)
    if "paths" in overrides and overrides["paths"] is not None:
        paths = overrides["paths"]
    if not isinstance(paths, int) or isinstance(paths, bool) or paths < 1:
        raise ConfigError(f"ensemble.paths: expected an integer >= 1, got {paths!r}")
    master_seed = ens_node.get("master_seed", 0)
    if "master_seed" in overrides and overrides["master_seed"] is not None:
        master_seed = overrides["master_seed"]
    if not isinstance(master_seed, int) or isinstance(master_seed, bool):
        raise ConfigError(f"ensemble.master_seed: expected an integer, got {master_seed!r}")
    stride = ens_node.get("record_stride", 1)
    if not isinstance(stride, int) or isinstance(stride, bool) or stride < 1:
        raise ConfigError(f"ensemble.record_stride: expected an integer >= 1, got {stride!r}")
    try:
        ens_cfg = EnsembleConfig(
            base=sim, paths=paths, master_seed=master_seed, record_stride=stride
        )
    except ValueError as exc:
        raise ConfigError(f"ensemble: {exc}")

    ana_node = _require_mapping(doc.get("analysis", {}), "analysis")
    _check_keys(ana_node, {"alpha", "mu", "beta", "K"}, "analysis")
    analysis = {
        "alpha": _number(ana_node, "alpha", "analysis", default=None, allow_none=True),
        "mu": _number(ana_node, "mu", "analysis", default=1e-3, minimum=0, strict=True),
        "beta": _number(ana_node, "beta", "analysis", default=0.1, minimum=0, strict=True),
        "K": _number(ana_node, "K", "analysis", default=None, allow_none=True, minimum=0, strict=True),
    }
    if analysis["alpha"] is not None and not 0 < analysis["alpha"] < 0.5:
        raise ConfigError(f"analysis.alpha: must lie in (0, 1/2), got {analysis['alpha']}")

    payload = {
        "domain": (
            {"kind": "interval", "length": domain.lengths[0]}
            if domain.d == 1
            else {"kind": "rectangle", "lx": domain.lengths[0], "ly": domain.lengths[1]}
        ),
        "modes": list(basis.m_axes) if domain.d == 2 else basis.m_axes[0],
        "grid": list(basis.n_axes) if domain.d == 2 else basis.n_axes[0],
        "exponents": {"q": exponents.q, "p": exponents.p},
        "cutoff": cutoff_val,
        "yosida_lambda": yosida_val,
        "dt": dt,
        "horizon": horizon,
        "blowup_threshold": threshold,
        "noise": {
            "eps": eps,
            "kappa": kappa,
            "spectrum": spec_payload,
            "sigma0": dict(_require_mapping(sigma0_node, "noise.sigma0")),
        },
        "initial": {
            "u0": _field_payload(init_node.get("u0", {"kind": "zero"})),
            "u1": _field_payload(init_node.get("u1", {"kind": "zero"})),
        },
        "ensemble": {"paths": paths, "master_seed": master_seed, "record_stride": stride},
        "analysis": analysis,
    }
    return ResolvedRun(ensemble=ens_cfg, analysis=analysis, payload=payload)
