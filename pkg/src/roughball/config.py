"""Declarative experiment configs: schema validation, defaults, hashing.

A config is a JSON object with an ``experiment`` kind and per-kind sections.
Parsing fills defaults and validates every key against the schema below;
unknown keys are rejected by name so typos fail loudly instead of silently
running a default.  The resolved config is what gets hashed (canonical JSON,
sorted keys) and echoed next to the artifacts, and parsing an echoed config
resolves to the identical object.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .gaussian import CovarianceModel, brownian_model, custom_model, fbm_model

EXPERIMENTS = ("sbp", "entropy", "quantize", "empirical", "inequalities", "audit")

KNOWN_CHECKS = (
    "anderson",
    "cameron_martin",
    "sidak",
    "borell_shift",
    "borell_shift_rough",
    "canary_violation",
)


class ConfigError(ValueError):
    """Schema violation; the message names the offending key."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(resolved: dict) -> str:
    return hashlib.sha256(canonical_json(resolved).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description."""

    data: dict

    @property
    def experiment(self) -> str:
        return self.data["experiment"]

    @property
    def hash(self) -> str:
        return config_hash(self.data)

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.data == other.data

    def model(self) -> CovarianceModel:
        spec = self.data["model"]
        horizon = self.data["grid"]["T"]
        if spec["kind"] == "brownian":
            return brownian_model(spec["d"], horizon)
        if spec["kind"] == "fbm":
            return fbm_model(spec["hurst"], spec["d"], horizon)
        table = spec["sigma2_table"]
        return custom_model(
            [row[0] for row in table], [row[1] for row in table],
            spec["rho"], spec["d"], horizon,
        )


# ---------------------------------------------------------------------------
# Validation helpers (each raises ConfigError naming the key)
# ---------------------------------------------------------------------------


def _req(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}.{key}: required key missing")
    return section[key]


def _num(value, key, kind=float, low=None, high=None, low_open=False, high_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    v = kind(value)
    if kind is int and v != value:
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if low is not None and (v <= low if low_open else v < low):
        raise ConfigError(f"{key}: must be {'>' if low_open else '>='} {low}, got {value}")
    if high is not None and (v >= high if high_open else v > high):
        raise ConfigError(f"{key}: must be {'<' if high_open else '<='} {high}, got {value}")
    return v


def _choice(value, key, options):
    if value not in options:
        raise ConfigError(f"{key}: must be one of {options}, got {value!r}")
    return value


def _no_extras(section: dict, allowed, where: str):
    extras = sorted(set(section) - set(allowed))
    if extras:
        raise ConfigError(f"{where}.{extras[0]}: unknown key (allowed: {sorted(allowed)})")


def _eps_list(value, key: str) -> list:
    """Accept an explicit list or {min, max, count} resolved to a geometric grid."""
    import numpy as np

    if isinstance(value, dict):
        _no_extras(value, ("min", "max", "count"), key)
        lo = _num(_req(value, "min", key), f"{key}.min", float, 0, low_open=True)
        hi = _num(_req(value, "max", key), f"{key}.max", float, lo, low_open=True)
        cnt = _num(_req(value, "count", key), f"{key}.count", int, 2)
        return [float(v) for v in np.geomspace(lo, hi, int(cnt))]
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{key}: expected a nonempty list or {{min,max,count}}")
    out = [_num(v, f"{key}[{i}]", float, 0, low_open=True) for i, v in enumerate(value)]
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"{key}: values must be strictly increasing")
    return out


def _validate_model(spec, where="model") -> dict:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = _choice(_req(spec, "kind", where), f"{where}.kind",
                   ("brownian", "fbm", "custom_sigma2"))
    out = {"kind": kind, "d": _num(_req(spec, "d", where), f"{where}.d", int, 1)}
    allowed = {"kind", "d"}
    if kind == "fbm":
        allowed.add("hurst")
        out["hurst"] = _num(_req(spec, "hurst", where), f"{where}.hurst",
                            float, 1.0 / 3.0, 0.5, low_open=True)
    elif kind == "custom_sigma2":
        allowed |= {"sigma2_table", "rho"}
        table = _req(spec, "sigma2_table", where)
        if (not isinstance(table, list) or len(table) < 3
                or any(not isinstance(r, list) or len(r) != 2 for r in table)):
            raise ConfigError(f"{where}.sigma2_table: expected a list of [tau, sigma2] pairs")
        out["sigma2_table"] = [[float(a), float(b)] for a, b in table]
        out["rho"] = _num(_req(spec, "rho", where), f"{where}.rho", float, 1.0, 1.5,
                          high_open=True)
    _no_extras(spec, allowed, where)
    return out


def _rho_of(model_spec: dict) -> float:
    if model_spec["kind"] == "brownian":
        return 1.0
    if model_spec["kind"] == "fbm":
        return 1.0 / (2.0 * model_spec["hurst"])
    return model_spec["rho"]


def _validate_alpha(alpha, model_spec: dict, norm_kind: str = "rough_holder_dyadic"):
    a = _num(alpha, "alpha", float)
    if norm_kind == "path_holder":
        if not (0.0 < a <= 1.0):
            raise ConfigError(f"alpha must lie in (0, 1] for path norms, got {alpha}")
        return a
    upper = 1.0 / (2.0 * _rho_of(model_spec))
    if not (1.0 / 3.0 < a < upper):
        raise ConfigError(f"alpha must lie in (1/3, {upper:g})")
    return a


# ---------------------------------------------------------------------------
# Per-experiment sections
# ---------------------------------------------------------------------------

_COMMON_KEYS = ("experiment", "model", "grid", "seed", "out", "variant", "threads",
                "config_hash")

_DEFAULT_EPS = {"min": 0.25, "max": 4.0, "count": 17}


def _resolve_common(raw: dict) -> dict:
    exp = _choice(_req(raw, "experiment", "config"), "experiment", EXPERIMENTS)
    model = _validate_model(_req(raw, "model", "config"))
    grid = raw.get("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid: expected an object")
    _no_extras(grid, ("T", "N"), "grid")
    T = _num(grid.get("T", 1.0), "grid.T", float, 0, low_open=True)
    N = _num(grid.get("N", 1024), "grid.N", int, 2)
    if N & (N - 1):
        raise ConfigError(f"grid.N: must be a power of two, got {N}")
    out = {
        "experiment": exp,
        "model": model,
        "grid": {"T": T, "N": int(N)},
        "seed": _num(raw.get("seed", 0), "seed", int, 0),
        "out": str(raw.get("out", "out")),
        "variant": _choice(raw.get("variant", "sum"), "variant", ("sum", "sup")),
    }
    if raw.get("threads") is not None:
        out["threads"] = _num(raw["threads"], "threads", int, 1)
    return out


def _resolve_sbp(raw: dict, common: dict) -> dict:
    _no_extras(raw, _COMMON_KEYS + ("alpha", "norm_kind", "n_samples", "eps",
                                    "fit_window"), "config")
    norm_kind = _choice(raw.get("norm_kind", "rough_holder_dyadic"), "norm_kind",
                        ("path_holder", "rough_holder_allpairs", "rough_holder_dyadic",
                         "rough_holder_lemma_bound"))
    out = dict(common)
    out["alpha"] = _validate_alpha(_req(raw, "alpha", "config"), common["model"], norm_kind)
    out["norm_kind"] = norm_kind
    out["n_samples"] = _num(raw.get("n_samples", 100000), "n_samples", int, 1, low_open=False)
    out["eps"] = _eps_list(raw.get("eps", dict(_DEFAULT_EPS)), "eps")
    if "fit_window" in raw:
        win = raw["fit_window"]
        if not (isinstance(win, list) and len(win) == 2):
            raise ConfigError("fit_window: expected [min_eps, max_eps]")
        lo = _num(win[0], "fit_window[0]", float, 0, low_open=True)
        hi = _num(win[1], "fit_window[1]", float, lo, low_open=True)
        out["fit_window"] = [lo, hi]
    return out


def _resolve_entropy(raw: dict, common: dict) -> dict:
    _no_extras(raw, _COMMON_KEYS + ("alpha", "eta", "eps", "n_samples", "mesh",
                                    "cover_eps"), "config")
    out = dict(common)
    out["alpha"] = _validate_alpha(_req(raw, "alpha", "config"), common["model"])
    out["eta"] = _num(raw.get("eta", 1.0), "eta", float, 0)
    out["eps"] = _eps_list(raw.get("eps", {"min": 0.4, "max": 1.6, "count": 7}), "eps")
    out["n_samples"] = _num(raw.get("n_samples", 20000), "n_samples", int, 1)
    mesh = raw.get("mesh", {})
    _no_extras(mesh, ("size", "n_steps"), "mesh")
    m_steps = _num(mesh.get("n_steps", 64), "mesh.n_steps", int, 2)
    if m_steps & (m_steps - 1):
        raise ConfigError(f"mesh.n_steps: must be a power of two, got {m_steps}")
    out["mesh"] = {
        "size": _num(mesh.get("size", 256), "mesh.size", int, 1),
        "n_steps": int(m_steps),
    }
    out["cover_eps"] = _eps_list(raw.get("cover_eps", {"min": 0.1, "max": 1.2, "count": 8}),
                                 "cover_eps")
    return out


def _resolve_quantize(raw: dict, common: dict) -> dict:
    _no_extras(raw, _COMMON_KEYS + ("alpha", "r", "n_centers", "n_train", "n_fresh",
                                    "eps", "curve_samples", "mode", "tol",
                                    "max_iter"), "config")
    out = dict(common)
    out["alpha"] = _validate_alpha(_req(raw, "alpha", "config"), common["model"])
    out["r"] = _num(raw.get("r", 2.0), "r", float, 1.0)
    centers = raw.get("n_centers", [4, 16, 64])
    if not isinstance(centers, list) or not centers:
        raise ConfigError("n_centers: expected a nonempty list of positive integers")
    out["n_centers"] = [int(_num(v, f"n_centers[{i}]", int, 1))
                        for i, v in enumerate(centers)]
    out["n_train"] = _num(raw.get("n_train", 512), "n_train", int, 1)
    out["n_fresh"] = _num(raw.get("n_fresh", 2000), "n_fresh", int, 1)
    if max(out["n_centers"]) > out["n_train"]:
        raise ConfigError("n_centers: entries must not exceed n_train")
    out["eps"] = _eps_list(raw.get("eps", dict(_DEFAULT_EPS)), "eps")
    out["curve_samples"] = _num(raw.get("curve_samples", 20000), "curve_samples", int, 1)
    out["mode"] = _choice(raw.get("mode", "auto"), "mode", ("auto", "medoid", "mean"))
    out["tol"] = _num(raw.get("tol", 1e-6), "tol", float, 0, low_open=True)
    out["max_iter"] = _num(raw.get("max_iter", 60), "max_iter", int, 1)
    return out


def _resolve_empirical(raw: dict, common: dict) -> dict:
    _no_extras(raw, _COMMON_KEYS + ("alpha", "r", "n_list", "reps", "m_weights",
                                    "test_size", "bootstrap"), "config")
    out = dict(common)
    out["alpha"] = _validate_alpha(_req(raw, "alpha", "config"), common["model"])
    out["r"] = _num(raw.get("r", 2.0), "r", float, 1.0)
    n_list = raw.get("n_list", [8, 16, 32, 64, 128])
    if not isinstance(n_list, list) or not n_list:
        raise ConfigError("n_list: expected a nonempty list of positive integers")
    out["n_list"] = [int(_num(v, f"n_list[{i}]", int, 1)) for i, v in enumerate(n_list)]
    out["reps"] = _num(raw.get("reps", 10), "reps", int, 1)
    out["m_weights"] = _num(raw.get("m_weights", 2000), "m_weights", int, 1)
    out["test_size"] = _num(raw.get("test_size", 256), "test_size", int, 1)
    out["bootstrap"] = _num(raw.get("bootstrap", 8), "bootstrap", int, 0)
    return out


def _resolve_inequalities(raw: dict, common: dict) -> dict:
    _no_extras(raw, _COMMON_KEYS + ("checks",), "config")
    checks = raw.get("checks")
    if checks is None:
        checks = [
            {"name": "anderson", "alpha": 0.4, "eps": 1.5, "n": 20000},
            {"name": "cameron_martin", "alpha": 0.4, "eps": 1.5, "n": 20000},
            {"name": "sidak", "chaos_level": 1},
            {"name": "borell_shift", "set": ["half_space", 0.0], "lam": 1.0},
        ]
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks: expected a nonempty list")
    resolved = []
    for i, chk in enumerate(checks):
        if not isinstance(chk, dict):
            raise ConfigError(f"checks[{i}]: expected an object")
        name = _choice(_req(chk, "name", f"checks[{i}]"), f"checks[{i}].name", KNOWN_CHECKS)
        entry = dict(chk)
        entry["name"] = name
        if "alpha" in entry:
            entry["alpha"] = _validate_alpha(entry["alpha"], common["model"])
        resolved.append(entry)
    out = dict(common)
    out["checks"] = resolved
    return out


def _resolve_audit(raw: dict, common: dict) -> dict:
    _no_extras(raw, _COMMON_KEYS + ("h_window", "mesh_levels", "n_dump"), "config")
    out = dict(common)
    out["h_window"] = _num(raw.get("h_window", 0.5), "h_window", float, 0, low_open=True)
    out["mesh_levels"] = _num(raw.get("mesh_levels", 6), "mesh_levels", int, 2)
    out["n_dump"] = _num(raw.get("n_dump", 3), "n_dump", int, 0)
    return out


_RESOLVERS = {
    "sbp": _resolve_sbp,
    "entropy": _resolve_entropy,
    "quantize": _resolve_quantize,
    "empirical": _resolve_empirical,
    "inequalities": _resolve_inequalities,
    "audit": _resolve_audit,
}


def parse_config(source) -> ExperimentConfig:
    """Parse a config from a dict, a JSON string, or a file path."""
    if isinstance(source, ExperimentConfig):
        return source
    if isinstance(source, dict):
        raw = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            pass
        elif os.path.exists(text):
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            raise ConfigError(f"config file not found: {text}")
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config: expected a JSON object")
    raw = {k: v for k, v in raw.items() if k != "config_hash"}
    common = _resolve_common(raw)
    resolved = _RESOLVERS[common["experiment"]](raw, common)
    return ExperimentConfig(resolved)


def echo_config(config: ExperimentConfig) -> str:
    """Serialized resolved config with its own hash; parses back to config."""
    data = dict(config.data)
    data["config_hash"] = config.hash
    return json.dumps(data, sort_keys=True, indent=2) + "\n"
