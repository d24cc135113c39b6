"""Flat ``section.key = value`` experiment configs.

Lines are ``key = value``; ``#`` starts a comment line, blank lines are
ignored. Lists are comma separated. Every subcommand has a schema, and unknown
or malformed keys are reported with their line number.
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass, fields

from .densities import MixtureDensity
from .errors import ConfigError
from .posterior import MCSettings, PriorSpec, TailRegime
from .smoother import GridSpec, SmootherConfig

__all__ = [
    "Field",
    "SCHEMAS",
    "METRIC_KINDS",
    "parse_config",
    "load_config",
    "serialize_config",
    "config_hash",
    "build_density",
    "build_grid",
    "build_smoother",
    "build_prior",
    "build_mc",
    "build_regime",
]


@dataclass(frozen=True)
class Field:
    kind: str  # float, int, str, floats, ints, strs
    required: bool = False
    choices: tuple | None = None


def _density_fields(prefix, required=True):
    return {
        f"{prefix}.family": Field("str", required, ("gaussian", "cauchy", "laplace")),
        f"{prefix}.weights": Field("floats", required),
        f"{prefix}.locations": Field("floats", required),
        f"{prefix}.scale": Field("float", required),
    }


_GRID = {
    "grid.lower": Field("float"),
    "grid.upper": Field("float"),
    "grid.step": Field("float"),
}
_QUAD = {
    "quadrature.nodes_per_unit": Field("int"),
    "quadrature.abs_tol": Field("float"),
}
_PRIOR_KINDS = {"k": "int", "sigma2_grid_nodes": "int", "truncation": "str", "g": "str"}
_PRIOR = {
    f"prior.{f.name}": Field(_PRIOR_KINDS.get(f.name, "float"),
                             choices={"truncation": ("log", "none"),
                                      "g": ("log1p", "sqrt", "linear")}.get(f.name))
    for f in fields(PriorSpec)
}

METRIC_KINDS = ("sup", "L1", "Hellinger", "KL", "Kolmogorov", "Prokhorov", "weak")

SCHEMAS = {
    "smooth": {**_density_fields("density"), **_GRID, **_QUAD,
               "smoother.R": Field("float", True)},
    "bounds": {**_density_fields("density"), **_GRID, **_QUAD,
               "bounds.R": Field("floats", True),
               "bounds.C": Field("float"),
               "bounds.C_prime": Field("float"),
               "bounds.error_method": Field("str", choices=("difference", "tail"))},
    "metrics": {**_density_fields("f"), **_density_fields("g"), **_GRID, **_QUAD,
                "metrics.kinds": Field("strs", choices=METRIC_KINDS),
                "metrics.R": Field("float")},
    "consistency": {**_density_fields("f0"), **_GRID, **_PRIOR,
                    "seed": Field("int", True),
                    "trace.n_list": Field("ints", True),
                    "trace.epsilon": Field("float", True),
                    "mc.chains": Field("int"),
                    "mc.iterations": Field("int"),
                    "mc.burn_in": Field("int"),
                    "mc.thin": Field("int")},
    "priorcheck": {**_density_fields("f0", required=False), **_GRID, **_PRIOR,
                   "seed": Field("int", True),
                   "check.n_list": Field("ints", True),
                   "check.R_grid": Field("floats", True),
                   "check.regime": Field("str", True, ("supersmooth", "ordinary", "normal")),
                   "check.alpha": Field("float"),
                   "check.beta": Field("float"),
                   "check.d": Field("int"),
                   "check.C_tilde": Field("float"),
                   "kl.epsilon": Field("float"),
                   "kl.draws": Field("int"),
                   "kl.n": Field("int")},
}


def _convert(raw, spec, key, lineno):
    def one(text, kind):
        try:
            if kind == "float":
                return float(text)
            if kind == "int":
                return int(text)
            return text
        except ValueError:
            raise ConfigError(f"line {lineno}: {key}: cannot parse {text!r} as {kind}") from None

    if spec.kind.endswith("s"):
        parts = [p.strip() for p in raw.split(",")]
        if any(not p for p in parts):
            raise ConfigError(f"line {lineno}: {key}: empty list entry")
        value = [one(p, spec.kind[:-1]) for p in parts]
        check = value
    else:
        value = one(raw, spec.kind)
        check = [value]
    if spec.choices is not None:
        bad = [v for v in check if v not in spec.choices]
        if bad:
            raise ConfigError(f"line {lineno}: {key}: {bad[0]!r} not in {list(spec.choices)}")
    return value


def parse_config(text, subcommand):
    """Parse and validate config text into ``{dotted_key: value}``."""
    if subcommand not in SCHEMAS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    schema = SCHEMAS[subcommand]
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r} for {subcommand}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not raw:
            raise ConfigError(f"line {lineno}: {key}: missing value")
        out[key] = _convert(raw, schema[key], key, lineno)
    missing = [k for k, f in schema.items() if f.required and k not in out]
    if missing:
        raise ConfigError(f"missing required field(s): {', '.join(missing)}")
    grid_keys = [k for k in _GRID if k in out]
    if grid_keys and len(grid_keys) != len(_GRID):
        raise ConfigError("grid.lower, grid.upper and grid.step must be given together")
    return out


def load_config(path, subcommand):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, subcommand)


def _format(value):
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg):
    """Canonical text: one ``key = value`` per line, keys sorted."""
    return "".join(f"{k} = {_format(cfg[k])}\n" for k in sorted(cfg))


def config_hash(cfg):
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()[:16]


def _wrap(build):
    @functools.wraps(build)
    def inner(*args, **kwargs):
        try:
            return build(*args, **kwargs)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None

    return inner


@_wrap
def build_density(cfg, prefix):
    return MixtureDensity(cfg[f"{prefix}.family"], cfg[f"{prefix}.weights"],
                          cfg[f"{prefix}.locations"], cfg[f"{prefix}.scale"])


@_wrap
def build_grid(cfg):
    if "grid.lower" not in cfg:
        return None
    return GridSpec(cfg["grid.lower"], cfg["grid.upper"], cfg["grid.step"])


@_wrap
def build_smoother(cfg, R):
    kw = {}
    if "quadrature.nodes_per_unit" in cfg:
        kw["nodes_per_unit"] = cfg["quadrature.nodes_per_unit"]
    if "quadrature.abs_tol" in cfg:
        kw["abs_tol"] = cfg["quadrature.abs_tol"]
    return SmootherConfig(R, grid=build_grid(cfg), **kw)


@_wrap
def build_prior(cfg):
    kw = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("prior.")}
    return PriorSpec(**kw)


@_wrap
def build_mc(cfg):
    kw = {k.split(".", 1)[1]: v for k, v in cfg.items() if k.startswith("mc.")}
    return MCSettings(seed=cfg["seed"], **kw)


@_wrap
def build_regime(cfg):
    kw = {k.split(".", 1)[1]: v for k, v in cfg.items()
          if k in ("check.alpha", "check.beta", "check.d", "check.C_tilde")}
    return TailRegime(cfg["check.regime"], **kw)
