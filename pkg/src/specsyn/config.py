"""Run configuration from defaults, TOML file, environment, and CLI flags.

Precedence is flags > environment > file > defaults.  The environment
carries only connection secrets and tool commands (SPECSYN_API_KEY,
SPECSYN_CC, SPECSYN_VERIFIER); the numeric loop bounds travel through
the file and flags alone.
"""

import os
from typing import Mapping, Optional

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from specsyn.errors import ConfigError
from specsyn.synthesis import RunConfig

ENV_API_KEY = "SPECSYN_API_KEY"
ENV_CC = "SPECSYN_CC"
ENV_VERIFIER = "SPECSYN_VERIFIER"

_RUN_FIELDS = ("n_refine", "n_repair", "t", "mutation_budget", "seed",
               "skip_if_strong")
_TABLES = ("run", "model", "verifier", "domain", "toolchain")


def _check_int(name: str, value, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{name} must be at least {minimum}, got {value}")
    return value


def _validate_run(values: Mapping) -> dict:
    out = dict(values)
    if "n_refine" in out:
        out["n_refine"] = _check_int("n_refine", out["n_refine"], 1)
    if "n_repair" in out:
        out["n_repair"] = _check_int("n_repair", out["n_repair"], 1)
    if "mutation_budget" in out:
        out["mutation_budget"] = _check_int("mutation_budget",
                                            out["mutation_budget"], 1)
    if "seed" in out:
        if isinstance(out["seed"], bool) or not isinstance(out["seed"], int):
            raise ConfigError(f"seed must be an integer, got {out['seed']!r}")
    if "t" in out:
        t = out["t"]
        if isinstance(t, bool) or not isinstance(t, (int, float)):
            raise ConfigError(f"t must be a number, got {t!r}")
        if not 0 < t <= 1:
            raise ConfigError(f"t must lie in (0, 1], got {t}")
        out["t"] = float(t)
    if "skip_if_strong" in out and not isinstance(out["skip_if_strong"], bool):
        raise ConfigError(
            f"skip_if_strong must be a boolean, got {out['skip_if_strong']!r}")
    return out


def _read_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}")
    for key in data:
        if key not in _TABLES:
            raise ConfigError(f"unknown config table or key: {key}")
    run = data.get("run", {})
    for key in run:
        if key not in _RUN_FIELDS:
            raise ConfigError(f"unknown run field: {key}")
    return data


def load_config(path=None, env: Optional[Mapping[str, str]] = None,
                cli_flags: Optional[Mapping] = None) -> RunConfig:
    """Merge all four layers into one validated RunConfig.

    `cli_flags` may carry the run fields plus `verifier` (backend kind)
    and pre-typed values; None entries mean "flag not given".  Invalid
    values raise ConfigError naming the offending field.
    """
    env = os.environ if env is None else env
    data = _read_file(path) if path else {}

    run = _validate_run(data.get("run", {}))
    model = dict(data.get("model", {}))
    verifier = dict(data.get("verifier", {}))
    domain = dict(data.get("domain", {}))
    toolchain = data.get("toolchain", {}).get("cc")

    if env.get(ENV_API_KEY):
        model["api_key"] = env[ENV_API_KEY]
    if env.get(ENV_CC):
        toolchain = env[ENV_CC]
    if env.get(ENV_VERIFIER):
        verifier["command"] = env[ENV_VERIFIER]

    flags = {k: v for k, v in (cli_flags or {}).items() if v is not None}
    run.update(_validate_run({k: v for k, v in flags.items()
                              if k in _RUN_FIELDS}))
    if "verifier" in flags:
        verifier["kind"] = flags["verifier"]
    if "cc" in flags:
        toolchain = flags["cc"]

    if "kind" not in verifier:
        verifier["kind"] = "external" if verifier.get("command") else "mock"
    if verifier["kind"] not in ("mock", "external"):
        raise ConfigError(
            f"verifier kind must be 'mock' or 'external', got "
            f"{verifier['kind']!r}")
    if verifier["kind"] == "external" and not verifier.get("command"):
        raise ConfigError("verifier command is required for the external kind")

    for key in ("int_min", "int_max"):
        if key in domain:
            if isinstance(domain[key], bool) or not isinstance(domain[key], int):
                raise ConfigError(
                    f"domain {key} must be an integer, got {domain[key]!r}")

    return RunConfig(model_settings=model or None,
                     verifier_settings=verifier,
                     domain=domain or None,
                     toolchain=toolchain,
                     **run)
