"""Experiment configuration: schemas, defaults, aggregated validation.

Config files are flat key=value text with dotted keys, e.g.

    seed = 42
    critical-line.sigmas = 0.9, 0.7, 0.55
    region-scan.n_blocks = 40960

Precedence: schema defaults < config file < ZETALAB_* environment
variables (global keys only) < explicit command-line flags.  Validation
reports every violation at once, naming the offending key.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable

from .errors import ValidationError
from .rng import parse_seed


def _parse_int(text):
    if isinstance(text, (int, float)):
        return int(text)
    text = text.strip()
    if text.lower().startswith("0x"):
        return int(text, 16)
    return int(float(text)) if ("e" in text.lower() or "." in text) else int(text)


def _parse_float(text):
    return float(text)


def _parse_str(text):
    return str(text).strip()


def _parse_int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [_parse_int(tok) for tok in str(text).split(",") if tok.strip()]


def _parse_float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


def _parse_complex(text):
    if isinstance(text, complex):
        return text
    return complex(str(text).strip().replace(" ", "").replace("i", "j"))


_PARSERS: dict[str, Callable] = {
    "int": _parse_int,
    "seed": lambda v: parse_seed(str(v)),
    "float": _parse_float,
    "str": _parse_str,
    "int_list": _parse_int_list,
    "float_list": _parse_float_list,
    "complex": _parse_complex,
}


@dataclass(frozen=True)
class Param:
    kind: str
    default: object
    help: str = ""
    check: Callable | None = None  # returns a violation message or None


def _descending(vals):
    if any(b >= a for a, b in zip(vals, vals[1:])):
        return "must be strictly descending"
    return None


def _ascending(vals):
    if any(b <= a for a, b in zip(vals, vals[1:])):
        return "must be strictly increasing"
    return None


def _positive(v):
    return None if v > 0 else "must be positive"


def _alpha_hypothesis(v):
    if not 0 < v < 0.5:
        return "must lie in (0, 1/2): the representation theorem hypothesis"
    return None


GLOBAL_SCHEMA: dict[str, Param] = {
    "seed": Param("seed", 1, "master seed (decimal or 0x hex)"),
    "replicas": Param("int", 0, "replica count (0 = subcommand default)"),
    "out_dir": Param("str", "runs", "output directory"),
    "threads": Param("int", 1, "worker pool size", _positive),
}

SCHEMAS: dict[str, dict[str, Param]] = {
    "sample": {
        "n_max": Param("int", 100_000, "largest n sampled", _positive),
        "replicas": Param("int", 1, "", _positive),
    },
    "count-stats": {
        "n_max": Param("int", 1_000_000, "largest n sampled", _positive),
        "checkpoints": Param("int_list", [1000, 10_000, 100_000, 1_000_000],
                             "counting checkpoints", _ascending),
        "replicas": Param("int", 100, "", _positive),
    },
    "zeta-grid": {
        "sigmas": Param("float_list", [2.0, 1.5, 1.1, 0.8, 0.6], "Re s grid"),
        "ts": Param("float_list", [0.0, 1.0, 14.0], "Im s grid"),
        "n": Param("int", 100_000, "Euler product cutoff", _positive),
        "replicas": Param("int", 20, "", _positive),
    },
    "critical-line": {
        "t": Param("float", 0.0, "fixed imaginary part"),
        "sigmas": Param("float_list", [2.0, 0.9, 0.7, 0.55],
                        "descending sigma ladder", _descending),
        "n_list": Param("int_list", [10_000, 100_000, 1_000_000],
                        "cutoff ladder", _ascending),
        "replicas": Param("int", 50, "", _positive),
    },
    "additive": {
        "c": Param("float", 1.0, "thin sequence scale", _positive),
        "alpha": Param("float", 0.4, "thin sequence exponent",
                       _alpha_hypothesis),
        "n_lo": Param("int", 10_000, "scan start", _positive),
        "n_hi": Param("int", 100_000, "scan end", _positive),
        "replicas": Param("int", 50, "", _positive),
    },
    "infinitude": {
        "preset": Param("str", "fibonacci",
                        "fibonacci | mersenne-exponents | powers | explicit"),
        "k_terms": Param("int", 60, "set size", _positive),
        "xs": Param("int_list", [], "explicit x list (preset=explicit)"),
        "base_m": Param("int", 2, "base for preset=powers"),
        "c": Param("float", 1.0, "growth scale for preset=powers", _positive),
        "alpha": Param("float", 0.4, "growth exponent for preset=powers"),
        "replicas": Param("int", 1000, "", _positive),
    },
    "symmetry": {
        "beta": Param("float", 2.0, "block width exponent", _positive),
        "n_blocks": Param("int", 1000, "", _positive),
        "s": Param("complex", 2 + 0j, "evaluation point"),
        "k_rule": Param("str", "sqrt", "sqrt | const"),
        "k0": Param("int", 1, "offsets per block when k_rule=const", _positive),
        "clt_block": Param("int", 10_000, "block index for the CLT check",
                           _positive),
        "replicas": Param("int", 1000, "CLT replicas", _positive),
    },
    "region-scan": {
        "betas": Param("float_list", [1.0, 2.0, 3.0, 4.0, 5.0], "beta grid"),
        "eps": Param("float_list", [0.4, 0.6, 0.9], "Re s grid"),
        "n_blocks": Param("int", 40_960, "", _positive),
        "k_rule": Param("str", "sqrt", "sqrt | const"),
        "k0": Param("int", 1, "", _positive),
        "replicas": Param("int", 20, "", _positive),
    },
    "reference-check": {
        "tol": Param("float", 1e-10, "target tolerance", _positive),
        "laurent_terms": Param("int", 6, "Laurent terms", _positive),
        "stieltjes_m": Param("int", 1_000_000, "Stieltjes truncation",
                             _positive),
    },
    "report": {
        "from_dir": Param("str", "", "run directory to summarize"),
    },
}


def parse_config_text(text: str) -> dict[str, str]:
    """key = value lines; '#' starts a comment; blank lines ignored."""
    out: dict[str, str] = {}
    problems = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            problems.append(f"line {lineno}: expected 'key = value', got {body!r}")
            continue
        k, v = body.split("=", 1)
        out[k.strip()] = v.strip()
    if problems:
        raise ValidationError(problems)
    return out


def validate_config(raw, subcommand: str) -> dict:
    """Fully defaulted, type-checked parameters for one subcommand.

    `raw` is config-file text or a {key: value} mapping; keys are either
    global (seed, replicas, ...) or dotted with the subcommand name.
    Raises ValidationError listing every violation.
    """
    if subcommand not in SCHEMAS:
        raise ValidationError([f"unknown subcommand {subcommand!r}"])
    if isinstance(raw, str):
        raw = parse_config_text(raw)
    raw = dict(raw or {})

    schema = dict(GLOBAL_SCHEMA)
    for name, param in SCHEMAS[subcommand].items():
        schema[name] = param

    violations = []
    config: dict = {}
    for name, param in schema.items():
        config[name] = param.default

    for key, value in raw.items():
        name = key
        if "." in key:
            prefix, name = key.split(".", 1)
            if prefix != subcommand:
                continue  # belongs to another subcommand's section
        name = name.replace("-", "_")
        if name not in schema:
            violations.append(f"{key}: unknown parameter")
            continue
        if value is None:
            continue
        try:
            config[name] = _PARSERS[schema[name].kind](value)
        except (ValueError, TypeError) as exc:
            violations.append(f"{key}: cannot parse {value!r} ({exc})")

    for name, param in schema.items():
        if param.check is not None and config.get(name) is not None:
            msg = param.check(config[name])
            if msg:
                violations.append(f"{subcommand}.{name}: {msg}")

    if subcommand == "additive" and not violations:
        if config["n_hi"] < config["n_lo"]:
            violations.append("additive.n_hi: must be >= additive.n_lo")

    if violations:
        raise ValidationError(violations)
    return config


def env_overrides() -> dict[str, str]:
    """ZETALAB_SEED etc. override config-file values for global keys."""
    out = {}
    for name in GLOBAL_SCHEMA:
        value = os.environ.get(f"ZETALAB_{name.upper()}")
        if value is not None:
            out[name] = value
    return out
