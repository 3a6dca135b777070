"""Experiment configuration files.

A config is an INI file with an ``[experiment]`` and a ``[dgp]`` section.
Every key is typed; unknown or malformed entries raise ``ConfigError`` whose
``key`` attribute is the dotted path (``experiment.replications``).  Keys are
case sensitive because ``c0`` and ``C0`` are different constants.
"""
from __future__ import annotations

import configparser
import dataclasses
from importlib import resources
from pathlib import Path

from .basis import Family
from .dgp import DgpSpec, make_dgp
from .errors import ConfigError, DgpError
from .experiments import ExperimentConfig


def _int(s):
    return int(s.strip())


def _float(s):
    return float(s.strip())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _int_list(s):
    return tuple(int(t) for t in s.replace(",", " ").split())


def _name_list(s):
    return tuple(t for t in s.replace(",", " ").split())


# key -> (parser, required)
EXPERIMENT_KEYS = {
    "name": (str.strip, False),
    "sample_sizes": (_int_list, True),
    "replications": (_int, True),
    "master_seed": (_int, True),
    "estimators": (_name_list, False),
    "c0": (_float, False),
    "C0": (_float, False),
    "scale": (_float, False),
    "family": (str.strip, False),
    "order": (_int, False),
    "k_offset": (_int, False),
    "timing": (_bool, False),
}
DGP_KEYS = {
    "regime": (str.strip, True),
    "zeta": (_float, True),
    "p": (_float, True),
    "c_nu": (_float, True),
    "c_h": (_float, False),
    "sigma_eta": (_float, False),
    "rho_endog": (_float, False),
    "j_op": (_int, False),
    "j_h": (_int, False),
    "L": (_float, False),
}
SECTIONS = {"experiment": EXPERIMENT_KEYS, "dgp": DGP_KEYS}


def _parser():
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    return cp


def _typed_section(cp, section):
    schema = SECTIONS[section]
    if not cp.has_section(section):
        raise ConfigError(section, "section is missing")
    out = {}
    for key, raw in cp.items(section):
        if key not in schema:
            raise ConfigError(f"{section}.{key}", "unknown key")
        try:
            out[key] = schema[key][0](raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}: {exc}") from None
    for key, (_, required) in schema.items():
        if required and key not in out:
            raise ConfigError(f"{section}.{key}", "required key is missing")
    return out


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"{source}: {exc}") from None
    extra = [s for s in cp.sections() if s not in SECTIONS]
    if extra:
        raise ConfigError(extra[0], "unknown section")
    exp = _typed_section(cp, "experiment")
    dgp_kw = _typed_section(cp, "dgp")
    try:
        dgp = make_dgp(**dgp_kw)
    except ValueError as exc:
        key = "dgp.regime" if not isinstance(exc, DgpError) else "dgp"
        raise ConfigError(key, str(exc)) from None
    if "family" in exp:
        try:
            exp["family"] = Family(exp["family"])
        except ValueError:
            raise ConfigError("experiment.family", f"unknown basis family {exp['family']!r}") from None
    return ExperimentConfig(dgp=dgp, **exp)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, source=str(path))


def config_to_dict(config: ExperimentConfig) -> dict:
    """Fully resolved configuration, JSON-ready, including every default."""
    exp = {f.name: getattr(config, f.name) for f in dataclasses.fields(config) if f.name != "dgp"}
    exp["sample_sizes"] = list(config.sample_sizes)
    exp["estimators"] = list(config.estimators)
    exp["family"] = config.family.value
    dgp = {f.name: getattr(config.dgp, f.name) for f in dataclasses.fields(DgpSpec)}
    dgp["regime"] = config.dgp.regime.value
    return {"experiment": exp, "dgp": dgp}


def dump_config(config: ExperimentConfig) -> str:
    """INI text that ``parse_config`` maps back to an equal configuration."""
    d = config_to_dict(config)
    lines = []
    for section in ("experiment", "dgp"):
        lines.append(f"[{section}]")
        for key, value in d[section].items():
            if isinstance(value, list):
                value = ", ".join(str(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def shipped_configs() -> list:
    root = resources.files("npivquad") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def shipped_config_path(name: str) -> Path:
    """Path of a bundled config, by bare name (``severe``) or file name."""
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem not in shipped_configs():
        raise ConfigError("<file>", f"no shipped config named {name!r}; have {shipped_configs()}")
    return Path(str(resources.files("npivquad") / "configs" / f"{stem}.cfg"))


def resolve_config_path(spec: str) -> Path:
    """An existing file path wins; otherwise ``spec`` names a shipped config."""
    p = Path(spec)
    if p.exists():
        return p
    return shipped_config_path(p.name)


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Replace the non-None overrides; validation reruns on the new config."""
    kw = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(config, **kw) if kw else config
