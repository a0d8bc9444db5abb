"""Problem definitions from INI-style files.

Sections [a], [b], [c], [r] describe the coefficient families; [problem]
selects discrete vs continuous and the weight form; continuous problems add
[kernel] with the offset d.  Rationals are written as "p/q" strings.  Unknown
sections or keys are rejected.
"""

from __future__ import annotations

import configparser
from fractions import Fraction
from pathlib import Path
from typing import Union

from .model import (
    ContinuousProblem,
    DecaySequence,
    DiscreteProblem,
    ExpMixture,
    GeometricTail,
    ModelError,
    SeparableKernel,
    SeparableKernelC,
    ZeroKernel,
    ZeroKernelC,
    zero_mixture,
)

__all__ = ["load_problem", "ConfigError"]

Problem = Union[DiscreteProblem, ContinuousProblem]


class ConfigError(ModelError):
    """Malformed problem configuration file."""


_SEQ_KEYS = {"kind", "prefix", "alpha", "rho", "start"}
_MIX_KEYS = {"kind", "alpha", "lambda"}
_CDISC_KEYS = {"kind", "kappa", "sigma", "rho"}
_CCONT_KEYS = {"kind", "phi_alpha", "phi_lambda", "psi_alpha", "psi_lambda"}


def _rational(text: str, where: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"{where}: cannot parse rational {text!r}") from e


def _rational_list(text: str, where: str) -> list:
    return [_rational(tok, where) for tok in text.split()]


def _float_list(text: str, where: str) -> list:
    try:
        return [float(Fraction(tok)) for tok in text.split()]
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"{where}: cannot parse number list {text!r}") from e


def _check_keys(section: configparser.SectionProxy, allowed: set, name: str):
    unknown = set(section.keys()) - allowed
    if unknown:
        raise ConfigError(f"[{name}]: unknown keys {sorted(unknown)}")


def _sequence(cfg: configparser.ConfigParser, name: str, nonneg: bool) -> DecaySequence:
    if not cfg.has_section(name):
        return DecaySequence(nonnegative=nonneg)
    sec = cfg[name]
    _check_keys(sec, _SEQ_KEYS, name)
    kind = sec.get("kind", "zero").strip()
    if kind == "zero":
        return DecaySequence(nonnegative=nonneg)
    prefix = tuple(_rational_list(sec.get("prefix", ""), name))
    if kind == "prefix":
        return DecaySequence(prefix=prefix, nonnegative=nonneg)
    if kind == "geometric":
        if "alpha" not in sec or "rho" not in sec:
            raise ConfigError(f"[{name}]: geometric kind needs alpha and rho")
        alpha = _rational(sec["alpha"], name)
        rho = _rational(sec["rho"], name)
        start = int(sec.get("start", str(len(prefix) + 1)))
        return DecaySequence(prefix=prefix, tail=GeometricTail(alpha, rho, start),
                             nonnegative=nonneg)
    raise ConfigError(f"[{name}]: unknown sequence kind {kind!r}")


def _mixture(cfg: configparser.ConfigParser, name: str) -> ExpMixture:
    if not cfg.has_section(name):
        return zero_mixture()
    sec = cfg[name]
    _check_keys(sec, _MIX_KEYS, name)
    kind = sec.get("kind", "zero").strip()
    if kind == "zero":
        return zero_mixture()
    if kind != "exp_mixture":
        raise ConfigError(f"[{name}]: unknown function kind {kind!r}")
    alphas = _float_list(sec.get("alpha", ""), name)
    lams = _float_list(sec.get("lambda", ""), name)
    if len(alphas) != len(lams) or not alphas:
        raise ConfigError(f"[{name}]: alpha and lambda lists must match and be nonempty")
    return ExpMixture(terms=tuple(zip(alphas, lams)))


def _discrete_kernel(cfg: configparser.ConfigParser):
    if not cfg.has_section("c"):
        return ZeroKernel()
    sec = cfg["c"]
    _check_keys(sec, _CDISC_KEYS, "c")
    kind = sec.get("kind", "zero").strip()
    if kind == "zero":
        return ZeroKernel()
    if kind == "separable":
        return SeparableKernel(kappa=_rational(sec.get("kappa", "0"), "c"),
                               sigma=_rational(sec.get("sigma", "1/2"), "c"),
                               rho=_rational(sec.get("rho", "1/2"), "c"))
    raise ConfigError(f"[c]: unknown kernel kind {kind!r}")


def _continuous_kernel(cfg: configparser.ConfigParser):
    if not cfg.has_section("c"):
        return ZeroKernelC()
    sec = cfg["c"]
    _check_keys(sec, _CCONT_KEYS, "c")
    kind = sec.get("kind", "zero").strip()
    if kind == "zero":
        return ZeroKernelC()
    if kind == "separable":
        phi = ExpMixture(terms=tuple(zip(_float_list(sec.get("phi_alpha", ""), "c"),
                                         _float_list(sec.get("phi_lambda", ""), "c"))))
        psi = ExpMixture(terms=tuple(zip(_float_list(sec.get("psi_alpha", ""), "c"),
                                         _float_list(sec.get("psi_lambda", ""), "c"))))
        return SeparableKernelC(phi=phi, psi=psi)
    raise ConfigError(f"[c]: unknown kernel kind {kind!r}")


def load_problem(path) -> Problem:
    """Read a problem definition file and build the typed problem."""
    path = Path(path)
    cfg = configparser.ConfigParser()
    read = cfg.read(path)
    if not read:
        raise ConfigError(f"cannot read problem file {path}")

    known_sections = {"problem", "a", "b", "c", "r", "kernel"}
    unknown = set(cfg.sections()) - known_sections
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    if not cfg.has_section("problem"):
        raise ConfigError("missing [problem] section")
    psec = cfg["problem"]
    _check_keys(psec, {"type", "weight_form"}, "problem")
    ptype = psec.get("type", "").strip()

    if ptype == "discrete":
        if cfg.has_section("kernel"):
            raise ConfigError("[kernel] applies to continuous problems only")
        return DiscreteProblem(
            a=_sequence(cfg, "a", nonneg=True),
            b=_sequence(cfg, "b", nonneg=False),
            c=_discrete_kernel(cfg),
            r=_sequence(cfg, "r", nonneg=True),
            weight_form=psec.get("weight_form", "b_over_n").strip(),
        )
    if ptype == "continuous":
        if "weight_form" in psec:
            raise ConfigError("weight_form applies to discrete problems only")
        d = 1.0
        if cfg.has_section("kernel"):
            _check_keys(cfg["kernel"], {"d"}, "kernel")
            d = float(Fraction(cfg["kernel"].get("d", "1")))
        return ContinuousProblem(
            a=_mixture(cfg, "a"),
            b=_mixture(cfg, "b"),
            c=_continuous_kernel(cfg),
            r=_mixture(cfg, "r"),
            d=d,
        )
    raise ConfigError(f"[problem] type must be 'discrete' or 'continuous', got {ptype!r}")
