"""Experiment configuration: one declarative TOML file, no embedded code.

Every run is fully determined by the file plus the seed inside it. Parsing
either succeeds completely or fails with the offending key path (TOML syntax
errors carry line/column from the parser). Semantic admissibility (coupling
above threshold, ladder below the eps limit, potential conditions) is
validated on load.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import AdmissibilityError, ConfigurationError
from .model import (Ball, CouplingParams, DomainSpec, PotentialSpec,
                    constant_potentials, coupling_threshold, eps_upper_limit,
                    radial_well, two_well, vanishing_point)


def _get(table: dict, path: str, default=None, required: bool = False):
    node = table
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigurationError(f"missing config key [{path}]")
            return default
        node = node[part]
    return node


def _build_potentials(table: dict) -> PotentialSpec:
    fam = _get(table, "potentials.family", required=True)
    kw = table.get("potentials", {})
    try:
        if fam == "radial_well":
            return radial_well(
                a_infinity=kw.get("a_infinity", 1.0),
                depth=kw.get("depth", 0.5),
                width=kw.get("width", 2.0),
                center=tuple(kw.get("center", (0.0, 0.0, 0.0))),
                envelope_scale=kw.get("envelope_scale", 20.0),
                a_offset=kw.get("a_offset", 0.0))
        if fam == "two_well":
            return two_well(
                a_infinity=kw.get("a_infinity", 1.0),
                depths=tuple(kw.get("depths", (0.5, 0.3))),
                widths=tuple(kw.get("widths", (0.8, 0.8))),
                centers=tuple(tuple(c) for c in kw.get(
                    "centers", ((-1.0, 0.0, 0.0), (1.0, 0.0, 0.0)))),
                envelope_scale=kw.get("envelope_scale", 20.0),
                a_offset=kw.get("a_offset", 0.0))
        if fam == "vanishing_point":
            return vanishing_point(
                a_infinity=kw.get("a_infinity", 1.0),
                depth=kw.get("depth", 0.5),
                width=kw.get("width", 2.0),
                vanish_center=tuple(kw.get("vanish_center", (9.0, 0.0, 0.0))),
                envelope_scale=kw.get("envelope_scale", 20.0),
                a_offset=kw.get("a_offset", 0.0))
        if fam == "constant":
            return constant_potentials(
                a_value=kw.get("a_value", 1.0),
                b_value=kw.get("b_value", 1.0))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad value under [potentials]: {exc}") from exc
    raise ConfigurationError(
        f"[potentials.family] must be one of radial_well, two_well, "
        f"vanishing_point, constant; got {fam!r}")


@dataclass(eq=False)
class ExperimentConfig:
    potentials: PotentialSpec
    domain: DomainSpec
    couplings: CouplingParams
    limit_n: int = 2048
    limit_r_base: float = 15.0
    landscape_n: int = 1024
    landscape_spacing: float | None = None
    eps_h: float = 0.05
    eps_ladder: tuple = (0.4, 0.3, 0.2, 0.15, 0.1)
    solver_tol: float = 1e-8
    seed: int = 1234
    workers: int = 1
    out_dir: str = "out"
    beta0: float = dc_field(init=False, default=math.nan)
    beta0_spacing: float = dc_field(init=False, default=math.nan)
    eps_limit: float = dc_field(init=False, default=math.nan)
    tail_liminf: float = dc_field(init=False, default=math.nan)
    core_infima: tuple = dc_field(init=False, default=(math.nan, math.nan))

    def validate(self, vector_regime: bool = True) -> "ExperimentConfig":
        """Admissibility pass: potential conditions, coupling threshold,
        ladder bounds, and the fattened-region lower bound."""
        pts = self.domain.lam.raster(self.domain.lam.radius / 24.0, closure=True)
        self.potentials.check_nonnegative(pts)
        self.tail_liminf = self.potentials.check_slow_decay()
        a0, b0 = self.potentials.core_infimum(self.domain.lam,
                                              self.domain.lam.radius / 24.0)
        self.core_infima = (a0, b0)
        self.beta0, self.beta0_spacing = coupling_threshold(
            self.couplings, self.potentials, self.domain.lam)
        if vector_regime and not self.couplings.beta > self.beta0:
            raise AdmissibilityError(
                f"beta={self.couplings.beta} must exceed the coupling "
                f"threshold {self.beta0:.6g} over the working region")
        self.domain.check_core_margin(self.potentials, a0, b0,
                                      self.domain.lam.radius / 24.0)
        self.eps_limit = eps_upper_limit(self.couplings.beta, self.domain.rho0)
        bad = [e for e in self.eps_ladder if not 0.0 < e < self.eps_limit]
        if bad:
            raise ConfigurationError(
                f"ladder entries {bad} fall outside (0, {self.eps_limit:.6g})")
        if self.eps_h <= 0.0:
            raise ConfigurationError("[grids.eps_h] must be positive")
        return self

    def spacing(self) -> float:
        return (self.domain.rho0 / 16.0 if self.landscape_spacing is None
                else self.landscape_spacing)

    def echo(self) -> dict:
        p = self.potentials
        return {
            "potentials": {
                "family": p.family, "a_infinity": p.a_infinity,
                "depths": list(p.depths), "widths": list(p.widths),
                "centers": [list(c) for c in p.centers],
                "envelope_scale": p.envelope_scale,
                "constant_values": list(p.constant_values),
                "vanish_center": list(p.vanish_center),
                "a_offset": p.a_offset,
            },
            "domain": {
                "lambda_radius": self.domain.lam.radius,
                "o_radius": self.domain.region_o.radius,
                "delta": self.domain.delta,
            },
            "couplings": {"mu1": self.couplings.mu1, "mu2": self.couplings.mu2,
                          "beta": self.couplings.beta},
            "grids": {"limit_n": self.limit_n, "limit_r_base": self.limit_r_base,
                      "landscape_n": self.landscape_n, "eps_h": self.eps_h},
            "landscape": {"spacing": self.spacing()},
            "eps": {"ladder": list(self.eps_ladder)},
            "tolerances": {"solver_tol": self.solver_tol},
            "run": {"seed": self.seed, "workers": self.workers,
                    "out_dir": self.out_dir},
            "derived": {"beta0": self.beta0, "eps_limit": self.eps_limit,
                        "tail_liminf": self.tail_liminf,
                        "core_infima": list(self.core_infima)},
        }


def load_config(path, validate: bool = True) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            table = _toml.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except _toml.TOMLDecodeError as exc:
        raise ConfigurationError(f"config parse error in {path}: {exc}") from exc

    pots = _build_potentials(table)
    lam_radius = _get(table, "domain.lambda_radius", required=True)
    o_radius = _get(table, "domain.o_radius", required=True)
    delta = _get(table, "domain.delta")
    try:
        domain = DomainSpec(lam=Ball((0.0, 0.0, 0.0), float(lam_radius)),
                            region_o=Ball((0.0, 0.0, 0.0), float(o_radius)),
                            delta=float(delta) if delta is not None else None)
        couplings = CouplingParams(
            mu1=float(_get(table, "couplings.mu1", 1.0)),
            mu2=float(_get(table, "couplings.mu2", 1.0)),
            beta=float(_get(table, "couplings.beta", required=True)))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad numeric value in {path}: {exc}") from exc

    ladder = _get(table, "eps.ladder", (0.4, 0.3, 0.2, 0.15, 0.1))
    cfg = ExperimentConfig(
        potentials=pots, domain=domain, couplings=couplings,
        limit_n=int(_get(table, "grids.limit_n", 2048)),
        limit_r_base=float(_get(table, "grids.limit_r_base", 15.0)),
        landscape_n=int(_get(table, "grids.landscape_n", 1024)),
        landscape_spacing=_get(table, "landscape.spacing"),
        eps_h=float(_get(table, "grids.eps_h", 0.05)),
        eps_ladder=tuple(float(e) for e in ladder),
        solver_tol=float(_get(table, "tolerances.solver_tol", 1e-8)),
        seed=int(_get(table, "run.seed", 1234)),
        workers=int(_get(table, "run.workers", 1)),
        out_dir=str(_get(table, "run.out_dir", "out")))
    if cfg.landscape_spacing is not None:
        cfg.landscape_spacing = float(cfg.landscape_spacing)
    if validate:
        cfg.validate()
    return cfg
