"""Scenario files and the pipeline they drive.

A scenario is a JSON document validated against ``scenario_schema.json``.
``build_pipeline`` runs blow-up, desingularization, recentring, the cutoff
and the spectral split, and fixes the solver configuration.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import forcing as fz
from .errors import ScenarioError
from .linearflow import HyperbolicSplit, spectral_split
from .lpsolver import LPConfig
from .nonlinear import DelayRHS, build_rhs
from .polyfield import (AxisEquilibrium, BlowupChart, DesingularizedField, PolyMap2,
                        axis_equilibria_and_linearize, blowup_pullback, desingularize,
                        translate_equilibrium)

__all__ = ["Scenario", "Pipeline", "load_scenario", "scenario_from_dict", "build_pipeline",
           "WORKED_EXAMPLE", "LINEAR_EXAMPLE", "schema"]

WORKED_EXAMPLE = {
    "name": "worked_example",
    "description": "Quadratic field with a cubic forcing coefficient, stable manifold of the saddle (0, 1)",
    "field": {"F": ["x^2 - 2*x*y", "y^2 - 2*x*y"], "G": ["0", "x^3"], "vars": ["x", "y"]},
    "forcing": {"family": "exponential", "params": {"a": 0.01, "eta": 2.0}},
    "chart": {"direction": "x", "sign": 1, "weights": [1, 1]},
    "recenter": {"v_star": 1},
    "lp": {"sigma0": 1.0, "sigma": 1.0, "heads": [1.0, 0.5, -0.5, -1.0]},
    "simulate": {"init": [[0.1, 0.5], [0.2, 0.1], [0.05, 0.9]], "T": 3.0},
    "blowdown": {"sigmas": [1.0, 2.0, 4.0], "heads": [0.5, -0.5]},
    "seed": 20240531,
    "output_dir": "out/worked_example",
}

LINEAR_EXAMPLE = {
    "name": "linear",
    "description": "Linear saddle given directly in desingularized coordinates, no forcing",
    "field": {"F": ["-u", "2*v"], "vars": ["u", "v"]},
    "desingularized": True,
    "kappa": 1,
    "forcing": {"family": "zero"},
    "lp": {"sigma0": 1.0, "sigma": 1.0, "heads": [1.0, 0.5, -0.5, -1.0]},
    "simulate": {"init": [[0.5, 0.01]], "T": 2.0},
    "blowdown": {"sigmas": [1.0, 2.0], "heads": [0.5, -0.5]},
    "seed": 7,
    "output_dir": "out/linear",
}


def schema() -> dict:
    text = resources.files(__package__).joinpath("scenario_schema.json").read_text()
    return json.loads(text)


@dataclass
class Scenario:
    raw: dict
    name: str
    F: PolyMap2
    G: PolyMap2 | None
    forcing: fz.ForcingFn
    chart: BlowupChart
    desingularized: bool
    v_star: Fraction
    kappa: int | None
    cutoff_D: float
    lp: dict
    simulate: dict
    blowdown: dict
    seed: int
    output_dir: str
    path: Path | None = None


def scenario_from_dict(d: dict, path: Path | None = None) -> Scenario:
    """Validate and parse a scenario mapping; raises :class:`ScenarioError`."""
    d = copy.deepcopy(d)
    desing = bool(d.get("desingularized", False))
    try:
        jsonschema.validate(d, schema())
    except jsonschema.ValidationError as exc:
        raise ScenarioError(f"scenario does not match the schema: {exc.message}") from None
    fld = d["field"]
    names = tuple(fld.get("vars", ["u", "v"] if desing else ["x", "y"]))
    try:
        F = PolyMap2.parse(*fld["F"], var_names=names)
        G = PolyMap2.parse(*fld["G"], var_names=names) if "G" in fld else None
        forcing = fz.from_spec(d.get("forcing", {"family": "zero"}))
        ch = d.get("chart", {})
        chart = BlowupChart(ch.get("direction", "x"), ch.get("sign", 1), tuple(ch.get("weights", (1, 1))))
        v_star = Fraction(str(d.get("recenter", {}).get("v_star", 0)))
    except (ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from None
    if desing and "kappa" not in d:
        raise ScenarioError("a desingularized field needs an explicit kappa")
    return Scenario(d, d["name"], F, G, forcing, chart, desing, v_star, d.get("kappa"),
                    float(d.get("cutoff_D", 1.0)), dict(d.get("lp", {})), dict(d.get("simulate", {})),
                    dict(d.get("blowdown", {})), int(d.get("seed", 0)), d.get("output_dir", "out"), path)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from None
    return scenario_from_dict(d, path)


@dataclass
class Pipeline:
    scenario: Scenario
    blown: PolyMap2 | None
    blown_G: PolyMap2 | None
    dfield: DesingularizedField
    equilibria: list[AxisEquilibrium]
    centred: DesingularizedField
    rhs: DelayRHS
    split: HyperbolicSplit
    cfg: LPConfig
    sigma: float
    heads: list = field(default_factory=list)

    def head_vectors(self) -> list[np.ndarray]:
        """Scenario heads as stable vectors: ``0.99 * f * r`` along the
        dominant column of ``P_s``."""
        e = self.split.P_s[:, int(np.argmax(np.linalg.norm(self.split.P_s, axis=0)))]
        e = e / np.linalg.norm(e)
        return [0.99 * float(f) * self.cfg.r * e for f in self.heads]


def build_pipeline(scn: Scenario, overrides: dict | None = None, with_cfg: bool = True) -> Pipeline:
    """Everything up to the solver configuration. ``overrides`` (``sigma0``,
    ``beta``, ``kappa``, ``delta``, ...) take precedence over the file."""
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    kappa = ov.pop("kappa", scn.kappa)
    if scn.desingularized:
        blown = blown_G = None
        g = scn.G or PolyMap2.zero(scn.F.var_names)
        dfield = DesingularizedField(scn.F, g, int(kappa), scn.F.px.u_valuation() >= 1,
                                     Fraction(0), scn.chart)
    else:
        blown = blowup_pullback(scn.F, scn.chart)
        blown_G = blowup_pullback(scn.G, scn.chart) if scn.G is not None else None
        dfield = desingularize(blown, kappa, blown_G, scn.chart)
    try:
        equilibria = axis_equilibria_and_linearize(dfield)
    except ValueError:
        equilibria = []
    centred = translate_equilibrium(dfield, scn.v_star) if scn.v_star else dfield
    rhs = build_rhs(centred, scn.forcing, D=scn.cutoff_D)
    split = spectral_split(rhs.A)
    lp = dict(scn.lp)
    lp.update(ov)
    sigma0 = float(lp.get("sigma0", 1.0))
    sigma = float(lp.get("sigma", sigma0))
    if "sigma0" in ov and "sigma" not in ov:
        # a raised sigma0 drags the file's sigma along
        sigma = max(sigma, sigma0)
    if sigma < sigma0:
        raise ScenarioError("sigma must be at least sigma0")
    cfg = None
    if with_cfg:
        keys = ("beta", "delta", "r", "dt", "T_max", "fp_tol", "max_iter")
        cfg = LPConfig.auto(rhs, split, sigma0, **{k: lp[k] for k in keys if k in lp})
    return Pipeline(scn, blown, blown_G, dfield, equilibria, centred, rhs, split, cfg, sigma,
                    list(lp.get("heads", [0.5])))
