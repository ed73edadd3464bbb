"""JSON experiment configuration: schema, validation and construction of the
library objects. One file fully determines a run."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from jsonschema import Draft202012Validator

from .analytic import AnalyticControl
from .fading import MAX_SEVERITY, ShadowedRicianParams
from .geometry import EavesdropperDisc, NodePosition, PathLossModel
from .montecarlo import BLOCK_SIZE, McPlan
from .placement import CorridorSearchSpec
from .protocol import Scenario, Scheme, SystemConfig
from .specfun import QuadControl, SeriesControl

SCHEMA_VERSION = "swarm-sop/1"
SWEEP_AXES = ("alpha", "eta_eh", "U", "C_th", "psi", "r_c", "eve_position_index")

_point = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_pos = {"type": "number", "exclusiveMinimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _obj({
    "schema": {"const": SCHEMA_VERSION},
    "description": {"type": "string"},
    "system": _obj({
        "psi_db": {"type": "number"},
        "alpha": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "eta_eh": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "delta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "U": {"type": "integer", "minimum": 1},
        "C_th": _pos,
        "sigma2": _pos,
    }),
    "fading": _obj({
        "m_S": {"type": "integer", "minimum": 1, "maximum": MAX_SEVERITY},
        "b": _pos,
        "Omega": {"type": "number", "minimum": 0},
    }),
    "pathloss": _obj({"tau": _pos, "d0": _pos}),
    "geometry": _obj({
        "source": _point,
        "destination": _point,
        "swarm": _point,
        "eavesdropper": _point,
        "disc_radius": _pos,
        "eve_positions": {"type": "array", "items": _point, "minItems": 1},
        "eve_positions_note": {"type": "string"},
    }, ["source", "destination", "swarm"]),
    "eavesdropper_mode": {"enum": ["fixed", "random"]},
    "cases": {"type": "array", "minItems": 1, "items": _obj({
        "scheme": {"enum": ["SC", "MRC"]},
        "jamming": {"type": "boolean"},
    }, ["scheme", "jamming"])},
    "methods": {"type": "array", "minItems": 1, "uniqueItems": True,
                "items": {"enum": ["analytic", "mc"]}},
    "mc": _obj({
        "trials": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "sop_definition": {"enum": ["asymptotic", "exact"]},
        "jamming_model": {"enum": ["approximate", "exact"]},
        "block_size": {"type": "integer", "minimum": 1},
    }),
    "tolerances": _obj({
        "series_rel_tol": _pos,
        "series_max_terms": {"type": "integer", "minimum": 1},
        "quad_rel_tol": _pos,
        "quad_abs_tol": _pos,
    }),
    "sweep": _obj({
        "axis": {"enum": list(SWEEP_AXES)},
        "values": {"type": "array", "minItems": 1, "items": {"type": "number"}},
    }, ["axis", "values"]),
    "validate": _obj({
        "overrides": {"type": "array", "items": {"type": "object"}},
        "z_limit": _pos,
    }),
    "placement": _obj({
        "H_min": {"type": "number", "minimum": 0},
        "H_max": {"type": "number", "minimum": 0},
        "x_min": {"type": "number"},
        "x_max": {"type": "number"},
        "nx": {"type": "integer", "minimum": 1},
        "nH": {"type": "integer", "minimum": 1},
        "thetas": {"type": "array", "minItems": 1, "items": {"type": "number"}},
    }),
    "output": {"type": "string"},
}, ["schema", "geometry"])

DEFAULTS = {
    "system": {"psi_db": 40.0, "alpha": 0.8, "eta_eh": 0.8, "delta": 1.0, "U": 5, "C_th": 0.1, "sigma2": 1.0},
    "fading": {"m_S": 5, "b": 0.251, "Omega": 0.279},
    "pathloss": {"tau": 2.0, "d0": 100.0},
    "eavesdropper_mode": "fixed",
    "cases": [{"scheme": "SC", "jamming": False}, {"scheme": "SC", "jamming": True},
              {"scheme": "MRC", "jamming": False}, {"scheme": "MRC", "jamming": True}],
    "methods": ["analytic", "mc"],
    "mc": {"trials": 1_000_000, "seed": 0, "sop_definition": "asymptotic",
           "jamming_model": "approximate", "block_size": BLOCK_SIZE},
    "tolerances": {"series_rel_tol": 1e-12, "series_max_terms": 500, "quad_rel_tol": 1e-8, "quad_abs_tol": 1e-12},
    "validate": {"overrides": [], "z_limit": 4.0},
    "placement": {"H_min": 60.0, "H_max": 120.0, "x_min": 300.0, "x_max": 600.0, "nx": 16, "nH": 16, "thetas": [0.0]},
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every violation with its field path."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  {p}" for p in self.problems))


@dataclass
class ExperimentConfig:
    raw: dict
    cfg: SystemConfig
    scenario: Scenario
    eavesdropper_mode: str
    cases: list
    methods: list
    plan: McPlan
    control: AnalyticControl
    sweep: dict | None = None
    placement: CorridorSearchSpec | None = None
    validate: dict = field(default_factory=dict)
    eve_positions: list = field(default_factory=list)
    output: str | None = None

    def with_system(self, **changes) -> "ExperimentConfig":
        """New config with system/fading/geometry fields replaced (used by sweeps
        and validation overrides); goes through full validation again."""
        raw = copy.deepcopy(self.raw)
        for k, v in changes.items():
            for section in ("system", "fading", "pathloss", "geometry", "mc"):
                if k in SCHEMA["properties"][section]["properties"]:
                    raw.setdefault(section, {})[k] = v
                    break
            else:
                if k == "eavesdropper_mode":
                    raw[k] = v
                else:
                    raise ConfigError([f"override: unknown parameter '{k}'"])
        return from_dict(raw)


def _path(err) -> str:
    p = "/".join(str(x) for x in err.absolute_path)
    return p or "<root>"


def _merge_defaults(data: dict) -> dict:
    out = copy.deepcopy(data)
    for k, v in DEFAULTS.items():
        if isinstance(v, dict):
            out[k] = {**v, **out.get(k, {})}
        else:
            out.setdefault(k, copy.deepcopy(v))
    return out


def from_dict(data: dict) -> ExperimentConfig:
    problems = [f"{_path(e)}: {e.message}" for e in
                sorted(Draft202012Validator(SCHEMA).iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))]
    if problems:
        raise ConfigError(problems)
    d = _merge_defaults(data)
    problems = []

    def build(name, fn):
        try:
            return fn()
        except ValueError as exc:
            problems.append(f"{name}: {exc}")
            return None

    s = d["system"]
    cfg = build("system", lambda: SystemConfig.from_db(s["psi_db"], alpha=s["alpha"], eta_eh=s["eta_eh"],
                                                       delta=s["delta"], U=s["U"], C_th=s["C_th"], sigma2=s["sigma2"]))
    fad = build("fading", lambda: ShadowedRicianParams(**d["fading"]))
    pl = build("pathloss", lambda: PathLossModel(**d["pathloss"]))
    g = d["geometry"]
    node = {}
    for key in ("source", "destination", "swarm", "eavesdropper"):
        if key in g:
            node[key] = build(f"geometry/{key}", lambda key=key: NodePosition.from_seq(g[key]))
    eves = [build(f"geometry/eve_positions/{i}", lambda p=p: NodePosition.from_seq(p))
            for i, p in enumerate(g.get("eve_positions", []))]
    disc = build("geometry/disc_radius", lambda: EavesdropperDisc(g["disc_radius"])) if "disc_radius" in g else None
    mode = d["eavesdropper_mode"]
    if mode == "fixed" and "eavesdropper" not in g:
        problems.append("geometry/eavesdropper: required when eavesdropper_mode is 'fixed'")
    if mode == "random" and disc is None:
        problems.append("geometry/disc_radius: required when eavesdropper_mode is 'random'")
    if cfg is not None and cfg.alpha > 0 and not cfg.gamma_S > 1:
        problems.append("system/C_th: target secrecy SNR must exceed 1")

    sweep = d.get("sweep")
    if sweep is not None:
        ax, vals = sweep["axis"], sweep["values"]
        if ax in ("U", "eve_position_index") and any(int(v) != v for v in vals):
            problems.append(f"sweep/values: axis '{ax}' needs integer values")
        if ax == "eve_position_index":
            if not eves:
                problems.append("geometry/eve_positions: required for the eve_position_index axis")
            elif any(not 1 <= v <= len(eves) for v in vals):
                problems.append(f"sweep/values: eve_position_index must lie in 1..{len(eves)}")
        if ax == "r_c" and any(v <= 0 for v in vals):
            problems.append("sweep/values: r_c must be > 0")

    p = d["placement"]
    spec = build("placement", lambda: CorridorSearchSpec(H_min=p["H_min"], H_max=p["H_max"], x_min=p["x_min"],
                                                         x_max=p["x_max"], nx=p["nx"], nH=p["nH"],
                                                         thetas=tuple(p["thetas"])))
    m = d["mc"]
    plan = build("mc", lambda: McPlan(trials=m["trials"], seed=m["seed"], sop_definition=m["sop_definition"],
                                      jamming_model=m["jamming_model"], eavesdropper=mode,
                                      block_size=m["block_size"]))
    t = d["tolerances"]
    ctl = AnalyticControl(SeriesControl(rel_tol=t["series_rel_tol"], max_terms=t["series_max_terms"]),
                          QuadControl(rel_tol=t["quad_rel_tol"], abs_tol=t["quad_abs_tol"]))
    scen = None
    if not problems and fad is not None:
        scen = build("geometry", lambda: Scenario(node["source"], node["destination"], node["swarm"],
                                                  node.get("eavesdropper"), disc, pl, fad))
    if problems:
        raise ConfigError(problems)
    cases = [(Scheme(c["scheme"]), bool(c["jamming"])) for c in d["cases"]]
    return ExperimentConfig(d, cfg, scen, mode, cases, list(d["methods"]), plan, ctl, sweep, spec,
                            d["validate"], eves, d.get("output"))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read file ({exc.strerror or exc})"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: JSON parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return from_dict(data)


def bundled_config_path(name: str = "baseline.json") -> Path:
    return Path(str(resources.files("swarm_sop") / "data" / name))
