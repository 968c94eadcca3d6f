"""Experiment configuration: JSON schema, named recipes and validation."""
from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field

import jsonschema

__all__ = [
    "EXPERIMENTS",
    "RECIPES",
    "SCHEMA",
    "ConfigError",
    "ExperimentConfig",
    "config_hash",
    "expand_recipe",
    "intensity_values",
    "validate_config",
]

EXPERIMENTS = (
    "spectrum_vs_intensity",
    "tzm_profile",
    "design_profile",
    "localizer_scan",
    "pump_evolve",
    "steady_sweep",
    "noise_ensemble",
    "disorder_ensemble",
    "lattice2d_modes",
    "long_range_compare",
)

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_count = {"type": "integer", "minimum": 1}
_hopping = {"oneOf": [_num, {"type": "array", "items": _num}]}

SPEC_1D = {
    "type": "object",
    "additionalProperties": False,
    "required": [
        "n_hermitian_cells", "n_sites", "tau", "t_bar", "alpha",
        "j_hop", "delta", "lambda_bar", "beta", "t_d",
    ],
    "properties": {
        "n_hermitian_cells": _count,
        "n_sites": _count,
        "tau": _num,
        "t_bar": _hopping,
        "alpha": _nonneg,
        "j_hop": _num,
        "delta": _num,
        "lambda_bar": _hopping,
        "beta": _nonneg,
        "t_d": _num,
    },
}

SPEC_2D = {
    "type": "object",
    "additionalProperties": False,
    "required": ["chain_spec", "l_y", "u0", "v0"],
    "properties": {
        "chain_spec": SPEC_1D,
        "l_x": _count,
        "l_y": {"type": "integer", "minimum": 2},
        "u0": _num,
        "v0": _num,
        "gamma1": _nonneg,
    },
}

# either an explicit ascending list or a generated grid
_grid = {
    "oneOf": [
        {"type": "array", "minItems": 1, "items": _nonneg},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "stop", "num"],
            "properties": {
                "start": _nonneg,
                "stop": _nonneg,
                "num": _count,
                "scale": {"enum": ["linear", "sqrt"]},
            },
        },
    ]
}
_design = {
    "type": "object",
    "additionalProperties": False,
    "required": ["shape"],
    "properties": {
        "shape": {"enum": ["flat", "square", "triangle", "cosine", "custom"]},
        "shape_params": {"type": "object", "additionalProperties": _num},
        "samples": {"type": "array", "items": _pos},
    },
}
_pump = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "cell": _count,
        "profile_file": {"type": "string"},
        "frequency": _num,
        "kappa_a": _nonneg,
        "kappa_b": _nonneg,
    },
}
_method = {"enum": ["auto", "fixed_point", "newton"]}

PARAMS = {
    "spectrum_vs_intensity": {
        "required": ["intensities"],
        "properties": {
            "intensities": _grid,
            "profile_intensities": {"type": "array", "items": _nonneg},
            "method": _method,
            "tol": _pos,
            "max_iter": _count,
        },
    },
    "tzm_profile": {
        "required": ["intensities"],
        "properties": {"intensities": _grid, "side": {"enum": ["left", "right"]}, "design": _design},
    },
    "design_profile": {
        "required": ["design"],
        "properties": {
            "design": _design,
            "disorder_strength": _nonneg,
            "n_seeds": _count,
        },
    },
    "localizer_scan": {
        "required": ["intensities"],
        "properties": {
            "intensities": _grid,
            "eta": _pos,
            "x_grid": {
                "type": "object",
                "additionalProperties": False,
                "required": ["start", "stop", "num"],
                "properties": {"start": _num, "stop": _num, "num": _count},
            },
            "design": _design,
            "export_spectrum": {"type": "boolean"},
        },
    },
    "pump_evolve": {
        "required": ["xi", "t_end"],
        "properties": {
            "xi": _nonneg,
            "pump": _pump,
            "t_end": _pos,
            "dt": _pos,
            "record_every": _pos,
            "stride": _count,
            "stop_when_steady": {"type": "boolean"},
            "compare_steady": {"type": "boolean"},
            "design": _design,
        },
    },
    "steady_sweep": {
        "required": ["xi_grid"],
        "properties": {
            "xi_grid": _grid,
            "pump": _pump,
            "compare_evolve": {"type": "boolean"},
            "t_max": _pos,
            "dt": _pos,
            "homotopy_steps": _count,
            "design": _design,
        },
    },
    "noise_ensemble": {
        "required": ["xi", "n_realizations"],
        "properties": {
            "xi": _pos,
            "n_realizations": _count,
            "noise_range": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
            "complex_noise": {"type": "boolean"},
            "pump": _pump,
            "t_end": _pos,
            "dt": _pos,
            "record_every": _pos,
            "design": _design,
        },
    },
    "disorder_ensemble": {
        "required": ["kind", "strength", "intensity"],
        "properties": {
            "kind": {"enum": ["onsite", "hopping", "multiplicative_hopping"]},
            "strength": _nonneg,
            "intensity": _pos,
            "n_seeds": _count,
            "eta": _pos,
            "design": _design,
        },
    },
    "lattice2d_modes": {
        "required": ["intensities"],
        "properties": {
            "intensities": _grid,
            "profile_intensities": {"type": "array", "items": _nonneg},
            "method": _method,
            "tol": _pos,
        },
    },
    "long_range_compare": {
        "required": ["spec_second", "xi_grid"],
        "properties": {
            "spec_second": SPEC_1D,
            "xi_grid": _grid,
            "labels": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
            "pump": _pump,
            "t_max": _pos,
            "dt": _pos,
        },
    },
}

_variant = {
    "type": "object",
    "additionalProperties": False,
    "required": ["label"],
    "properties": {
        "label": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "spec": {"type": "object"},
        "params": {"type": "object"},
    },
}


def _experiment_schema(kind: str) -> dict:
    p = PARAMS[kind]
    spec = SPEC_2D if kind == "lattice2d_modes" else SPEC_1D
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["experiment", "spec", "params"],
        "properties": {
            "experiment": {"const": kind},
            "recipe": {"type": "string"},
            "spec": spec,
            "params": {
                "type": "object",
                "additionalProperties": False,
                "required": p.get("required", []),
                "properties": p["properties"],
            },
            "seed": {"type": "integer", "minimum": 0},
            "output_dir": {"type": "string"},
            "variants": {"type": "array", "minItems": 1, "items": _variant},
        },
    }


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["experiment"],
    "properties": {"experiment": {"enum": list(EXPERIMENTS)}},
    "allOf": [
        {"if": {"properties": {"experiment": {"const": k}}}, "then": _experiment_schema(k)}
        for k in EXPERIMENTS
    ],
}


class ConfigError(ValueError):
    """Validation failure; ``problems`` lists (json_path, message) pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.problems))


@dataclass
class ExperimentConfig:
    experiment: str
    spec: dict
    params: dict
    seed: int = 0
    output_dir: str | None = None
    recipe: str | None = None
    variants: list = field(default_factory=list)

    def resolved(self) -> dict:
        """Canonical dict used for hashing (output location excluded)."""
        return {
            "experiment": self.experiment,
            "spec": self.spec,
            "params": self.params,
            "seed": self.seed,
            "recipe": self.recipe,
            "variants": self.variants,
        }

    def runs(self):
        """(label, spec, params) for every variant, or the single base run."""
        if not self.variants:
            return [("", self.spec, self.params)]
        return [
            (v["label"], _deep_merge(self.spec, v.get("spec", {})), _deep_merge(self.params, v.get("params", {})))
            for v in self.variants
        ]


def config_hash(config: ExperimentConfig) -> str:
    text = json.dumps(config.resolved(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def intensity_values(grid):
    """Expand a grid entry (list or {start, stop, num, scale}) to a list of floats."""
    import numpy as np

    if isinstance(grid, list):
        return [float(v) for v in grid]
    start, stop, num = float(grid["start"]), float(grid["stop"]), int(grid["num"])
    if grid.get("scale", "linear") == "sqrt":
        return [float(v) ** 2 for v in np.linspace(np.sqrt(start), np.sqrt(stop), num)]
    return [float(v) for v in np.linspace(start, stop, num)]


# ------------------------------------------------------------ recipes

_FIG2_SPEC = {
    "n_hermitian_cells": 31, "n_sites": 121, "tau": 2.5, "t_bar": 1.0, "alpha": 0.05,
    "j_hop": 1.5, "delta": 1.0, "lambda_bar": 2.5, "beta": 0.0, "t_d": 2.5,
}
_FIG3_SPEC = dict(_FIG2_SPEC, t_bar=1.5, lambda_bar=1.5, beta=0.05)
_FIG5_PUMP = {"cell": 1, "frequency": 0.0, "kappa_a": 0.01, "kappa_b": 0.5}
_FIGS10_L = 183


def _recipes() -> dict:
    sqrt_grid = lambda a, b, n: {"start": a * a, "stop": b * b, "num": n, "scale": "sqrt"}  # noqa: E731
    return {
        "fig2": {
            "experiment": "spectrum_vs_intensity",
            "spec": _FIG2_SPEC,
            "params": {"intensities": sqrt_grid(1, 43, 43), "profile_intensities": [25.0, 900.0, 1849.0]},
            "variants": [{"label": f"delta_{d}", "spec": {"delta": d}} for d in (0.5, 1.0, 1.5)],
        },
        "fig3": {
            "experiment": "spectrum_vs_intensity",
            "spec": _FIG3_SPEC,
            "params": {"intensities": sqrt_grid(1, 50, 50), "profile_intensities": [25.0, 900.0, 2500.0]},
            "variants": [
                {"label": "delta_1.0_beta_0.05", "spec": {"delta": 1.0, "beta": 0.05}},
                {"label": "delta_1.5_beta_0.075", "spec": {"delta": 1.5, "beta": 0.075}},
            ],
        },
        "fig4": {
            "experiment": "localizer_scan",
            "spec": _FIG3_SPEC,
            "params": {"intensities": [25.0, 900.0, 1849.0], "eta": 0.2, "export_spectrum": True},
        },
        "fig5": {
            "experiment": "steady_sweep",
            "spec": _FIG3_SPEC,
            "params": {
                "xi_grid": {"start": 0.125, "stop": 2.5, "num": 20},
                "pump": _FIG5_PUMP,
                "compare_evolve": True,
                "t_max": 4000.0,
                "dt": 0.01,
            },
        },
        "fig5_noise": {
            "experiment": "noise_ensemble",
            "spec": _FIG3_SPEC,
            "params": {
                "xi": 2.5, "n_realizations": 200, "noise_range": [-3.0, 3.0],
                "pump": _FIG5_PUMP, "t_end": 600.0, "dt": 0.01, "record_every": 1.0,
            },
        },
        "fig6": {
            "experiment": "lattice2d_modes",
            "spec": {
                "chain_spec": dict(_FIG3_SPEC, n_hermitian_cells=6, n_sites=21, delta=1.2),
                "l_y": 21, "u0": 0.2, "v0": 0.4, "gamma1": 0.0,
            },
            "params": {
                "intensities": sqrt_grid(5, 50, 10), "method": "newton",
                "profile_intensities": [25.0, 900.0, 2500.0],
            },
            "variants": [{"label": f"gamma1_{g}", "spec": {"gamma1": g}} for g in (0.0, 0.01)],
        },
        "figS3": {
            "experiment": "disorder_ensemble",
            "spec": _FIG2_SPEC,
            "params": {"kind": "onsite", "strength": 1.0, "intensity": 1849.0, "n_seeds": 2},
            "variants": [
                {"label": "onsite", "params": {"kind": "onsite"}},
                {"label": "hopping", "params": {"kind": "hopping"}},
            ],
        },
        "figS5": {
            "experiment": "design_profile",
            "spec": dict(_FIG3_SPEC, alpha=0.05, beta=0.05),
            "params": {"design": {"shape": "flat"}},
            "variants": [
                {"label": s, "params": {"design": {"shape": s}}} for s in ("flat", "square", "triangle", "cosine")
            ],
        },
        "figS6": {
            "experiment": "design_profile",
            "spec": dict(_FIG3_SPEC, alpha=0.05, beta=0.05),
            "params": {"design": {"shape": "flat"}, "disorder_strength": 0.2, "n_seeds": 100},
            "variants": [
                {"label": s, "params": {"design": {"shape": s}}} for s in ("flat", "square", "triangle", "cosine")
            ],
        },
        "figS10": {
            "experiment": "long_range_compare",
            "spec": dict(_FIG2_SPEC, n_sites=_FIGS10_L, n_hermitian_cells=61, t_bar=1.5, delta=0.0, beta=0.0,
                         lambda_bar=2.5),
            "params": {
                "spec_second": dict(_FIG3_SPEC, n_sites=_FIGS10_L, n_hermitian_cells=10),
                "xi_grid": {"start": 0.25, "stop": 4.0, "num": 16},
                "labels": ["hermitian", "non_hermitian"],
                "pump": _FIG5_PUMP,
                "t_max": 4000.0,
                "dt": 0.01,
            },
        },
    }


RECIPES = _recipes()


def expand_recipe(name: str, overrides: dict | None = None) -> dict:
    """Recipe preset merged with user overrides (overrides win)."""
    if name not in RECIPES:
        raise ConfigError([("$.recipe", f"unknown recipe {name!r}; choose from {sorted(RECIPES)}")])
    return _deep_merge(RECIPES[name], overrides or {})


# ------------------------------------------------------------ validation


def _schema_problems(doc, prefix="$"):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    out = []
    for err in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path))):
        if err.validator in ("oneOf", "anyOf") and err.context:
            # report the branch that matches the instance type
            typed = [e for e in err.context if e.validator != "type"]
            err = jsonschema.exceptions.best_match(typed or err.context)
        path = prefix + err.json_path[1:]
        out.append((path, err.message))
    return out


def _check_grid(grid, path, problems, strict=True):
    if isinstance(grid, dict):
        if grid["num"] > 1 and not grid["stop"] > grid["start"]:
            problems.append((path, "grid stop must exceed start"))
        return
    bad = [k for k in range(1, len(grid)) if not grid[k] > grid[k - 1]]
    if bad:
        problems.append((f"{path}[{bad[0]}]", "grid must be strictly ascending"))


def _check_spec_1d(spec, path, problems):
    size, n = spec["n_sites"], spec["n_hermitian_cells"]
    if size % 2 == 0:
        problems.append((f"{path}.n_sites", f"n_sites={size} must be odd (the chain ends on an a-site)"))
    if 2 * n >= size:
        problems.append((f"{path}.n_hermitian_cells", "need 2 * n_hermitian_cells < n_sites"))
    m = (size + 1) // 2
    for key, length in (("t_bar", n - 1), ("lambda_bar", m - n - 1)):
        val = spec[key]
        if isinstance(val, list) and len(val) != length:
            problems.append((f"{path}.{key}", f"expected {length} entries, got {len(val)}"))


def _semantic_problems(kind, spec, params, path):
    problems = []
    spec1 = spec["chain_spec"] if kind == "lattice2d_modes" else spec
    spath = f"{path}.spec.chain_spec" if kind == "lattice2d_modes" else f"{path}.spec"
    _check_spec_1d(spec1, spath, problems)
    if kind == "lattice2d_modes" and "l_x" in spec and spec["l_x"] != spec1["n_sites"]:
        problems.append((f"{path}.spec.l_x", "l_x must equal chain_spec.n_sites"))
    if kind == "long_range_compare":
        other = params["spec_second"]
        _check_spec_1d(other, f"{path}.params.spec_second", problems)
        if other["n_sites"] != spec["n_sites"]:
            problems.append((f"{path}.params.spec_second.n_sites", "both chains must share n_sites"))
    for key in ("intensities", "xi_grid"):
        if key in params:
            _check_grid(params[key], f"{path}.params.{key}", problems)
    if kind in ("localizer_scan", "disorder_ensemble"):
        j, d = spec["j_hop"], spec["delta"]
        if abs(j) == abs(d):
            problems.append(
                (f"{path}.spec.delta", "similarity transform is singular at |J| = |delta| (unidirectional hopping)")
            )
        elif (j - d) * (j + d) < 0:
            problems.append((f"{path}.spec.delta", "need (J - delta)(J + delta) > 0 for a Hermitian H_S"))
    if "noise_range" in params:
        lo, hi = params["noise_range"]
        if not hi >= lo:
            problems.append((f"{path}.params.noise_range", "noise_range must be [low, high] with low <= high"))
    if "pump" in params:
        p = params["pump"]
        if "cell" in p and "profile_file" in p:
            problems.append((f"{path}.params.pump", "give either cell or profile_file, not both"))
        m_nh = (spec1["n_sites"] + 1) // 2 - spec1["n_hermitian_cells"]
        if p.get("cell", 1) > m_nh:
            problems.append((f"{path}.params.pump.cell", f"non-Hermitian chain has only {m_nh} cells"))
    design = params.get("design")
    if design and design["shape"] == "custom" and "samples" not in design:
        problems.append((f"{path}.params.design.samples", "custom shapes need samples"))
    return problems


def validate_config(raw) -> ExperimentConfig:
    """Structural (JSON schema) plus semantic validation.

    A ``recipe`` key is expanded first, the remaining keys override the
    preset.  Every problem is reported with its JSON path.
    """
    if not isinstance(raw, dict):
        raise ConfigError([("$", "configuration must be a JSON object")])
    doc = copy.deepcopy(raw)
    if "recipe" in doc:
        name = doc.pop("recipe")
        doc = expand_recipe(name, doc)
        doc["recipe"] = name
    problems = _schema_problems(doc)
    if problems:
        raise ConfigError(problems)
    cfg = ExperimentConfig(
        experiment=doc["experiment"],
        spec=doc["spec"],
        params=doc["params"],
        seed=doc.get("seed", 0),
        output_dir=doc.get("output_dir"),
        recipe=doc.get("recipe"),
        variants=doc.get("variants", []),
    )
    labels = [v["label"] for v in cfg.variants]
    if len(set(labels)) != len(labels):
        problems.append(("$.variants", "variant labels must be unique"))
    for k, (label, spec, params) in enumerate(cfg.runs()):
        path = f"$.variants[{k}]" if cfg.variants else "$"
        if cfg.variants:
            merged = dict(doc, spec=spec, params=params)
            merged.pop("variants", None)
            sub = _schema_problems(merged, prefix=path)
            if sub:
                problems.extend(sub)
                continue
        problems.extend(_semantic_problems(cfg.experiment, spec, params, path))
    if problems:
        raise ConfigError(problems)
    return cfg
