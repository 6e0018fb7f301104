"""Config-driven experiment runner and report emitter.

Each run executes one named experiment from a JSON config, writes summary.json
plus plot-ready CSV tables into the artifact directory, and records a
manifest.json with the kernel, mesh, tolerances, seed and library versions.
Exit codes: 0 success, 2 config schema violation (message carries the field
path), 3 numerical failure (message carries the module error id).  All
floating-point output is printed at 17 significant digits, and outputs are
byte-identical for a fixed config and seed regardless of the thread count.
Compute may parallelize over element pairs; every artifact file is written
from the main thread after the experiment returns.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy.integrate import quad

from . import __version__
from ._errors import NonlocalError
from .assembly import (
    assemble,
    assemble_trace_DK,
    build_space,
    export_matrix_text,
    l2_omega_error,
)
from .geometry import DomainSpec, build_mesh
from .kernels import (
    class_diagnostics,
    comparability_report,
    make_fractional,
    make_peridynamic,
    make_rescaled,
    tail_mass,
)
from .oracle import _DENSE_DOF_CAP, alpha_sweep, dense_reference, local_reference_1d
from .quadrature import pointwise_L, pointwise_N
from .solvers import (
    DEFAULT_LADDER,
    dtn_assemble,
    dtn_extend,
    dtn_spectral_check,
    eig,
    nonexistence_probe,
    poincare_constant,
    solve_dirichlet,
    solve_neumann,
    solve_neumann_weighted,
    solve_robin,
    trace_quotient_norm,
    v_norm,
)

__all__ = ["run", "main", "RunResult", "EXPERIMENTS", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "assemble-check",
    "gauss-green",
    "solve",
    "eig",
    "poincare",
    "robin",
    "dtn",
    "dtn-spectral",
    "trace-compare",
    "alpha-sweep",
    "nonexistence-probe",
    "peridynamic",
    "weights-report",
)

_TOP_KEYS = ("schema_version", "experiment", "seed", "kernel", "domain", "mesh", "params")
_FAMILIES = ("fractional", "peridynamic", "rescaled")
_PROFILES = ("constant", "gaussian", "linear")

_TOLERANCES = {
    "assemble-check": {
        "entrywise_relative": 1e-8,
        "identity_residual": 1e-9,
        "sandwich_slack": 1e-12,
        "null_vector": 1e-10,
    },
    "gauss-green": {"residual": 1e-9},
    "solve": {"weak_residual": 1e-9},
    "eig": {"residual": 1e-9},
    "poincare": {},
    "robin": {},
    "dtn": {"symmetry": 1e-11, "coercivity_slack": 1e-9},
    "dtn-spectral": {"sigma_min_factor": 1e-6},
    "trace-compare": {"endpoint_factor": 2.0},
    "alpha-sweep": {"final_l2_fraction": 0.05},
    "nonexistence-probe": {"stable_change": 0.10, "divergent_ratio": 1.5},
    "peridynamic": {
        "null_vector": 1e-10,
        "identity_residual": 1e-9,
        "defect": 1e-12,
        "weak_residual": 1e-9,
    },
    "weights-report": {"doubling_band": 1e6},
}


class ConfigError(Exception):
    """Schema violation carrying the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path or "config"
        self.message = message
        super().__init__(f"{self.path}: {message}")


@dataclass
class RunResult:
    """Outcome of one runner invocation."""

    exit_code: int
    out_dir: str | None
    summary: dict | None


@dataclass
class ExpResult:
    summary: dict
    csvs: list = field(default_factory=list)
    system: object = None
    manifest_mesh: dict | None = None


# ---------------------------------------------------------------------------
# config schema


def _expect_mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(path, f"expected a JSON object, got {type(value).__name__}")
    return value


def _num(value, path, gt=None, ge=None, lt=None, le=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise ConfigError(path, f"must be finite, got {value!r}")
    if gt is not None and not v > gt:
        raise ConfigError(path, f"must be > {gt}, got {value!r}")
    if ge is not None and not v >= ge:
        raise ConfigError(path, f"must be >= {ge}, got {value!r}")
    if lt is not None and not v < lt:
        raise ConfigError(path, f"must be < {lt}, got {value!r}")
    if le is not None and not v <= le:
        raise ConfigError(path, f"must be <= {le}, got {value!r}")
    return v


def _intval(value, path, ge=None, le=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if ge is not None and value < ge:
        raise ConfigError(path, f"must be >= {ge}, got {value}")
    if le is not None and value > le:
        raise ConfigError(path, f"must be <= {le}, got {value}")
    return value


def _choice(value, path, options):
    if not isinstance(value, str) or value not in options:
        raise ConfigError(path, f"expected one of {sorted(options)}, got {value!r}")
    return value


def _no_unknown(obj, path, known):
    for key in obj:
        if key not in known:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown field")


def _numlist(vals, path, **kw):
    return [_num(v, f"{path}[{i}]", **kw) for i, v in enumerate(vals)]


def _validate_kernel(obj, path="kernel"):
    _expect_mapping(obj, path)
    _no_unknown(obj, path, ("family", "d", "params"))
    if "family" not in obj:
        raise ConfigError(f"{path}.family", "required field")
    family = obj["family"]
    if family == "custom":
        raise ConfigError(
            f"{path}.family",
            "custom kernels need a Python profile callable and are available "
            "through the library API only",
        )
    family = _choice(family, f"{path}.family", _FAMILIES)
    d = _intval(obj.get("d", 1), f"{path}.d")
    if d != 1:
        raise ConfigError(f"{path}.d", "the runner supports d=1 only")
    params = _expect_mapping(obj.get("params", {}), f"{path}.params")
    out = {"family": family, "d": 1, "params": {}}
    if family == "peridynamic":
        _no_unknown(params, f"{path}.params", ("horizon", "strength"))
        if "horizon" not in params:
            raise ConfigError(f"{path}.params.horizon", "required field")
        out["params"]["horizon"] = _num(params["horizon"], f"{path}.params.horizon", gt=0.0)
        out["params"]["strength"] = _num(
            params.get("strength", 1.0), f"{path}.params.strength", ge=0.0
        )
    else:
        _no_unknown(params, f"{path}.params", ("alpha",))
        if "alpha" not in params:
            raise ConfigError(f"{path}.params.alpha", "required field")
        out["params"]["alpha"] = _num(params["alpha"], f"{path}.params.alpha", gt=0.0, lt=2.0)
    return out


def _make_kernel(kcfg):
    family, p = kcfg["family"], kcfg["params"]
    if family == "fractional":
        return make_fractional(1, p["alpha"])
    if family == "peridynamic":
        return make_peridynamic(1, p["horizon"], p["strength"])
    # unit-horizon indicator base with Levy mass 1
    return make_rescaled(make_peridynamic(1, 1.0, 1.5), p["alpha"])


def _validate_profile(value, path):
    if isinstance(value, bool):
        raise ConfigError(path, "expected a number or a profile object")
    if isinstance(value, (int, float)):
        return _num(value, path)
    _expect_mapping(value, path)
    kind = _choice(value.get("profile"), f"{path}.profile", _PROFILES)
    if kind == "constant":
        _no_unknown(value, path, ("profile", "value"))
        if "value" not in value:
            raise ConfigError(f"{path}.value", "required field")
        return {"profile": "constant", "value": _num(value["value"], f"{path}.value")}
    if kind == "gaussian":
        _no_unknown(value, path, ("profile", "scale", "center", "rate"))
        return {
            "profile": "gaussian",
            "scale": _num(value.get("scale", 1.0), f"{path}.scale"),
            "center": _num(value.get("center", 0.0), f"{path}.center"),
            "rate": _num(value.get("rate", 1.0), f"{path}.rate", ge=0.0),
        }
    _no_unknown(value, path, ("profile", "slope", "intercept"))
    return {
        "profile": "linear",
        "slope": _num(value.get("slope", 1.0), f"{path}.slope"),
        "intercept": _num(value.get("intercept", 0.0), f"{path}.intercept"),
    }


def _profile_fn(spec):
    """Scalar data stays scalar (fast solver paths); objects become callables."""
    if isinstance(spec, float):
        return spec
    kind = spec["profile"]
    if kind == "constant":
        return spec["value"]
    if kind == "gaussian":
        s, c, r = spec["scale"], spec["center"], spec["rate"]
        return lambda x: s * math.exp(-r * (x - c) ** 2)
    m, q = spec["slope"], spec["intercept"]
    return lambda x: m * x + q


def _profile_callable(spec):
    fn = _profile_fn(spec)
    if callable(fn):
        return fn
    return lambda x, c=fn: c


def _validate_params(experiment, obj):
    path = "params"
    _expect_mapping(obj, path)
    out = {}
    if experiment in ("assemble-check", "gauss-green"):
        key = "n_vectors" if experiment == "assemble-check" else "n_pairs"
        _no_unknown(obj, path, (key,))
        out[key] = _intval(obj.get(key, 100), f"{path}.{key}", ge=1)
    elif experiment == "solve":
        _no_unknown(obj, path, ("variant", "f", "g", "beta"))
        out["variant"] = _choice(
            obj.get("variant", "neumann"),
            f"{path}.variant",
            ("neumann", "neumann-weighted", "dirichlet", "robin"),
        )
        out["f"] = _validate_profile(obj.get("f", 1.0), f"{path}.f")
        out["g"] = _validate_profile(obj.get("g", 0.0), f"{path}.g")
        out["beta"] = _num(obj.get("beta", 1.0), f"{path}.beta", ge=0.0)
    elif experiment == "eig":
        _no_unknown(obj, path, ("variant", "count", "beta"))
        out["variant"] = _choice(
            obj.get("variant", "neumann"), f"{path}.variant", ("neumann", "dirichlet", "robin")
        )
        out["count"] = _intval(obj.get("count", 6), f"{path}.count", ge=1)
        out["beta"] = _num(obj.get("beta", 1.0), f"{path}.beta", ge=0.0)
    elif experiment == "poincare":
        _no_unknown(obj, path, ("levels",))
        out["levels"] = _intval(obj.get("levels", 3), f"{path}.levels", ge=1, le=6)
    elif experiment == "robin":
        _no_unknown(obj, path, ("betas", "f"))
        betas = obj.get("betas", [10.0, 1e3, 1e5])
        if not isinstance(betas, list) or not betas:
            raise ConfigError(f"{path}.betas", "expected a non-empty list of numbers")
        out["betas"] = _numlist(betas, f"{path}.betas", gt=0.0)
        out["f"] = _validate_profile(obj.get("f", 1.0), f"{path}.f")
    elif experiment == "dtn":
        _no_unknown(obj, path, ("lam", "n_traces"))
        out["lam"] = _num(obj.get("lam", -1.0), f"{path}.lam")
        out["n_traces"] = _intval(obj.get("n_traces", 50), f"{path}.n_traces", ge=1)
    elif experiment == "dtn-spectral":
        _no_unknown(obj, path, ("beta",))
        out["beta"] = _num(obj.get("beta", 1.0), f"{path}.beta", gt=0.0)
    elif experiment == "trace-compare":
        _no_unknown(obj, path, ("n_traces", "levels"))
        out["n_traces"] = _intval(obj.get("n_traces", 50), f"{path}.n_traces", ge=1)
        out["levels"] = _intval(obj.get("levels", 2), f"{path}.levels", ge=1, le=4)
    elif experiment == "alpha-sweep":
        _no_unknown(obj, path, ("alphas", "phi", "f"))
        alphas = obj.get("alphas", [1.2, 1.5, 1.8, 1.95])
        if not isinstance(alphas, list) or not alphas:
            raise ConfigError(f"{path}.alphas", "expected a non-empty list of numbers")
        out["alphas"] = _numlist(alphas, f"{path}.alphas", gt=0.0, lt=2.0)
        out["phi"] = _validate_profile(
            obj.get("phi", {"profile": "gaussian", "scale": 1.0, "center": 0.5, "rate": 4.0}),
            f"{path}.phi",
        )
        out["f"] = _validate_profile(obj.get("f", 8.0 / math.e), f"{path}.f")
    elif experiment == "nonexistence-probe":
        _no_unknown(obj, path, ("gamma", "alpha", "ladder"))
        out["alpha"] = _num(obj.get("alpha", 1.0), f"{path}.alpha", gt=0.0, lt=2.0)
        out["gamma"] = _num(obj.get("gamma", 0.3), f"{path}.gamma")
        ladder = obj.get("ladder")
        if ladder is not None:
            if not isinstance(ladder, list) or not ladder:
                raise ConfigError(f"{path}.ladder", "expected a non-empty list of [h, R] pairs")
            rungs = []
            for i, rung in enumerate(ladder):
                if not isinstance(rung, list) or len(rung) != 2:
                    raise ConfigError(f"{path}.ladder[{i}]", "expected an [h, R] pair")
                rungs.append(
                    (
                        _num(rung[0], f"{path}.ladder[{i}][0]", gt=0.0),
                        _num(rung[1], f"{path}.ladder[{i}][1]", gt=0.0),
                    )
                )
            out["ladder"] = rungs
        else:
            out["ladder"] = None
    elif experiment == "peridynamic":
        _no_unknown(obj, path, ("levels", "n_vectors"))
        out["levels"] = _intval(obj.get("levels", 3), f"{path}.levels", ge=1, le=5)
        out["n_vectors"] = _intval(obj.get("n_vectors", 100), f"{path}.n_vectors", ge=1)
    elif experiment == "weights-report":
        _no_unknown(obj, path, ("radius", "n_samples", "star_radius", "deltas"))
        out["radius"] = _num(obj.get("radius", 50.0), f"{path}.radius", gt=0.0)
        out["n_samples"] = _intval(obj.get("n_samples", 48), f"{path}.n_samples", ge=2)
        out["star_radius"] = _num(obj.get("star_radius", 2.0), f"{path}.star_radius", gt=1.0)
        deltas = obj.get("deltas", [0.4, 0.2, 0.1, 0.05])
        if not isinstance(deltas, list) or not deltas:
            raise ConfigError(f"{path}.deltas", "expected a non-empty list of numbers")
        out["deltas"] = _numlist(deltas, f"{path}.deltas", gt=0.0)
    return out


def _default_kernel(experiment):
    if experiment == "peridynamic":
        return {"family": "peridynamic", "d": 1, "params": {"horizon": 0.5, "strength": 1.0}}
    if experiment == "weights-report":
        return {"family": "fractional", "d": 1, "params": {"alpha": 0.5}}
    return {"family": "fractional", "d": 1, "params": {"alpha": 1.0}}


def _normalize_config(raw, experiment_arg):
    """Validate a raw config dict against the schema and fill defaults."""
    if raw is None:
        raw = {}
        from_file = False
    else:
        _expect_mapping(raw, "config")
        from_file = True
    _no_unknown(raw, "", _TOP_KEYS)

    if from_file:
        if "schema_version" not in raw:
            raise ConfigError("schema_version", "required field")
        version = _intval(raw["schema_version"], "schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(
                "schema_version", f"unsupported version {version}, expected {SCHEMA_VERSION}"
            )

    experiment = raw.get("experiment")
    if experiment is not None:
        experiment = _choice(experiment, "experiment", EXPERIMENTS)
    if experiment_arg is not None:
        if experiment is not None and experiment != experiment_arg:
            raise ConfigError(
                "experiment",
                f"config says {experiment!r} but the command line says {experiment_arg!r}",
            )
        experiment = experiment_arg
    if experiment is None:
        raise ConfigError("experiment", "required (in the config or as the positional argument)")

    cfg = {
        "schema_version": SCHEMA_VERSION,
        "experiment": experiment,
        "seed": _intval(raw.get("seed", 0), "seed", ge=0),
    }

    if experiment in ("alpha-sweep", "nonexistence-probe") and "kernel" in raw:
        raise ConfigError(
            "kernel", f"{experiment} defines its kernels from params; drop this block"
        )
    if experiment == "nonexistence-probe" and "mesh" in raw:
        raise ConfigError(
            "mesh", "nonexistence-probe defines its ladder in params.ladder; drop this block"
        )

    cfg["kernel"] = _validate_kernel(raw.get("kernel", _default_kernel(experiment)))
    if experiment == "peridynamic" and cfg["kernel"]["family"] != "peridynamic":
        raise ConfigError("kernel.family", "the peridynamic experiment needs a peridynamic kernel")
    if experiment == "trace-compare" and cfg["kernel"]["family"] != "fractional":
        raise ConfigError(
            "kernel.family", "trace-compare needs a fractional kernel (explicit trace norm)"
        )

    dom = dict({"a": 0.0, "b": 1.0}, **_expect_mapping(raw.get("domain", {}), "domain"))
    _no_unknown(dom, "domain", ("a", "b"))
    a = _num(dom["a"], "domain.a")
    b = _num(dom["b"], "domain.b")
    if not a < b:
        raise ConfigError("domain.b", f"need a < b, got a={a}, b={b}")
    cfg["domain"] = {"a": a, "b": b}

    mesh = dict(
        {"h": 0.125, "truncation_radius": 4.0}, **_expect_mapping(raw.get("mesh", {}), "mesh")
    )
    _no_unknown(mesh, "mesh", ("h", "truncation_radius"))
    h = _num(mesh["h"], "mesh.h", gt=0.0)
    R = _num(mesh["truncation_radius"], "mesh.truncation_radius", gt=0.0)
    if R <= b - a:
        raise ConfigError("mesh.truncation_radius", f"must exceed the domain diameter {b - a}")
    cfg["mesh"] = {"h": h, "truncation_radius": R}

    cfg["params"] = _validate_params(experiment, raw.get("params", {}))
    return cfg


def _resolve_threads(value):
    if value is None:
        env = os.environ.get("NONLOCAL_CVP_THREADS")
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ConfigError("NONLOCAL_CVP_THREADS", f"not an integer: {env!r}") from None
    if value < 1:
        raise ConfigError("threads", f"must be >= 1, got {value}")
    return value


# ---------------------------------------------------------------------------
# deterministic serialization


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _json_text(obj, indent=0):
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {_json_text(obj[k], indent + 1)}"
            for k in sorted(obj, key=str)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{inner}{_json_text(v, indent + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return format(v, ".17g") if math.isfinite(v) else json.dumps(str(v))
    return json.dumps(str(obj))


def _write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(_json_text(obj) + "\n")


def _mesh_json(mesh):
    return {
        "vertices": [float(v) for v in mesh.vertices],
        "elements": [[i, i + 1] for i in range(len(mesh.vertices) - 1)],
        "tags": [el.kind for el in mesh.elements],
        "h": mesh.h,
        "truncation_radius": mesh.truncation_radius,
        "far_field": mesh.far_field,
        "domain": {"a": mesh.domain.a, "b": mesh.domain.b},
    }


# ---------------------------------------------------------------------------
# experiment bodies


def _build_system(kcfg, cfg, threads):
    k = _make_kernel(kcfg)
    dom = DomainSpec(cfg["domain"]["a"], cfg["domain"]["b"])
    if math.isfinite(k.support_radius):
        mesh = build_mesh(dom, cfg["mesh"]["h"], support_radius=k.support_radius)
    else:
        mesh = build_mesh(
            dom, cfg["mesh"]["h"], truncation_radius=cfg["mesh"]["truncation_radius"]
        )
    space = build_space(mesh)
    return k, space, assemble(space, k, threads=threads)


def _max_rel_dev(fast, ref):
    """Entrywise relative deviation, floored below 1e-13 of the max entry."""
    fast, ref = np.asarray(fast), np.asarray(ref)
    scale = np.abs(ref).max()
    if scale == 0.0:
        return float(np.abs(fast).max())
    denom = np.maximum(np.abs(fast), np.abs(ref))
    mask = denom > 1e-13 * scale
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(fast - ref)[mask] / denom[mask]))


def _pair_gap(E, amax, u, v):
    return abs(float(u @ E @ v)) / (amax * float(np.linalg.norm(u)) * float(np.linalg.norm(v)))


def _exp_assemble_check(cfg, threads):
    k, space, sysm = _build_system(cfg["kernel"], cfg, threads)
    rng = np.random.default_rng(cfg["seed"])
    n = space.n_dofs
    amax = float(np.abs(sysm.A).max())
    ones = np.ones(n)
    a_one = float(np.abs(sysm.A @ ones).max()) / amax
    symmetry = float(np.abs(sysm.A - sysm.A.T).max()) / amax
    E = sysm.A - sysm.G_L - sysm.N_op

    ratios, gg = [], []
    violations = 0
    for _ in range(cfg["params"]["n_vectors"]):
        u, v = rng.standard_normal((2, n))
        su = float(u @ sysm.S @ u)
        au = float(u @ sysm.A @ u)
        ratios.append(au / su)
        slack = 1e-12 * max(au, su)
        violations += int(au < su - slack or au > 2.0 * su + slack)
        gg.append(_pair_gap(E, amax, u, v))

    rows = [
        ("a_one_residual", a_one),
        ("symmetry_residual", symmetry),
        ("sandwich_min_ratio", min(ratios)),
        ("sandwich_max_ratio", max(ratios)),
        ("sandwich_violations", violations),
        ("gauss_green_residual", max(gg)),
    ]
    summary = dict(rows, n_dofs=n, oracle_ran=False)
    if n <= _DENSE_DOF_CAP:
        ref = dense_reference(space, k)
        for name, fast, exact in (
            ("A", sysm.A, ref.A),
            ("M", sysm.M, ref.M),
            ("M_tilde", sysm.M_tilde, ref.M_tilde),
            ("N_op", sysm.N_op, ref.N_op),
        ):
            dev = _max_rel_dev(fast, exact)
            rows.append((f"oracle_rel_dev_{name}", dev))
            summary[f"oracle_rel_dev_{name}"] = dev
        summary["oracle_ran"] = True
    return ExpResult(summary, [("checks.csv", ("check", "value"), rows)], sysm)


def _exp_gauss_green(cfg, threads):
    _, space, sysm = _build_system(cfg["kernel"], cfg, threads)
    rng = np.random.default_rng(cfg["seed"])
    n = space.n_dofs
    amax = float(np.abs(sysm.A).max())
    E = sysm.A - sysm.G_L - sysm.N_op
    ones = np.ones(n)

    rows, gaps = [], []
    for i in range(cfg["params"]["n_pairs"]):
        u, v = rng.standard_normal((2, n))
        gap = _pair_gap(E, amax, u, v)
        gaps.append(gap)
        rows.append((i, gap))
    ones_balance = float(np.abs(E @ ones).max()) / amax
    summary = {
        "residual": max(gaps),
        "ones_balance": ones_balance,
        "a_one_residual": float(np.abs(sysm.A @ ones).max()) / amax,
        "n_pairs": cfg["params"]["n_pairs"],
    }
    return ExpResult(summary, [("pairs.csv", ("pair", "identity_gap"), rows)], sysm)


def _exp_solve(cfg, threads):
    _, space, sysm = _build_system(cfg["kernel"], cfg, threads)
    p = cfg["params"]
    f = _profile_fn(p["f"])
    g = _profile_fn(p["g"])
    variant = p["variant"]
    if variant == "neumann":
        rep = solve_neumann(sysm, f, g)
    elif variant == "neumann-weighted":
        rep = solve_neumann_weighted(sysm, f, g)
    elif variant == "dirichlet":
        rep = solve_dirichlet(sysm, f, g)
    else:
        rep = solve_robin(sysm, f, g, p["beta"])

    u = rep.coefficients
    verts = space.mesh.vertices
    labels = np.full(len(verts), "complement", dtype=object)
    labels[space.interior_idx] = "interior"
    labels[space.interface_idx] = "interface"
    rows = [(float(verts[i]), float(u[i]), labels[i]) for i in range(len(verts))]

    summary = {
        "variant": variant,
        "compatibility_defect": rep.compatibility_defect,
        "energy": rep.energy,
        "mean_over_omega": rep.mean_over_omega,
        "iterations": rep.iterations,
        "residual": rep.residual,
        "l2_omega": math.sqrt(max(0.0, float(u @ sysm.M @ u))),
        "extras": rep.to_dict()["extras"],
    }
    if space.far_index is not None:
        summary["far_value"] = float(u[space.far_index])
    return ExpResult(summary, [("solution.csv", ("x", "u", "region"), rows)], sysm)


def _exp_eig(cfg, threads):
    k, space, sysm = _build_system(cfg["kernel"], cfg, threads)
    p = cfg["params"]
    rep = eig(sysm, p["variant"], p["count"], beta=p["beta"] if p["variant"] == "robin" else None)
    rows = [(i, float(v), float(r)) for i, (v, r) in enumerate(zip(rep.values, rep.residuals))]
    summary = {
        "variant": p["variant"],
        "count": p["count"],
        "values": [float(v) for v in rep.values],
        "residual_max": float(np.max(rep.residuals)),
    }
    if p["variant"] == "neumann":
        summary["mu0"] = float(rep.values[0])
        if p["count"] > 1:
            summary["mu1"] = float(rep.values[1])
    elif p["variant"] == "dirichlet":
        summary["lambda1"] = float(rep.values[0])
        summary["tail_mass_bound"] = 2.0 * tail_mass(k, space.mesh.domain.diameter)
    else:
        summary["gamma1"] = float(rep.values[0])
    return ExpResult(summary, [("spectrum.csv", ("index", "value", "residual"), rows)], sysm)


def _exp_poincare(cfg, threads):
    rows = []
    base = None
    for level in range(cfg["params"]["levels"]):
        level_cfg = dict(cfg, mesh=dict(cfg["mesh"], h=cfg["mesh"]["h"] / 2**level))
        _, space, sysm = _build_system(cfg["kernel"], level_cfg, threads)
        if base is None:
            base = sysm
        c = poincare_constant(sysm)
        rows.append((level, level_cfg["mesh"]["h"], space.n_dofs, 1.0 / c, c))
    summary = {
        "constants": [r[4] for r in rows],
        "mu1": [r[3] for r in rows],
        "final_constant": rows[-1][4],
    }
    return ExpResult(
        summary,
        [("poincare.csv", ("level", "h", "n_dofs", "mu1", "poincare_constant"), rows)],
        base,
    )


def _exp_robin(cfg, threads):
    _, space, sysm = _build_system(cfg["kernel"], cfg, threads)
    f = _profile_fn(cfg["params"]["f"])
    rep_d = solve_dirichlet(sysm, f, 0.0)
    rows, dists = [], []
    for beta in cfg["params"]["betas"]:
        rep_r = solve_robin(sysm, f, 0.0, beta)
        d = rep_r.coefficients - rep_d.coefficients
        dist = math.sqrt(max(0.0, float(d @ sysm.M @ d)))
        dists.append(dist)
        rows.append((beta, dist))
    summary = {
        "betas": cfg["params"]["betas"],
        "distances": dists,
        "strictly_decreasing": all(x > y for x, y in zip(dists, dists[1:])),
        "dirichlet_l2": math.sqrt(
            max(0.0, float(rep_d.coefficients @ sysm.M @ rep_d.coefficients))
        ),
    }
    return ExpResult(summary, [("robin_trend.csv", ("beta", "l2_distance"), rows)], sysm)


def _exp_dtn(cfg, threads):
    _, space, sysm = _build_system(cfg["kernel"], cfg, threads)
    p = cfg["params"]
    rng = np.random.default_rng(cfg["seed"])
    lam = p["lam"]
    D = dtn_assemble(sysm, lam)
    dmax = float(np.abs(D).max())
    symmetry = float(np.abs(D - D.T).max()) / dmax
    D0 = dtn_assemble(sysm, 0.0)
    ones_c = np.ones(D0.shape[0])
    d0_ones = float(np.abs(D0 @ ones_c).max()) / float(np.abs(D0).max())

    rows, margins = [], []
    for i in range(p["n_traces"]):
        g = rng.standard_normal(D.shape[0])
        quad_form = float(g @ D @ g)
        u = dtn_extend(sysm, lam, g)
        vn2 = v_norm(sysm, u) ** 2
        margin = quad_form - vn2
        margins.append(margin)
        rows.append((i, quad_form, vn2, margin))
    summary = {
        "lam": lam,
        "symmetry_residual": symmetry,
        "d0_ones_residual": d0_ones,
        "min_margin": min(margins),
        "n_traces": p["n_traces"],
    }
    return ExpResult(
        summary,
        [("traces.csv", ("sample", "quadratic_form", "extension_vnorm_sq", "margin"), rows)],
        sysm,
    )


def _exp_dtn_spectral(cfg, threads):
    _, space, sysm = _build_system(cfg["kernel"], cfg, threads)
    check = dtn_spectral_check(sysm, cfg["params"]["beta"])
    summary = dict(check, free_dofs=len(space.free_idx), n_dofs=space.n_dofs)
    rows = [
        (
            check["gamma1"],
            check["sigma_min"],
            check["norm_D"],
            check["status"],
            check["robin_kernel_dim"],
            check["dtn_kernel_dim"],
        )
    ]
    header = ("gamma1", "sigma_min", "norm_D", "status", "robin_kernel_dim", "dtn_kernel_dim")
    return ExpResult(summary, [("spectral.csv", header, rows)], sysm)


def _exp_trace_compare(cfg, threads):
    alpha = cfg["kernel"]["params"]["alpha"]
    p = cfg["params"]
    rows, bands = [], []
    base = None
    for level in range(p["levels"]):
        level_cfg = dict(cfg, mesh=dict(cfg["mesh"], h=cfg["mesh"]["h"] / 2**level))
        _, space, sysm = _build_system(cfg["kernel"], level_cfg, threads)
        if base is None:
            base = sysm
        DK = assemble_trace_DK(space, alpha)
        rng = np.random.default_rng([cfg["seed"], level])
        ratios = []
        for i in range(p["n_traces"]):
            g = rng.standard_normal(len(space.complement_idx))
            q = trace_quotient_norm(sysm, g)
            dk = math.sqrt(max(0.0, float(g @ DK @ g)))
            ratio = q / dk
            ratios.append(ratio)
            rows.append((level, level_cfg["mesh"]["h"], i, q, dk, ratio))
        bands.append((min(ratios), max(ratios)))
    factors = []
    for (lo1, hi1), (lo2, hi2) in zip(bands, bands[1:]):
        factors.append(max(lo1 / lo2, lo2 / lo1))
        factors.append(max(hi1 / hi2, hi2 / hi1))
    summary = {
        "alpha": alpha,
        "bands": [[lo, hi] for lo, hi in bands],
        "endpoint_factors": factors,
        "stable": all(f < 2.0 for f in factors),
        "positive": all(lo > 0.0 for lo, _ in bands),
        "n_traces": p["n_traces"],
    }
    header = ("level", "h", "sample", "quotient_norm", "dk_norm", "ratio")
    return ExpResult(summary, [("ratios.csv", header, rows)], base)


def _exp_alpha_sweep(cfg, threads):
    p = cfg["params"]
    phi = _profile_callable(p["phi"])
    f = _profile_fn(p["f"])
    rows = alpha_sweep(
        phi,
        f,
        p["alphas"],
        h0=cfg["mesh"]["h"],
        truncation_radius=cfg["mesh"]["truncation_radius"],
        threads=threads,
    )
    step = 1e-5
    dphi0 = (phi(step) - phi(-step)) / (2.0 * step)
    dphi1 = (phi(1.0 + step) - phi(1.0 - step)) / (2.0 * step)
    u_loc = local_reference_1d(f, -dphi0, dphi1)
    norm_loc = math.sqrt(quad(lambda x: u_loc(x) ** 2, 0.0, 1.0, limit=200)[0])
    bound = 0.05 * norm_loc

    l2 = [r["l2_error"] for r in rows]
    eg = [r["energy_gap"] for r in rows]
    gg = [r["gauss_green_residual"] for r in rows]
    csv_rows = [
        (r["alpha"], r["h"], r["R_trunc"], r["l2_error"], r["energy_gap"], r["gauss_green_residual"])
        for r in rows
    ]
    summary = {
        "alphas": p["alphas"],
        "l2_errors": l2,
        "energy_gaps": eg,
        "gauss_green_residuals": gg,
        "l2_strictly_decreasing": all(x > y for x, y in zip(l2, l2[1:])),
        "energy_gap_decreasing": all(x > y for x, y in zip(eg, eg[1:])),
        "gauss_green_decreasing": all(x > y for x, y in zip(gg, gg[1:])),
        "local_reference_l2": norm_loc,
        "final_l2_bound": bound,
        "within_bound": l2[-1] <= bound,
    }
    header = ("alpha", "h", "R_trunc", "l2_error", "energy_gap", "gauss_green_residual")
    manifest_mesh = {
        "h0": cfg["mesh"]["h"],
        "truncation_radius": cfg["mesh"]["truncation_radius"],
        "per_alpha_h": [r["h"] for r in rows],
    }
    return ExpResult(summary, [("sweep.csv", header, csv_rows)], None, manifest_mesh)


def _exp_nonexistence(cfg, threads):
    p = cfg["params"]
    report = nonexistence_probe(p["alpha"], p["gamma"], p["ladder"], threads=threads)
    rungs = report["rungs"]
    norms = [r["v_norm"] for r in rungs]
    ratios = report["growth_ratios"]
    if len(norms) >= 2 and abs(norms[-1] - norms[-2]) / norms[-2] < 0.10:
        flag = "stable"
    elif len(ratios) >= 3 and all(r > 1.5 for r in ratios[-3:]):
        flag = "divergent"
    else:
        flag = "inconclusive"
    rows = [
        (
            i,
            r["h"],
            r["R_trunc"],
            r["n_dofs"],
            r["v_norm"],
            ratios[i - 1] if i > 0 else "",
        )
        for i, r in enumerate(rungs)
    ]
    summary = {
        "alpha": p["alpha"],
        "gamma": p["gamma"],
        "flag": flag,
        "v_norms": norms,
        "growth_ratios": ratios,
        "admissible_band": list(report["admissible_band"]),
        "divergence_band": list(report["divergence_band"]),
        "n_dofs": [r["n_dofs"] for r in rungs],
    }
    ladder = p["ladder"] if p["ladder"] is not None else [list(r) for r in DEFAULT_LADDER]
    header = ("rung", "h", "R_trunc", "n_dofs", "v_norm", "growth_ratio")
    return ExpResult(
        summary, [("ladder.csv", header, rows)], None, {"ladder": [list(r) for r in ladder]}
    )


def _exp_peridynamic(cfg, threads):
    k, space, sysm = _build_system(cfg["kernel"], cfg, threads)
    rng = np.random.default_rng(cfg["seed"])
    horizon = k.params["horizon"]
    dom = space.mesh.domain
    n = space.n_dofs
    amax = float(np.abs(sysm.A).max())
    ones = np.ones(n)
    a_one = float(np.abs(sysm.A @ ones).max()) / amax
    E = sysm.A - sysm.G_L - sysm.N_op
    gg = max(
        _pair_gap(E, amax, *rng.standard_normal((2, n))) for _ in range(cfg["params"]["n_vectors"])
    )
    ones_balance = float(np.abs(E @ ones).max()) / amax

    rep_n = eig(sysm, "neumann", 2)
    v0 = rep_n.vectors[:, 0]
    c = float(v0 @ sysm.M @ ones) / float(ones @ sysm.M @ ones)
    dev = v0 - c * ones
    const_residual = math.sqrt(max(0.0, float(dev @ sysm.M @ dev)))
    rep_d = eig(sysm, "dirichlet", 1)
    tail_bound = 2.0 * tail_mass(k, dom.diameter)

    rep1 = solve_neumann(sysm, 1.0, 0.0)

    # horizon sparsity: hat supports farther apart than the horizon never couple
    verts = space.mesh.vertices
    lo = np.concatenate([[verts[0]], verts[:-1]])
    hi = np.concatenate([verts[1:], [verts[-1]]])
    gap = np.maximum(lo[:, None] - hi[None, :], lo[None, :] - hi[:, None])
    outside = gap >= horizon - 1e-12
    A_v = sysm.A[: len(verts), : len(verts)]
    horizon_leak = float(np.abs(A_v[outside]).max()) if outside.any() else 0.0
    sparsity = float(np.count_nonzero(sysm.A)) / sysm.A.size

    phi = lambda x: math.exp(-4.0 * (x - 0.5) ** 2)
    mean_phi = quad(phi, dom.a, dom.b, limit=200)[0] / dom.measure
    ref = lambda x: phi(x) - mean_phi
    f_fn = lambda x: pointwise_L(k, phi, x, 1e-3)[1]
    g_fn = lambda y: pointwise_N(k, phi, y, dom)
    refine_rows, errs = [], []
    for level in range(cfg["params"]["levels"]):
        level_cfg = dict(cfg, mesh=dict(cfg["mesh"], h=cfg["mesh"]["h"] / 2**level))
        _, sp_l, sys_l = _build_system(cfg["kernel"], level_cfg, threads)
        rep_l = solve_neumann(sys_l, f_fn, g_fn)
        err = l2_omega_error(sp_l, rep_l.coefficients, ref=ref)
        errs.append(err)
        refine_rows.append((level, level_cfg["mesh"]["h"], sp_l.n_dofs, err))

    checks = [
        ("a_one_residual", a_one),
        ("gauss_green_residual", gg),
        ("ones_balance", ones_balance),
        ("mu0", float(rep_n.values[0])),
        ("mu0_constant_residual", const_residual),
        ("mu1", float(rep_n.values[1])),
        ("lambda1", float(rep_d.values[0])),
        ("tail_mass_bound", tail_bound),
        ("defect_f1_g0", rep1.compatibility_defect),
        ("weak_residual", rep1.residual),
        ("horizon_leak", horizon_leak),
        ("stiffness_fill", sparsity),
    ]
    summary = dict(
        checks,
        n_dofs=n,
        horizon=horizon,
        far_field=space.mesh.far_field,
        refinement_errors=errs,
        refinement_decreasing=all(x > y for x, y in zip(errs, errs[1:])),
    )
    return ExpResult(
        summary,
        [
            ("checks.csv", ("check", "value"), checks),
            ("refine.csv", ("level", "h", "n_dofs", "l2_error"), refine_rows),
        ],
        sysm,
    )


def _exp_weights_report(cfg, threads):
    k = _make_kernel(cfg["kernel"])
    p = cfg["params"]
    a, b = cfg["domain"]["a"], cfg["domain"]["b"]
    half = np.geomspace(1e-2, p["radius"], p["n_samples"])
    samples = np.concatenate([-half[::-1], half])
    report = comparability_report(k, (a, b), p["star_radius"], samples)

    summary = {"status": report["status"]}
    csvs = []
    if report["status"] == "not-applicable":
        summary["reason"] = report["reason"]
    else:
        bands = report["bands"]
        summary["K"] = max(max(hi, 1.0 / lo) for lo, hi in bands.values())
        summary["bands"] = {name: list(band) for name, band in bands.items()}
        if "profile_bands" in report:
            summary["profile_bands"] = {
                name: list(band) for name, band in report["profile_bands"].items()
            }
        xs = report["samples"]
        w = report["weights"]
        rows = [
            (xs[i], w["nu_tilde"][i], w["nu_bar"][i], w["nu_star"][i], w["one_wedge_nu"][i])
            for i in range(len(xs))
        ]
        csvs.append(
            ("weights.csv", ("x", "nu_tilde", "nu_bar", "nu_star", "one_wedge_nu"), rows)
        )
    diag = class_diagnostics(k, (a, b), p["deltas"])
    summary["q_increasing_to_zero"] = diag["q_increasing_to_zero"]
    summary["q_tilde_increasing_to_zero"] = diag["q_tilde_increasing_to_zero"]
    csvs.append(
        (
            "class_diagnostics.csv",
            ("delta", "q", "q_tilde"),
            list(zip(diag["deltas"], diag["q"], diag["q_tilde"])),
        )
    )
    return ExpResult(summary, csvs, None, {"samples_radius": p["radius"]})


_EXPERIMENT_FNS = {
    "assemble-check": _exp_assemble_check,
    "gauss-green": _exp_gauss_green,
    "solve": _exp_solve,
    "eig": _exp_eig,
    "poincare": _exp_poincare,
    "robin": _exp_robin,
    "dtn": _exp_dtn,
    "dtn-spectral": _exp_dtn_spectral,
    "trace-compare": _exp_trace_compare,
    "alpha-sweep": _exp_alpha_sweep,
    "nonexistence-probe": _exp_nonexistence,
    "peridynamic": _exp_peridynamic,
    "weights-report": _exp_weights_report,
}


# ---------------------------------------------------------------------------
# driver


def _manifest(cfg, threads, result):
    if result.manifest_mesh is not None:
        mesh_block = result.manifest_mesh
    elif result.system is not None:
        mesh = result.system.space.mesh
        mesh_block = {
            "h": mesh.h,
            "truncation_radius": mesh.truncation_radius,
            "n_vertices": mesh.n_vertices,
            "n_elements": len(mesh.elements),
            "n_dofs": result.system.space.n_dofs,
            "far_field": mesh.far_field,
        }
    else:
        mesh_block = dict(cfg["mesh"])
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg["experiment"],
        "seed": cfg["seed"],
        "threads": threads,
        "kernel": cfg["kernel"],
        "domain": cfg["domain"],
        "mesh": mesh_block,
        "params": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg["params"].items()},
        "tolerances": _TOLERANCES[cfg["experiment"]],
        "versions": {
            "nonlocal_cvp": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def run(
    config: str | None = None,
    experiment: str | None = None,
    out: str | None = None,
    threads: int | None = None,
    mesh_dump: bool = False,
    matrix_dump: bool = False,
) -> RunResult:
    """Execute one experiment and write its artifact directory.

    Parameters
    ----------
    config : str or None
        Path to a JSON config file.  None runs the named experiment on
        defaults.
    experiment : str or None
        Experiment name; required when the config does not carry one.
    out : str or None
        Artifact directory (default artifacts/<experiment>).
    threads : int or None
        Worker count; falls back to NONLOCAL_CVP_THREADS, then 1.  Output
        bytes do not depend on it.
    mesh_dump, matrix_dump : bool
        Also write mesh.json and the assembled matrices in coordinate text
        format, when the experiment builds a single primary system.

    Returns
    -------
    RunResult
        exit_code 0 with the artifact directory and the summary dict, or
        exit_code 2 (config error) / 3 (numerical failure) with both None.
    """
    try:
        if config is not None:
            try:
                with open(config) as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise ConfigError("config", f"cannot read {config}: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError("config", f"invalid JSON: {exc}") from None
        else:
            raw = None
        cfg = _normalize_config(raw, experiment)
        nthreads = _resolve_threads(threads)
    except ConfigError as exc:
        print(f"config error at {exc.path}: {exc.message}", file=sys.stderr)
        return RunResult(2, None, None)

    try:
        result = _EXPERIMENT_FNS[cfg["experiment"]](cfg, nthreads)
    except NonlocalError as exc:
        print(f"numerical failure [{exc.code}]: {exc}", file=sys.stderr)
        return RunResult(3, None, None)

    out_dir = Path(out) if out is not None else Path("artifacts") / cfg["experiment"]
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, header, rows in result.csvs:
        _write_csv(out_dir / name, header, rows)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": cfg["experiment"],
        "seed": cfg["seed"],
        **result.summary,
    }
    _write_json(out_dir / "summary.json", summary)
    _write_json(out_dir / "manifest.json", _manifest(cfg, nthreads, result))

    if mesh_dump:
        if result.system is not None:
            _write_json(out_dir / "mesh.json", _mesh_json(result.system.space.mesh))
        else:
            print("mesh-dump: this experiment builds no single mesh", file=sys.stderr)
    if matrix_dump:
        if result.system is not None:
            for name in ("A", "M", "M_tilde", "N_op"):
                export_matrix_text(out_dir / f"{name}.txt", getattr(result.system, name))
        else:
            print("matrix-dump: this experiment builds no single system", file=sys.stderr)
    return RunResult(0, str(out_dir), summary)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nonlocal-cvp",
        description="Run one nonlocal complement-value experiment from a JSON config.",
    )
    parser.add_argument(
        "experiment",
        nargs="?",
        choices=EXPERIMENTS,
        help="experiment kind (optional when the config names one)",
    )
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--out", help="artifact directory (default artifacts/<experiment>)")
    parser.add_argument(
        "--threads", type=int, help="worker count (fallback: env NONLOCAL_CVP_THREADS, then 1)"
    )
    parser.add_argument("--mesh-dump", action="store_true", help="also write mesh.json")
    parser.add_argument(
        "--matrix-dump",
        action="store_true",
        help="also write A/M/M_tilde/N_op in coordinate text format",
    )
    args = parser.parse_args(argv)
    result = run(
        config=args.config,
        experiment=args.experiment,
        out=args.out,
        threads=args.threads,
        mesh_dump=args.mesh_dump,
        matrix_dump=args.matrix_dump,
    )
    if result.exit_code == 0:
        print(result.out_dir)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
