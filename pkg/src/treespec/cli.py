"""Configuration ingestion, subcommand dispatch, and result serialization.

Configs are JSON with a fixed schema (unknown keys rejected, errors carry the
key path); every output CSV starts with a metadata comment (tool version,
config hash, seed) followed by a header row, floats printed with 17
significant digits.  Exit code is nonzero whenever an experiment assertion
fails.
"""

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .connector import analyze_connector
from .convergence import (
    ExperimentConfig,
    eigenfunction_projection_experiment,
    rayleigh_bound_check,
    sandwich_experiment,
    weight_convergence_experiment,
)
from .eigensolver import smallest_eigenpairs
from .fem_2d import GeometrySpec2D, assemble_2d, build_geometry_2d
from .operator_1d import (
    assemble_1d,
    build_mesh_1d,
    discreteness_condition_check,
    radial_decomposition_spectrum,
    rho_star_profile,
    spectrum_1d,
)
from .tree_model import TreeSpec, build_tree

SUBCOMMANDS = ("spectrum1d", "decompose", "spectrum2d", "sandwich",
               "converge-weights", "project", "check-discreteness",
               "connector-constants")

_SCHEMA = {
    "tree": {"k": int, "l0": float, "r": float, "delta": float, "N": int,
             "omega": float, "J": int},
    "weights": {"zone_factor": float},
    "potential": {"kind": str, "params": list},
    "geometry": {"eps_list": list, "c": float, "h": float, "n_cross": int},
    "experiment": {"m": int, "n_list": list, "h_1d": float,
                   "rayleigh_samples": int},
    "output_dir": str,
    "seed": int,
    "threads": int,
}

_DEFAULTS = {
    "tree": {"k": 2, "l0": 1.0, "r": 0.5, "delta": 0.6, "N": 2,
             "omega": 1.0, "J": 2},
    "weights": {"zone_factor": 1.1},
    "potential": {"kind": "zero", "params": [1.0, 1.0]},
    "geometry": {"eps_list": [0.2, 0.1, 0.05], "c": 0.3, "h": 0.03,
                 "n_cross": 3},
    "experiment": {"m": 4, "n_list": [4, 8, 16, 32], "h_1d": 0.01,
                   "rayleigh_samples": 0},
    "output_dir": ".",
    "seed": None,
    "threads": None,
}


class ConfigError(ValueError):
    """Schema violation; the message names the offending key path."""


@dataclass
class RunConfig:
    data: dict

    @property
    def tree_spec(self) -> TreeSpec:
        t = self.data["tree"]
        return TreeSpec(k=t["k"], l0=t["l0"], r=t["r"], delta=t["delta"],
                        N=t["N"], omega=t["omega"], J=t["J"])

    def experiment_config(self) -> ExperimentConfig:
        d = self.data
        return ExperimentConfig(
            tree=self.tree_spec,
            eps_list=tuple(d["geometry"]["eps_list"]),
            n_list=tuple(d["experiment"]["n_list"]),
            m=d["experiment"]["m"],
            h_1d=d["experiment"]["h_1d"],
            h_2d=d["geometry"]["h"],
            n_cross=d["geometry"]["n_cross"],
            apex_c=d["geometry"]["c"],
            zone_factor=d["weights"]["zone_factor"],
            potential=d["potential"]["kind"],
            potential_params=tuple(d["potential"]["params"]),
            seed=d["seed"] if d["seed"] is not None else 0,
        )

    def config_hash(self) -> str:
        canon = json.dumps(self.data, sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def serialize(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2)


def _coerce(value, want, path):
    if want is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if want is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if want is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if want is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return value
    raise ConfigError(f"{path}: unsupported schema type")


def validate_config(raw: dict) -> RunConfig:
    """Fill defaults, reject unknown keys, and range-check the physics."""
    if not isinstance(raw, dict):
        raise ConfigError("top level: expected an object")
    data = {}
    for key, default in _DEFAULTS.items():
        if isinstance(default, dict):
            block = dict(default)
            given = raw.get(key, {})
            if not isinstance(given, dict):
                raise ConfigError(f"{key}: expected an object")
            for sub, val in given.items():
                if sub not in _SCHEMA[key]:
                    raise ConfigError(f"{key}.{sub}: unknown key")
                block[sub] = _coerce(val, _SCHEMA[key][sub], f"{key}.{sub}")
            data[key] = block
        else:
            if key in raw and raw[key] is not None:
                data[key] = _coerce(raw[key], _SCHEMA[key], key)
            else:
                data[key] = default
    unknown = set(raw) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")

    cfg = RunConfig(data)
    try:
        cfg.tree_spec.validate()
    except ValueError as err:
        raise ConfigError(f"tree: {err}") from err
    g = data["geometry"]
    if not all(0 < e < 1 for e in g["eps_list"]):
        raise ConfigError("geometry.eps_list: entries must lie in (0, 1)")
    if data["experiment"]["rayleigh_samples"] > 0 and data["seed"] is None:
        raise ConfigError("seed: required when a randomized check is requested")
    if data["threads"] is None and os.environ.get("TREESPEC_THREADS"):
        data["threads"] = int(os.environ["TREESPEC_THREADS"])
    return cfg


def parse_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"not valid JSON: {err}") from err
    return validate_config(raw)


def apply_overrides(raw: dict, overrides: list) -> dict:
    """Apply --set key.path=value pairs onto the raw config dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item}: expected key=value")
        key, _, value = item.partition("=")
        node = raw
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {part} is not an object")
        node[parts[-1]] = json.loads(value)
    return raw


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def write_csv(path: Path, fieldnames, rows, cfg: RunConfig) -> None:
    seed = cfg.data["seed"]
    lines = [f"# treespec {__version__} config={cfg.config_hash()} seed={seed}"]
    lines.append(",".join(fieldnames))
    for row in rows:
        lines.append(",".join(_fmt(row[k]) for k in fieldnames))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _spectrum_rows(spec):
    rows = []
    for i, (lam, mult) in enumerate(zip(spec.values, spec.multiplicities)):
        res = spec.residuals[i] if spec.residuals is not None else math.nan
        rows.append({"index": i + 1, "lambda": float(lam),
                     "multiplicity": int(mult), "residual": float(res)})
    return rows


def run_spectrum1d(cfg: RunConfig, out: Path) -> int:
    ecfg = cfg.experiment_config()
    tree = build_tree(cfg.tree_spec)
    rs = rho_star_profile(tree)
    mesh = build_mesh_1d(tree, h=ecfg.h_1d, breakpoints=rs.breakpoints)
    spec = spectrum_1d(tree, mesh, rs, rs, W=ecfg.w_limit(), m=ecfg.m)
    write_csv(out / "spectrum1d.csv",
              ["index", "lambda", "multiplicity", "residual"],
              _spectrum_rows(spec), cfg)
    print(f"spectrum1d: lambda_1 = {spec.values[0]:.6g} "
          f"({ecfg.m} modes, dofs on h={ecfg.h_1d})")
    return 0


def run_decompose(cfg: RunConfig, out: Path) -> int:
    ecfg = cfg.experiment_config()
    tree = build_tree(cfg.tree_spec)
    rs = rho_star_profile(tree)
    mesh = build_mesh_1d(tree, h=ecfg.h_1d, breakpoints=rs.breakpoints)
    W = ecfg.w_limit()
    dec = radial_decomposition_spectrum(tree, mesh, rs, rs, W, ecfg.m)
    system = assemble_1d(tree, mesh, rs, rs, W)
    direct = smallest_eigenpairs(system.K, system.M, ecfg.m, with_vectors=False)
    vals = dec.expanded_values(ecfg.m)
    mults = np.repeat(dec.multiplicities, dec.multiplicities)[:len(vals)]
    rel = np.abs(vals - direct.values[:len(vals)]) / np.abs(direct.values[:len(vals)])
    rows = []
    for i, v in enumerate(vals):
        rows.append({"index": i + 1, "lambda": float(v),
                     "multiplicity": int(mults[i]),
                     "lambda_direct": float(direct.values[i]),
                     "relative_gap": float(rel[i])})
    write_csv(out / "decompose.csv",
              ["index", "lambda", "multiplicity", "lambda_direct",
               "relative_gap"], rows, cfg)
    ok = bool(rel.max() <= 1e-8)
    print(f"decompose: max relative gap to direct spectrum {rel.max():.3e} "
          f"({'ok' if ok else 'FAIL'})")
    return 0 if ok else 1


def run_spectrum2d(cfg: RunConfig, out: Path, dump_mesh: bool = False) -> int:
    ecfg = cfg.experiment_config()
    tree = build_tree(cfg.tree_spec)
    rows = []
    first = None
    for i_eps, eps in enumerate(ecfg.eps_list):
        tm = build_geometry_2d(tree, GeometrySpec2D(
            eps=eps, c=ecfg.apex_c, h=ecfg.h_2d, n_cross=ecfg.n_cross))
        system = assemble_2d(tm, W=ecfg.w2d())
        spec = smallest_eigenpairs(system.K, system.M, ecfg.m)
        if first is None:
            first = spec.values[0]
        for i, lam in enumerate(spec.values):
            rows.append({"eps": eps, "index": i + 1, "lambda": float(lam),
                         "residual": float(spec.residuals[i])})
        if dump_mesh and i_eps == 0:
            _dump_mesh_and_field(tm, system, spec, out, cfg)
    write_csv(out / "spectrum2d.csv", ["eps", "index", "lambda", "residual"],
              rows, cfg)
    print(f"spectrum2d: nu_1 = {first:.6g} at eps = {ecfg.eps_list[0]}")
    return 0


def _dump_mesh_and_field(tm, system, spec, out: Path, cfg: RunConfig) -> None:
    """Node/triangle/tag CSV triple plus the first eigenfunction field."""
    node_rows, tri_rows, tag_rows = [], [], []
    for ci, comp in enumerate(tm.components):
        for loc, gid in enumerate(comp.gids):
            node_rows.append({"node": int(gid), "component": ci,
                              "x": float(comp.mesh.nodes[loc, 0]),
                              "y": float(comp.mesh.nodes[loc, 1]),
                              "theta": float(comp.theta[loc])})
        for tri in comp.mesh.triangles:
            g = comp.gids[tri]
            tri_rows.append({"component": ci, "n0": int(g[0]),
                             "n1": int(g[1]), "n2": int(g[2])})
        for (a, b), tag in zip(comp.mesh.boundary_edges, comp.mesh.boundary_tags):
            tag_rows.append({"component": ci, "n0": int(comp.gids[a]),
                             "n1": int(comp.gids[b]), "tag": int(tag)})
    write_csv(out / "mesh_nodes.csv",
              ["node", "component", "x", "y", "theta"], node_rows, cfg)
    write_csv(out / "mesh_triangles.csv",
              ["component", "n0", "n1", "n2"], tri_rows, cfg)
    write_csv(out / "mesh_tags.csv",
              ["component", "n0", "n1", "tag"], tag_rows, cfg)
    u = np.zeros(tm.n_nodes)
    u[system.free] = spec.vectors[:, 0]
    write_csv(out / "field_mode1.csv", ["node", "value"],
              [{"node": i, "value": float(v)} for i, v in enumerate(u)], cfg)


def run_sandwich(cfg: RunConfig, out: Path) -> int:
    ecfg = cfg.experiment_config()
    report = sandwich_experiment(ecfg)
    rows = [{"eps": r.eps, "m": r.m, "mu": r.mu, "lambda": r.lam, "nu": r.nu,
             "nu_bar": r.nu_bar, "phi_Q_mu": r.phi_Q_mu, "phi_P_nu": r.phi_P_nu,
             "ok_upper": int(r.ok_upper), "ok_lower": int(r.ok_lower)}
            for r in report.rows]
    write_csv(out / "sandwich.csv",
              ["eps", "m", "mu", "lambda", "nu", "nu_bar", "phi_Q_mu",
               "phi_P_nu", "ok_upper", "ok_lower"], rows, cfg)
    summary = {
        "fitted_c": {str(k): v for k, v in report.fitted_c.items()},
        "c_stable_factor": report.c_stable_factor,
        "nu1_minus_mu1": report.nu1_minus_mu1,
        "gaps_decreasing": report.gaps_decreasing,
        "all_pass": report.all_pass,
    }
    code = 0 if report.all_pass and report.gaps_decreasing else 1
    samples = cfg.data["experiment"]["rayleigh_samples"]
    if samples > 0:
        checks = []
        for eps in ecfg.eps_list:
            for rep in rayleigh_bound_check(ecfg, eps, n_samples=samples):
                checks.append({"eps": rep.eps, "direction": rep.direction,
                               "a": rep.fitted_a, "c": rep.fitted_c,
                               "violations": rep.violations})
                if rep.violations:
                    code = 1
        summary["rayleigh_checks"] = checks
    write_json(out / "sandwich_summary.json", summary)
    print(f"sandwich: fitted c stable within {report.c_stable_factor:.3g}, "
          f"|nu1-mu1| {['%.4g' % g for g in report.nu1_minus_mu1]} "
          f"({'pass' if code == 0 else 'FAIL'})")
    return code


def run_converge_weights(cfg: RunConfig, out: Path) -> int:
    ecfg = cfg.experiment_config()
    report = weight_convergence_experiment(ecfg)
    write_csv(out / "converge_weights.csv",
              ["n", "m", "lambda_n", "lambda_limit", "gap"],
              list(report.rows()), cfg)
    ok = report.envelope_ok and report.gaps_decreasing
    write_json(out / "converge_weights_summary.json", {
        "equiv_constant": report.equiv_constant,
        "envelope_ok": report.envelope_ok,
        "envelope_failures": report.envelope_failures,
        "gaps_decreasing": report.gaps_decreasing,
        "final_relative_gap": report.final_relative_gap,
    })
    print(f"converge-weights: final relative gap "
          f"{report.final_relative_gap:.4g} ({'pass' if ok else 'FAIL'})")
    return 0 if ok else 1


def run_project(cfg: RunConfig, out: Path) -> int:
    ecfg = cfg.experiment_config()
    report = eigenfunction_projection_experiment(ecfg)
    rows = [{"eps": r.eps, "lambda_2d": r.lambda_2d, "distance": r.distance,
             "overlap": r.overlap, "holder_constant": r.holder_constant}
            for r in report.rows]
    write_csv(out / "project.csv",
              ["eps", "lambda_2d", "distance", "overlap", "holder_constant"],
              rows, cfg)
    ok = report.distances_decreasing and report.tracking_ok
    write_json(out / "project_summary.json", {
        "distances_decreasing": report.distances_decreasing,
        "final_distance": report.final_distance,
        "tracking_ok": report.tracking_ok,
    })
    print(f"project: final relative distance {report.final_distance:.4g} "
          f"({'pass' if ok else 'FAIL'})")
    return 0 if ok else 1


def run_check_discreteness(cfg: RunConfig, out: Path) -> int:
    tree = build_tree(cfg.tree_spec)
    report = discreteness_condition_check(tree, rho_star_profile(tree))
    write_json(out / "discreteness.json", {
        "holds": report.holds,
        "best_C": report.best_C,
        "per_generation_factor": report.per_generation_factor,
        "boundary": report.boundary,
    })
    verdict = "holds" if report.holds else "condition fails"
    if report.boundary:
        verdict += " (boundary case)"
    print(f"check-discreteness: {verdict}, per-generation factor "
          f"{report.per_generation_factor:.6g}, best C {report.best_C:.6g}")
    return 0 if report.holds else 1


def run_connector_constants(cfg: RunConfig, out: Path) -> int:
    t = cfg.tree_spec
    g = cfg.data["geometry"]
    domain, mesh, _, forms, consts = analyze_connector(
        t.delta, c=g["c"], k=min(t.k, 2), omega=t.omega, N=t.N,
        h=0.05, section_intervals=12)
    payload = {
        "constants": consts.as_dict(),
        "matrices": {
            "Abar": forms.Abar.tolist(), "A": forms.A.tolist(),
            "Bbar": forms.Bbar.tolist(), "B": forms.B.tolist(),
            "E0bar": forms.E0bar.tolist(), "E1bar": forms.E1bar.tolist(),
            "E0": forms.E0.tolist(), "E1": forms.E1.tolist(),
        },
        "pentagon_vertices": domain.vertices.tolist(),
        "arm_lengths": domain.arm_lengths.tolist(),
        "mesh_nodes": mesh.n_nodes,
    }
    write_json(out / "connector_constants.json", payload)
    print(f"connector-constants: rho_Q factor {consts.rho_Q_factor:.6g}, "
          f"rho_P factor {consts.rho_P_factor:.6g}")
    return 0


_RUNNERS = {
    "spectrum1d": run_spectrum1d,
    "decompose": run_decompose,
    "spectrum2d": run_spectrum2d,
    "sandwich": run_sandwich,
    "converge-weights": run_converge_weights,
    "project": run_project,
    "check-discreteness": run_check_discreteness,
    "connector-constants": run_connector_constants,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="treespec",
        description="Spectra of width-weighted tree operators and of their "
                    "2-D inflated counterparts")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--set", action="append", default=[], dest="overrides",
                        metavar="KEY=VALUE", help="override a config key")
    parser.add_argument("--dump-mesh", action="store_true",
                        help="with spectrum2d: write mesh and field CSVs")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        raw = apply_overrides(raw, args.overrides)
        cfg = validate_config(raw)
    except (OSError, json.JSONDecodeError, ConfigError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2

    out = Path(args.out) if args.out else Path(cfg.data["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.subcommand == "spectrum2d":
            return run_spectrum2d(cfg, out, dump_mesh=args.dump_mesh)
        return _RUNNERS[args.subcommand](cfg, out)
    except Exception as err:  # propagate with module context, nonzero exit
        print(f"{args.subcommand} failed: {type(err).__name__}: {err}",
              file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
