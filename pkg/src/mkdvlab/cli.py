"""Config-driven experiment runner.

Every experiment is one JSON config plus a mode name; outputs are JSON and
CSV files in the output directory, always including resolved_config.json
with every default made explicit so runs are diffable artifacts. Exit code
2 means the config failed validation (field-level messages on stderr as
JSON), 3 means a numerical failure (non-contraction, instability, vanishing
denominator), 0 means all artifacts were written.

The only environment variable consulted is OUTPUT_DIR, which overrides the
config's output_dir but loses to the --output-dir flag.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from typing import Any

import numpy as np

from .errors import (
    ConfigError,
    ConvergenceError,
    DenominatorError,
    FieldError,
    GridMismatchError,
    InstabilityError,
)
from .gauge import phase_to_obj, solve_phase
from .nonlinearity import direct_nonlinearity, nr_trilinear, resonant_term
from .norms import NormProxyConfig
from .picard import PicardConfig, picard_solve, picard_step, reconstruct_solution
from .probes import (
    EnsembleSpec,
    probe_duhamel_smoothing,
    probe_quotient_form,
    probe_trilinear_bourgain,
    smoothing_report,
)
from .reference import (
    CONSERVED_COLUMNS,
    ETDConfig,
    compare_trajectories,
    conserved_series,
    solve_reference,
)
from .spectral import (
    FourierField,
    GridSpec,
    SobolevIndex,
    Trajectory,
    cosine_field,
    field_from_modes,
    trajectory_to_obj,
)
from .version import VERSION

__all__ = ["main", "run", "emit_report", "MODES"]

MODES = (
    "simulate",
    "gauge_solve",
    "compare",
    "decompose_check",
    "probe16",
    "probe12",
    "probe700",
    "smoothing",
    "q_solve",
)

_PROBE_MODES = ("probe16", "probe12", "probe700")


class _Problems:
    def __init__(self) -> None:
        self.rows: list[dict[str, str]] = []

    def add(self, field: str, message: str) -> None:
        self.rows.append({"field": field, "message": message})

    def __bool__(self) -> bool:
        return bool(self.rows)


def _section(doc: dict, name: str, known: tuple[str, ...], problems: _Problems) -> dict:
    raw = doc.get(name, {})
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        problems.add(name, "must be an object")
        return {}
    for key in raw:
        if key not in known:
            problems.add(f"{name}.{key}", "unknown key")
    return raw


def _build(problems: _Problems, field: str, ctor, **kwargs):
    try:
        return ctor(**kwargs)
    except (ConfigError, FieldError, TypeError, ValueError) as exc:
        problems.add(field, str(exc))
        return None


def _build_initial(section: dict, K: int, problems: _Problems) -> FourierField | None:
    kind = section.get("kind", "cosine")
    if kind == "cosine":
        return _build(
            problems,
            "initial_data",
            cosine_field,
            K=K,
            amplitude=float(section.get("amplitude", 1.0)),
            harmonic=int(section.get("harmonic", 1)),
        )
    if kind == "modes-list":
        rows = section.get("modes")
        if not isinstance(rows, list) or not rows:
            problems.add("initial_data.modes", "must be a non-empty list of [k, re, im]")
            return None
        try:
            modes = {int(k): complex(re, im) for k, re, im in rows}
        except (TypeError, ValueError):
            problems.add("initial_data.modes", "rows must be [k, re, im] triples")
            return None
        return _build(problems, "initial_data", field_from_modes, K=K, modes=modes)
    if kind == "seeded-random":
        if "seed" not in section:
            problems.add("initial_data.seed", "required for kind seeded-random")
            return None
        seed = int(section["seed"])
        decay = float(section.get("decay_exponent", 1.0))
        rng = np.random.default_rng(seed)
        k = np.arange(1, K + 1, dtype=float)
        moduli = rng.random(K) * (1.0 + k * k) ** (-0.5 * decay)
        phases = rng.random(K) * (2.0 * np.pi)
        c = np.zeros(2 * K + 1, dtype=complex)
        c[K + 1 :] = moduli * np.exp(1j * phases)
        c[:K] = np.conj(c[K + 1 :])[::-1]
        return FourierField(c, real_symmetric=True)
    problems.add("initial_data.kind", f"unknown kind {kind!r}")
    return None


def _echo_initial(section: dict) -> dict:
    kind = section.get("kind", "cosine")
    if kind == "cosine":
        return {
            "kind": "cosine",
            "amplitude": float(section.get("amplitude", 1.0)),
            "harmonic": int(section.get("harmonic", 1)),
        }
    if kind == "modes-list":
        return {"kind": "modes-list", "modes": section.get("modes")}
    return {
        "kind": kind,
        "seed": section.get("seed"),
        "decay_exponent": float(section.get("decay_exponent", 1.0)),
    }


def _resolve(doc: dict, args: argparse.Namespace) -> tuple[dict | None, _Problems]:
    """Validate the config document and build the working objects.

    Returns (resolved, problems); resolved is None when problems is truthy.
    The resolved dict carries both the dataclass instances (under keys
    starting with an underscore) and the JSON echo of every section.
    """
    problems = _Problems()
    if not isinstance(doc, dict):
        problems.add("", "config must be a JSON object")
        return None, problems

    mode = args.mode or doc.get("mode")
    if mode is None:
        problems.add("mode", "missing (set in the config or with --mode)")
    elif mode not in MODES:
        problems.add("mode", f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")

    grid_sec = _section(doc, "grid", ("K", "M", "T"), problems)
    grid = _build(
        problems,
        "grid",
        GridSpec,
        K=int(grid_sec.get("K", 16)),
        M=int(grid_sec.get("M", 64)),
        T=float(grid_sec.get("T", 0.01)),
    )

    params_sec = _section(doc, "params", ("s0", "s1", "b", "delta"), problems)
    params = _build(
        problems,
        "params",
        SobolevIndex,
        s0=float(params_sec.get("s0", 0.3)),
        s1=params_sec.get("s1"),
        b=params_sec.get("b"),
        delta=params_sec.get("delta"),
    )
    if params is not None:
        try:
            params.validate()
        except ConfigError as exc:
            problems.add("params", str(exc))
            params = None

    proxy_sec = _section(
        doc, "proxy", ("s", "b", "window", "pad_factor", "phase"), problems
    )
    proxy = None
    if params is not None:
        proxy = _build(
            problems,
            "proxy",
            NormProxyConfig,
            s=float(proxy_sec.get("s", params.s0)),
            b=float(proxy_sec.get("b", params.b)),
            window=proxy_sec.get("window", "hann"),
            pad_factor=int(proxy_sec.get("pad_factor", 4)),
            phase=proxy_sec.get("phase", "modified"),
        )

    etd_sec = _section(
        doc,
        "etd",
        ("dt", "scheme", "linear_phase", "contour_points", "nonlinearity_enabled"),
        problems,
    )
    etd = _build(
        problems,
        "etd",
        ETDConfig,
        dt=float(etd_sec.get("dt", 1e-3)),
        scheme=etd_sec.get("scheme", "etdrk4"),
        linear_phase=etd_sec.get("linear_phase", "airy"),
        contour_points=int(etd_sec.get("contour_points", 32)),
        nonlinearity_enabled=bool(etd_sec.get("nonlinearity_enabled", True)),
    )

    picard_sec = _section(
        doc,
        "picard",
        (
            "T",
            "M",
            "tol",
            "max_iters",
            "phase_tol",
            "phase_max_sweeps",
            "nr_method",
            "window",
            "pad_factor",
        ),
        problems,
    )
    picard = None
    if params is not None and proxy is not None and grid is not None:
        picard = _build(
            problems,
            "picard",
            PicardConfig,
            params=params,
            T=float(picard_sec.get("T", grid.T)),
            M=int(picard_sec.get("M", grid.M)),
            tol=float(picard_sec.get("tol", 1e-10)),
            max_iters=int(picard_sec.get("max_iters", 25)),
            phase_tol=float(picard_sec.get("phase_tol", 1e-12)),
            phase_max_sweeps=int(picard_sec.get("phase_max_sweeps", 50)),
            nr_method=picard_sec.get("nr_method", "fast"),
            window=picard_sec.get("window", proxy.window),
            pad_factor=int(picard_sec.get("pad_factor", proxy.pad_factor)),
        )

    ensemble_sec = _section(
        doc,
        "ensemble",
        (
            "seed",
            "count",
            "K",
            "decay_exponent",
            "M",
            "T",
            "k_values",
            "modulation_bumps",
        ),
        problems,
    )
    ensemble = None
    if mode in _PROBE_MODES:
        if not ensemble_sec and "ensemble" not in doc:
            problems.add("ensemble", f"required for mode {mode}")
        else:
            for key in ("seed", "count", "decay_exponent"):
                if key not in ensemble_sec:
                    problems.add(f"ensemble.{key}", "missing")
            if params is not None and proxy is not None and grid is not None and not problems:
                seed = args.seed if args.seed is not None else int(ensemble_sec["seed"])
                kv = ensemble_sec.get("k_values")
                ensemble = _build(
                    problems,
                    "ensemble",
                    EnsembleSpec,
                    seed=seed,
                    count=int(ensemble_sec["count"]),
                    K=int(ensemble_sec.get("K", grid.K)),
                    decay_exponent=float(ensemble_sec["decay_exponent"]),
                    params=params,
                    proxy=proxy,
                    M=int(ensemble_sec.get("M", 16)),
                    T=float(ensemble_sec.get("T", 0.5)),
                    k_values=tuple(kv) if kv is not None else None,
                    modulation_bumps=float(ensemble_sec.get("modulation_bumps", 0.0)),
                )

    initial_sec = _section(
        doc,
        "initial_data",
        ("kind", "amplitude", "harmonic", "modes", "seed", "decay_exponent"),
        problems,
    )
    field_K = ensemble.K if ensemble is not None else (grid.K if grid is not None else None)
    initial = (
        _build_initial(initial_sec, field_K, problems) if field_K is not None else None
    )

    output_dir = (
        args.output_dir
        or os.environ.get("OUTPUT_DIR")
        or doc.get("output_dir")
        or "./runs"
    )

    if problems:
        return None, problems

    resolved = {
        "version": VERSION,
        "mode": mode,
        "initial_data": _echo_initial(initial_sec),
        "grid": {"K": grid.K, "M": grid.M, "T": grid.T},
        "params": {"s0": params.s0, "s1": params.s1, "b": params.b, "delta": params.delta},
        "proxy": dataclasses.asdict(proxy),
        "etd": dataclasses.asdict(etd),
        "picard": {
            k: v for k, v in dataclasses.asdict(picard).items() if k != "params"
        },
        "ensemble": ensemble.to_obj() if ensemble is not None else None,
        "output_dir": str(output_dir),
        "_grid": grid,
        "_params": params,
        "_proxy": proxy,
        "_etd": etd,
        "_picard": picard,
        "_ensemble": ensemble,
        "_initial": initial,
    }
    return resolved, problems


def _write_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: str, header: tuple[str, ...], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(obj, dict):
        out = []
        for key in obj:
            out.extend(_flatten(obj[key], f"{prefix}.{key}" if prefix else str(key)))
        return out
    if isinstance(obj, (list, tuple)):
        out = []
        for i, item in enumerate(obj):
            out.extend(_flatten(item, f"{prefix}[{i}]"))
        return out
    return [(prefix, obj)]


def emit_report(results: dict, fmt: str, path: str) -> None:
    """Write a report dict as JSON, or as a flattened key,value CSV."""
    if fmt == "json":
        _write_json(path, results)
    elif fmt == "csv":
        rows = [
            (key, "" if val is None else _cell(val)) for key, val in _flatten(results)
        ]
        _write_csv(path, ("key", "value"), rows)
    else:
        raise ConfigError(f"unknown report format {fmt!r}")


def _run_mode(resolved: dict, out: str) -> tuple[dict, list[str]]:
    mode = resolved["mode"]
    grid: GridSpec = resolved["_grid"]
    params: SobolevIndex = resolved["_params"]
    etd: ETDConfig = resolved["_etd"]
    picard: PicardConfig = resolved["_picard"]
    ensemble: EnsembleSpec | None = resolved["_ensemble"]
    f: FourierField = resolved["_initial"]
    artifacts: list[str] = []

    def path(name: str) -> str:
        artifacts.append(name)
        return os.path.join(out, name)

    if mode == "simulate":
        u = solve_reference(f, grid.T, etd, grid.M)
        _write_json(path("trajectory.json"), trajectory_to_obj(u))
        series = conserved_series(u)
        _write_csv(path("conserved.csv"), CONSERVED_COLUMNS, series.tolist())
        drifts = np.max(np.abs(series[:, 1:] - series[0, 1:]), axis=0)
        return {
            "frames": grid.M,
            "mass_drift": float(drifts[0]),
            "l2_drift": float(drifts[1]),
            "energy_drift": float(drifts[2]),
        }, artifacts

    if mode == "gauge_solve":
        z, table, report = picard_solve(f, picard)
        u = reconstruct_solution(z, table, f)
        _write_json(
            path("picard_report.json"),
            {"version": VERSION, **report.to_obj()},
        )
        _write_json(path("z_trajectory.json"), trajectory_to_obj(z))
        _write_json(path("u_trajectory.json"), trajectory_to_obj(u))
        _write_json(path("phase.json"), phase_to_obj(table))
        return report.to_obj(), artifacts

    if mode == "compare":
        z, table, report = picard_solve(f, picard)
        u_gauge = reconstruct_solution(z, table, f)
        u_ref = solve_reference(f, picard.T, etd, picard.M)
        max_dist, per_frame = compare_trajectories(u_gauge, u_ref, 0.0)
        times = u_ref.grid.times
        _write_csv(
            path("comparison.csv"),
            ("frame", "t", "hs_distance"),
            [(n, float(times[n]), float(per_frame[n])) for n in range(len(per_frame))],
        )
        return {
            "s": 0.0,
            "max_hs_distance": max_dist,
            "picard_converged": report.converged,
        }, artifacts

    if mode == "decompose_check":
        lhs = direct_nonlinearity(f)
        rhs = nr_trilinear(f, f, f, picard.nr_method) + resonant_term(f)
        err = float(np.max(np.abs(lhs.coeffs - rhs.coeffs)))
        return {"decomposition_max_err": err}, artifacts

    if mode in _PROBE_MODES:
        runner = {
            "probe16": probe_duhamel_smoothing,
            "probe12": probe_trilinear_bourgain,
            "probe700": probe_quotient_form,
        }[mode]
        report = runner(f, ensemble)
        if report.argmax_sample is not None:
            _write_json(path("argmax_sample.json"), report.argmax_sample)
            report = dataclasses.replace(report, argmax_sample_file="argmax_sample.json")
        _write_json(path("probe_report.json"), report.to_obj())
        return report.to_obj(), artifacts

    if mode == "smoothing":
        u = solve_reference(f, grid.T, etd, grid.M)
        rep = smoothing_report(u, f, params)
        _write_csv(
            path("smoothing.csv"),
            (
                "t",
                "remainder_hs1",
                "gap_sum_weight1",
                "gap_sum_upgraded",
                "gap_sup_weight1",
            ),
            [
                (
                    float(rep.times[n]),
                    float(rep.remainder_hs1[n]),
                    float(rep.gap_sum_weight1[n]),
                    float(rep.gap_sum_upgraded[n]),
                    float(rep.gap_sup_weight1[n]),
                )
                for n in range(rep.times.size)
            ],
        )
        return {"upgraded_exponent": rep.upgraded_exponent, "sups": rep.sups}, artifacts

    # q_solve: one iteration from rest, then the phase fixed point for it
    z0 = Trajectory.zeros(picard.grid_for(f.K))
    z1, _ = picard_step(z0, f, picard)
    table, rep = solve_phase(
        f, z1, tol=picard.phase_tol, max_sweeps=picard.phase_max_sweeps, s0=params.s0
    )
    _write_json(path("phase.json"), phase_to_obj(table))
    return {
        "sweeps": rep.sweeps,
        "residual": rep.residual,
        "update_norms": list(rep.update_norms),
        "ratios": list(rep.ratios),
        "c0": rep.c0,
        "certified_T0": rep.certified_T0,
        "contraction_T0": rep.contraction_T0,
    }, artifacts


def run(resolved: dict) -> dict:
    """Execute a resolved config: write artifacts, return the report object."""
    out = resolved["output_dir"]
    os.makedirs(out, exist_ok=True)
    echo = {k: v for k, v in resolved.items() if not k.startswith("_")}
    _write_json(os.path.join(out, "resolved_config.json"), echo)
    results, artifacts = _run_mode(resolved, out)
    report = {
        "version": VERSION,
        "mode": resolved["mode"],
        "resolved_config": echo,
        "results": results,
        "artifacts": artifacts + ["resolved_config.json", "report.json"],
    }
    _write_json(os.path.join(out, "report.json"), report)
    return report


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mkdvlab",
        description="Spectral experiments for the gauged periodic mKdV system.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--output-dir", default=None, help="artifact directory")
    parser.add_argument("--mode", default=None, choices=MODES, help="override the config mode")
    parser.add_argument("--seed", default=None, type=int, help="override ensemble.seed")
    parser.add_argument("--quiet", action="store_true", help="suppress the stdout summary")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        _fail(2, "config-unreadable", str(exc))
        return 2
    except json.JSONDecodeError as exc:
        _fail(2, "config-parse-error", str(exc))
        return 2

    resolved, problems = _resolve(doc, args)
    if problems or resolved is None:
        print(
            json.dumps(
                {"error": "invalid-config", "problems": problems.rows}, indent=2
            ),
            file=sys.stderr,
        )
        return 2

    try:
        report = run(resolved)
    except (ConvergenceError, InstabilityError, DenominatorError) as exc:
        detail = {}
        if isinstance(exc, ConvergenceError) and exc.residual is not None:
            detail["residual"] = exc.residual
        if isinstance(exc, InstabilityError) and exc.step is not None:
            detail["step"] = exc.step
        if isinstance(exc, DenominatorError) and exc.triple is not None:
            detail["triple"] = list(exc.triple)
        _fail(3, type(exc).__name__, str(exc), **detail)
        return 3
    except (ConfigError, FieldError, GridMismatchError) as exc:
        _fail(2, type(exc).__name__, str(exc))
        return 2

    if not args.quiet:
        print(f"mode {report['mode']}: wrote {len(report['artifacts'])} artifacts "
              f"to {resolved['output_dir']}")
        for key, val in report["results"].items():
            if isinstance(val, (int, float, str, bool)) or val is None:
                print(f"  {key} = {val}")
    return 0


def _fail(code: int, kind: str, message: str, **detail) -> None:
    print(
        json.dumps({"error": kind, "message": message, **detail}, indent=2),
        file=sys.stderr,
    )


if __name__ == "__main__":
    sys.exit(main())
