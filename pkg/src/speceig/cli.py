"""Command-line experiment runner.

    speceig sweep      --config landau-zener.cfg --out results/
    speceig scan       --config kitaev-y-scan.cfg --out results/
    speceig phase-map  --config phase-map-exact.cfg --out results/
    speceig oracle     --config oracle-two-level.cfg --out results/
    speceig resources  --config resources.cfg --out results/

Exit codes: 0 ok, 2 configuration error, 3 runtime error.  Errors are printed
to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import config as cfgmod
from .errors import ConfigError, PoleProximityError
from .kitaev import (
    closings_along_cut,
    fit_boundary_z,
    gap_map_exact,
    gap_map_spectroscopic,
    symmetrize,
    write_json,
)
from .oracles import perturbative_z0, two_level_z0
from .pauli import PauliHamiltonian, exact_spectrum, transition_energies
from .resources import GateErrorModel, count_qpe, count_spectroscopic, scored, write_reports
from .spectroscopy import SweepResult, run_sweep, track_dip, write_summary
from .statevector import (
    StateVector,
    dense_resonance,
    exact_evolve,
    resonance_program,
    state_error,
    steps_for,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (e.g. ``landau-zener.cfg``)."""
    return Path(str(importlib_resources.files("speceig") / "configs" / name))


def _resolve_config(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    b = bundled_config(name)
    if b.exists():
        return b
    raise ConfigError(f"config {name!r} not found (neither a path nor a bundled config)")


def _fmt(v: float) -> str:
    return format(float(v), ".15g")


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _transition_set(h: PauliHamiltonian) -> list[dict[str, Any]]:
    s = exact_spectrum(h)
    return [
        {"label": tr.label, "energy": float(tr.energy)}
        for tr in transition_energies(s)
        if tr.initial != tr.final
    ]


def _nearest_rms(res: SweepResult, h: PauliHamiltonian) -> float | None:
    if not res.minima or h.n > 10:
        return None
    targets = np.array([0.0] + [t["energy"] for t in _transition_set(h)])
    err = [np.min(np.abs(targets - d.center)) for d in res.minima]
    return float(np.sqrt(np.mean(np.square(err))))


def _sweep_payload(res: SweepResult, h: PauliHamiltonian) -> dict[str, Any]:
    out = res.summary()
    if h.n <= 10:
        out["transitions"] = _transition_set(h)
        out["rms_nearest_transition"] = _nearest_rms(res, h)
    return out


# -- commands -------------------------------------------------------------------------


def cmd_sweep(cfg: cfgmod.ExperimentConfig, out: Path, workers: int) -> dict[str, Any]:
    sc = cfg.sweep_config()
    res = run_sweep(sc, workers)
    res.write_csv(out / "sweep.csv")
    write_summary(out / "sweep.json", _sweep_payload(res, sc.hamiltonian))
    return {"files": ["sweep.csv", "sweep.json"], "minima": len(res.minima)}


def _scan_values(sec: dict[str, str]) -> list[float]:
    if "values" in sec:
        vals = cfgmod.parse_floats(sec["values"])
    else:
        vals = cfgmod.grid(sec, "").tolist()
    if not vals:
        raise ConfigError("[scan] needs at least one value")
    return vals


def cmd_scan(cfg: cfgmod.ExperimentConfig, out: Path, workers: int) -> dict[str, Any]:
    sec = cfg.section("scan")
    param = sec.get("parameter", "").strip().lower()
    model_axis = param in cfgmod.MODEL_KEYS[cfg.model_kind]
    if not model_axis and param not in cfgmod.SWEEP_KEYS:
        raise ConfigError(f"scan parameter {param!r} is not a {cfg.model_kind} or sweep parameter")
    values = _scan_values(sec)
    (out / "sweeps").mkdir(exist_ok=True)
    rows, per_value, all_minima = [], [], []
    for k, v in enumerate(values):
        if model_axis:
            h = cfg.hamiltonian(**{param: v})
            sc = cfg.sweep_config(h)
        else:
            kw = dict(cfg.sweep, **{param: int(v) if param in cfgmod._INT_KEYS else v})
            sc = replace(cfg, sweep=kw).sweep_config()
            h = sc.hamiltonian
        res = run_sweep(sc, workers)
        res.write_csv(out / "sweeps" / f"sweep_{k:03d}.csv")
        all_minima.append(res.centers)
        for d in res.minima:
            rows.append((k, v, d.center, d.fwhm, d.depth, "yes" if d.converged else "no"))
        entry = {"index": k, "value": v, "minima": [d.as_dict() for d in res.minima]}
        if h.n <= 10:
            entry["transitions"] = _transition_set(h)
        per_value.append(entry)
    _write_rows(out / "minima.csv", ["index", param, "omega", "fwhm", "depth", "converged"], rows)
    files = ["minima.csv", "scan.json"]
    payload: dict[str, Any] = {"parameter": param, "values": values, "sweeps": per_value}
    if cfgmod.get_bool(sec, "track", False):
        start = cfgmod.eval_number(sec.get("track_start", "0"))
        tr = track_dip(all_minima, start)
        hwhm = []
        for entry, w in zip(per_value, tr.path):
            hw = [m["hwhm"] for m in entry["minima"] if np.isfinite(w) and m["center"] == w]
            hwhm.append(hw[0] if hw else None)
        payload["track"] = {
            "start": start,
            "path": [None if not np.isfinite(w) else float(w) for w in tr.path],
            "gaps": tr.gaps,
            "hwhm": hwhm,
        }
    write_summary(out / "scan.json", payload)
    return {"files": files + [f"sweeps/sweep_{k:03d}.csv" for k in range(len(values))]}


def cmd_phase_map(cfg: cfgmod.ExperimentConfig, out: Path, workers: int) -> dict[str, Any]:
    if cfg.model_kind != "kitaev":
        raise ConfigError("phase-map needs a kitaev model")
    sec = cfg.section("map")
    mode = sec.get("mode", "exact").strip().lower()
    if mode not in ("exact", "spectroscopic", "both"):
        raise ConfigError("[map] mode must be exact, spectroscopic or both")
    ms = cfgmod.grid(sec, "m_", (-2.0, 2.0, 21))
    ys = cfgmod.grid(sec, "y_", (0.2, 1.8, 21))
    x, z = cfg.model.get("x", 0.0), cfg.model.get("z", 0.0)
    mbar = cfg.model.get("mbar")
    L = int(cfg.model.get("l", 2))
    sites = [int(s) for s in cfgmod.parse_floats(sec["sites"])] if "sites" in sec else [L]
    y_fit = None
    if "y_fit_min" in sec or "y_fit_max" in sec:
        y_fit = (cfgmod.eval_number(sec.get("y_fit_min", "-inf")), cfgmod.eval_number(sec.get("y_fit_max", "inf")))
    do_filter = cfgmod.get_bool(sec, "filter", True)
    files: list[str] = []
    summary: dict[str, Any] = {"x": x, "z": z, "mbar": mbar, "sites": sites, "mode": mode}

    def boundary(gm, key):
        try:
            summary.setdefault("boundary", {})[key] = fit_boundary_z(gm, y_range=y_fit).as_dict()
        except Exception as exc:  # a map without a ridge is data, not a failure
            summary.setdefault("boundary", {})[key] = {"error": str(exc)}

    if mode in ("exact", "both"):
        for n in sites:
            gm = gap_map_exact(ms, ys, x, z, n, mbar)
            name = f"map_exact_L{n}.csv"
            gm.write_csv(out / name)
            files.append(name)
            if n == 2:
                boundary(gm, "exact_L2")
        if "cut_y" in sec:
            cut_y = cfgmod.eval_number(sec["cut_y"])
            cut_m = np.linspace(ms[0], ms[-1], int(sec.get("cut_count", "401")))
            summary["closings"] = {
                "y": cut_y,
                "m_range": [float(cut_m[0]), float(cut_m[-1])],
                "points": cut_m.size,
                "by_L": {str(n): closings_along_cut(n, cut_m, cut_y, x, z, mbar) for n in sites},
            }
    if mode in ("spectroscopic", "both"):
        base = cfg.sweep_config(PauliHamiltonian.from_terms(L, []))
        gm = gap_map_spectroscopic(ms, ys, x, z, base, L, workers)
        gm.write_csv(out / "map_spectroscopic.csv")
        files.append("map_spectroscopic.csv")
        summary["missing_cells"] = int(gm.missing.sum())
        if L == 2:
            boundary(gm, "spectroscopic")
        if do_filter:
            fm = symmetrize(gm)
            fm.write_csv(out / "map_filtered.csv")
            _write_rows(
                out / "map_provenance.csv",
                ["m\\y"] + [_fmt(y) for y in ys],
                ([m] + list(row) for m, row in zip(ms, fm.provenance)),
            )
            files += ["map_filtered.csv", "map_provenance.csv"]
            if L == 2:
                boundary(fm, "spectroscopic_filtered")
    summary["m_grid"] = ms.tolist()
    summary["y_grid"] = ys.tolist()
    write_json(out / "phase_map.json", summary)
    files.append("phase_map.json")
    return {"files": files}


def _convergence(h: PauliHamiltonian, c: float, t: float, omega: float, dts: Sequence[float], psi0: StateVector):
    exact = exact_evolve(dense_resonance(h, omega, c), t, psi0)
    report = {}
    for order in (1, 2):
        errs = []
        for dt in dts:
            n, dt_used = steps_for(t, dt)
            prog = resonance_program(h, c, dt_used, n, order)
            errs.append(state_error(prog.run(psi0.amplitudes, omega), exact))
        slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
        report[f"order{order}"] = {"dt": list(dts), "error": errs, "slope": slope}
    return report


def cmd_oracle(cfg: cfgmod.ExperimentConfig, out: Path, workers: int) -> dict[str, Any]:
    sec = cfg.section("oracle")
    kind = sec.get("kind", "two-level").strip().lower()
    if kind != "two-level":
        raise ConfigError("[oracle] kind must be two-level")
    d = cfgmod.eval_number(sec.get("d", "1.0"))
    w_upper = cfgmod.eval_number(sec.get("weight_upper", "1.0"))
    h = PauliHamiltonian.from_terms(1, [(0.5 * d, "Z")])
    psi_sys = np.array([np.sqrt(w_upper), np.sqrt(1.0 - w_upper)], dtype=complex)
    sc = cfg.sweep_config(h)
    psi0 = StateVector.probe_and_system(psi_sys, 1)
    omegas = sc.omegas
    n, dt_used = steps_for(sc.t, sc.dt)
    prog = resonance_program(h, sc.c, dt_used, n, sc.order)
    spec = exact_spectrum(h)
    alpha = spec.states.conj().T @ psi_sys
    rows = []
    max_dev = 0.0
    for w in omegas:
        sim = _z0(prog.run(psi0.amplitudes, w))
        ex = _z0(exact_evolve(dense_resonance(h, w, sc.c), sc.t, psi0).amplitudes)
        model = float(two_level_z0(w, d, sc.c, sc.t, w_upper))
        try:
            pert = perturbative_z0(spec, alpha, sc.c, sc.t, w)
        except PoleProximityError:
            pert = float("nan")
        max_dev = max(max_dev, abs(ex - model))
        rows.append((w, sim, ex, pert, model))
    _write_rows(out / "oracle.csv", ["omega", "sim", "exact", "perturbative", "model"], rows)
    dts = cfgmod.parse_floats(sec.get("dt_values", "0.4, 0.2, 0.1, 0.05"))
    # at omega = d the two-level terms commute on the reachable subspace (no Trotter error)
    conv_omega = cfgmod.eval_number(sec.get("omega", "0"))
    conv = _convergence(h, sc.c if sc.c > 0 else 0.1, sc.t, conv_omega, dts, psi0)
    payload = {"d": d, "c": sc.c, "t": sc.t, "convergence_omega": conv_omega, "max_abs_exact_minus_model": max_dev, "convergence": conv}
    write_summary(out / "oracle.json", payload)
    return {"files": ["oracle.csv", "oracle.json"], "max_abs_exact_minus_model": max_dev}


def _z0(amps: np.ndarray) -> float:
    p = np.abs(amps) ** 2
    return float(p[0::2].sum() - p[1::2].sum())


def cmd_resources(cfg: cfgmod.ExperimentConfig, out: Path, workers: int) -> dict[str, Any]:
    sec = cfg.section("resources")
    if "error_file" not in sec:
        raise ConfigError("[resources] needs error_file")
    ef = Path(sec["error_file"])
    if not ef.is_absolute() and cfg.path is not None:
        ef = cfg.path.parent / ef
    model = GateErrorModel.from_file(ef)
    h = cfg.hamiltonian()
    t = float(cfg.sweep.get("t", 10.0))
    dt = float(cfg.sweep.get("dt", 1.0 / 3.0))
    n_steps = int(sec["n_steps"]) if "n_steps" in sec else steps_for(t, dt)[0]
    dt_used = t / n_steps
    order = int(sec.get("order", cfg.sweep.get("order", 2)))
    m = int(sec.get("precision_qubits", "3"))
    c = float(cfg.sweep.get("c", 0.1))
    reports = [
        scored(count_qpe(h, m, n_steps, order), model),
        scored(count_spectroscopic(h, n_steps, order, "cnot-pair", c, dt_used), model),
        scored(count_spectroscopic(h, n_steps, order, "native-zx", c, dt_used), model),
    ]
    extra = {
        "n_steps": n_steps,
        "order": order,
        "precision_qubits": m,
        "error_model": {k: getattr(model, k) for k in model.__dataclass_fields__},
        "cnot_pair_by_order": {
            str(o): count_spectroscopic(h, n_steps, o, "cnot-pair").two_qubit for o in (1, 2)
        },
    }
    write_reports(out / "resources.json", reports, extra)
    return {"files": ["resources.json"], "scores": [r.score for r in reports]}


COMMANDS = {
    "sweep": cmd_sweep,
    "scan": cmd_scan,
    "phase-map": cmd_phase_map,
    "oracle": cmd_oracle,
    "resources": cmd_resources,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speceig", description="Spectroscopic eigensolver experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI file path or bundled config name")
        p.add_argument("--out", default=".", help="output directory (created if missing)")
        p.add_argument("--seed", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--noise", type=float, help="two-qubit depolarizing probability")
    sub.add_parser("list-configs")
    return parser


def _error(kind: str, exc: BaseException, code: int) -> int:
    json.dump({"error": kind, "type": type(exc).__name__, "message": str(exc)}, sys.stderr)
    sys.stderr.write("\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-configs":
        root = bundled_config("")
        for p in sorted(root.iterdir()):
            print(p.name)
        return EXIT_OK
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = cfgmod.load(_resolve_config(args.config))
        cfg = cfg.with_overrides(seed=args.seed, shots=args.shots, noise=args.noise)
        if args.command in ("sweep", "scan", "oracle"):
            cfg.sweep_config()  # validate before any output is written
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        info = COMMANDS[args.command](cfg, out, args.workers)
    except ConfigError as exc:
        return _error("config", exc, EXIT_CONFIG)
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        return _error("runtime", exc, EXIT_RUNTIME)
    print(json.dumps({"command": args.command, **info}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
