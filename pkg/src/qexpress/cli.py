"""Command-line experiment runner.

Subcommands: opsize, fourier, ts, haar-check, repro. Every subcommand accepts
``--config FILE`` with flat ``key = value`` lines whose keys are the long flag
names (``measure-qubit = 0``); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from qexpress.circuits import CNOT_POSITIONS, CircuitTemplate, build_circuit, paper_circuit_2q, paper_circuit_3q
from qexpress.fourier import DEFAULT_GRID, FREQ_PAIRS, coefficient_cloud
from qexpress.haar import averaged_operator_size, child_rng, max_operator_size, sample_haar_unitary
from qexpress.learn import TrainConfig, ts_experiment

log = logging.getLogger("qexpress")

DEFAULT_SEED = 20221014

# (dest, type, default, help) shared by all subcommands
COMMON = [
    ("circuit", str, "2q", "circuit family: 2q, 3q or toy"),
    ("circuit_file", str, None, "JSON circuit description (overrides --circuit)"),
    ("layers", int, 1, "number of layers (sweeps 1..N where applicable)"),
    ("measure_qubit", int, None, "measured qubit (2q/toy only)"),
    ("cnot_position", str, "after_rot", "CNOT placement in 2q layers: after_rot or before_rot"),
    ("seed", int, DEFAULT_SEED, "master RNG seed"),
    ("out", str, None, "output path"),
    ("threads", int, 1, "worker threads"),
]
SPECIFIC = {
    "opsize": [
        ("samples", int, 2000, "Haar samples per layer"),
        ("restarts", int, 10, "Nelder-Mead restarts for the maximum size (0 skips it)"),
    ],
    "fourier": [
        ("draws", int, 1000, "random angle draws"),
        ("grid", int, DEFAULT_GRID, "DFT grid size per axis"),
        ("method", str, "dft", "coefficient extractor: dft or matrix"),
    ],
    "ts": [
        ("replicates", int, 20, "teacher labellings per layer"),
        ("points", int, 500, "dataset size"),
        ("teacher_layers", int, 1, "teacher layer count"),
        ("epochs", int, 300, "maximum training epochs"),
        ("lr", float, 0.1, "learning rate"),
        ("tol", float, 1e-6, "loss-improvement convergence threshold"),
        ("optimizer", str, "adam", "adam or sgd"),
    ],
    "haar-check": [
        ("samples", int, 10000, "unitaries per dimension"),
        ("dims", str, "2,4", "comma-separated dimensions"),
    ],
    "repro": [],
}
POSITIVE = {"layers", "samples", "draws", "grid", "replicates", "points", "teacher_layers", "epochs", "threads"}


class UsageError(ValueError):
    pass


def read_config(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def format_config(values: dict) -> str:
    lines = []
    for key in sorted(values):
        if key in ("command", "config", "dump_config", "verbose") or values[key] is None:
            continue
        lines.append(f"{key.replace('_', '-')} = {values[key]}")
    return "\n".join(lines) + "\n"


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="qexpress", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers = {}
    for name, extra in SPECIFIC.items():
        p = subparsers[name] = sub.add_parser(name)
        p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--dump-config", help="write the effective configuration to this file")
        for dest, typ, default, help_ in COMMON + extra:
            p.add_argument("--" + dest.replace("_", "-"), dest=dest, type=typ, default=default, help=help_)
    return parser, subparsers


def parse_args(argv=None) -> argparse.Namespace:
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = subparsers[args.command]
        types = {dest: typ for dest, typ, _, _ in COMMON + SPECIFIC[args.command]}
        types["verbose"] = bool
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        except UsageError as exc:
            parser.error(str(exc))
        defaults = {}
        for key, value in cfg.items():
            if key not in types:
                parser.error(f"unknown config key {key!r} in {args.config}")
            try:
                if types[key] is bool:
                    defaults[key] = value.lower() in ("1", "true", "yes")
                else:
                    defaults[key] = types[key](value)
            except ValueError:
                parser.error(f"bad value for {key!r} in {args.config}: {value!r}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    for key in POSITIVE:
        val = getattr(args, key, None)
        if val is not None and val < 1:
            parser.error(f"--{key.replace('_', '-')} must be positive, got {val}")
    if getattr(args, "restarts", 0) < 0:
        parser.error("--restarts must be >= 0")
    if args.circuit not in ("2q", "3q", "toy"):
        parser.error(f"invalid circuit {args.circuit!r}; choose 2q, 3q or toy")
    if args.cnot_position not in CNOT_POSITIONS:
        parser.error(f"invalid --cnot-position {args.cnot_position!r}")
    return args


def _template(args, layers: int) -> CircuitTemplate:
    if args.circuit_file:
        return CircuitTemplate.from_json(Path(args.circuit_file).read_text())
    return build_circuit(args.circuit, layers, args.cnot_position, args.measure_qubit)


def _write(path: str | None, text: str) -> None:
    if path is None:
        return
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc.strerror or exc}") from exc
    log.info("wrote %s", p)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_opsize(args) -> dict:
    layers = [1] if args.circuit_file else list(range(1, args.layers + 1))
    rows = []
    for n in layers:
        t = _template(args, n)
        t0 = time.perf_counter()
        est = averaged_operator_size(t, n_samples=args.samples, seed=args.seed, workers=args.threads)
        row = {"layers": n, "n_rot": t.n_rot, "n_params": t.n_params, **est.to_dict()}
        if args.restarts:
            row["max_size"], angles = max_operator_size(t, restarts=args.restarts, seed=args.seed)
            row["max_angles"] = [float(a) for a in angles]
        rows.append(row)
        log.info("opsize %s layer %d: mean %.4f std %.4f (%.1fs)", args.circuit, n, est.mean, est.std_dev,
                 time.perf_counter() - t0)
    result = {"circuit": args.circuit_file or args.circuit, "cnot_position": args.cnot_position,
              "seed": args.seed, "results": rows}
    _write(args.out, _dumps(result))
    return result


def cmd_fourier(args) -> dict:
    t = _template(args, args.layers)
    cloud = coefficient_cloud(t, args.draws, seed=args.seed, grid_size=args.grid, method=args.method,
                              workers=args.threads)
    _write(args.out, cloud.to_csv())
    summary = {f"{n1},{n2}": stats for (n1, n2), stats in cloud.summary.items()}
    return {"circuit": args.circuit_file or args.circuit, "n_rot": t.n_rot, "n_entanglers": t.n_entanglers,
            "measure_qubit": t.measure_qubit, "draws": args.draws,
            "seed": args.seed, "summary": summary}


def _side_path(out: str, suffix: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + suffix))


def cmd_ts(args) -> dict:
    cfg = TrainConfig(learning_rate=args.lr, max_epochs=args.epochs, convergence_tol=args.tol,
                      optimizer=args.optimizer, init_seed=args.seed)
    directions = {
        "2q_teacher_3q_student": (lambda n: paper_circuit_2q(n), lambda n: paper_circuit_3q(n)),
        "3q_teacher_2q_student": (lambda n: paper_circuit_3q(n), lambda n: paper_circuit_2q(n)),
    }
    out = {"seed": args.seed, "teacher_layers": args.teacher_layers, "replicates": args.replicates,
           "points": args.points, "train": vars(cfg), "runs": {}}
    for name, (mk_teacher, mk_student) in directions.items():
        runs = []
        for n in range(1, args.layers + 1):
            t0 = time.perf_counter()
            res = ts_experiment(mk_teacher(args.teacher_layers), mk_student(n), args.replicates, args.points,
                                cfg, seed=args.seed, workers=args.threads)
            log.info("ts %s student layers %d: mean dy %.4f (%.1fs)", name, n, res.mean_delta_y,
                     time.perf_counter() - t0)
            runs.append({"student_layers": n, **res.to_dict()})
            if args.out:
                _write(_side_path(args.out, f".{name}.L{n}.maps.csv"), res.maps_csv())
        out["runs"][name] = runs
    _write(args.out, _dumps(out))
    return {name: [{"student_layers": r["student_layers"], "mean_delta_y": r["mean_delta_y"],
                    "std_delta_y": r["std_delta_y"]} for r in runs] for name, runs in out["runs"].items()}


def haar_report(dim: int, n_samples: int, seed: int) -> dict:
    sq = np.zeros((dim, dim))
    trace = 0j
    resid = 0.0
    for i in range(n_samples):
        u = sample_haar_unitary(dim, child_rng(seed, i))
        sq += np.abs(u) ** 2
        trace += np.trace(u) / dim
        resid = max(resid, float(np.max(np.abs(u @ u.conj().T - np.eye(dim)))))
    sq /= n_samples
    return {
        "dim": dim,
        "n_samples": n_samples,
        "mean_abs_u00_sq": float(sq[0, 0]),
        "max_moment_deviation": float(np.max(np.abs(sq - 1 / dim))),
        "mean_normalised_trace_abs": float(abs(trace / n_samples)),
        "unitarity_residual_max": resid,
    }


def cmd_haar_check(args) -> dict:
    dims = [int(d) for d in str(args.dims).split(",") if d.strip()]
    report = {"seed": args.seed, "dims": [haar_report(d, args.samples, args.seed) for d in dims]}
    _write(args.out, _dumps(report))
    return report


def cmd_repro(args) -> dict:
    """Desk-scale data for the operator-size, coefficient and teacher/student figures."""
    outdir = Path(args.out or "repro_out")
    base = dict(circuit_file=None, measure_qubit=None, cnot_position="after_rot", seed=args.seed,
                threads=args.threads)
    ns = argparse.Namespace
    summary = {}
    for circ, pos in (("2q", "after_rot"), ("2q", "before_rot"), ("3q", "after_rot")):
        a = ns(**{**base, "circuit": circ, "cnot_position": pos, "layers": 4, "samples": 2000, "restarts": 5,
                  "out": str(outdir / f"opsize_{circ}_{pos}.json")})
        summary[f"opsize_{circ}_{pos}"] = [r["mean"] for r in cmd_opsize(a)["results"]]
    for label, circ, layers, mq in (("2q_L1", "2q", 1, None), ("3q_L1", "3q", 1, None), ("3q_L2", "3q", 2, None),
                                    ("toy_q0", "toy", 2, 0), ("toy_q1", "toy", 2, 1)):
        a = ns(**{**base, "circuit": circ, "layers": layers, "measure_qubit": mq, "draws": 1000,
                  "grid": DEFAULT_GRID, "method": "dft", "out": str(outdir / f"fourier_{label}.csv")})
        cmd_fourier(a)
        summary[f"fourier_{label}"] = str(outdir / f"fourier_{label}.csv")
    a = ns(**{**base, "circuit": "2q", "layers": 4, "replicates": 20, "points": 500, "teacher_layers": 1,
              "epochs": 300, "lr": 0.1, "tol": 1e-6, "optimizer": "adam", "out": str(outdir / "ts.json")})
    summary["ts"] = cmd_ts(a)
    a = ns(**{**base, "circuit": "2q", "layers": 1, "samples": 10000, "dims": "2,4",
              "out": str(outdir / "haar_check.json")})
    summary["haar_check"] = [d["max_moment_deviation"] for d in cmd_haar_check(a)["dims"]]
    return summary


COMMANDS = {"opsize": cmd_opsize, "fourier": cmd_fourier, "ts": cmd_ts, "haar-check": cmd_haar_check,
            "repro": cmd_repro}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(message)s")
    if args.dump_config:
        _write(args.dump_config, format_config(vars(args)))
    try:
        result = COMMANDS[args.command](args)
    except OSError as exc:
        print(f"qexpress: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"qexpress: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(_dumps(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
