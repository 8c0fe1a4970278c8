"""Command-line front end.

    operon run --suite <name|all> --dims 2x2 --seed 42 --trials N --out report.json \
               --format json|text|csv [--stable-output]
    operon inspect <path>
    operon apply <operation.json> <state.json> [--out post.json]

Exit codes: 0 success, 1 invariant or validation failure, 2 usage/parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import serialize
from .entanglement import SEPARABLE_TOL, entanglement_entropy, ppt_min_eigen, von_neumann_entropy
from .operations import update_state
from .lab import EXPERIMENTS, ExperimentReport, default_threads, run_experiment
from .algebra import center_and_factor
from .numerics import dagger, partial_trace, partial_transpose, schmidt_decompose
from .states import InvalidStateError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
MAX_SEED = 2**64 - 1


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    suite: list[str] = field(default_factory=lambda: ["all"])
    dims: tuple[int, int] = (2, 2)
    seed: int = 42
    trials: int | None = None
    out: str | None = None
    format: str = "json"
    stable_output: bool = False
    threads: int | None = None

    def __post_init__(self):
        names = []
        for entry in self.suite:
            names.extend(s for s in entry.split(",") if s)
        if not names:
            raise UsageError("empty suite selection")
        if "all" in names:
            names = list(EXPERIMENTS)
        unknown = [n for n in names if n not in EXPERIMENTS]
        if unknown:
            raise UsageError(f"unknown experiment(s): {', '.join(unknown)}; choose from {', '.join(EXPERIMENTS)} or all")
        self.suite = list(dict.fromkeys(names))
        if not 0 <= self.seed <= MAX_SEED:
            raise UsageError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.trials is not None and self.trials < 1:
            raise UsageError("trials must be positive")
        if self.format not in ("json", "text", "csv"):
            raise UsageError(f"unknown format {self.format!r}")
        if any(d < 1 for d in self.dims):
            raise UsageError(f"invalid dims {self.dims}")


def parse_dims(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must look like 2x3, got {text!r}") from None


def render(reports: list[ExperimentReport], cfg: RunConfig) -> str:
    if cfg.format == "json":
        payload = {
            "schema_version": 1,
            "config": {
                "suite": cfg.suite,
                "dims": list(cfg.dims),
                "seed": cfg.seed,
                "trials": cfg.trials,
            },
            "reports": [r.to_dict(stable=cfg.stable_output) for r in reports],
        }
        return serialize.dumps(payload) + "\n"
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "status", "kind", "name", "value"])
        for r in reports:
            for kind, table in (("check", r.checks), ("control", r.controls), ("residual", r.residuals), ("count", r.counts)):
                for k in sorted(table):
                    w.writerow([r.name, r.status, kind, k, repr(table[k])])
            if not cfg.stable_output:
                w.writerow([r.name, r.status, "timing", "wall_clock_s", repr(r.wall_clock_s)])
        return buf.getvalue()
    lines = []
    for r in reports:
        lines.append(f"== {r.name}  [{r.status.upper()}]  dims={r.dims[0]}x{r.dims[1]} seed={r.seed} trials={r.trials}")
        rows = [("check", k, "ok" if v else "FAIL") for k, v in sorted(r.checks.items())]
        rows += [("control", k, "ok" if v else "FAIL") for k, v in sorted(r.controls.items())]
        rows += [("residual", k, f"{v:.3e}") for k, v in sorted(r.residuals.items())]
        rows += [("count", k, str(v)) for k, v in sorted(r.counts.items())]
        if rows:
            w1 = max(len(a) for a, _, _ in rows)
            w2 = max(len(b) for _, b, _ in rows)
            for a, b, c in rows:
                lines.append(f"  {a:<{w1}}  {b:<{w2}}  {c}")
        for note in r.notes:
            lines.append(f"  note: {note}")
        if not cfg.stable_output and r.wall_clock_s is not None:
            lines.append(f"  wall_clock_s: {r.wall_clock_s:.3f}")
    return "\n".join(lines) + "\n"


def cmd_run(cfg: RunConfig) -> int:
    reports = [run_experiment(n, cfg.seed, cfg.dims, cfg.trials, cfg.threads) for n in cfg.suite]
    text = render(reports, cfg)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


# inspect


class _Printer:
    def __init__(self, out):
        self.out = out
        self.failed = False

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.failed |= not ok
        self.out.write(f"[{'ok' if ok else 'FAIL'}] {name}{': ' + detail if detail else ''}\n")

    def info(self, name: str, value) -> None:
        self.out.write(f"  {name}: {value}\n")


def _fmt(values) -> str:
    return "[" + ", ".join(f"{v:.12g}" for v in values) + "]"


def _inspect_square(p: _Printer, m: np.ndarray, dims) -> None:
    herm = float(np.linalg.norm(m - dagger(m)))
    p.check("hermitian", herm <= 1e-10, f"||M - M*||_F = {herm:.3e}")
    if herm > 1e-10:
        return
    w = np.linalg.eigvalsh(0.5 * (m + dagger(m)))
    p.info("eigenvalues", _fmt(w))
    p.check("positive", w[0] >= -1e-10, f"min eigenvalue {w[0]:.3e}")
    tr = float(np.trace(m).real)
    p.check("unit trace", abs(tr - 1) <= 1e-10, f"trace {tr:.12g}")
    if dims is None or w[0] < -1e-10:
        return
    rank = int(np.sum(w > 1e-8 * max(w[-1], 1e-300)))
    p.info("rank", rank)
    if rank == 1:
        x = np.linalg.eigh(m)[1][:, -1]
        _inspect_vector(p, x, dims)
    else:
        rA = partial_trace(m, dims, "A")
        p.info("reduced entropy A (nats)", f"{von_neumann_entropy(rA / np.trace(rA).real):.12f}")
        p.info("ppt min eigenvalue", f"{ppt_min_eigen(m / tr, dims).value:.12g}")


def _inspect_vector(p: _Printer, x: np.ndarray, dims) -> None:
    sd = schmidt_decompose(x, dims)
    p.info("schmidt coefficients", _fmt(sd.coefficients / np.linalg.norm(sd.coefficients)))
    p.info("schmidt rank", sd.rank)
    p.info("entanglement entropy (nats)", f"{entanglement_entropy(x, dims):.12f}")


def _inspect(obj, p: _Printer) -> None:
    if not isinstance(obj, dict):
        raise serialize.SchemaError("", "expected a JSON object")
    if "verdict" in obj:
        kind = obj["verdict"]
        p.info("kind", f"verdict ({kind})")
        if kind not in ("separable", "entangled", "inconclusive"):
            raise serialize.SchemaError("verdict", f"unknown verdict {kind!r}")
        state = serialize.state_from_json(obj["state"], "state") if obj.get("state") else None
        if kind == "separable":
            if not obj.get("certificate"):
                p.check("certificate present", False)
                return
            cert = serialize.certificate_from_json(obj["certificate"], "certificate")
            p.info("terms", len(cert))
            p.check("certificate factors are densities", cert.factors_valid())
            if state is not None:
                res = cert.residual(state.density)
                p.check("certificate reconstructs state", res <= SEPARABLE_TOL, f"residual {res:.3e}")
        elif kind == "entangled":
            wit = obj.get("witness") or {}
            value = wit.get("value")
            p.check("witness negative", isinstance(value, (int, float)) and value < -1e-9, f"value {value}")
            if state is not None and state.dims is not None and "vector" in wit:
                v = serialize.matrix_from_json(wit["vector"], "witness.vector")[:, 0]
                val = float(np.vdot(v, partial_transpose(state.density, state.dims) @ v).real / np.vdot(v, v).real)
                p.check("witness recomputes", abs(val - value) <= 1e-8, f"<v|rho^T_B|v> = {val:.12g}")
        return
    if "kraus" in obj:
        ops = serialize.kraus_list_from_json(obj)
        p.info("kind", f"operation ({len(ops)} Kraus operators)")
        eff = sum(dagger(k) @ k for k in ops)
        w = np.linalg.eigvalsh(0.5 * (eff + dagger(eff)))
        p.info("spectrum of sum K*K", _fmt(w))
        p.check("Kraus bound 0 <= sum K*K <= I", w[0] >= -1e-10 and w[-1] <= 1 + 1e-10)
        p.info("classification", "nonselective" if np.linalg.norm(eff - np.eye(len(eff))) <= 1e-9 else "selective")
        return
    if "generators" in obj:
        R = serialize.algebra_from_json(obj)
        p.info("kind", "algebra")
        p.info("dimension", R.dim)
        res = R.closure_residuals()
        p.check("closed", max(res.values()) <= 1e-9, ", ".join(f"{k} {v:.1e}" for k, v in res.items()))
        p.info("factor", center_and_factor(R).is_factor)
        p.info("abelian", R.is_abelian)
        return
    m = serialize.matrix_from_json(obj)
    dims = None
    if "dims" in obj:
        dims = serialize._dims_from_json(obj["dims"], "dims")
        if dims[0] * dims[1] != m.shape[0]:
            raise serialize.SchemaError("dims", f"{dims} inconsistent with {m.shape[0]} rows")
    if m.shape[1] == 1:
        p.info("kind", f"vector (dim {m.shape[0]})")
        nrm = float(np.linalg.norm(m))
        p.check("nonzero", nrm > 0, f"norm {nrm:.12g}")
        if dims is not None and nrm > 0:
            _inspect_vector(p, m[:, 0], dims)
        return
    if m.shape[0] != m.shape[1]:
        p.info("kind", f"matrix {m.shape[0]}x{m.shape[1]}")
        s = np.linalg.svd(m, compute_uv=False)
        p.info("singular values", _fmt(s))
        return
    p.info("kind", "state" if obj.get("kind") == "state" else f"square matrix {m.shape[0]}x{m.shape[0]}")
    _inspect_square(p, m, dims)


def cmd_inspect(path: str, out=None) -> int:
    out = out or sys.stdout
    try:
        obj = serialize.load_file(path)
    except OSError as exc:
        sys.stderr.write(f"error: cannot read {path}: {exc.strerror}\n")
        return EXIT_USAGE
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"error: {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}\n")
        return EXIT_USAGE
    except serialize.SchemaError as exc:
        sys.stderr.write(f"error: {path}: {exc}\n")
        return EXIT_USAGE
    p = _Printer(out)
    try:
        _inspect(obj, p)
    except serialize.SchemaError as exc:
        sys.stderr.write(f"error: {path}: field {exc}\n")
        return EXIT_USAGE
    except (InvalidStateError, ValueError) as exc:
        p.check("valid", False, str(exc))
    return EXIT_FAIL if p.failed else EXIT_OK


def _load(path: str, reader):
    """Parse ``path`` with ``reader``; report parse/schema problems on stderr."""
    try:
        return reader(serialize.load_file(path))
    except OSError as exc:
        sys.stderr.write(f"error: cannot read {path}: {exc.strerror}\n")
    except json.JSONDecodeError as exc:
        sys.stderr.write(f"error: {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}\n")
    except serialize.SchemaError as exc:
        sys.stderr.write(f"error: {path}: field {exc}\n")
    except (InvalidStateError, ValueError) as exc:
        sys.stderr.write(f"error: {path}: {exc}\n")
    return None


def cmd_apply(operation_path: str, state_path: str, out_path: str | None = None, out=None) -> int:
    """Update a state from file by an operation from file and write the result.

    The output is a state JSON with an extra ``probability`` field holding
    ``rho(T(I))``. A null outcome writes ``{"kind": "null", "probability": p}``
    and exits 1.
    """
    T = _load(operation_path, serialize.operation_from_json)
    state = _load(state_path, serialize.state_from_json)
    if T is None or state is None:
        return EXIT_USAGE
    if T.ambient_dim != state.ambient_dim:
        sys.stderr.write(f"error: operation on C^{T.ambient_dim} vs state on C^{state.ambient_dim}\n")
        return EXIT_USAGE
    outcome = update_state(T, state)
    if outcome.state is None:
        payload = {"kind": "null", "probability": float(outcome.acceptance_probability)}
    else:
        payload = serialize.state_to_json(outcome.state)
        payload["probability"] = float(outcome.acceptance_probability)
    text = serialize.dumps(payload) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        (out or sys.stdout).write(text)
    return EXIT_FAIL if outcome.state is None else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="operon", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run experiment suites")
    run.add_argument("--suite", action="append", default=None, help="experiment name, comma list, or 'all'")
    run.add_argument("--dims", type=parse_dims, default=(2, 2))
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--trials", type=int, default=None)
    run.add_argument("--out", default=None)
    run.add_argument("--format", choices=["json", "text", "csv"], default="json")
    run.add_argument("--stable-output", action="store_true", help="omit wall-clock fields")
    run.add_argument("--threads", type=int, default=None, help="defaults to $OPERON_THREADS or the CPU count")
    ins = sub.add_parser("inspect", help="validate and summarise a JSON file")
    ins.add_argument("path")
    app = sub.add_parser("apply", help="apply an operation file to a state file")
    app.add_argument("operation")
    app.add_argument("state")
    app.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "inspect":
        return cmd_inspect(args.path)
    if args.command == "apply":
        return cmd_apply(args.operation, args.state, args.out)
    try:
        cfg = RunConfig(
            suite=args.suite or ["all"],
            dims=args.dims,
            seed=args.seed,
            trials=args.trials,
            out=args.out,
            format=args.format,
            stable_output=args.stable_output,
            threads=args.threads if args.threads is not None else default_threads(),
        )
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    return cmd_run(cfg)


if __name__ == "__main__":
    sys.exit(main())
