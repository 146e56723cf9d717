"""``aderu run|convergence|compare <config>``.

Exit status 0 on success, 2 for configuration problems and 3 when the
solver fails; failures print exactly one line to standard error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunSpec, load_config
from .driver import RunResult, SolutionField, convergence_study, error_norms, run
from .errors import AderError, ConfigurationError

EXIT_CONFIG = 2
EXIT_RUNTIME = 3
DEFAULT_OUTPUT = "aderu-out"
COMPARE_TOL = 1e-12


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_rows(path: Path, header, rows) -> None:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def write_snapshot(path: Path, result: RunResult, field_: SolutionField) -> None:
    """Cell midpoints and cell means (primitive variables for Euler)."""
    values = result.system.to_output(field_.means())
    rows = [(x, *vals) for x, vals in zip(result.mesh.centers, values)]
    _write_rows(path, ("x",) + tuple(result.system.output_names), rows)


def _out_dir(spec: RunSpec, override) -> Path:
    out = Path(override or spec.output or DEFAULT_OUTPUT)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _final_errors(result: RunResult):
    exact = result.problem.exact
    if exact is None:
        return None
    sys_ = result.system
    return error_norms(
        result.field, result.mesh, lambda x, t: exact(x, t, sys_), result.field.time, result.config.M + 2
    )


def cmd_run(spec: RunSpec, out: Path, quiet: bool) -> int:
    if len(spec.meshes) != 1:
        raise ConfigurationError("run needs a single mesh size ([run] n_cells)")
    result = run(spec.config, spec.problem, spec.n_cells)
    write_snapshot(out / "initial.csv", result, result.initial)
    write_snapshot(out / "final.csv", result, result.field)
    for snap in result.snapshots:
        write_snapshot(out / f"snapshot_{snap.step:06d}.csv", result, snap)
    summary = result.summary()
    errs = _final_errors(result)
    summary["errors"] = None if errs is None else dict(zip(("l1", "l2", "linf"), errs))
    (out / "diagnostics.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not quiet:
        print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


CONVERGENCE_HEADER = ("h", "l1", "l2", "linf", "order_l1", "order_l2", "order_linf")


def cmd_convergence(spec: RunSpec, out: Path, quiet: bool) -> int:
    rows = convergence_study(spec.config, spec.problem, spec.meshes)
    table = [tuple(getattr(r, k) for k in CONVERGENCE_HEADER) for r in rows]
    _write_rows(out / "convergence.csv", CONVERGENCE_HEADER, table)
    if not quiet:
        print("".join(f"{k:>12}" for k in CONVERGENCE_HEADER))
        for row in table:
            print("".join(f"{v:>12.4e}" if k in ("h", "l1", "l2", "linf") else f"{v:>12.3f}"
                          for k, v in zip(CONVERGENCE_HEADER, row)))
    return 0


COMPARE_HEADER = ("variant", "l1", "l2", "linf", "work_units", "predictor_iterations", "wall_time")


def cmd_compare(spec: RunSpec, out: Path, quiet: bool) -> int:
    """Classic predictor at tolerance ``1e-12`` against the adaptive one, same mesh and problem."""
    variants = {
        "classic": replace(spec.config, variant="classic", tol=COMPARE_TOL),
        "adaptive": replace(spec.config, variant="adaptive"),
    }
    rows = {}
    for name, cfg in variants.items():
        result = run(cfg, spec.problem, spec.n_cells)
        s = result.summary()
        errs = _final_errors(result) or (math.nan,) * 3
        rows[name] = (*errs, s["work_units"], s["predictor_iterations"], s["wall_time"])

    def ratio(a, b):
        return a / b if b else math.nan

    rows["ratio"] = tuple(ratio(a, c) for a, c in zip(rows["adaptive"], rows["classic"]))
    _write_rows(out / "compare.csv", COMPARE_HEADER, [(k, *v) for k, v in rows.items()])
    if not quiet:
        for k, v in rows.items():
            print(f"{k:>9}  " + "  ".join(f"{name}={_fmt(x)}" for name, x in zip(COMPARE_HEADER[1:], v)))
    return 0


COMMANDS = {"run": cmd_run, "convergence": cmd_convergence, "compare": cmd_compare}


class _OneLineParser(argparse.ArgumentParser):
    def error(self, message):
        print(f"aderu: usage error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _OneLineParser(prog="aderu", description="1D ADER schemes with degree-adaptive predictors")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", help="INI configuration file")
    p.add_argument("--threads", type=int, default=None, help="predictor threads (overrides the config)")
    p.add_argument("--output", default=None, help="output directory (overrides [run] output)")
    p.add_argument("--quiet", action="store_true", help="no report on standard output")
    return p


def _fail(code: int, kind: str, exc: BaseException) -> int:
    message = " ".join(str(exc).split()) or type(exc).__name__
    print(f"aderu: {kind} error: {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = load_config(args.config)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigurationError(f"--threads must be >= 1, got {args.threads}")
            spec = replace(spec, config=replace(spec.config, threads=args.threads))
        out = _out_dir(spec, args.output)
    except ConfigurationError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except OSError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    try:
        return COMMANDS[args.command](spec, out, args.quiet)
    except ConfigurationError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except (AderError, ArithmeticError, OSError) as exc:
        return _fail(EXIT_RUNTIME, "runtime", exc)


if __name__ == "__main__":
    sys.exit(main())
