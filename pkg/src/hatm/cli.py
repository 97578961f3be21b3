"""Command-line front end.

    hatm solve --preset hiv-cd8 -N 5 --out series.json
    hatm hbar-curve -N 10 --t 1 --grid -1.5:0:0.01 --out curve.csv
    hatm residual -N 10 --hbar -0.8 --t-range 0:1 --out residual.csv
    hatm reproduce --out results/

Exit status is 0 on success, 1 for configuration errors and 2 for numerical
failures.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import export
from .engine import MAX_ORDER, solve, telescoping_check
from .model import QuadraticOdeSystem, load_system, preset_system
from .oracle import StepSizeUnderflow, rk_reference

COMMANDS = ("solve", "hbar-curve", "residual", "optimal-hbar", "compare", "telescope",
            "evaluate", "reproduce")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let "-1.5:0:0.01" through as a value rather than an option
        self._negative_number_matcher = re.compile(r"^-\d+$|^-\d*\.\d+$|^-[\d.]+(:-?[\d.]+)+$")

    def error(self, message):
        raise UsageError(message)


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if not lo <= hi:
        raise argparse.ArgumentTypeError(f"t range must be ordered, got {text!r}")
    return lo, hi


def _grid(text: str) -> tuple[float, float, float]:
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"grid must have lo <= hi and step > 0, got {text!r}")
    return lo, hi, step


@dataclass
class RunConfig:
    command: str
    preset: str | None
    model: Path | None
    series: Path | None
    order: int
    hbar: float
    t: float
    t_range: tuple[float, float]
    grid: tuple[float, float, float]
    state: str | None
    rel_tol: float
    abs_tol: float
    out: Path | None

    def validate(self):
        if not 0 <= self.order <= MAX_ORDER:
            raise UsageError(f"N must be in [0, {MAX_ORDER}]")
        if self.preset and self.model:
            raise UsageError("--preset and --model are mutually exclusive")
        if self.command == "evaluate" and self.series is None:
            raise UsageError("evaluate requires --series")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise UsageError("tolerances must be > 0")
        if self.command in ("residual", "optimal-hbar") and not self.t_range[0] < self.t_range[1]:
            raise UsageError("t range must satisfy lo < hi")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hatm", description="Homotopy analysis transform solver and diagnostics.")
    p.add_argument("command", choices=COMMANDS)
    src = p.add_argument_group("model source")
    src.add_argument("--preset", help="built-in model (hiv-cd8)")
    src.add_argument("--model", type=Path, help="JSON model-config document")
    src.add_argument("--series", type=Path, help="series JSON written by 'solve' (evaluate only)")
    p.add_argument("-N", "--order", type=int, default=5)
    p.add_argument("--hbar", type=float, default=diag.DEFAULT_HBAR)
    p.add_argument("--t", type=float, default=1.0, help="fixed time for hbar-curves and evaluate")
    p.add_argument("--t-range", type=_range, default=(0.0, 1.0), metavar="LO:HI")
    p.add_argument("--grid", type=_grid, default=diag.DEFAULT_GRID, metavar="LO:HI:STEP")
    p.add_argument("--state", help="restrict hbar-curve to one state")
    p.add_argument("--rel-tol", type=float, default=1e-10)
    p.add_argument("--abs-tol", type=float, default=1e-12)
    p.add_argument("--out", type=Path)
    return p


def parse_config(argv: list[str] | None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(
        command=ns.command, preset=ns.preset, model=ns.model, series=ns.series, order=ns.order,
        hbar=ns.hbar, t=ns.t, t_range=ns.t_range, grid=ns.grid, state=ns.state,
        rel_tol=ns.rel_tol, abs_tol=ns.abs_tol, out=ns.out,
    )
    cfg.validate()
    return cfg


def _system(cfg: RunConfig) -> QuadraticOdeSystem:
    if cfg.model is not None:
        try:
            text = cfg.model.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read model config: {exc}") from None
        return load_system(text)
    return preset_system(cfg.preset or "hiv-cd8")


def _write(path: Path | None, text: str) -> str:
    if path is None:
        sys.stdout.write(text)
        return "-"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return str(path)


def _with_suffix(path: Path | None, tag: str, ext: str) -> Path | None:
    if path is None:
        return None
    return path.with_name(f"{path.stem}_{tag}{ext}")


def _state_indices(system: QuadraticOdeSystem, state: str | None) -> list[int]:
    if state is None:
        return list(range(system.n))
    if state not in system.names:
        raise UsageError(f"unknown state {state!r}")
    return [system.index(state)]


def _reproduce(cfg: RunConfig, system: QuadraticOdeSystem) -> str:
    out = cfg.out or Path("hatm-results")
    out.mkdir(parents=True, exist_ok=True)
    grid = diag.hbar_grid(*cfg.grid)
    oracle = rk_reference(system, max(1.0, cfg.t_range[1]), cfg.rel_tol, cfg.abs_tol)
    summary = {"hbar": cfg.hbar, "t_fixed": cfg.t, "orders": {}}
    for order in (5, 10):
        series = solve(system, order)
        (out / f"series_N{order}.json").write_text(export.dumps(export.series_to_dict(series)))
        plateaus = {}
        for i, name in enumerate(system.names):
            curve = diag.hbar_curve(series, i, cfg.t, grid)
            (out / f"hbar_curve_N{order}_{name}.csv").write_text(export.curve_csv(curve))
            iv = diag.detect_plateau(curve, order=order)
            plateaus[name] = None if iv is None else [iv.lo, iv.hi]
        res = diag.residual_grid(series, cfg.hbar, np.linspace(*cfg.t_range, 201))
        (out / f"residual_N{order}.csv").write_text(export.residual_csv(res, list(system.names)))
        h_opt = diag.optimal_hbar(series, grid, *cfg.t_range)
        cmp = diag.comparison(series, h_opt, oracle, *cfg.t_range)
        (out / f"compare_N{order}.csv").write_text(export.comparison_csv(cmp, list(system.names)))
        summary["orders"][str(order)] = {
            "plateaus": plateaus,
            "sup_residual": dict(zip(system.names, diag.sup_residual(series, cfg.hbar, *cfg.t_range).tolist())),
            "optimal_hbar": h_opt,
            "max_rel_err_at_optimal": dict(zip(system.names, cmp.max_rel_err.tolist())),
            "telescoping_defect": telescoping_check(series),
        }
    (out / "summary.json").write_text(export.dumps(summary))
    return str(out)


def run(cfg: RunConfig) -> str:
    """Execute one command and return the output location."""
    if cfg.command == "evaluate":
        try:
            series = export.series_from_dict(json.loads(cfg.series.read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise UsageError(f"cannot read series: {exc}") from None
        vals = {name: series.partial_sum(i).eval(cfg.hbar, cfg.t) for i, name in enumerate(series.system.names)}
        return _write(cfg.out, export.dumps({"order": series.order, "hbar": cfg.hbar, "t": cfg.t, "values": vals}))

    system = _system(cfg)
    if cfg.command == "reproduce":
        return _reproduce(cfg, system)

    series = solve(system, cfg.order)
    names = list(system.names)
    if cfg.command == "solve":
        return _write(cfg.out, export.dumps(export.series_to_dict(series)))
    if cfg.command == "telescope":
        doc = {"order": cfg.order, "defect": telescoping_check(series)}
        return _write(cfg.out, export.dumps(doc))
    if cfg.command == "hbar-curve":
        grid = diag.hbar_grid(*cfg.grid)
        idx = _state_indices(system, cfg.state)
        written = []
        for i in idx:
            curve = diag.hbar_curve(series, i, cfg.t, grid)
            path = cfg.out if len(idx) == 1 else _with_suffix(cfg.out, names[i], ".csv")
            written.append(_write(path, export.curve_csv(curve)))
        return written[0] if len(written) == 1 else str(cfg.out.parent if cfg.out else "-")
    if cfg.command == "residual":
        grid = diag.residual_grid(series, cfg.hbar, np.linspace(*cfg.t_range, 201))
        return _write(cfg.out, export.residual_csv(grid, names))
    if cfg.command == "optimal-hbar":
        grid = diag.hbar_grid(*cfg.grid)
        h_opt = diag.optimal_hbar(series, grid, *cfg.t_range)
        doc = {"order": cfg.order, "t_range": list(cfg.t_range), "optimal_hbar": h_opt,
               "objective": diag.residual_objective(series, h_opt, *cfg.t_range)}
        return _write(cfg.out, export.dumps(doc))
    if cfg.command == "compare":
        t_end = cfg.t_range[1] if cfg.t_range[1] > 0 else 1.0
        oracle = rk_reference(system, t_end, cfg.rel_tol, cfg.abs_tol)
        cmp = diag.comparison(series, cfg.hbar, oracle, *cfg.t_range)
        return _write(cfg.out, export.comparison_csv(cmp, names))
    raise UsageError(f"unknown command {cfg.command!r}")


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        where = run(cfg)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StepSizeUnderflow as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    stream = sys.stderr if where == "-" else sys.stdout
    print(f"{cfg.command} N={cfg.order} hbar={cfg.hbar:g} -> {where}", file=stream)
    return 0


if __name__ == "__main__":
    sys.exit(main())
