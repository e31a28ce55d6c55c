"""Command-line entry point.

Exit codes: 0 controllable or success, 2 not controllable (or not at rest
for ``verify``), 1 usage, parse or numerical errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import algebraic
from .constraintmap import (
    DEFAULT_RANK_TOL,
    DEFAULT_VERDICT_TOL,
    assemble,
    observability_report,
    synthesize,
)
from .errors import DelayMemError, GridMismatch
from .examples import HeatDemoParams, heat_semidiscretize, library
from .model import SystemSpec, compatible_steps, load_spec, make_grid, save_spec
from .simulator import (
    CONDITIONS,
    condition_residuals,
    continuation,
    control_to_csv,
    history_nodes,
    read_control_csv,
    simulate,
    trajectory_to_csv,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONTROLLABLE = 2

REST_TOL = 1e-5


@dataclass
class RunConfig:
    steps: int = 400
    rank_tol: float = DEFAULT_RANK_TOL
    verdict_tol: float = DEFAULT_VERDICT_TOL
    out: Path | None = None
    seed: int = 0
    drop: tuple[str, ...] = ()
    horizon: float = 1.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("--grid must be at least 2")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dump_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text)


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _load(path) -> SystemSpec:
    return load_spec(Path(path).read_text())


def _grid(spec, steps):
    N = compatible_steps(spec, steps)
    if N != steps:
        print(f"warning: --grid {steps} adjusted to {N} so that h is a multiple of T/N", file=sys.stderr)
    grid = make_grid(spec, N)
    rho = float(np.max(np.abs(np.linalg.eigvals(spec.A + spec.A1)))) if spec.n else 0.0
    if rho * grid.dt > 2.0:
        print(f"warning: dt*|lambda_max| = {rho * grid.dt:.3g} exceeds the explicit stability limit; "
              "increase --grid", file=sys.stderr)
    return grid


def _phi_inf(spec, grid) -> float:
    return float(np.max(np.abs(history_nodes(spec, grid))))


def _tolerances(cfg: RunConfig) -> dict:
    return {"rank_tol": cfg.rank_tol, "verdict_tol": cfg.verdict_tol}


def algebraic_tests(spec) -> dict:
    """Every rank test that applies to ``spec``, keyed by method name."""
    out = {}
    no_memory = spec.kernel.is_zero and spec.target_kernel.is_zero
    if spec.h == 0:
        if no_memory:
            out[algebraic.KALMAN] = algebraic.kalman_rank(spec.A + spec.A1, spec.B).to_dict()
        if spec.kernel.is_separable and spec.target_kernel.is_separable:
            try:
                out[algebraic.AUGMENTED_KALMAN] = algebraic.augmented_kalman(spec).to_dict()
            except algebraic.TargetKernelIncompatible as exc:
                out[algebraic.AUGMENTED_KALMAN] = {"error": str(exc)}
    elif no_memory:
        _, verdict = algebraic.delay_defining_matrices(spec.A, spec.A1, spec.B, spec.h, spec.T)
        out[algebraic.DELAY_DEFINING] = verdict.to_dict()
    return out


def cmd_check(args, cfg: RunConfig) -> int:
    spec = _load(args.config)
    grid = _grid(spec, cfg.steps)
    cm = assemble(spec, grid)
    rep = observability_report(cm, cfg.rank_tol)
    syn = synthesize(cm, cfg.rank_tol, cfg.verdict_tol)
    doc = syn.to_dict()
    doc.update({
        "controllable": rep.controllable,
        "history_controllable": syn.controllable,
        "sigma_min": rep.sigma_min,
        "sigma_max": rep.sigma_max,
        "rank": rep.rank,
        "observability_constant": rep.observability_constant,
        "gramian": rep.to_dict(),
        "algebraic": algebraic_tests(spec),
        "tolerances": _tolerances(cfg),
        "timestamp": _timestamp(),
    })
    _emit(dump_json(doc), cfg.out)
    return EXIT_OK if rep.controllable else EXIT_NOT_CONTROLLABLE


def cmd_synthesize(args, cfg: RunConfig) -> int:
    spec = _load(args.config)
    grid = _grid(spec, cfg.steps)
    syn = synthesize(assemble(spec, grid), cfg.rank_tol, cfg.verdict_tol, drop=cfg.drop)
    _emit(control_to_csv(syn.control), cfg.out)
    doc = syn.to_dict()
    doc["timestamp"] = _timestamp()
    if args.report is not None:
        Path(args.report).write_text(dump_json(doc))
    elif cfg.out is not None:
        sys.stdout.write(dump_json(doc) + "\n")
    return EXIT_OK if syn.controllable else EXIT_NOT_CONTROLLABLE


def _control_for(spec, args, cfg: RunConfig):
    """Grid and control from ``--control`` (or ``None`` control) honoring ``--grid``."""
    if args.control is None:
        return _grid(spec, cfg.steps), None
    u = read_control_csv(Path(args.control).read_text())
    if cfg.extra.get("grid_given"):
        grid = _grid(spec, cfg.steps)
    else:
        grid = make_grid(spec, int(round(spec.T / u.dt)))
    if not math.isclose(u.dt, grid.dt, rel_tol=1e-9):
        raise GridMismatch(f"control dt={u.dt} does not match T/N={grid.dt}")
    return grid, u


def cmd_simulate(args, cfg: RunConfig) -> int:
    spec = _load(args.config)
    grid, u = _control_for(spec, args, cfg)
    extend_to = spec.T + args.extend if args.extend else None
    traj = simulate(spec, grid, u, extend_to=extend_to)
    _emit(trajectory_to_csv(traj), cfg.out)
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    spec = _load(args.config)
    if args.control is not None:
        grid, u = _control_for(spec, args, cfg)
        dropped = []
    else:
        grid = _grid(spec, cfg.steps)
        u = synthesize(assemble(spec, grid), cfg.rank_tol, cfg.verdict_tol, drop=cfg.drop).control
        dropped = list(cfg.drop)
    window = cfg.horizon * (spec.h if spec.h > 0 else max(spec.h, spec.T / 10))
    cont = continuation(spec, grid, u, window)
    traj = cont["trajectory"]
    ra, rb, rc = condition_residuals(traj, spec, grid)
    phi = _phi_inf(spec, grid)
    res_ok = max(ra, rb, rc) <= cfg.verdict_tol * max(1.0, phi)
    rest_ok = cont["rest_max"] <= REST_TOL * phi
    doc = {
        "residual_a": ra,
        "residual_b": rb,
        "residual_c": rc,
        "rest_max": cont["rest_max"],
        "memory_drift": cont["memory_drift"],
        "rest_window": [spec.T, spec.T + window],
        "phi_inf": phi,
        "residuals_ok": res_ok,
        "at_rest": rest_ok,
        "dropped": dropped,
        "grid": {"dt": grid.dt, "N": grid.n_horizon},
        "tolerances": {**_tolerances(cfg), "rest_tol": REST_TOL},
        "timestamp": _timestamp(),
    }
    _emit(dump_json(doc), cfg.out)
    return EXIT_OK if res_ok and rest_ok else EXIT_NOT_CONTROLLABLE


def cmd_crossval(args, cfg: RunConfig) -> int:
    k = args.instances
    xcfg = algebraic.CrossValConfig(
        crafted_controllable=math.ceil(0.4 * k),
        crafted_uncontrollable=math.ceil(0.4 * k),
        random=k,
        separable=k,
        delay=math.ceil(0.6 * k),
        seed=cfg.seed,
        rank_tol=cfg.rank_tol,
    )
    report = algebraic.cross_validate(xcfg)
    report["timestamp"] = _timestamp()
    _emit(dump_json(report), cfg.out)
    return EXIT_OK if report["n_disagreements"] == 0 else EXIT_NOT_CONTROLLABLE


def cmd_demo_heat(args, cfg: RunConfig) -> int:
    params = HeatDemoParams(nodes=args.nodes, length=args.length, gamma=args.gamma,
                            omega=tuple(args.omega), delay_gain=args.delay_gain, h=args.h, T=args.T)
    _emit(save_spec(heat_semidiscretize(params)), cfg.out)
    return EXIT_OK


def cmd_library(args, cfg: RunConfig) -> int:
    lib = library()
    if args.name is None:
        for e in lib.values():
            verdict = "controllable" if e.controllable else "not controllable"
            sys.stdout.write(f"{e.name}\t{verdict}\t[{e.provenance}] {e.oracle}\n")
        return EXIT_OK
    if args.name not in lib:
        raise DelayMemError(f"unknown library entry {args.name!r}; choose from {', '.join(lib)}")
    _emit(save_spec(lib[args.name].spec), cfg.out)
    return EXIT_OK


def _drops(values) -> tuple[str, ...]:
    out = set()
    for v in values or []:
        for part in v.split(","):
            part = part.strip()
            if part not in CONDITIONS:
                raise argparse.ArgumentTypeError(f"unknown condition {part!r} (use a, b or c)")
            out.add(part)
    return tuple(sorted(out))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delaymem", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True, grid=True):
        if config:
            sp.add_argument("config", help="system config (JSON)")
        if grid:
            sp.add_argument("--grid", type=int, default=None, metavar="N", help="steps on [0, T] (default 400)")
        sp.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
        sp.add_argument("--verdict-tol", type=float, default=DEFAULT_VERDICT_TOL)
        sp.add_argument("--out", type=Path, default=None)

    sp = sub.add_parser("check", help="decide controllability and write a JSON report")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("synthesize", help="minimum-energy control as CSV")
    common(sp)
    sp.add_argument("--drop", action="append", default=[], metavar="a|b|c")
    sp.add_argument("--report", type=Path, default=None, help="where to write the JSON report")
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("simulate", help="trajectory CSV")
    common(sp)
    sp.add_argument("--control", type=Path, default=None)
    sp.add_argument("--extend", type=float, default=0.0, metavar="DELTA")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="residuals at T and the rest test after T")
    common(sp)
    sp.add_argument("--control", type=Path, default=None)
    sp.add_argument("--horizon", type=float, default=1.0, metavar="K",
                    help="rest window is (T, T + K*h], or K*T/10 without delay")
    sp.add_argument("--drop-condition", "--drop", dest="drop", action="append", default=[], metavar="a|b|c")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("crossval", help="algebraic tests against the Gramian oracle")
    common(sp, config=False, grid=False)
    sp.add_argument("--instances", type=int, default=50)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_crossval)

    sp = sub.add_parser("demo-heat", help="write the semidiscretized heat config")
    common(sp, config=False, grid=False)
    sp.add_argument("--nodes", type=int, default=10)
    sp.add_argument("--length", type=float, default=1.0)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--omega", type=float, nargs=2, default=(0.3, 0.7), metavar=("A", "B"))
    sp.add_argument("--delay-gain", type=float, default=0.0)
    sp.add_argument("--h", type=float, default=0.0)
    sp.add_argument("--T", type=float, default=1.0)
    sp.set_defaults(func=cmd_demo_heat)

    sp = sub.add_parser("library", help="list library instances or export one as a config")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--out", type=Path, default=None)
    sp.set_defaults(func=cmd_library)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        grid = getattr(args, "grid", None)
        cfg = RunConfig(
            steps=grid if grid is not None else 400,
            rank_tol=getattr(args, "rank_tol", DEFAULT_RANK_TOL),
            verdict_tol=getattr(args, "verdict_tol", DEFAULT_VERDICT_TOL),
            out=getattr(args, "out", None),
            seed=getattr(args, "seed", 0),
            drop=_drops(getattr(args, "drop", [])),
            horizon=getattr(args, "horizon", 1.0),
            extra={"grid_given": grid is not None},
        )
        return args.func(args, cfg)
    except (DelayMemError, ValueError, OSError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
