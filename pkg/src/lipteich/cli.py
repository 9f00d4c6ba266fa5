"""Command-line front end: JSON reports with recorded seeds and budgets.

Commands: classify | dl | tdist | pinch | orbit | sandwich | syscheck |
holo-dl.  Reports go to stdout or --out; optional CSV traces via --trace.
Exit codes: 0 success (numeric non-convergence is reported in-band),
2 malformed input, 3 precondition violation.

All numeric output is printed with 9 significant digits so regression
diffs stay stable; identical argv, scene and seed reproduce reports
byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .curves import MCGMatrix, Slope, classify_matrix
from .errors import InputError, PreconditionError
from .holonomy import FuchsianRep, builtin_fixture, dl_lower_bound, load_rep, push_forward_rep
from .metric import dl_estimate, sandwich_check
from .torus_teich import AnalysisConfig, MarkovPoint
from .translation import (
    DEFAULT_PINCH_GRID,
    MinimizeOptions,
    classify_action,
    displacement,
    minimize_displacement,
    orbit_audit,
    pinch_scan,
    systole_inequality_check,
)
from .torus_teich import systole

__all__ = ["Scene", "RunRecord", "load_scene", "run_command", "replay_run_record", "main"]

SCHEMA = "lipteich/report/v1"


@dataclass(frozen=True)
class Scene:
    """Named inputs loaded from a JSON scene file."""

    points: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)
    reps: dict = field(default_factory=dict)
    config: AnalysisConfig = field(default_factory=AnalysisConfig)


def load_scene(path) -> Scene:
    """Load and validate a scene, reporting every failure at once."""
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as exc:
        raise InputError(f"cannot read scene {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"scene {path} is not valid JSON: {exc}") from exc
    failures = []
    points = {}
    for name, entry in (data.get("points") or {}).items():
        try:
            points[name] = MarkovPoint.from_dict(entry)
        except InputError as exc:
            failures.append(f"point {name!r}: {exc}")
    matrices = {}
    for name, entry in (data.get("matrices") or {}).items():
        try:
            if isinstance(entry, str):
                matrices[name] = MCGMatrix.from_string(entry)
            else:
                matrices[name] = MCGMatrix(*(int(v) for v in entry))
        except (InputError, TypeError, ValueError) as exc:
            failures.append(f"matrix {name!r}: {exc}")
    reps = {}
    for name, entry in (data.get("reps") or {}).items():
        try:
            reps[name] = builtin_fixture(entry[8:]) if str(entry).startswith("builtin:") else load_rep(entry)
        except InputError as exc:
            failures.append(f"rep {name!r}: {exc}")
    config = AnalysisConfig()
    try:
        config = AnalysisConfig(**{**config.to_dict(), **(data.get("config") or {})})
    except (InputError, TypeError) as exc:
        failures.append(f"config: {exc}")
    if failures:
        raise InputError("scene validation failed:\n  " + "\n  ".join(failures))
    return Scene(points=points, matrices=matrices, reps=reps, config=config)


@dataclass(frozen=True)
class RunRecord:
    """Everything needed to replay a run byte for byte."""

    command: list
    config: dict
    seed: int
    wall_time_s: float
    outputs: list

    def to_dict(self):
        return {
            "command": list(self.command),
            "config": self.config,
            "seed": self.seed,
            "wall_time_s": self.wall_time_s,
            "outputs": list(self.outputs),
        }


def _round_floats(value, digits=9):
    if isinstance(value, float):
        return float(f"{value:.{digits}g}")
    if isinstance(value, dict):
        return {k: _round_floats(v, digits) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v, digits) for v in value]
    return value


def _parse_point(text: str, scene: Optional[Scene]) -> MarkovPoint:
    if text.startswith("name:"):
        name = text[5:]
        if scene is None or name not in scene.points:
            raise InputError(f"point {name!r} not found in scene")
        return scene.points[name]
    try:
        x, y, z = (float(part) for part in text.split(","))
    except ValueError as exc:
        raise InputError(f"cannot parse point {text!r}; expected 'x,y,z' or 'name:...'") from exc
    return MarkovPoint(x, y, z)


def _parse_matrix(text: str, scene: Optional[Scene]) -> MCGMatrix:
    if text.startswith("name:"):
        name = text[5:]
        if scene is None or name not in scene.matrices:
            raise InputError(f"matrix {name!r} not found in scene")
        return scene.matrices[name]
    return MCGMatrix.from_string(text)


def _load_point_file(path) -> MarkovPoint:
    try:
        with open(path) as handle:
            return MarkovPoint.from_dict(json.load(handle))
    except OSError as exc:
        raise InputError(f"cannot read point file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"point file {path} is not valid JSON: {exc}") from exc


def _resolve_rep(text: str, scene: Optional[Scene]) -> FuchsianRep:
    if text.startswith("name:"):
        name = text[5:]
        if scene is None or name not in scene.reps:
            raise InputError(f"rep {name!r} not found in scene")
        return scene.reps[name]
    if text.startswith("builtin:"):
        return builtin_fixture(text[8:])
    return load_rep(text)


def _write_csv(path, header, rows):
    with open(path, "w") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(f"{v:.9g}" if isinstance(v, float) else str(v) for v in row) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipteich",
        description="Asymmetric Lipschitz metric toolkit for the once-punctured torus",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, matrix=False, point=None, budget=True):
        p.add_argument("--scene", help="JSON scene file with named points/matrices/reps")
        if matrix:
            p.add_argument("--matrix", required=True, help="a,b,c,d or name:<scene entry>")
        if point == "required":
            p.add_argument("--point", required=True, help="x,y,z or name:<scene entry>")
        elif point == "optional":
            p.add_argument("--point", help="x,y,z or name:<scene entry>")
        if budget:
            p.add_argument("--budget", type=int, help="slope budget (max |p|, |q|)")
        p.add_argument("--seed", type=int, default=0, help="seed for multistart jitter")
        p.add_argument("--restarts", type=int, default=8)
        p.add_argument("--out", help="write the JSON report here instead of stdout")
        p.add_argument("--trace", help="write a CSV trace here")
        p.add_argument("--record", help="write a replayable run record here")

    p = sub.add_parser("classify", help="four-type action classification with evidence")
    common(p, matrix=True)

    p = sub.add_parser("dl", help="metric lower bound between two points")
    p.add_argument("--from", dest="from_path", required=True, help="JSON point file")
    p.add_argument("--to", dest="to_path", required=True, help="JSON point file")
    common(p)

    p = sub.add_parser("tdist", help="translation distance estimate")
    common(p, matrix=True)

    p = sub.add_parser("pinch", help="displacement along the pinching family (reducible classes)")
    common(p, matrix=True)
    p.add_argument("--grid", help="comma-separated strictly decreasing epsilons")

    p = sub.add_parser("orbit", help="orbit additivity audit")
    common(p, matrix=True, point="optional")
    p.add_argument("--kmax", type=int, default=4)

    p = sub.add_parser("sandwich", help="lamination-intersection sandwich residuals")
    common(p, matrix=True, point="optional")
    p.add_argument("--mmax", type=int, default=8)
    p.add_argument("--alphas", help="comma-separated slopes like 0/1,1/0,1/1")

    p = sub.add_parser("syscheck", help="systole-Lipschitz inequality check")
    common(p, matrix=True, point="required")

    p = sub.add_parser("holo-dl", help="metric lower bound between two representations")
    p.add_argument("--rep1", required=True, help="fixture path, builtin:<name>, or name:<scene>")
    p.add_argument("--rep2", required=True, help="fixture path, builtin:<name>, or name:<scene>")
    p.add_argument("--push2", help="apply this named automorphism pushforward to rep2")
    p.add_argument("--cap", type=int, default=8, help="max word length")
    common(p)

    return parser


def _config_from_args(args, scene: Optional[Scene]) -> AnalysisConfig:
    config = scene.config if scene is not None else AnalysisConfig()
    if getattr(args, "budget", None):
        config = AnalysisConfig(**{**config.to_dict(), "slope_budget": args.budget})
    return config


def _dispatch(args, scene: Optional[Scene], config: AnalysisConfig):
    """Returns (payload dict, csv (header, rows) or None)."""
    q = config.slope_budget
    if args.command == "classify":
        m = _parse_matrix(args.matrix, scene)
        opts = MinimizeOptions(budget=q, restarts=args.restarts, seed=args.seed)
        report = classify_action(m, opts)
        nt = classify_matrix(m)
        payload = {
            "matrix": m.to_list(),
            "nt_tag": nt.tag,
            "type": report.type,
            "evidence": report.evidence,
        }
        if nt.tag == "Anosov":
            payload["dilatation"] = nt.dilatation
            payload["a_est"] = report.evidence["tdist"]["a_est"]
        return payload, None
    if args.command == "dl":
        x_point = _load_point_file(args.from_path)
        y_point = _load_point_file(args.to_path)
        report = dl_estimate(x_point, y_point, q)
        csv = (("budget", "value"), [(int(b), float(v)) for b, v in report.convergence])
        return {"from": x_point.to_dict(), "to": y_point.to_dict(), **report.to_dict()}, csv
    if args.command == "tdist":
        m = _parse_matrix(args.matrix, scene)
        opts = MinimizeOptions(budget=q, restarts=args.restarts, seed=args.seed)
        report = minimize_displacement(m, opts)
        csv = (("restart", "start_u", "start_v", "value"),
               [(k, u, v, val) for k, (u, v, val) in enumerate(report.restart_values)])
        return {"matrix": m.to_list(), **report.to_dict()}, csv
    if args.command == "pinch":
        m = _parse_matrix(args.matrix, scene)
        grid = DEFAULT_PINCH_GRID
        if args.grid:
            grid = tuple(float(part) for part in args.grid.split(","))
        report = pinch_scan(m, grid, q_max=q)
        csv = (("epsilon", "displacement", "systole"), list(report.samples))
        return {"matrix": m.to_list(), **report.to_dict()}, csv
    if args.command == "orbit":
        m = _parse_matrix(args.matrix, scene)
        if args.point:
            point = _parse_point(args.point, scene)
        else:
            point = minimize_displacement(
                m, MinimizeOptions(budget=q, restarts=args.restarts, seed=args.seed)
            ).argmin_point
        defects = orbit_audit(m, point, k_max=args.kmax, q_max=q)
        payload = {
            "matrix": m.to_list(),
            "point": point.to_dict(),
            "k_max": args.kmax,
            "defects": [[i, j, d] for i, j, d in defects],
            "max_abs_defect": max(abs(d) for _, _, d in defects),
        }
        return payload, (("i", "j", "defect"), defects)
    if args.command == "sandwich":
        m = _parse_matrix(args.matrix, scene)
        point = _parse_point(args.point, scene) if args.point else MarkovPoint(3.0, 3.0, 3.0)
        alphas = None
        if args.alphas:
            alphas = [Slope.from_string(part) for part in args.alphas.split(",")]
        report = sandwich_check(point, m, alphas=alphas, m_max=args.mmax)
        return {"matrix": m.to_list(), "point": point.to_dict(), **report.to_dict()}, None
    if args.command == "syscheck":
        m = _parse_matrix(args.matrix, scene)
        point = _parse_point(args.point, scene)
        holds = systole_inequality_check(point, m, config)
        sys_slope, sys_len = systole(point, config)
        return {
            "matrix": m.to_list(),
            "point": point.to_dict(),
            "holds": holds,
            "systole_slope": str(sys_slope),
            "systole_length": sys_len,
            "displacement": displacement(point, m, q),
        }, None
    if args.command == "holo-dl":
        rep1 = _resolve_rep(args.rep1, scene)
        rep2 = _resolve_rep(args.rep2, scene)
        if args.push2:
            if args.push2 not in rep2.automorphisms:
                raise InputError(
                    f"rep2 has no automorphism {args.push2!r}; available: {sorted(rep2.automorphisms)}"
                )
            rep2 = push_forward_rep(rep2, rep2.automorphisms[args.push2])
        report = dl_lower_bound(rep1, rep2, args.cap)
        csv = (("length", "value"), [(int(n), float(v)) for n, v in report.convergence])
        return {"rep1": rep1.label, "rep2": rep2.label, **report.to_dict()}, csv
    raise InputError(f"unknown command {args.command!r}")


def run_command(argv) -> int:
    """Parse argv, run one command, emit the JSON report; returns exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        scene = load_scene(args.scene) if getattr(args, "scene", None) else None
        config = _config_from_args(args, scene)
        payload, csv = _dispatch(args, scene, config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PreconditionError as exc:
        print(f"precondition violation: {exc}", file=sys.stderr)
        return 3
    report = {
        "schema": SCHEMA,
        "command": args.command,
        "version": __version__,
        "seed": getattr(args, "seed", 0),
        "config": config.to_dict(),
        **payload,
    }
    text = json.dumps(_round_floats(report), indent=2, sort_keys=True) + "\n"
    outputs = []
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
        outputs.append(args.out)
    else:
        sys.stdout.write(text)
        outputs.append("stdout")
    if args.trace and csv is not None:
        _write_csv(args.trace, *csv)
        outputs.append(args.trace)
    if args.record:
        replay_argv = []
        skip = False
        for arg in argv:
            if skip:
                skip = False
                continue
            if arg == "--record":
                skip = True
                continue
            if arg.startswith("--record="):
                continue
            replay_argv.append(arg)
        record = RunRecord(
            command=replay_argv,
            config=config.to_dict(),
            seed=getattr(args, "seed", 0),
            wall_time_s=time.perf_counter() - started,
            outputs=outputs,
        )
        with open(args.record, "w") as handle:
            json.dump(record.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")
    return 0


def replay_run_record(path) -> dict:
    """Re-run a recorded command, returning output name -> bytes."""
    try:
        with open(path) as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read run record {path}: {exc}") from exc
    argv = list(data["command"])
    import io

    outputs = {}
    out_path = None
    if "--out" in argv:
        idx = argv.index("--out")
        out_path = argv[idx + 1]
    buffer = io.StringIO()
    stdout = sys.stdout
    sys.stdout = buffer
    try:
        code = run_command(argv)
    finally:
        sys.stdout = stdout
    if code != 0:
        raise InputError(f"replay exited with code {code}")
    if out_path is None:
        outputs["stdout"] = buffer.getvalue().encode()
    else:
        with open(out_path, "rb") as handle:
            outputs[out_path] = handle.read()
    return outputs


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    return run_command(argv)


if __name__ == "__main__":
    sys.exit(main())
