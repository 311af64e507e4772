"""Command-line front end: ``run``, ``transform``, ``diagonalize`` and ``check``.

Exit codes: 0 when the report passes (stabilized window, transform or check
pass), 2 when the answer is unknown within the budget, 1 on validation,
schema or I/O errors and on failed checks.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

from .codec import pretty
from .constructs import (
    BudgetExceeded,
    DiagTarget,
    InternalInvariant,
    Refused,
    Unknown,
    d_completion_to_q_check,
    d_to_p_check,
    diagonalize,
    omega_ce_family,
    p_to_q_check,
    q_to_d_check,
)
from .engine import characterization_check, limit_report, render_trace, run
from .logic import EntailmentOperator, completion_check, connective_laws_check, entails, sample_laws
from .operators import Approximation, StarOperator, TableOperator, goodify
from .systems import InvalidSpec, SchemaError, SystemSpec, spec_from_json

EXIT_OK, EXIT_FAIL, EXIT_UNKNOWN = 0, 1, 2


@dataclasses.dataclass
class RunConfig:
    spec: Path
    approx: Optional[Path] = None
    goodify: bool = False
    budget: int = 200
    window: int = 10
    fmt: str = "tsv"
    pretty: bool = False
    loop_threshold: int = 32
    atom_cap: Optional[int] = None
    out: Optional[Path] = None

    def __post_init__(self):
        if self.budget < 1:
            raise SchemaError("--budget", "must be at least 1")
        if self.window < 1:
            raise SchemaError("--window", "must be at least 1")

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        return cls(
            Path(ns.spec),
            Path(ns.approx) if getattr(ns, "approx", None) else None,
            getattr(ns, "goodify", False),
            ns.budget,
            ns.window,
            getattr(ns, "format", "tsv"),
            getattr(ns, "pretty", False),
            getattr(ns, "loop_threshold", 32),
            getattr(ns, "atom_cap", None),
            Path(ns.out) if getattr(ns, "out", None) else None,
        )


def _read_json(path: Path, what: str):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(str(path), f"cannot read {what}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}:{exc.lineno}:{exc.colno}", f"invalid JSON: {exc.msg}") from exc


def _with_cap(op, cap: int):
    if isinstance(op, EntailmentOperator):
        return dataclasses.replace(op, atom_cap=cap)
    if isinstance(op, StarOperator):
        return StarOperator(_with_cap(op.base, cap), op.z0)
    return op


def load_spec(cfg: RunConfig) -> SystemSpec:
    spec = spec_from_json(_read_json(cfg.spec, "spec"))
    op = spec.operator
    if cfg.approx is not None:
        op = TableOperator(Approximation.from_json(_read_json(cfg.approx, "approximation")))
    if cfg.goodify:
        if not isinstance(op, TableOperator):
            raise SchemaError("--goodify", "only table operators can be goodified")
        op = TableOperator(goodify(op.approx))
    if cfg.atom_cap is not None:
        op = _with_cap(op, cfg.atom_cap)
    return dataclasses.replace(spec, operator=op)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _write(path: Optional[Path], text: str) -> None:
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------- commands


def cmd_run(cfg: RunConfig) -> int:
    spec = load_spec(cfg)
    trace = run(spec, cfg.budget, window=cfg.window)
    rep = limit_report(trace, spec, cfg.window, cfg.loop_threshold)
    if cfg.fmt == "json":
        print(_dump({"trace": trace.to_json(), "report": rep.to_json()}))
    elif cfg.fmt == "ascii":
        print(render_trace(trace, cfg.pretty), end="")
    else:
        print(trace.to_tsv(cfg.pretty), end="")
    if cfg.out is not None:
        _write(cfg.out / "trace.tsv", trace.to_tsv(cfg.pretty))
        _write(cfg.out / "trace.json", _dump(trace.to_json()))
        _write(cfg.out / "report.json", _dump(rep.to_json()))
    stable = sum(sl.stabilized for sl in rep.slots)
    print(f"# slots stabilized: {stable}/{cfg.window}", file=sys.stderr)
    if rep.loop_warnings:
        print(f"# possible loops at slots {rep.loop_warnings}", file=sys.stderr)
    if rep.stabilized:
        print("# status: stabilized", file=sys.stderr)
        return EXIT_OK
    print(f"# status: UnknownWithinBudget (least unstable slot {rep.least_unstable})", file=sys.stderr)
    return EXIT_UNKNOWN


TRANSFORMS = {"d2p": d_to_p_check, "p2q": p_to_q_check, "q2d": q_to_d_check, "dc2q": d_completion_to_q_check}


def cmd_transform(kind: str, cfg: RunConfig) -> int:
    spec = load_spec(cfg)
    try:
        rep = TRANSFORMS[kind](spec, cfg.budget, cfg.window)
    except Refused as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Unknown as exc:
        print(f"unknown: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    body = rep.to_json()
    emitted = body["details"].pop("emitted", None)
    _write(cfg.out, _dump(emitted) if emitted is not None else "")
    print(_dump(body))
    return {"pass": EXIT_OK, "unknown": EXIT_UNKNOWN}.get(rep.status, EXIT_FAIL)


def load_targets(path: Path) -> list:
    data = _read_json(path, "targets")
    if isinstance(data, dict):
        data = data.get("targets", [])
    if not isinstance(data, list):
        raise SchemaError("targets", "expected a list of targets")
    return [DiagTarget.from_json(t) for t in data]


def cmd_diagonalize(ns: argparse.Namespace) -> int:
    if ns.targets:
        targets = load_targets(Path(ns.targets))
    elif ns.family:
        n, b = (int(v) for v in ns.family.split(","))
        targets = omega_ce_family(n, b, ns.seed)
    else:
        targets = []
    try:
        res = diagonalize(targets, ns.budget, ns.window)
    except BudgetExceeded as exc:
        print(f"BudgetExceeded: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except InternalInvariant as exc:
        print(f"InternalInvariant: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if ns.out:
        _write(Path(ns.out), _dump(res.spec.to_json()))
    rep = res.report
    if ns.format == "json":
        print(_dump({"spec": res.spec.to_json(), "report": rep}))
    else:
        show = pretty if ns.pretty else str
        print("e\tx_e\tA_p(x_e)\tV_e(x_e)\tverdict")
        for row in rep["targets"]:
            ap = "?" if row["A_p"] is None else int(row["A_p"])
            verdict = {True: "diagonalized", False: "FAILED", None: "unknown"}[row["diagonalized"]]
            print(f"{row['e']}\t{show(row['x_e'])}\t{ap}\t{row['V_e']}\t{verdict}")
        for name, ok in rep["checks"].items():
            print(f"# {name}: {'pass' if ok else 'FAIL'}")
    if not rep["checks"]["stabilized"]:
        return EXIT_UNKNOWN
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def cmd_check(ns: argparse.Namespace) -> int:
    if ns.what == "laws":
        samples = sample_laws(ns.samples, ns.seed)
        rep = connective_laws_check(lambda X, x: entails(X, x), samples)
        print(_dump({"samples": rep.samples, "violations": [dataclasses.asdict(v) for v in rep.violations[:20]]}))
        return EXIT_OK if rep.ok else EXIT_FAIL
    if not ns.spec:
        raise SchemaError("--spec", f"required for check {ns.what}")
    cfg = RunConfig.from_args(ns)
    spec = load_spec(cfg)
    trace = run(spec, cfg.budget, window=cfg.window)
    rep = limit_report(trace, spec, cfg.window, cfg.loop_threshold)
    if ns.what == "completion":
        comp = completion_check(rep.member, cfg.window)
        print(_dump(comp.to_json()))
        if comp.unknown:
            return EXIT_UNKNOWN
        return EXIT_OK if comp.passed else EXIT_FAIL
    items = characterization_check(trace, rep, spec)
    print(_dump([dict(dataclasses.asdict(it), status=it.status) for it in items]))
    statuses = {it.status for it in items}
    if "fails" in statuses:
        return EXIT_FAIL
    return EXIT_UNKNOWN if "unknown" in statuses else EXIT_OK


# ---------------------------------------------------------------- parser


def _run_flags(p: argparse.ArgumentParser, spec_required: bool = True) -> None:
    p.add_argument("--spec", required=spec_required, help="system spec JSON")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--approx", help="approximation JSON replacing the operator")
    g.add_argument("--goodify", action="store_true", help="goodify a table approximation")
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--loop-threshold", type=int, default=32, help="stack depth that flags a possible loop")
    p.add_argument("--atom-cap", type=int, default=None, help="atoms per premise component")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dialectical", description="Simulate dialectical, q- and p-dialectical systems.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run the procedure and report the limit window")
    _run_flags(p)
    p.add_argument("--format", choices=("tsv", "ascii", "json"), default="tsv")
    p.add_argument("--pretty", action="store_true", help="print sentences instead of codes")
    p.add_argument("--out", help="directory for trace.tsv, trace.json and report.json")

    p = sub.add_parser("transform", help="convert between system kinds and compare windows")
    p.add_argument("kind", choices=sorted(TRANSFORMS))
    _run_flags(p)
    p.add_argument("--out", help="where to write the emitted spec")

    p = sub.add_parser("diagonalize", help="build a p-system escaping the given targets")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--targets", help="targets JSON (a list, or an object with 'targets')")
    src.add_argument("--family", help="n,b for a seeded omega-c.e. family")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=2000)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--out", help="where to write the emitted spec")

    p = sub.add_parser("check", help="laws, completion or characterization reports")
    p.add_argument("what", choices=("laws", "completion", "characterization"))
    _run_flags(p, spec_required=False)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    return ap


def main(argv: Optional[list] = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.cmd == "run":
            return cmd_run(RunConfig.from_args(ns))
        if ns.cmd == "transform":
            return cmd_transform(ns.kind, RunConfig.from_args(ns))
        if ns.cmd == "diagonalize":
            return cmd_diagonalize(ns)
        return cmd_check(ns)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except InvalidSpec as exc:
        print(f"invalid spec: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
