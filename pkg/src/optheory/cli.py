"""Command-line front end: ``eval``, ``check`` and ``demo``.

Every run produces a report (text or JSON) whose items appear in
declaration order.  Apart from the ``ms`` timing fields the JSON form is a
pure function of the arguments, the input files and the seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, is_dataclass

import numpy as np

import optheory
from optheory.axioms import (
    CERTIFIED,
    FAILS,
    HOLDS,
    IMPOSSIBLE,
    CheckReport,
    CloningVerdict,
    InfeasibilityCertificate,
    PurificationResult,
    check_causality,
    check_no_signalling,
    check_purification_uniqueness,
    check_purity_preservation,
    classical_dilation_search,
    entanglement_existence,
    is_entangled_pure,
    is_pure_state,
    maximally_entangled,
    no_cloning_check,
    purify_state,
)
from optheory.circuit import Circuit, evaluate
from optheory.core import (
    DEFAULT_TOL,
    Effect,
    State,
    SystemRef,
    Test,
    Transformation,
    coarse_grain,
    get_theory,
    marginalize,
    pairing,
)
from optheory.dsl import CheckItem, EvalItem, load, to_text
from optheory.errors import DSLError, GPTError, UnknownDemo
from optheory.theories import THEORY_IDS, make_system, named_state
from optheory.theories.quantum import density_matrix, effect_from_operator, state_from_vector

AXIOM_COMMANDS = ("causality", "purity-preservation", "purification", "no-signalling", "no-cloning", "entanglement")
DEMOS = ("singlet-purification", "classical-impossibility", "no-cloning", "die-coarse-graining")
DEFAULT_DIMS = {"classical": 3, "quantum": 2}
ROUND_TRIP_TOL = 1e-9
MARGINAL_TOL = 1e-12


@dataclass
class RunConfig:
    command: str
    target: str | None = None
    inputs: list = field(default_factory=list)
    theory: str | None = None
    dim: int | None = None
    seed: int = 0
    samples: int = 100
    tolerance: float = DEFAULT_TOL
    max_env: int = 8
    max_partner: int = 8
    format: str = "text"


@dataclass
class Item:
    kind: str
    name: str
    verdict: str | None = None
    distribution: list | None = None
    witness: object = None
    deviation: float | None = None
    ok: bool = True
    ms: float = 0.0


@dataclass
class Report:
    config: RunConfig
    items: list = field(default_factory=list)
    version: str = optheory.__version__

    @property
    def ok(self) -> bool:
        return all(item.ok for item in self.items)


# -- serialization ------------------------------------------------------------------


def _gpt(obj) -> dict:
    try:
        return {"gpt": to_text(obj)}
    except GPTError as exc:
        # wiring that the text form cannot express: list the boxes instead
        if isinstance(obj, Circuit):
            return {"gpt": None, "reason": str(exc), "nodes": [to_text(n.test) for n in obj.nodes]}
        raise


def jsonable(obj):
    """Plain JSON data for results and witnesses; library objects become
    embedded ``.gpt`` text so they can be replayed."""
    if obj is None or isinstance(obj, (bool, str, int)):
        return obj
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.floating):
        return jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
        return [jsonable(x) for x in obj.tolist()] if obj.ndim else jsonable(obj.item())
    if isinstance(obj, (State, Effect, Transformation, Test, Circuit)):
        return _gpt(obj)
    if isinstance(obj, SystemRef):
        return str(obj)
    if isinstance(obj, InfeasibilityCertificate):
        return {
            "margin": obj.margin,
            "validated_margin": obj.validate(),
            "bound": obj.bound,
            "y_eq": jsonable(obj.y_eq),
            "y_ub": jsonable(obj.y_ub),
        }
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if is_dataclass(obj):
        return {k: jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__}
    return str(obj)


def report_dict(report: Report) -> dict:
    items = []
    for item in report.items:
        entry = {"kind": item.kind, "name": item.name}
        if item.distribution is not None:
            entry["distribution"] = item.distribution
        else:
            entry["verdict"] = item.verdict
        if item.witness is not None:
            entry["witness"] = jsonable(item.witness)
        if item.deviation is not None:
            entry["deviation"] = jsonable(item.deviation)
        entry["ok"] = item.ok
        entry["ms"] = round(item.ms, 3)
        items.append(entry)
    return {"version": report.version, "config": jsonable(asdict(report.config)), "items": items}


def _format_distribution(dist: list) -> str:
    return " ".join(f"{','.join(d['outcome'])}:{d['p']:.12g}" for d in dist)


def emit_report(report: Report, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(report_dict(report), indent=2) + "\n"
    c = report.config
    lines = [
        f"# optheory {report.version} command={c.command} target={c.target} theory={c.theory} "
        f"dim={c.dim} seed={c.seed} samples={c.samples} tolerance={c.tolerance!r} "
        f"max_env={c.max_env} max_partner={c.max_partner}"
    ]
    for item in report.items:
        result = _format_distribution(item.distribution) if item.distribution is not None else item.verdict
        dev = "-" if item.deviation is None else f"{item.deviation:.3e}"
        status = "PASS" if item.ok else "FAIL"
        lines.append(f"{status}\t{item.kind}\t{item.name}\t{result}\tdeviation={dev}\tms={item.ms:.1f}")
    return "\n".join(lines) + "\n"


# -- items --------------------------------------------------------------------------


def _timed(fn):
    start = time.perf_counter()
    item = fn()
    item.ms = (time.perf_counter() - start) * 1000.0
    return item


def _distribution(result) -> list:
    dist = result.distribution
    return [{"outcome": list(label), "p": float(p)} for label, p in zip(dist.labels, dist.probs)]


def eval_item(name: str, circuit: Circuit) -> Item:
    result = evaluate(circuit)
    dev = abs(result.distribution.total - 1.0)
    return Item("eval", name, distribution=_distribution(result), deviation=dev, ok=bool(dev <= 1e-9))


def report_item(kind: str, name: str, rep: CheckReport, expect=(HOLDS, CERTIFIED)) -> Item:
    witness = rep.witness
    if rep.details:
        witness = {"details": rep.details, **({"witness": rep.witness} if rep.witness is not None else {})}
    return Item(kind, name, rep.verdict, witness=witness, deviation=rep.deviation, ok=rep.verdict in expect)


def purification_item(kind: str, name: str, theory, state: State, max_env: int, expect=(CERTIFIED,)) -> Item:
    result = purify_state(theory, state, max_env)
    if not result.found:
        witness = {"bound": result.bound, "searched": result.searched, "state": state}
        return Item(kind, name, IMPOSSIBLE, witness=witness, ok=IMPOSSIBLE in expect)
    residual = _round_trip_residual(result, state)
    pure = is_pure_state(theory, result.pure_state).pure
    witness = {"environment": result.environment, "pure_state": result.pure_state, "pure": pure}
    ok = CERTIFIED in expect and pure and residual < ROUND_TRIP_TOL
    return Item(kind, name, CERTIFIED, witness=witness, deviation=residual, ok=ok)


def _round_trip_residual(result: PurificationResult, state: State) -> float:
    joint = result.pure_state
    n = len(state.system.parts)
    marginal = joint if len(joint.system.parts) == n else marginalize(joint, range(n))
    return float(np.max(np.abs(marginal.coords - state.coords)))


def cloning_item(kind: str, name: str, verdict: CloningVerdict, expect_feasible: bool) -> Item:
    if verdict.feasible:
        residual = max(verdict.residuals) if verdict.residuals else 0.0
        witness = {"method": verdict.method, "cloner": verdict.cloner, "residuals": verdict.residuals}
        return Item(kind, name, "cloner_found", witness=witness, deviation=residual, ok=expect_feasible)
    cert = verdict.certificate
    margin = cert.validate()
    witness = {"method": verdict.method, "iterations": verdict.iterations, "certificate": cert}
    ok = (not expect_feasible) and margin > max(1e-8, 10 * DEFAULT_TOL)
    return Item(kind, name, "infeasible", witness=witness, deviation=margin, ok=ok)


# -- standard objects for the check subcommand -------------------------------------


def _system(theory: str, dim: int | None) -> SystemRef:
    if theory == "boxworld":
        return make_system("boxworld")
    return make_system(theory, dim or DEFAULT_DIMS[theory])


def _mixed_state(theory: str, system: SystemRef) -> State:
    if theory == "quantum":
        return named_state("quantum", "maximally_mixed", (), system)
    if theory == "classical":
        return named_state("classical", "uniform", (), system)
    return named_state("boxworld", "gbit_center")


def _quantum_bases(system: SystemRef) -> list[Test]:
    """Computational and Fourier-basis measurements."""
    d = system.rep_dim and int(system.shape)
    fourier = np.exp(2j * np.pi * np.outer(np.arange(d), np.arange(d)) / d) / np.sqrt(d)
    tests = []
    for basis in (np.eye(d), fourier):
        effects = [effect_from_operator(system, np.outer(v, v.conj())) for v in basis.T]
        tests.append(Test(effects))
    return tests


def _polytope_tests(theory: str, system: SystemRef) -> list[Test]:
    model = get_theory(theory)
    return [Test([Effect(system, row) for row in m]) for m in model.measurements(system)]


def _bipartite_state(theory: str, system: SystemRef) -> State:
    if theory == "quantum":
        return maximally_entangled(system)
    if theory == "classical":
        d = int(system.shape)
        joint = SystemRef("classical", (d, d))
        return State(joint, np.eye(d).ravel() / d)
    return named_state("boxworld", "pr_box")


def _cloning_probes(theory: str, system: SystemRef) -> list[State]:
    if theory == "quantum":
        d = int(system.shape)
        zero = np.eye(d)[0]
        plus = (np.eye(d)[0] + np.eye(d)[1]) / np.sqrt(2)
        return [state_from_vector(system, zero), state_from_vector(system, plus)]
    return [State(system, v) for v in get_theory(theory).vertices(system)]


def check_items(axiom: str, theory: str, cfg: RunConfig) -> list[Item]:
    system = _system(theory, cfg.dim)
    name = f"{axiom}:{theory}:{system}"
    if axiom == "causality":
        return [_timed(lambda: report_item("check", name, check_causality(theory, system, cfg.samples, cfg.seed, cfg.tolerance)))]
    if axiom == "purity-preservation":
        return [_timed(lambda: report_item("check", name, check_purity_preservation(theory, cfg.samples, cfg.seed, system)))]
    if axiom == "purification":
        state = _mixed_state(theory, system)
        items = [_timed(lambda: purification_item("check", name, theory, state, cfg.max_env))]
        if items[0].verdict == CERTIFIED:
            items.append(_timed(lambda: _uniqueness_item(theory, state, cfg)))
        return items
    if axiom == "no-signalling":
        state = _bipartite_state(theory, system)
        tests = _quantum_bases(system) if theory == "quantum" else _polytope_tests(theory, state.system.parts[0])
        return [_timed(lambda: report_item("check", name, check_no_signalling(theory, state, tests, tests, cfg.tolerance)))]
    if axiom == "no-cloning":
        probes = _cloning_probes(theory, system)
        return [_timed(lambda: cloning_item("check", name, no_cloning_check(theory, system, probes, tol=cfg.tolerance), False))]
    if axiom == "entanglement":
        return [_timed(lambda: report_item("check", name, entanglement_existence(theory, system, cfg.max_partner)))]
    raise ValueError(f"unknown axiom {axiom!r}")


def _uniqueness_item(theory: str, state: State, cfg: RunConfig) -> Item:
    """Second purification via a reversible map on the environment, then
    recover the connecting map."""
    model = get_theory(theory)
    p1 = purify_state(theory, state, cfg.max_env)
    if p1.environment.is_trivial:
        p2 = p1
    else:
        v = model.reversible_sample(p1.environment, cfg.seed)
        from optheory.core import parallel_compose

        local = parallel_compose(Transformation.identity(p1.system), v)
        p2 = PurificationResult(p1.system, p1.environment, local.apply(p1.pure_state))
    rep = check_purification_uniqueness(theory, p1, p2)
    return report_item("check", f"purification-uniqueness:{theory}", rep)


def dsl_check_item(item: CheckItem, cfg: RunConfig) -> Item:
    target = item.target
    opts = item.options
    name = f"{item.axiom}:{item.target_name}"
    seed = opts.get("seed", cfg.seed)
    if item.axiom == "causality":
        return report_item("check", name, check_causality(target.theory_id, target, opts.get("samples", 50), seed, cfg.tolerance))
    if item.axiom == "purity_preservation":
        rep = check_purity_preservation(target.theory_id, opts.get("samples", cfg.samples), seed, target)
        return report_item("check", name, rep)
    if item.axiom == "purification":
        return purification_item("check", name, target.system.theory_id, target, opts.get("max_env", cfg.max_env))
    if item.axiom == "no_signalling":
        rep = check_no_signalling(target.system.theory_id, target, item.groups[0], item.groups[1], cfg.tolerance)
        return report_item("check", name, rep)
    if item.axiom == "no_cloning":
        verdict = no_cloning_check(target.theory_id, target, item.groups[0], opts.get("blank"), cfg.tolerance)
        return cloning_item("check", name, verdict, False)
    if isinstance(target, SystemRef):
        return report_item("check", name, entanglement_existence(target.theory_id, target, opts.get("max_partner", cfg.max_partner)))
    verdict = is_entangled_pure(target.system.theory_id, target)
    if verdict.entangled:
        return Item("check", name, CERTIFIED, witness=verdict.witness)
    return Item("check", name, FAILS, witness={"factors": list(verdict.witness)}, ok=False)


# -- demos --------------------------------------------------------------------------


def _demo_singlet(cfg: RunConfig) -> list[Item]:
    def marginal():
        singlet = named_state("quantum", "singlet")
        rho = density_matrix(marginalize(singlet, 0))
        probs = np.real(np.diag(rho))
        dev = float(np.max(np.abs(probs - 0.5)) + np.max(np.abs(rho - np.eye(2) / 2)))
        dist = [{"outcome": [str(k)], "p": float(p)} for k, p in enumerate(probs)]
        return Item("demo", "singlet-marginal", distribution=dist, deviation=dev, ok=dev < MARGINAL_TOL)

    mm = named_state("quantum", "maximally_mixed", (2,))

    def uniqueness():
        p1 = purify_state("quantum", mm)
        singlet = named_state("quantum", "singlet")
        p2 = PurificationResult(p1.system, p1.environment, singlet)
        return report_item("demo", "singlet-vs-constructed-purification", check_purification_uniqueness("quantum", p1, p2))

    return [
        _timed(marginal),
        _timed(lambda: purification_item("demo", "purify-maximally-mixed", "quantum", mm, cfg.max_env)),
        _timed(uniqueness),
    ]


def _demo_classical(cfg: RunConfig) -> list[Item]:
    coin = np.full((2, 2), 0.5)
    uniform = named_state("classical", "uniform", (2,))
    return [
        _timed(lambda: purification_item("demo", "purify-uniform-bit", "classical", uniform, cfg.max_env, (IMPOSSIBLE,))),
        _timed(lambda: report_item("demo", "fair-coin-pure-environment", classical_dilation_search(coin, cfg.max_env), (IMPOSSIBLE,))),
        _timed(lambda: _mixed_env_item(coin, cfg.max_env)),
    ]


def _mixed_env_item(coin, max_env: int) -> Item:
    item = report_item("demo", "fair-coin-mixed-environment", classical_dilation_search(coin, max_env, mixed_env=True))
    witness = item.witness.get("witness", {}) if isinstance(item.witness, dict) else {}
    item.deviation = witness.get("residual")
    item.ok = item.ok and witness.get("env_size") == 2 and item.deviation is not None and item.deviation <= 1e-12
    return item


def _demo_cloning(cfg: RunConfig) -> list[Item]:
    trit = make_system("classical", 3)
    qubit = make_system("quantum", 2)
    masses = [named_state("classical", "point_mass", (k, 3)) for k in range(3)]
    probes = [named_state("quantum", "computational", (0,)), named_state("quantum", "plus_state")]

    def classical():
        item = cloning_item("demo", "classical-trit-point-masses", no_cloning_check("classical", trit, masses), True)
        item.ok = item.ok and item.deviation == 0.0
        return item

    return [
        _timed(classical),
        _timed(lambda: cloning_item("demo", "quantum-zero-plus", no_cloning_check("quantum", qubit, probes), False)),
    ]


def _demo_die(cfg: RunConfig) -> list[Item]:
    die = make_system("classical", 6)
    faces = Test([Effect(die, row) for row in np.eye(6)], labels=[str(k) for k in range(1, 7)])
    uniform = named_state("classical", "uniform", (6,))

    def roll():
        from optheory.circuit import chain

        result = evaluate(chain(uniform, faces))
        dev = float(np.max(np.abs(result.distribution.probs - 1 / 6)))
        return Item("demo", "fair-die", distribution=_distribution(result), deviation=dev, ok=dev < 1e-12)

    def odd():
        effect = coarse_grain([faces.branches[k] for k in (0, 2, 4)])
        p = pairing(effect.as_effect(), uniform)
        dist = [{"outcome": ["odd"], "p": p}]
        return Item("demo", "odd-coarse-graining", distribution=dist, deviation=abs(p - 0.5), ok=abs(p - 0.5) < 1e-12)

    return [_timed(roll), _timed(odd)]


_DEMO_FUNCS = {
    "singlet-purification": _demo_singlet,
    "classical-impossibility": _demo_classical,
    "no-cloning": _demo_cloning,
    "die-coarse-graining": _demo_die,
}


def demo(name: str, cfg: RunConfig | None = None) -> Report:
    if name not in _DEMO_FUNCS:
        raise UnknownDemo(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    cfg = cfg or RunConfig("demo", name)
    return Report(cfg, _DEMO_FUNCS[name](cfg))


# -- entry points -------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=100)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--max-env", type=int, default=8)
    common.add_argument("--max-partner", type=int, default=8)
    common.add_argument("--format", choices=("text", "json"), default="text")
    parser = argparse.ArgumentParser(prog="optheory", description="Circuits and axiom checks for operational theories.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_eval = sub.add_parser("eval", parents=[common], help="evaluate the eval and check statements of .gpt files")
    p_eval.add_argument("files", nargs="+")
    p_check = sub.add_parser("check", parents=[common], help="run an axiom checker")
    p_check.add_argument("axiom", choices=AXIOM_COMMANDS)
    p_check.add_argument("--theory", required=True, choices=THEORY_IDS)
    p_check.add_argument("--dim", type=int)
    p_demo = sub.add_parser("demo", parents=[common], help="run a worked example")
    p_demo.add_argument("name")
    return parser


def run(argv=None, out=None, err=None) -> int:
    """Run the CLI; returns the exit code (0 pass, 1 fail, 2 usage or input error)."""
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = RunConfig(
        command=args.command,
        seed=args.seed,
        samples=args.samples,
        tolerance=args.tol,
        max_env=args.max_env,
        max_partner=args.max_partner,
        format=args.format,
    )
    if args.seed < 0 or args.seed >= 2**64 or args.samples < 1 or args.max_env < 1 or args.max_partner < 1:
        err.write("optheory: seed must be a 64-bit unsigned integer; samples and bounds must be positive\n")
        return 2
    try:
        if args.command == "eval":
            cfg.inputs = list(args.files)
            report = Report(cfg)
            for path in args.files:
                try:
                    with open(path, encoding="utf-8") as fh:
                        text = fh.read()
                    program = load(text)
                except OSError as exc:
                    err.write(f"{path}: cannot read: {exc.strerror or exc}\n")
                    return 2
                except UnicodeDecodeError:
                    err.write(f"{path}: not UTF-8 text\n")
                    return 2
                except DSLError as exc:
                    for e in exc.errors:
                        err.write(f"{path}:{e}\n")
                    return 2
                for item in program.items:
                    report.items.append(_timed(lambda item=item: _program_item(item, cfg)))
        elif args.command == "check":
            cfg.target, cfg.theory = args.axiom, args.theory
            cfg.dim = None if args.theory == "boxworld" else (args.dim or DEFAULT_DIMS[args.theory])
            if cfg.dim is not None and cfg.dim < 2:
                err.write("optheory: --dim must be at least 2\n")
                return 2
            report = Report(cfg, check_items(args.axiom, args.theory, cfg))
        else:
            cfg.target = args.name
            report = demo(args.name, cfg)
    except UnknownDemo as exc:
        err.write(f"optheory: {exc.args[0]}\n")
        return 2
    out.write(emit_report(report, cfg.format))
    return 0 if report.ok else 1


def _program_item(item, cfg: RunConfig) -> Item:
    if isinstance(item, EvalItem):
        return eval_item(item.name, item.circuit)
    try:
        return dsl_check_item(item, cfg)
    except GPTError as exc:
        return Item("check", f"{item.axiom}:{item.target_name}", "error", witness={"error": str(exc)}, ok=False)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
