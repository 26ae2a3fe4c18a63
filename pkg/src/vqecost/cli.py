"""Command-line front end.

Every subcommand writes one JSON document (stdout, or ``-o PATH``) that
echoes the run configuration.  Exit codes: 0 success, 2 input error,
3 precondition or allocation error, 4 numerical-consistency error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .encode import QubitHamiltonian, active_space_restriction, jordan_wigner, load_fcidump
from .errors import (
    InputError,
    NumericalConsistencyError,
    PreconditionError,
    UnsupportedPlanError,
    VqeCostError,
)
from .estimator import (
    DEFAULT_EPSILON,
    CovarianceModel,
    VarianceModel,
    allocate_shots,
    compute_k,
    measurement_count,
)
from .grouping import make_plan
from .oracle import MAX_QUBITS, Statevector, ground_state, sample_plan
from .rdmc import optimize_shift, standard_constraints
from .scaling import fit_power_law, load_coefficients, load_points, table2_pipeline

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3, 4


@dataclass
class RunConfig:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    method: str | None = None
    variance: str | None = None
    covariance: str | None = None
    state_source: str | None = None
    epsilon: float | None = None
    rdmc: bool = False
    rdmc_factor: float | None = None
    seed: int | None = None
    shots: int | None = None
    output: str | None = None


def _method(name: str) -> str:
    return name.replace("-", "_")


def _integrals(args):
    mi = load_fcidump(args.fcidump)
    if args.freeze_core or args.active is not None:
        n_active = args.active
        if n_active is None:
            n_active = mi.n_spatial_orbitals - args.freeze_core
        mi = active_space_restriction(mi, args.freeze_core, n_active)
    return mi


def _state(args, h: QubitHamiltonian):
    if args.state_file:
        state = Statevector.load(args.state_file)
        if state.n_qubits != h.n_qubits:
            raise InputError(
                f"state has {state.n_qubits} qubits, Hamiltonian {h.n_qubits}"
            )
        return state, f"file:{args.state_file}"
    if args.ground_state:
        if h.n_qubits > MAX_QUBITS:
            raise PreconditionError(
                f"ground state limited to {MAX_QUBITS} qubits; use --variance upper"
            )
        _, state = ground_state(h, h.n_electrons, h.two_m_s)
        return state, "ground_state"
    return None, None


def _models(args, h):
    state, source = _state(args, h)
    needs_state = args.variance == "state" or args.covariance == "state"
    if needs_state and state is None:
        raise InputError("state-based models need --ground-state or --state-file")
    vm = VarianceModel("from_state", state) if args.variance == "state" else VarianceModel()
    cm = CovarianceModel("from_state", state) if args.covariance == "state" else CovarianceModel()
    return vm, cm, state, source


def _plan(args, h):
    method = _method(args.method)
    integrals = None
    if method == "basis_rotation":
        if not args.fcidump:
            raise InputError("basis-rotation grouping needs --fcidump with the integrals")
        integrals = _integrals(args)
    return make_plan(h, method, integrals=integrals)


def _sector_constraints(h: QubitHamiltonian):
    if h.n_electrons is None:
        raise InputError("constraint shifts need n_electrons in the Hamiltonian JSON")
    return standard_constraints(h.n_qubits, h.n_electrons, h.two_m_s or 0)


def cmd_encode(args) -> tuple[dict, RunConfig]:
    mi = _integrals(args)
    h = jordan_wigner(mi)
    cfg = RunConfig("encode", {"fcidump": args.fcidump}, output=args.output)
    cfg.inputs.update(freeze_core=args.freeze_core, active=args.active)
    return h.to_dict(), cfg


def _config(args, name) -> RunConfig:
    return RunConfig(
        name,
        {"hamiltonian": args.hamiltonian, "fcidump": getattr(args, "fcidump", None)},
        method=_method(args.method),
        variance=getattr(args, "variance", None),
        covariance=getattr(args, "covariance", None),
        epsilon=getattr(args, "epsilon", None),
        rdmc=bool(getattr(args, "rdmc", False)),
        rdmc_factor=getattr(args, "rdmc_factor", None),
        seed=getattr(args, "seed", None),
        shots=getattr(args, "shots", None),
        output=args.output,
    )


def _shift(args, h, vm, cm):
    if _method(args.method) == "basis_rotation":
        raise UnsupportedPlanError("constraint shifts are not available for basis-rotation plans")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = optimize_shift(
            h, _sector_constraints(h), _method(args.method), vm, cm, args.budget
        )
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return result


def cmd_k(args) -> tuple[dict, RunConfig]:
    h = QubitHamiltonian.load(args.hamiltonian)
    vm, cm, _, source = _models(args, h)
    cfg = _config(args, "k")
    cfg.state_source = source
    report: dict = {}
    if args.rdmc:
        shift = _shift(args, h, vm, cm)
        report["rdmc"] = shift.to_dict()
        h = shift.shifted
    ke = compute_k(h, _plan(args, h), vm, cm)
    report.update(ke.to_dict())
    report["n_groups"] = len(ke.group_masses)
    report["M"] = measurement_count(ke.k, args.epsilon, args.rdmc_factor)
    return report, cfg


def cmd_rdmc(args) -> tuple[dict, RunConfig]:
    h = QubitHamiltonian.load(args.hamiltonian)
    vm, cm, _, source = _models(args, h)
    cfg = _config(args, "rdmc")
    cfg.rdmc, cfg.state_source = True, source
    shift = _shift(args, h, vm, cm)
    report = shift.to_dict()
    if args.save_shifted:
        shift.shifted.save(args.save_shifted)
        report["shifted_hamiltonian"] = args.save_shifted
    return report, cfg


def cmd_simulate(args) -> tuple[dict, RunConfig]:
    if _method(args.method) == "basis_rotation":
        raise UnsupportedPlanError("sampling is implemented for single-qubit-basis plans only")
    h = QubitHamiltonian.load(args.hamiltonian)
    if not args.state_file:
        args.ground_state = True
    state, source = _state(args, h)
    cfg = _config(args, "simulate")
    cfg.state_source = source
    plan = _plan(args, h)
    model = VarianceModel("from_state", state)
    ke = compute_k(h, plan, model, CovarianceModel("from_state", state))
    shots = allocate_shots(ke, args.shots)
    report = sample_plan(h, plan, state, shots, args.seed).to_dict()
    report["K"] = ke.k
    return report, cfg


def cmd_fit(args) -> tuple[dict, RunConfig]:
    fit = fit_power_law(load_points(args.points))
    return fit.to_dict(), RunConfig("fit", {"points": args.points}, output=args.output)


def cmd_table2(args) -> tuple[dict, RunConfig]:
    rows = load_coefficients(args.coefficients)
    estimates = table2_pipeline(rows, args.epsilon, args.rdmc_factor)
    cfg = RunConfig(
        "table2",
        {"coefficients": args.coefficients or "bundled"},
        epsilon=args.epsilon,
        rdmc_factor=args.rdmc_factor,
        output=args.output,
    )
    return {"rows": [e.to_dict() for e in estimates]}, cfg


def _add_plan_flags(p, with_models=True):
    p.add_argument("hamiltonian", help="qubit Hamiltonian JSON")
    p.add_argument(
        "--method",
        choices=["none", "qwc", "anticommuting", "basis-rotation"],
        default="qwc",
    )
    p.add_argument("--fcidump", help="integrals file, needed for basis-rotation plans")
    p.add_argument("--freeze-core", type=int, default=0, help="with --fcidump")
    p.add_argument("--active", type=int, default=None, help="with --fcidump")
    state = p.add_mutually_exclusive_group()
    state.add_argument("--ground-state", action="store_true", help="use the exact sector ground state")
    state.add_argument("--state-file", help="statevector in .npy format")
    if with_models:
        p.add_argument("--variance", choices=["upper", "state"], default="upper")
        p.add_argument("--covariance", choices=["zero", "state"], default="zero")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqecost", description="Measurement-cost estimates for grouped Pauli Hamiltonians."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="FCIDUMP to qubit Hamiltonian JSON")
    p.add_argument("fcidump")
    p.add_argument("--freeze-core", type=int, default=0)
    p.add_argument("--active", type=int, default=None)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("k", help="measurement constant K of a grouping plan")
    _add_plan_flags(p)
    p.add_argument("--rdmc", action="store_true", help="optimise a constraint shift first")
    p.add_argument("--budget", type=int, default=20000, help="optimizer K evaluations")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--rdmc-factor", type=float, default=1.0)
    p.set_defaults(func=cmd_k)

    p = sub.add_parser("rdmc", help="optimise a constraint shift")
    _add_plan_flags(p)
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--save-shifted", help="write the shifted Hamiltonian JSON here")
    p.set_defaults(func=cmd_rdmc)

    p = sub.add_parser("simulate", help="sample a plan on a state")
    _add_plan_flags(p, with_models=False)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="power-law fit of K against qubit count")
    p.add_argument("points", help="CSV with columns n_qubits,k")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("table2", help="runtime estimates from fit coefficients")
    p.add_argument("coefficients", nargs="?", help="CSV molecule,n_el,a,b (default: bundled)")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--rdmc-factor", type=float, default=2.0)
    p.set_defaults(func=cmd_table2)

    for action in sub.choices.values():
        action.add_argument("-o", "--output", help="write JSON here instead of stdout")
    return parser


def _exit_code(exc: VqeCostError) -> int:
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    if isinstance(exc, NumericalConsistencyError):
        return EXIT_NUMERICAL
    return EXIT_INPUT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result, cfg = args.func(args)
    except VqeCostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    doc = {"config": asdict(cfg), **result}
    text = json.dumps(doc, indent=1)
    if args.output:
        try:
            Path(args.output).write_text(text + "\n")
        except OSError as exc:
            print(f"error: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
            return EXIT_INPUT
    else:
        print(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
