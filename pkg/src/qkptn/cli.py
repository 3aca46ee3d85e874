"""Command-line frontend: reproducible experiment runs with file artifacts.

Every subcommand writes a manifest echoing the resolved configuration, and
every output file carries the root seed plus a hash of that configuration
(as a comment line in CSVs, as extra top-level keys in JSONs). Exit codes:
0 success, 1 usage or input error, 2 numerical-validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import plotting
from .annealsim import (
    SaParams,
    Schedule,
    build_schedule,
    classical_sa,
    dense_hamiltonian,
    evolve,
)
from .automata import annealing_mpo
from .dmrg import DmrgParams, GapScanResult, dmrg_ground, gap_scan
from .encoding import (
    QkpInstance,
    SpinConvention,
    decode_spins,
    qkp_to_qubo,
    qubo_to_ising,
)
from .errors import QkptnError
from .mps import DENSE_CAP, Mps, canonicalize, FORM_RIGHT, mps_to_dense, mpo_to_dense
from .solvers import SolveReport, brute_force, compare, dp_solve, gen_instance, make_report


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _resolved(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _write_manifest(out_dir: Path, subcommand: str, cfg: dict, seed: int) -> str:
    out_dir.mkdir(parents=True, exist_ok=True)
    h = _config_hash(cfg)
    doc = {"subcommand": subcommand, "config": cfg, "seed": seed, "config_hash": h}
    (out_dir / f"manifest-{subcommand}.json").write_text(json.dumps(doc, indent=2))
    return h

def _write_csv(path: Path, text: str, seed: int, cfg_hash: str) -> None:
    path.write_text(f"# seed={seed} config={cfg_hash}\n{text}")


def _write_json(path: Path, text: str, seed: int, cfg_hash: str) -> None:
    doc = json.loads(text)
    doc["seed"] = seed
    doc["config_hash"] = cfg_hash
    path.write_text(json.dumps(doc, indent=2))


def _load_instance(path: str) -> QkpInstance:
    return QkpInstance.from_json(Path(path).read_text())


def _workers(args) -> int:
    if getattr(args, "workers", None):
        return args.workers
    return int(os.environ.get("QKPTN_WORKERS", "1"))


def _readout_bits(state: Mps) -> np.ndarray:
    """Maximal-amplitude basis state: exact at small N, greedy per site above.

    The greedy pass right-canonicalizes first, so the per-site choice
    maximizes the marginal probability of the prefix.
    """
    n = state.n
    if n <= DENSE_CAP:
        psi = mps_to_dense(state)
        idx = int(np.argmax(np.abs(psi)))
        return np.array([(idx >> (n - 1 - i)) & 1 for i in range(n)], dtype=int)
    m = canonicalize(state, FORM_RIGHT)
    left = np.ones(1, dtype=complex)
    bits = []
    for a in m.sites:
        cand = [left @ a[:, b, :] for b in (0, 1)]
        norms = [np.linalg.norm(v) for v in cand]
        b = int(np.argmax(norms))
        bits.append(b)
        left = cand[b] / max(norms[b], 1e-300)
    return np.array(bits, dtype=int)


def _solve_dmrg(inst: QkpInstance, args) -> SolveReport:
    conv = SpinConvention(args.convention)
    qubo = qkp_to_qubo(inst, args.lam)
    ising = qubo_to_ising(qubo, conv)
    mpo = annealing_mpo(ising, 1.0)
    params = DmrgParams(chi_max=args.chi, max_sweeps=args.sweeps, seed=args.seed)
    t0 = time.perf_counter()
    outcome = dmrg_ground(mpo, params)
    phys_bits = _readout_bits(outcome.state)
    spins = 1 - 2 * phys_bits  # physical index 0 is the Z=+1 state
    bits = decode_spins(spins, conv)
    extras = {
        "energy": outcome.energy + ising.offset,
        "ising_offset": ising.offset,
        "qubo_energy": qubo.energy(bits),
        "variance": outcome.variance,
        "sweeps_used": outcome.sweeps_used,
        "converged": outcome.converged,
        "convention": conv.value,
        "lambda": args.lam,
    }
    return make_report("dmrg", inst, bits, time.perf_counter() - t0, extras)


def _cmd_gen(args) -> int:
    inst = gen_instance(args.n, args.capacity, args.value_max, args.weight_max,
                        args.pair_density, args.seed)
    out_dir = Path(args.out_dir)
    cfg = _resolved(args)
    h = _write_manifest(out_dir, "gen", cfg, args.seed)
    _write_json(out_dir / args.out, inst.to_json(), args.seed, h)
    print(f"wrote {out_dir / args.out}")
    return 0


def _cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    if args.method == "bf":
        report = brute_force(inst)
    elif args.method == "dp":
        report = dp_solve(inst)
    elif args.method == "sa":
        conv = SpinConvention(args.convention)
        qubo = qkp_to_qubo(inst, args.lam)
        t0 = time.perf_counter()
        bits, energy = classical_sa(
            qubo,
            SaParams(reads=args.reads, sweeps=args.sa_sweeps, seed=args.seed),
            workers=_workers(args),
        )
        report = make_report("sa", inst, bits, time.perf_counter() - t0,
                             {"qubo_energy": energy, "lambda": args.lam,
                              "convention": conv.value})
    else:
        report = _solve_dmrg(inst, args)
    out_dir = Path(args.out_dir)
    cfg = _resolved(args)
    h = _write_manifest(out_dir, "solve", cfg, args.seed)
    out = args.out or f"report_{args.method}.json"
    _write_json(out_dir / out, report.to_json(), args.seed, h)
    print(f"{report.solver}: value={report.value} weight={report.weight} "
          f"feasible={report.feasible}")
    return 0


def _cmd_gap_scan(args) -> int:
    inst = _load_instance(args.instance)
    conv = SpinConvention(args.convention)
    ising = qubo_to_ising(qkp_to_qubo(inst, args.lam), conv)
    params = DmrgParams(chi_max=args.chi, seed=args.seed)
    result = gap_scan(ising, args.steps, params, workers=_workers(args))
    out_dir = Path(args.out_dir)
    cfg = _resolved(args)
    h = _write_manifest(out_dir, "gap-scan", cfg, args.seed)
    _write_csv(out_dir / args.out, result.to_csv(), args.seed, h)
    plotting.plot_gap_scan(result, str(out_dir / (Path(args.out).stem + ".png")))
    print(f"g_min={result.g_min:.6g} at s={result.argmin_s:.6g}")
    return 0


def _cmd_schedule(args) -> int:
    gaps = GapScanResult.from_csv(Path(args.gaps).read_text())
    sched = build_schedule(gaps, epsilon=args.epsilon, degree=args.degree)
    out_dir = Path(args.out_dir)
    cfg = _resolved(args)
    h = _write_manifest(out_dir, "schedule", cfg, 0)
    _write_json(out_dir / args.out, sched.to_json(), 0, h)
    plotting.plot_schedule(sched, str(out_dir / (Path(args.out).stem + ".png")))
    print(f"wrote {out_dir / args.out}")
    return 0


def _cmd_evolve(args) -> int:
    inst = _load_instance(args.instance)
    conv = SpinConvention(args.convention)
    ising = qubo_to_ising(qkp_to_qubo(inst, args.lam), conv)
    if args.schedule == "linear":
        sched = Schedule.linear()
    else:
        sched = Schedule.from_json(Path(args.schedule).read_text())
    trace = evolve(ising, sched, args.total_time, args.steps)
    out_dir = Path(args.out_dir)
    cfg = _resolved(args)
    h = _write_manifest(out_dir, "evolve", cfg, 0)
    _write_csv(out_dir / args.out, trace.to_csv(), 0, h)
    plotting.plot_trace(trace, str(out_dir / (Path(args.out).stem + ".png")))
    print(f"final overlap={trace.overlaps[-1]:.6g} "
          f"final energy={trace.energies[-1]:.6g}")
    return 0


def _cmd_mpo_validate(args) -> int:
    from .encoding import IsingModel

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for n in range(2, args.n_max + 1):
        for _ in range(args.draws):
            h = rng.uniform(-2, 2, size=n)
            j = {
                (i, jx): float(rng.uniform(-2, 2))
                for i in range(1, n + 1)
                for jx in range(i + 1, n + 1)
            }
            ising = IsingModel(n=n, h=h, j=j)
            for s in (0.0, 0.3, 0.7, 1.0):
                dev = float(np.max(np.abs(
                    mpo_to_dense(annealing_mpo(ising, s))
                    - dense_hamiltonian(ising, s)
                )))
                worst = max(worst, dev)
    print(f"max deviation {worst:.3e} over N=2..{args.n_max}")
    cfg = _resolved(args)
    _write_manifest(Path(args.out_dir), "mpo-validate", cfg, args.seed)
    if worst > args.tol:
        print(f"FAIL: exceeds tolerance {args.tol:g}", file=sys.stderr)
        return 2
    return 0


def _cmd_compare(args) -> int:
    reports = [SolveReport.from_json(Path(p).read_text()) for p in args.reports]
    reference = (
        SolveReport.from_json(Path(args.reference).read_text())
        if args.reference else None
    )
    table = compare(reports, reference)
    out_dir = Path(args.out_dir)
    cfg = _resolved(args)
    h = _write_manifest(out_dir, "compare", cfg, 0)
    _write_csv(out_dir / args.out, table.to_csv(), 0, h)
    plotting.plot_comparison(table, str(out_dir / (Path(args.out).stem + ".png")))
    print(table.to_text(), end="")
    return 0


def _add_common(p, seed=True):
    p.add_argument("--out-dir", default=".")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _add_encoding(p):
    p.add_argument("--lam", type=float, default=5.0)
    p.add_argument("--convention", choices=["minus_half", "plus_half"],
                   default="minus_half")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkptn",
        description="Quadratic knapsack via tensor-network annealing tools",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("gen", help="generate a random QKP instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--value-max", type=int, default=100)
    p.add_argument("--weight-max", type=int, default=100)
    p.add_argument("--pair-density", type=float, default=0.5)
    p.add_argument("--out", default="instance.json")
    _add_common(p)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="solve an instance with one method")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=["bf", "dp", "sa", "dmrg"], required=True)
    p.add_argument("--chi", type=int, default=16)
    p.add_argument("--sweeps", type=int, default=20)
    p.add_argument("--reads", type=int, default=20)
    p.add_argument("--sa-sweeps", type=int, default=100)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--out", default=None)
    _add_encoding(p)
    _add_common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("gap-scan", help="DMRG minimum-gap scan over s")
    p.add_argument("--instance", required=True)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--chi", type=int, default=16)
    p.add_argument("--workers", type=int, default=0)
    p.add_argument("--out", default="gaps.csv")
    _add_encoding(p)
    _add_common(p)
    p.set_defaults(func=_cmd_gap_scan)

    p = sub.add_parser("schedule", help="synthesize a schedule from a gap CSV")
    p.add_argument("--gaps", required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--degree", type=int, default=6)
    p.add_argument("--out", default="schedule.json")
    _add_common(p, seed=False)
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("evolve", help="simulate the annealing evolution")
    p.add_argument("--instance", required=True)
    p.add_argument("--schedule", default="linear")
    p.add_argument("--total-time", type=float, default=50.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--out", default="trace.csv")
    _add_encoding(p)
    _add_common(p, seed=False)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("mpo-validate", help="MPO vs dense Hamiltonian sweep")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--draws", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-11)
    _add_common(p)
    p.set_defaults(func=_cmd_mpo_validate)

    p = sub.add_parser("compare", help="tabulate solver reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--reference", default=None)
    p.add_argument("--out", default="compare.csv")
    _add_common(p, seed=False)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (QkptnError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
