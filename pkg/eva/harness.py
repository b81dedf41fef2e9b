# eva/harness.py
# ======================================================================================
# CLI HARNESS
#   estimate  -> one estimator run, JSON report on stdout
#   sweep-k   -> fixed vs k^2-scaled shot policies over a k list, CSV
#   validate  -> error-bound campaign over random instances, CSV (+ exit 1 on violation)
#   bench     -> (n, instance, method) benchmark rows, CSV
#
# Every CSV gets a `.meta.json` sidecar (and an optional Parquet twin) via write_artifacts.
# ======================================================================================
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
from tqdm.auto import tqdm

from . import config
from .circuits import Ansatz, basis_state_ansatz, load_ansatz, random_single_axis_ansatz, validate_single_axis
from .errors import EvaError, InvalidInputError
from .estimators import (
    EstimateReport,
    Method,
    SEED_MAX,
    estimate,
    eva_error_bound,
    eva_estimate,
    exact_expectation,
    reduced_bound_for,
    reduced_error_bound,
    reduced_eva_estimate,
)
from .hamiltonian import IsingHamiltonian, PauliZTerm, hamiltonian_norm, load_hamiltonian, normalize, random_ising
from .shared import derive_seed, log_event, make_rng, query_frame, write_artifacts

BOUND_TOL = 1e-12
MAX_REDRAWS = 64
BENCH_METHODS = (Method.EVA, Method.REDUCED_EVA, Method.VQE_NAIVE, Method.VQE_GROUPED)
POLICIES = ("fixed", "scaled")

SWEEP_COLUMNS = ["policy", "k", "seed", "shots", "estimate", "exact", "abs_error", "bound"]
VALIDATE_COLUMNS = [
    "trial", "seed", "n_qubits", "degree", "n_terms", "norm", "k", "exact",
    "eva_gap", "eva_bound", "eva_ok",
    "reduced_gap", "reduced_bound", "reduced_ok", "reduced_nominal_bound", "reduced_nominal_ok",
]


# ======================================================================================
# TYPES
# ======================================================================================
@dataclass(frozen=True)
class BenchRecord:
    method: str
    n_qubits: int
    degree: int
    p: float
    k: float
    shots: int
    circuit_count: int
    toffoli_count: int
    expanded_cnot_count: int
    depth: int
    estimate: float
    exact: float
    abs_error: float
    bound: float    # NaN (empty CSV cell) for the VQE baselines
    wall_time_ms: float
    seed: int

    @classmethod
    def from_report(cls, report: EstimateReport, exact: float, degree: int, p: float, seed: int, timing: bool):
        return cls(
            method=report.method.value,
            n_qubits=report.n_qubits,
            degree=degree,
            p=p,
            k=report.k,
            shots=report.shots_used,
            circuit_count=report.circuit_count,
            toffoli_count=report.cost.toffoli_count,
            expanded_cnot_count=report.cost.expanded_cnot_count,
            depth=report.cost.depth,
            estimate=report.value,
            exact=exact,
            abs_error=abs(report.value - exact),
            bound=math.nan if report.bound is None else report.bound,
            wall_time_ms=report.wall_time_ms if timing else 0.0,
            seed=seed,
        )


BENCH_COLUMNS = [f.name for f in fields(BenchRecord)]


@dataclass(frozen=True)
class RunConfig:
    command: str
    hamiltonian: Optional[Path] = None
    ansatz: Optional[Path] = None
    method: Method = Method.EVA
    k: float = config.DEFAULT_K
    k_list: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)
    shots: Optional[int] = config.BASE_SHOTS
    seed: int = 0
    seeds: int = 50
    trials: int = 200
    max_qubits: int = 8
    degree: int = 3
    p: float = 0.5
    qubits: tuple[int, ...] = (4, 5, 6, 7, 8)
    instances: int = 3
    methods: tuple[Method, ...] = BENCH_METHODS
    workers: int = config.WORKERS
    timing: bool = True
    parquet: Optional[bool] = None
    progress: bool = config.SHOW_PROGRESS
    out: Optional[Path] = None

    def out_path(self) -> Path:
        if self.out is not None:
            return self.out
        return config.OUT_DIR / f"{self.command.replace('-', '_')}_{config.RUN_ID}.csv"

    def to_meta(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d["methods"] = [m.value for m in self.methods]
        d["shots"] = "inf" if self.shots is None else self.shots
        return {k: (str(v) if isinstance(v, Path) else v) for k, v in d.items()}


# ======================================================================================
# ARGUMENT PARSING
# ======================================================================================
def parse_shots(text: str) -> Optional[int]:
    if text.strip().lower() in ("inf", "infinity", "exact"):
        return None
    try:
        shots = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"shots must be a positive integer or 'inf', got {text!r}") from None
    if shots < 1:
        raise argparse.ArgumentTypeError(f"shots must be >= 1, got {shots}")
    return shots


def parse_seed(text: str) -> int:
    try:
        seed = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= seed <= SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def parse_qubit_range(text: str) -> tuple[int, ...]:
    """'4..12' (inclusive), '6' or '4,6,8'."""
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            out = tuple(range(lo, hi + 1))
        else:
            out = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad qubit range {text!r}; use A..B or a comma list") from None
    if not out or min(out) < 1:
        raise argparse.ArgumentTypeError(f"qubit range must be non-empty and positive, got {text!r}")
    return out


def parse_k_list(text: str) -> tuple[float, ...]:
    try:
        out = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad k list {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("k list must be non-empty")
    return out


def parse_methods(text: str) -> tuple[Method, ...]:
    try:
        return tuple(Method.parse(x) for x in text.split(",") if x.strip())
    except InvalidInputError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _method_arg(text: str) -> Method:
    try:
        return Method.parse(text)
    except InvalidInputError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eva",
        description="Single-circuit expectation values of diagonal Hamiltonians, with VQE baselines.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, shots_help: str):
        p.add_argument("--shots", type=parse_shots, default=config.BASE_SHOTS, help=shots_help)
        p.add_argument("--seed", type=parse_seed, default=0, help="master seed (64-bit unsigned)")
        p.add_argument("--out", type=Path, default=None, help="output CSV path")
        p.add_argument("--parquet", action="store_true", default=None, help="also write a Parquet twin")
        p.add_argument("--no-progress", dest="progress", action="store_false", default=config.SHOW_PROGRESS)

    p_est = sub.add_parser("estimate", help="run one estimator and print its report as JSON")
    p_est.add_argument("--hamiltonian", type=Path, required=True)
    p_est.add_argument("--ansatz", type=Path, default=None, help="ansatz JSON (default: empty, |0...0>)")
    p_est.add_argument("--method", type=_method_arg, default=Method.EVA)
    p_est.add_argument("--k", type=float, default=config.DEFAULT_K)
    p_est.add_argument("--shots", type=parse_shots, default=config.BASE_SHOTS,
                       help="base shots (EVA) or shots per circuit (VQE); 'inf' for exact probabilities")
    p_est.add_argument("--seed", type=parse_seed, default=0)

    p_sweep = sub.add_parser("sweep-k", help="estimate spread vs k under fixed and k^2-scaled shots")
    p_sweep.add_argument("--hamiltonian", type=Path, default=None, help="default: 1.0*Z0")
    p_sweep.add_argument("--ansatz", type=Path, default=None)
    p_sweep.add_argument("--method", type=_method_arg, default=Method.EVA)
    p_sweep.add_argument("--k-list", dest="k_list", type=parse_k_list, default=(1.0, 2.0, 4.0, 8.0))
    p_sweep.add_argument("--seeds", type=int, default=50, help="repetitions per (k, policy)")
    common(p_sweep, "base shots; the fixed policy uses it at every k")

    p_val = sub.add_parser("validate", help="check the error bounds on random instances")
    p_val.add_argument("--hamiltonian", type=Path, default=None, help="check this Hamiltonian instead of random ones")
    p_val.add_argument("--ansatz", type=Path, default=None)
    p_val.add_argument("--trials", type=int, default=200)
    p_val.add_argument("--max-qubits", dest="max_qubits", type=int, default=8)
    p_val.add_argument("--k-list", dest="k_list", type=parse_k_list, default=(1.0, 2.0, 4.0, 8.0))
    p_val.add_argument("--k", type=float, default=None, help="single k (overrides --k-list)")
    common(p_val, "unused: validation runs in exact-probability mode")

    p_bench = sub.add_parser("bench", help="benchmark the estimators on random Ising instances")
    p_bench.add_argument("--degree", type=int, choices=(2, 3), default=3)
    p_bench.add_argument("--p", type=float, default=0.5)
    p_bench.add_argument("--qubits", type=parse_qubit_range, default=(4, 5, 6, 7, 8), help="A..B inclusive")
    p_bench.add_argument("--instances", type=int, default=3)
    p_bench.add_argument("--k", type=float, default=config.DEFAULT_K)
    p_bench.add_argument("--methods", type=parse_methods, default=BENCH_METHODS)
    p_bench.add_argument("--workers", type=int, default=config.WORKERS)
    p_bench.add_argument("--no-timing", dest="timing", action="store_false",
                         help="write wall_time_ms as 0 so repeated runs are byte-identical")
    common(p_bench, "base shots (EVA) or shots per circuit (VQE); 'inf' for exact probabilities")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    keys = {f.name for f in fields(RunConfig)}
    values = {k: v for k, v in vars(args).items() if k in keys and v is not None}
    if args.command == "validate" and getattr(args, "k", None) is not None:
        values["k_list"] = (float(args.k),)
        values.pop("k", None)
    if "shots" in vars(args):
        values["shots"] = args.shots    # None means exact probabilities, keep it
    return RunConfig(**values)


# ======================================================================================
# INPUTS
# ======================================================================================
def _load_inputs(cfg: RunConfig) -> tuple[IsingHamiltonian, Ansatz]:
    if cfg.hamiltonian is None:
        H = IsingHamiltonian(1, (PauliZTerm((0,), 1.0),))
    else:
        H = load_hamiltonian(cfg.hamiltonian)
    ansatz = load_ansatz(cfg.ansatz) if cfg.ansatz is not None else Ansatz(H.n_qubits, ())
    return H, ansatz


def draw_instance(n: int, degree: int, p: float, seed: int) -> IsingHamiltonian:
    """random_ising, redrawn from child seeds while the draw has no terms."""
    H = random_ising(n, p, degree, seed)
    attempt = 0
    while not H.terms:
        attempt += 1
        if attempt > MAX_REDRAWS:
            raise InvalidInputError(f"no non-empty instance after {MAX_REDRAWS} draws (n={n}, p={p})")
        H = random_ising(n, p, degree, derive_seed(seed, attempt))
    return H


def _progress(iterable, cfg: RunConfig, desc: str, total: Optional[int] = None):
    return tqdm(iterable, desc=desc, total=total, disable=not cfg.progress, file=sys.stderr, leave=False)


# ======================================================================================
# COMMANDS
# ======================================================================================
def cmd_estimate(cfg: RunConfig) -> EstimateReport:
    H, ansatz = _load_inputs(cfg)
    log_event("estimate_start", method=cfg.method.value, n_qubits=H.n_qubits, n_terms=len(H), k=cfg.k)
    report = estimate(cfg.method, H, ansatz, k=cfg.k, shots=cfg.shots, seed=cfg.seed)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return report


def cmd_sweep_k(cfg: RunConfig) -> pd.DataFrame:
    if not cfg.k_list:
        raise InvalidInputError("k list must be non-empty")
    if cfg.seeds < 1:
        raise InvalidInputError(f"--seeds must be >= 1, got {cfg.seeds}")
    if cfg.method not in (Method.EVA, Method.REDUCED_EVA):
        raise InvalidInputError(f"sweep-k runs eva or reduced_eva, got {cfg.method.value}")

    H, ansatz = _load_inputs(cfg)
    exact = exact_expectation(H, ansatz)
    run_one = eva_estimate if cfg.method is Method.EVA else reduced_eva_estimate

    rows = []
    for k in _progress(cfg.k_list, cfg, "sweep-k"):
        for r in range(cfg.seeds):
            seed = derive_seed(cfg.seed, r)
            for policy in POLICIES:
                rep = run_one(H, ansatz, k, cfg.shots, seed, scale_shots=(policy == "scaled"))
                rows.append({
                    "policy": policy,
                    "k": float(k),
                    "seed": seed,
                    "shots": rep.shots_used,
                    "estimate": rep.value,
                    "exact": exact,
                    "abs_error": abs(rep.value - exact),
                    "bound": rep.bound,
                })

    df = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    df["seed"] = df["seed"].astype("uint64")
    summary = query_frame(
        """
        SELECT policy, k, COUNT(*) AS n, AVG(estimate) AS mean,
               STDDEV_SAMP(estimate) AS std, AVG(abs_error) AS mean_abs_error
        FROM rows
        GROUP BY policy, k
        ORDER BY policy, k;
        """,
        rows=df,
    )
    meta = write_artifacts(
        df,
        cfg.out_path(),
        {"command": "sweep-k", "run_id": config.RUN_ID, "config": config.snapshot(), "run": cfg.to_meta(),
         "summary": summary.to_dict(orient="records")},
        parquet=cfg.parquet,
    )
    print(summary.to_string(index=False))
    print("✅ Wrote:", meta["csv"], file=sys.stderr)
    return df


def _validate_instances(cfg: RunConfig):
    """(trial, seed, H normalized, ansatz) for each trial."""
    fixed = _load_inputs(cfg) if cfg.hamiltonian is not None else None
    for t in range(cfg.trials):
        seed = derive_seed(cfg.seed, t)
        rng = make_rng(seed)
        if fixed is not None:
            H = normalize(fixed[0]).hamiltonian
            ansatz = fixed[1]
        else:
            degree = int(rng.choice([2, 3]))
            n = int(rng.integers(degree, max(degree, cfg.max_qubits) + 1))
            p = float(rng.uniform(0.2, 1.0))
            # a random norm in (0.05, 1] so both small- and full-angle regimes are covered
            shrink = float(rng.uniform(0.05, 1.0))
            H = normalize(draw_instance(n, degree, p, derive_seed(seed, 1))).hamiltonian.scaled(shrink)
            ansatz = (
                basis_state_ansatz(rng.integers(0, 2, n).tolist())
                if rng.random() < 0.5
                else random_single_axis_ansatz(n, derive_seed(seed, 2))
            )
        yield t, seed, H, ansatz


def cmd_validate(cfg: RunConfig) -> tuple[pd.DataFrame, int]:
    """Returns (rows, violation count)."""
    if cfg.trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {cfg.trials}")
    if not cfg.k_list:
        raise InvalidInputError("k list must be non-empty")

    rows = []
    for t, seed, H, ansatz in _progress(_validate_instances(cfg), cfg, "validate", total=cfg.trials):
        norm = hamiltonian_norm(H).value
        exact = exact_expectation(H, ansatz)
        single_axis = validate_single_axis(ansatz)
        for k in cfg.k_list:
            k = float(k)
            eva = eva_estimate(H, ansatz, k, None, seed)
            eva_gap = abs(eva.value / k - exact / k)
            eva_bound = eva_error_bound(H, k)
            row = {
                "trial": t, "seed": seed, "n_qubits": H.n_qubits, "degree": H.degree, "n_terms": len(H),
                "norm": norm, "k": k, "exact": exact,
                "eva_gap": eva_gap, "eva_bound": eva_bound, "eva_ok": bool(eva_gap <= eva_bound + BOUND_TOL),
                "reduced_gap": math.nan, "reduced_bound": math.nan, "reduced_ok": True,
                "reduced_nominal_bound": math.nan, "reduced_nominal_ok": True,
            }
            # reduced EVA is a small-angle method; k = 1 is outside its regime
            if single_axis and k >= 2:
                red = reduced_eva_estimate(H, ansatz, k, None, seed)
                gap = abs(red.value / k - exact / k)
                bound = reduced_bound_for(H, k, ansatz)
                nominal = reduced_error_bound(H, k)
                row.update({
                    "reduced_gap": gap, "reduced_bound": bound, "reduced_ok": bool(gap <= bound + BOUND_TOL),
                    "reduced_nominal_bound": nominal, "reduced_nominal_ok": bool(gap <= nominal + BOUND_TOL),
                })
            rows.append(row)

    df = pd.DataFrame(rows, columns=VALIDATE_COLUMNS)
    df["seed"] = df["seed"].astype("uint64")
    summary = query_frame(
        """
        SELECT k,
               COUNT(*) AS cases,
               SUM(CASE WHEN eva_ok THEN 0 ELSE 1 END) AS eva_violations,
               SUM(CASE WHEN reduced_ok THEN 0 ELSE 1 END) AS reduced_violations,
               SUM(CASE WHEN reduced_nominal_ok THEN 0 ELSE 1 END) AS nominal_misses,
               MAX(eva_gap / NULLIF(eva_bound, 0)) AS eva_worst_ratio,
               MAX(reduced_gap / NULLIF(reduced_bound, 0)) AS reduced_worst_ratio
        FROM rows
        GROUP BY k
        ORDER BY k;
        """,
        rows=df,
    )
    violations = int(summary["eva_violations"].sum() + summary["reduced_violations"].sum())
    meta = write_artifacts(
        df,
        cfg.out_path(),
        {"command": "validate", "run_id": config.RUN_ID, "config": config.snapshot(), "run": cfg.to_meta(),
         "violations": violations, "summary": summary.to_dict(orient="records")},
        parquet=cfg.parquet,
    )
    print(summary.to_string(index=False))
    print(json.dumps({"trials": cfg.trials, "cases": int(len(df)), "violations": violations}))
    print("✅ Wrote:", meta["csv"], file=sys.stderr)
    return df, violations


def bench_instance(task: tuple) -> list[dict]:
    """All method rows for one (n, instance seed). Top-level so worker processes can pickle it."""
    n, degree, p, seed, methods, k, shots, timing = task
    H = draw_instance(n, degree, p, seed)
    ansatz = random_single_axis_ansatz(n, derive_seed(seed, 1))
    exact = exact_expectation(H, ansatz)

    rows = []
    for m in methods:
        sample_seed = derive_seed(seed, 100 + list(Method).index(m))
        report = estimate(m, H, ansatz, k=k, shots=shots, seed=sample_seed)
        rows.append(asdict(BenchRecord.from_report(report, exact, degree, p, seed, timing)))
    return rows


def cmd_bench(cfg: RunConfig) -> pd.DataFrame:
    if cfg.degree not in (2, 3):
        raise InvalidInputError(f"degree must be 2 or 3, got {cfg.degree}")
    if not 0.0 < cfg.p <= 1.0:
        raise InvalidInputError(f"p must lie in (0, 1], got {cfg.p}")
    if cfg.instances < 1:
        raise InvalidInputError(f"instances must be >= 1, got {cfg.instances}")
    if min(cfg.qubits) < cfg.degree:
        raise InvalidInputError(f"qubit counts must be >= degree ({cfg.degree}), got {min(cfg.qubits)}")
    if Method.EXACT in cfg.methods:
        raise InvalidInputError("bench compares sampled methods; 'exact' is the reference column")

    tasks = []
    for n in cfg.qubits:
        for i in range(cfg.instances):
            index = len(tasks)
            tasks.append((n, cfg.degree, cfg.p, derive_seed(cfg.seed, index), cfg.methods, cfg.k, cfg.shots, cfg.timing))

    log_event("bench_start", tasks=len(tasks), methods=[m.value for m in cfg.methods], workers=cfg.workers)
    t0 = time.perf_counter()
    rows: list[dict] = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            for chunk in _progress(pool.map(bench_instance, tasks), cfg, "bench", total=len(tasks)):
                rows.extend(chunk)
    else:
        for task in _progress(tasks, cfg, "bench"):
            rows.extend(bench_instance(task))

    order = {m.value: i for i, m in enumerate(Method)}
    rows.sort(key=lambda r: (r["n_qubits"], r["seed"], order[r["method"]]))
    df = pd.DataFrame(rows, columns=BENCH_COLUMNS)
    df["seed"] = df["seed"].astype("uint64")

    summary = query_frame(
        """
        SELECT method, n_qubits,
               AVG(circuit_count) AS circuits, AVG(expanded_cnot_count) AS cnots,
               AVG(abs_error) AS mean_abs_error, AVG(wall_time_ms) AS mean_wall_ms
        FROM rows
        GROUP BY method, n_qubits
        ORDER BY method, n_qubits;
        """,
        rows=df,
    )
    meta = write_artifacts(
        df,
        cfg.out_path(),
        {"command": "bench", "run_id": config.RUN_ID, "config": config.snapshot(), "run": cfg.to_meta(),
         "elapsed_s": round(time.perf_counter() - t0, 3), "summary": summary.to_dict(orient="records")},
        parquet=cfg.parquet,
    )
    log_event("bench_done", rows=int(len(df)), csv=meta["csv"])
    print(summary.to_string(index=False))
    print("✅ Wrote:", meta["csv"], file=sys.stderr)
    return df


# ======================================================================================
# ENTRY POINT
# ======================================================================================
def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        if cfg.command == "estimate":
            cmd_estimate(cfg)
        elif cfg.command == "sweep-k":
            cmd_sweep_k(cfg)
        elif cfg.command == "validate":
            _, violations = cmd_validate(cfg)
            if violations:
                print(f"❌ validate failed: {violations} bound violation(s)", file=sys.stderr)
                return 1
        elif cfg.command == "bench":
            cmd_bench(cfg)
    except (EvaError, OSError) as e:
        print(f"❌ {cfg.command} failed: {e}", file=sys.stderr)
        log_event("command_failed", command=cfg.command, error=type(e).__name__)
        return 2
    return 0
