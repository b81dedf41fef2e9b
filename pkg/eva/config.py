# ======================================================================================
# CONFIG (edit only here)
# ======================================================================================
# Every value can be overridden from the environment, e.g.:
#   EVA_BASE_SHOTS=4000
#   EVA_OUT_DIR=./artifacts
# CLI flags win over these defaults for a single run.
import os
from datetime import datetime
from pathlib import Path


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name, "").strip()
    return float(raw) if raw else default


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name, "").strip()
    return int(raw) if raw else default


def _env_flag(name: str, default: bool) -> bool:
    raw = os.environ.get(name, "").strip()
    if not raw:
        return default
    return raw in ("1", "true", "TRUE", "yes", "YES")


# Estimation defaults ("between 2 and 4" works well for many-term Hamiltonians)
DEFAULT_K = _env_float("EVA_DEFAULT_K", 2.0)
BASE_SHOTS = _env_int("EVA_BASE_SHOTS", 1000)

# Size limits
NORM_EXACT_MAX_QUBITS = _env_int("EVA_NORM_EXACT_MAX_QUBITS", 20)   # above => L1 bound
EXACT_MAX_QUBITS = _env_int("EVA_EXACT_MAX_QUBITS", 24)             # exact_expectation
ORACLE_MAX_QUBITS = _env_int("EVA_ORACLE_MAX_QUBITS", 10)           # dense unitary oracle

# Terms with |coeff| below this after merging are dropped
COEFF_EPS = _env_float("EVA_COEFF_EPS", 1e-15)

# Output
OUT_DIR = Path(os.environ.get("EVA_OUT_DIR", "./artifacts")).resolve()
WRITE_PARQUET = _env_flag("EVA_WRITE_PARQUET", False)
SHOW_PROGRESS = _env_flag("EVA_PROGRESS", True)

# Perf
WORKERS = _env_int("EVA_WORKERS", 1)
DUCKDB_THREADS = _env_int("EVA_DUCKDB_THREADS", 4)

# 17 significant digits round-trips every IEEE double
FLOAT_FORMAT = "%.17g"

RUN_ID = datetime.now().strftime("%Y%m%d_%H%M%S")


def snapshot() -> dict:
    """Resolved configuration, recorded in every run's metadata."""
    return {
        "default_k": DEFAULT_K,
        "base_shots": BASE_SHOTS,
        "norm_exact_max_qubits": NORM_EXACT_MAX_QUBITS,
        "exact_max_qubits": EXACT_MAX_QUBITS,
        "oracle_max_qubits": ORACLE_MAX_QUBITS,
        "coeff_eps": COEFF_EPS,
        "out_dir": str(OUT_DIR),
        "write_parquet": WRITE_PARQUET,
        "workers": WORKERS,
        "duckdb_threads": DUCKDB_THREADS,
        "run_id": RUN_ID,
    }
