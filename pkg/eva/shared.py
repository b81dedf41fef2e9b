# eva/shared.py
# ======================================================================================
# UTILITIES shared by the estimators and the CLI harness
# ======================================================================================
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional

import duckdb
import numpy as np
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from . import config


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


def sha256_text(s: str) -> str:
    return hashlib.sha256(s.encode("utf-8")).hexdigest()


def log_event(event: str, **fields: Any) -> None:
    # stderr only: stdout of `estimate` must stay a single JSON document
    payload = {"event": str(event), "ts_utc": utc_now_iso(), **fields}
    print(json.dumps(payload, sort_keys=True, default=str), file=sys.stderr, flush=True)


def write_json(path: Path, obj: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, default=str))


def derive_seed(master: int, index: int) -> int:
    """Child seed for row/instance `index`; independent of execution order."""
    ss = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    # Philox is counter-based, so streams for different seeds never overlap
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


# ----------------------------
# DuckDB helpers
# ----------------------------
def duckdb_connect() -> duckdb.DuckDBPyConnection:
    con = duckdb.connect(database=":memory:")
    con.execute(f"PRAGMA threads={config.DUCKDB_THREADS};")
    return con


def query_frame(sql: str, **frames: pd.DataFrame) -> pd.DataFrame:
    """Run `sql` with each keyword frame registered as a view of the same name."""
    con = duckdb_connect()
    try:
        for name, df in frames.items():
            con.register(name, df)
        return con.execute(sql).df()
    finally:
        con.close()


# ----------------------------
# Flat-file artifacts
# ----------------------------
def write_csv(df: pd.DataFrame, out_path: Path) -> Path:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(out_path, index=False, float_format=config.FLOAT_FORMAT, lineterminator="\n")
    return out_path


def write_parquet(df: pd.DataFrame, out_path: Path, compression="zstd") -> Path:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    table = pa.Table.from_pandas(df, preserve_index=False)
    try:
        pq.write_table(table, out_path, compression=compression)
    except Exception:
        pq.write_table(table, out_path, compression="snappy")
    return out_path


def schema_checksum_from_parquet(part_path: Path) -> str:
    pf = pq.ParquetFile(part_path)
    schema = pf.schema_arrow
    s = "|".join([f"{f.name}:{f.type}" for f in schema])
    return sha256_text(s)


def write_artifacts(
    df: pd.DataFrame,
    out_csv: Path,
    meta: dict,
    parquet: Optional[bool] = None,
) -> dict:
    """CSV + `.meta.json` sidecar (+ optional Parquet twin). Returns the metadata written."""
    write_csv(df, out_csv)
    meta = {"built_at": utc_now_iso(), "csv": str(out_csv), "rows": int(len(df)), **meta}

    if config.WRITE_PARQUET if parquet is None else parquet:
        out_pq = write_parquet(df, out_csv.with_suffix(".parquet"))
        meta["parquet"] = str(out_pq)
        meta["schema_checksum"] = schema_checksum_from_parquet(out_pq)

    write_json(out_csv.with_suffix(".meta.json"), meta)
    return meta
