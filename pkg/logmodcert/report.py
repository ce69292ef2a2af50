"""
Report and artifact writers.

Reports are JSON documents ``{status, metrics, certificate?, artifacts}``
written with sorted keys so identical runs produce identical bytes. Curves
go to CSV, optionally with a gnuplot script next to them.
"""

import csv
import io
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

log = logging.getLogger(__name__)

STATUS_PASS = "pass"
STATUS_FAIL = "fail"


# ==========================================
# HELPERS
# ==========================================
def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats to plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return value


def atomic_write_bytes(dst_final: str, payload: bytes) -> str:
    """
    Write bytes so readers never see a partial file:

    - write <dst>.tmp
    - fsync tmp
    - os.replace(tmp, final)
    """
    parent = os.path.dirname(dst_final)
    if parent:
        os.makedirs(parent, exist_ok=True)
    dst_tmp = dst_final + ".tmp"
    with open(dst_tmp, "wb") as f:
        f.write(payload)
        f.flush()
        try:
            os.fsync(f.fileno())
        except OSError as e:
            log.debug(f"fsync() skipped/failed for {dst_tmp}: {e}")
    os.replace(dst_tmp, dst_final)
    return dst_final


def atomic_write_text(dst_final: str, text: str) -> str:
    return atomic_write_bytes(dst_final, text.encode("utf-8"))


def dumps_json(payload: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(payload), indent=2, sort_keys=True) + "\n"


# ==========================================
# WRITERS
# ==========================================
def build_report(
    passed: bool,
    metrics: Dict[str, Any],
    certificate: Optional[Dict[str, Any]] = None,
    artifacts: Optional[List[str]] = None,
) -> Dict[str, Any]:
    report: Dict[str, Any] = {
        "status": STATUS_PASS if passed else STATUS_FAIL,
        "metrics": metrics,
        "artifacts": sorted(artifacts or []),
    }
    if certificate is not None:
        report["certificate"] = certificate
    return report


def write_json(path: str, payload: Dict[str, Any]) -> str:
    atomic_write_text(path, dumps_json(payload))
    log.info(f"📁 Wrote {path}")
    return path


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write_text(path, buf.getvalue())
    log.info(f"📁 Wrote {path}")
    return path


def write_gnuplot_script(
    csv_path: str,
    x_column: int,
    y_columns: Sequence[int],
    labels: Sequence[str],
    logscale: str = "",
) -> str:
    """Plain-text gnuplot script plotting CSV columns (1-based indices)."""
    script_path = os.path.splitext(csv_path)[0] + ".gp"
    data_name = os.path.basename(csv_path)
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set terminal pngcairo size 900,600",
        f"set output '{os.path.splitext(data_name)[0]}.png'",
    ]
    if logscale:
        lines.append(f"set logscale {logscale}")
    plots = [
        f"'{data_name}' using {x_column}:{col} with linespoints title '{label}'"
        for col, label in zip(y_columns, labels)
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    atomic_write_text(script_path, "\n".join(lines) + "\n")
    log.info(f"📁 Wrote {script_path}")
    return script_path
