"""CSV/JSON emission with atomic writes (temp file + rename)."""

import csv
import json
import os
import tempfile


def _atomic_write(path, writer, mode="w"):
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode, newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, payload) -> None:
    _atomic_write(path, lambda fh: json.dump(payload, fh, indent=2, sort_keys=True, default=_coerce))


def _coerce(x):
    try:
        import numpy as np
        if isinstance(x, np.generic):
            return x.item()
        if isinstance(x, np.ndarray):
            return x.tolist()
    except ImportError:
        pass
    raise TypeError(f"not JSON serializable: {type(x)}")


def write_csv(path, header, rows) -> None:
    def writer(fh):
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
    _atomic_write(path, writer)


def norm_report_csv(path, report) -> None:
    """Columns: norm, k, pair_q, pair_r, block_value, total."""
    rows = [(report.name, k, q, r, v, report.value) for (k, q, r, v) in report.rows]
    write_csv(path, ["norm", "k", "pair_q", "pair_r", "block_value", "total"], rows)


def estimate_report_csv(path, report) -> None:
    keys = sorted({k for s in report.samples for k in s})
    rows = [[s.get(k, "") for k in keys] for s in report.samples]
    write_csv(path, keys, rows)


def trace_csv(path, rows, fields) -> None:
    write_csv(path, fields, [[r[f] for f in fields] for r in rows])
