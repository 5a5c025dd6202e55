"""CSV and JSON artifacts.

Every file carries the artifact name, its version and the run configuration.
CSV files start with two comment lines,

    # gsfluct <version>
    # config <json object>

followed by a header row and one row per disorder sample.  Floats are written
with repr() so they round-trip exactly.
"""

import csv
import io
import json
import math

import numpy as np

from . import __version__

CLT_COLUMNS = ("index", "seed", "log_partition", "x_n")
CONCENTRATION_COLUMNS = ("index", "seed", "r12_sq_dev", "r11_sq_dev")
SUMMARY_KEYS = ("artifact", "version", "command", "config", "fixed_point",
                "limit_law", "summary", "checks", "passed")


def _plain(value):
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def header_lines(config):
    return [f"# gsfluct {__version__}",
            "# config " + json.dumps(_plain(config), sort_keys=True, separators=(",", ":"))]


def csv_text(columns, rows, config):
    buf = io.StringIO()
    for line in header_lines(config):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else int(v)
                         for v in row])
    return buf.getvalue()


def clt_rows(summary):
    for j, (seed, lz, x) in enumerate(zip(summary.seeds, summary.log_partitions, summary.samples)):
        yield j, int(seed), float(lz), float(x)


def concentration_rows(summary):
    for j, (seed, a, b) in enumerate(zip(summary.seeds, summary.r12_deviations,
                                         summary.r11_deviations)):
        yield j, int(seed), float(a), float(b)


def read_csv(path):
    """(config dict, list of row dicts) from a file written by `csv_text`."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    config = json.loads(lines[1][len("# config "):])
    rows = list(csv.DictReader(lines[2:]))
    return config, rows


def summary_document(command, config, *, fixed_point=None, limit_law=None, summary=None,
                     checks=None):
    checks = checks or []
    return _plain({
        "artifact": "gsfluct",
        "version": __version__,
        "command": command,
        "config": config,
        "fixed_point": fixed_point,
        "limit_law": limit_law,
        "summary": summary,
        "checks": [{"name": c.name, "deviation": c.deviation, "bound": c.bound,
                    "passed": c.passed} for c in checks],
        "passed": all(c.passed for c in checks),
    })


def dump_json(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
