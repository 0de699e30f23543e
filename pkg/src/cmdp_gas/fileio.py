"""Problem/config file handling and experiment artifacts.

One structured-text (JSON) format family covers CMDP problem files and
environment configs; all floats are serialized at full round-trip
precision (repr, 17 significant digits) so load(save(x)) is bit-exact.
File writes go through a temp-and-rename so readers never see partial
output.
"""

import csv
import json
import os
import tempfile

import numpy as np
import scipy.sparse as sp

from .core import Cmdp, validate
from .errors import ProblemFormatError
from .gas import TRACE_COLUMNS
from .gridworld import GridConfig
from .uav import UavConfig

PROBLEM_FIELDS = ("n_states", "n_actions", "gamma", "constraint_bound",
                  "initial_dist", "rewards", "costs", "transitions")


def _atomic_write(path, write_fn):
    """Write via a sibling temp file and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            write_fn(handle)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(value):
    """Full round-trip decimal text for one cell."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, rows):
    """CSV with the exact header given and repr-precision numeric cells."""
    def emit(handle):
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, emit)


def write_json(path, payload):
    _atomic_write(path, lambda h: (json.dump(payload, h, indent=2), h.write("\n")))


def write_trace_csv(trace, path, include_timing=True):
    """Serialize a solve trace; ``include_timing=False`` zeroes the
    wall-clock column so repeated runs are byte-identical."""
    rows = [(r.outer_iter, r.mu, r.objective, r.gradient, r.inner_iterations,
             r.cumulative_inner_iterations,
             r.wall_time_ms if include_timing else 0.0)
            for r in trace.records]
    write_csv(path, TRACE_COLUMNS, rows)


def save_problem(cmdp, path):
    """Problem file: scalars, dense reward/cost matrices, and transitions
    as a record list {state, action, next_state, prob}."""
    records = []
    for i in range(cmdp.n_states):
        for a in range(cmdp.n_actions):
            r = i * cmdp.n_actions + a
            for p in range(cmdp.indptr[r], cmdp.indptr[r + 1]):
                records.append({"state": i, "action": a,
                                "next_state": int(cmdp.indices[p]),
                                "prob": float(cmdp.data[p])})
    payload = {
        "n_states": cmdp.n_states,
        "n_actions": cmdp.n_actions,
        "gamma": cmdp.discount,
        "constraint_bound": cmdp.constraint_bound,
        "initial_dist": cmdp.initial_dist.tolist(),
        "rewards": cmdp.rewards.tolist(),
        "costs": cmdp.costs.tolist(),
        "transitions": records,
    }
    if not cmdp.action_mask.all():
        payload["action_mask"] = cmdp.action_mask.tolist()
    write_json(path, payload)


def load_problem(path):
    """Parse and validate a problem file; any malformed field or invariant
    violation raises ProblemFormatError."""
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFormatError(f"cannot read problem file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem file must hold a single object")
    missing = [f for f in PROBLEM_FIELDS if f not in doc]
    if missing:
        raise ProblemFormatError(f"problem file missing fields: {missing}")
    try:
        n_states = int(doc["n_states"])
        n_actions = int(doc["n_actions"])
        rows, cols, vals = [], [], []
        for rec in doc["transitions"]:
            i, a = int(rec["state"]), int(rec["action"])
            j, p = int(rec["next_state"]), float(rec["prob"])
            if not (0 <= i < n_states and 0 <= a < n_actions and 0 <= j < n_states):
                raise ProblemFormatError(f"transition record out of range: {rec}")
            rows.append(i * n_actions + a)
            cols.append(j)
            vals.append(p)
        transitions = sp.csr_matrix(
            (vals, (rows, cols)), shape=(n_states * n_actions, n_states))
        cmdp = Cmdp(n_states, n_actions, transitions,
                    np.asarray(doc["rewards"], dtype=np.float64),
                    np.asarray(doc["costs"], dtype=np.float64),
                    np.asarray(doc["initial_dist"], dtype=np.float64),
                    float(doc["gamma"]), float(doc["constraint_bound"]),
                    action_mask=(np.asarray(doc["action_mask"], dtype=bool)
                                 if "action_mask" in doc else None))
    except ProblemFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError(f"malformed problem file {path}: {exc}") from exc
    report = validate(cmdp)
    if not report.ok:
        kinds = sorted({k for k, _, _ in report.violations})
        raise ProblemFormatError(
            f"problem file {path} violates invariants: {kinds}")
    return cmdp


def _config_from_dict(cls, doc, path):
    fields = set(cls.__dataclass_fields__)
    unknown = sorted(set(doc) - fields)
    if unknown:
        raise ProblemFormatError(f"unknown config keys in {path}: {unknown}")
    kwargs = {k: tuple(v) if isinstance(v, list) and k != "obstacles" else v
              for k, v in doc.items()}
    try:
        config = cls(**kwargs)
        config.check()
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"invalid config {path}: {exc}") from exc
    return config


def _load_config_doc(path):
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemFormatError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError(f"config file {path} must hold an object")
    return doc


def load_grid_config(path):
    doc = _load_config_doc(path)
    if "start" in doc:
        doc["start"] = tuple(doc["start"])
    if "goal" in doc:
        doc["goal"] = tuple(doc["goal"])
    if isinstance(doc.get("obstacles"), list):
        doc["obstacles"] = [tuple(c) for c in doc["obstacles"]]
    return _config_from_dict(GridConfig, doc, path)


def load_uav_config(path):
    return _config_from_dict(UavConfig, _load_config_doc(path), path)
