"""Text formats: input CSV, key-value spec files, draws files and tables.

All numbers are written with ``repr`` so floats round-trip exactly.
"""

import csv
import json
import logging

import numpy as np

from .errors import FormatError, SchemaError
from .gibbs import PosteriorDraws
from .model import SURVEY_FACTORS, SIMULATION_FACTORS, ModelSpec, build_dataset
from .summaries import grid_label, trace_columns

logger = logging.getLogger(__name__)

DRAWS_MAGIC = "#npglm-draws"
DRAWS_VERSION = 1

BASE_COLUMNS = ("y", "state", "age", "child")
COVARIATE_SETS = {"survey": SURVEY_FACTORS, "simulation": SIMULATION_FACTORS}


def fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


# ---------------------------------------------------------------------------
# Input data
# ---------------------------------------------------------------------------


def detect_covariates(columns):
    cols = set(columns)
    for name in ("survey", "simulation"):
        if all(f.column in cols for f in COVARIATE_SETS[name]):
            return name
    raise SchemaError(
        "missing covariate columns: expected area, relig, educ (or x3 for simulated data)"
    )


def read_dataset(path, covariates=None):
    """Parse a CSV with columns y, state, age, child plus factor columns.

    Extra columns are ignored with a warning; empty cells and non-numeric
    values raise SchemaError naming the row (1-based, header excluded).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    missing = [c for c in BASE_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing column(s): {', '.join(missing)}")
    covariates = covariates or detect_covariates(header)
    factors = COVARIATE_SETS[covariates]
    wanted = list(BASE_COLUMNS) + [f.column for f in factors]
    extra = [c for c in header if c not in wanted]
    if extra:
        logger.warning("ignoring extra column(s): %s", ", ".join(extra))
    pos = {c: header.index(c) for c in wanted}
    table = {c: np.empty(len(rows)) for c in wanted}
    for r, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise SchemaError(f"row {r}: expected {len(header)} fields, got {len(row)}")
        for c in wanted:
            cell = row[pos[c]].strip()
            if cell == "" or cell.lower() in ("na", "nan"):
                raise SchemaError(f"row {r}: missing value in column {c}")
            try:
                table[c][r - 1] = float(cell)
            except ValueError:
                raise SchemaError(f"row {r}: non-numeric value {cell!r} in column {c}") from None
    for c in wanted:
        bad = np.flatnonzero(table[c] != np.round(table[c]))
        if c != "age" and bad.size:
            raise SchemaError(f"row {bad[0] + 1}: column {c} must be integer coded")
        if c != "age":
            table[c] = table[c].astype(np.int64)
    return build_dataset(table, factors=factors), covariates


def write_dataset(dataset, path):
    table = dataset.to_table()
    names = list(table)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in zip(*(table[c] for c in names)):
            writer.writerow([fmt(v) for v in row])


# ---------------------------------------------------------------------------
# Spec files
# ---------------------------------------------------------------------------

SPEC_KEYS = {
    "truncation": int,
    "kappa": "floats",
    "sigma_shape": float,
    "sigma_rate": float,
    "alpha_shape": float,
    "alpha_rate": float,
    "intercepts": str,
    "functional": str,
    "prior_mean": "floats",
    "prior_cov": "floats",
}
CHAIN_KEYS = {"iterations": int, "burnin": int, "thin": int, "seed": int}
OTHER_KEYS = {"covariates": str}


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def read_spec_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Returns a dict of typed values.  ``prior_cov = improper`` (the default)
    keeps the flat prior; otherwise ``prior_cov`` lists either p variances
    (diagonal) or all p*p entries row-major.
    """
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SchemaError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            kind = {**SPEC_KEYS, **CHAIN_KEYS, **OTHER_KEYS}.get(key)
            if kind is None:
                raise SchemaError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                if key == "prior_cov" and value.lower() == "improper":
                    out[key] = None
                elif kind == "floats":
                    out[key] = _floats(value)
                else:
                    out[key] = kind(value)
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def model_spec_from_settings(settings, p):
    kwargs = {k: v for k, v in settings.items() if k in SPEC_KEYS}
    if "kappa" in kwargs:
        kwargs["kappa"] = kwargs["kappa"][0] if len(kwargs["kappa"]) == 1 else tuple(kwargs["kappa"])
    if kwargs.get("prior_mean") is not None:
        kwargs["prior_mean"] = np.asarray(kwargs["prior_mean"])
    cov = kwargs.get("prior_cov")
    if cov is not None:
        cov = np.asarray(cov, dtype=float)
        if cov.size == p:
            cov = np.diag(cov)
        elif cov.size == p * p:
            cov = cov.reshape(p, p)
        else:
            raise SchemaError(f"prior_cov needs {p} or {p * p} entries, got {cov.size}")
        kwargs["prior_cov"] = cov
    return ModelSpec(**kwargs)


# ---------------------------------------------------------------------------
# Draws files
# ---------------------------------------------------------------------------


def draws_columns(draws):
    names, matrix = trace_columns(draws)
    cols = [matrix[:, j] for j in range(matrix.shape[1])]
    names = list(names)
    for i in range(draws.S.shape[1]):
        names.append(f"S.{i + 1}")
        cols.append(draws.S[:, i] + 1)
    if draws.V is not None:
        for h in range(draws.V.shape[1]):
            names.append(f"V.{h + 1}")
            cols.append(draws.V[:, h])
    if draws.coef is not None:
        for k, level in enumerate(draws.levels):
            for j in range(3):
                names.append(f"coef{level}.c{j}")
                cols.append(draws.coef[:, k, j])
    return names, cols


def write_draws(draws, path):
    """Versioned header, a JSON layout line, then one CSV row per draw."""
    meta = {
        "intercepts": draws.intercept_mode,
        "functional": draws.functional_mode,
        "levels": list(draws.levels),
        "grids": [np.asarray(g).tolist() for g in draws.grids],
        "covariates": list(draws.covariate_names),
        "n_groups": draws.n_groups,
        "n_atoms": int(draws.theta.shape[1]),
        "n_draws": draws.n_draws,
    }
    names, cols = draws_columns(draws)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"{DRAWS_MAGIC} {DRAWS_VERSION}\n")
        fh.write("#layout " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        int_cols = {j for j, n in enumerate(names) if n.startswith("S.")}
        for t in range(draws.n_draws):
            writer.writerow([str(int(c[t])) if j in int_cols else repr(float(c[t]))
                             for j, c in enumerate(cols)])


def read_draws(path):
    """Inverse of :func:`write_draws`; raises FormatError on any defect."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = fh.read().split("\n")
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: unreadable draws file ({exc})") from None
    if not lines or not lines[0].startswith(DRAWS_MAGIC):
        raise FormatError(f"{path}: line 1: not an npglm draws file")
    try:
        version = int(lines[0].split()[1])
    except (IndexError, ValueError):
        raise FormatError(f"{path}: line 1: malformed version header") from None
    if version != DRAWS_VERSION:
        raise FormatError(f"{path}: line 1: version {version}, expected {DRAWS_VERSION}")
    if len(lines) < 3 or not lines[1].startswith("#layout "):
        raise FormatError(f"{path}: line 2: missing layout record")
    try:
        meta = json.loads(lines[1][len("#layout "):])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line 2: bad layout record ({exc})") from None
    body = lines[2:]
    if body and body[-1] == "":
        body = body[:-1]
    reader = csv.reader(body)
    header = next(reader)
    data = []
    for lineno, row in enumerate(reader, start=4):
        if len(row) != len(header):
            raise FormatError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            data.append([float(v) for v in row])
        except ValueError:
            raise FormatError(f"{path}: line {lineno}: non-numeric field") from None
    if len(data) != meta.get("n_draws", len(data)):
        raise FormatError(f"{path}: expected {meta['n_draws']} draws, found {len(data)}")
    matrix = np.array(data, dtype=float).reshape(len(data), len(header))
    col = {name: matrix[:, j] for j, name in enumerate(header)}

    def block(names):
        try:
            return np.column_stack([col[n] for n in names]) if names else np.zeros((len(data), 0))
        except KeyError as exc:
            raise FormatError(f"{path}: missing column {exc.args[0]}") from None

    levels = tuple(meta["levels"])
    grids = tuple(np.asarray(g, dtype=float) for g in meta["grids"])
    G, H = meta["n_groups"], meta["n_atoms"]
    intercepts, functional = meta["intercepts"], meta["functional"]
    f = []
    if functional != "none":
        for level, grid in zip(levels, grids):
            f.append(block([f"f{level}.age{grid_label(x)}" for x in grid]))
    coef = None
    if functional == "parabolic":
        coef = block([f"coef{lev}.c{j}" for lev in levels for j in range(3)]).reshape(-1, len(levels), 3)
    return PosteriorDraws(
        beta=block([f"beta.{n}" for n in meta["covariates"]]),
        f=f,
        S=block([f"S.{i + 1}" for i in range(G)]).astype(np.int64) - 1,
        V=block([f"V.{h + 1}" for h in range(H)]) if intercepts == "dp" else None,
        theta=block([f"theta.{h + 1}" for h in range(H)]),
        sigma_inv=block(["sigma2.inv"])[:, 0] if intercepts != "none" else None,
        alpha=block(["alpha"])[:, 0] if intercepts == "dp" else None,
        coef=coef,
        intercept_mode=intercepts,
        functional_mode=functional,
        grids=grids,
        levels=levels,
        covariate_names=tuple(meta["covariates"]),
        metadata={"source": str(path)},
    )


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def write_table(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_matrix(path, header, matrix):
    write_table(path, header, [list(r) for r in np.asarray(matrix)])
