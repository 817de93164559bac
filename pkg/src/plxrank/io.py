"""Plain-text formats for features, profiles, parameters and reports.

Alternatives and agents are 1-based in files and 0-based in memory. Floats
are written with ``repr`` so a save/load round trip is exact. Blank lines and
lines starting with ``#`` are ignored everywhere.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Iterable

import numpy as np

from .data import L_WAY, TOP_L, FeatureTensor, MixtureParams, Profile
from .errors import DimensionError, ParseError
from .identifiability import kron_lift

REPORT_COLUMNS = ("n", "trial", "estimator", "metric", "value", "ci_halfwidth", "seconds")

_HEADER = re.compile(r"(\w+)=(\S+)")


def _fmt(x) -> str:
    return repr(float(x))


def _lines(path):
    """Yield ``(line_number, stripped_text)`` for content lines."""
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            text = raw.strip()
            if text and not text.startswith("#"):
                yield no, text


def _header(no: int, text: str, path, required: Iterable[str]) -> dict:
    fields = dict(_HEADER.findall(text))
    for key in required:
        if key not in fields:
            raise ParseError(f"header is missing '{key}=' (got {text!r})", str(path), no)
    return fields


def _int(value: str, what: str, path, no: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {value!r}", str(path), no) from None


def _floats(text: str, count: int | None, path, no: int) -> list[float]:
    parts = text.split()
    if count is not None and len(parts) != count:
        raise ParseError(f"expected {count} numbers, found {len(parts)}", str(path), no)
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"bad number: {exc}", str(path), no) from None


# ---------------------------------------------------------------- features


def save_features(path, features: FeatureTensor) -> None:
    """Header ``m= d= n=``, then per agent an ``agent <j>`` line and d rows of m values."""
    n, m, d = features.values.shape
    out = [f"m={m} d={d} n={n}"]
    for j in range(n):
        out.append(f"agent {j + 1}")
        for r in range(d):
            out.append(" ".join(_fmt(v) for v in features.values[j, :, r]))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def load_features(path) -> FeatureTensor:
    it = _lines(path)
    try:
        no, text = next(it)
    except StopIteration:
        raise ParseError("empty features file", str(path)) from None
    h = _header(no, text, path, ("m", "d", "n"))
    m, d, n = (_int(h[k], k, path, no) for k in ("m", "d", "n"))
    values = np.empty((n, m, d))
    j, r = -1, d
    for no, text in it:
        if text.startswith("agent"):
            if r != d:
                raise ParseError(f"agent {j + 1} has {r} feature rows, expected {d}", str(path), no)
            parts = text.split()
            idx = _int(parts[1] if len(parts) > 1 else "", "agent id", path, no)
            if idx != j + 2:
                raise ParseError(f"expected agent {j + 2}, found agent {idx}", str(path), no)
            if idx > n:
                raise ParseError(f"agent {idx} exceeds header n={n}", str(path), no)
            j, r = idx - 1, 0
            continue
        if j < 0:
            raise ParseError("feature row before any 'agent' line", str(path), no)
        if r >= d:
            raise ParseError(f"agent {j + 1} has more than d={d} feature rows", str(path), no)
        values[j, :, r] = _floats(text, m, path, no)
        r += 1
    if j != n - 1 or r != d:
        raise ParseError(f"file ends after agent {j + 1} row {r}; header promised n={n}, d={d}", str(path))
    return FeatureTensor(values)


def save_matrix(path, A) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    out = [f"rows={A.shape[0]} cols={A.shape[1]}"]
    out += [" ".join(_fmt(v) for v in row) for row in A]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def load_matrix(path) -> np.ndarray:
    it = _lines(path)
    try:
        no, text = next(it)
    except StopIteration:
        raise ParseError("empty matrix file", str(path)) from None
    h = _header(no, text, path, ("rows", "cols"))
    rows, cols = _int(h["rows"], "rows", path, no), _int(h["cols"], "cols", path, no)
    data = [_floats(t, cols, path, k) for k, t in it]
    if len(data) != rows:
        raise ParseError(f"expected {rows} rows, found {len(data)}", str(path))
    return np.array(data, dtype=float).reshape(rows, cols)


def load_bilinear(y_path, z_path) -> FeatureTensor:
    """Agent matrix Y (L x n) and alternative matrix Z (K x m), lifted to per-agent features."""
    return kron_lift(load_matrix(y_path), load_matrix(z_path))


# ---------------------------------------------------------------- profiles


def save_profile(path, profile: Profile) -> None:
    out = [f"kind={profile.kind} m={profile.m}"]
    for o in profile:
        items = o.prefix if profile.kind == TOP_L else o.ranking
        out.append(f"{o.agent + 1}: " + " > ".join(str(i + 1) for i in items))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def load_profile(path, n_agents: int | None = None) -> Profile:
    """Read ``agent: i1 > i2 > ...`` lines. With ``n_agents`` every agent id is range-checked."""
    it = _lines(path)
    try:
        no, text = next(it)
    except StopIteration:
        raise ParseError("empty profile file", str(path)) from None
    h = _header(no, text, path, ("kind", "m"))
    kind, m = h["kind"], _int(h["m"], "m", path, no)
    if kind not in (TOP_L, L_WAY):
        raise ParseError(f"kind must be {TOP_L} or {L_WAY}, got {kind!r}", str(path), no)
    lo, hi = (1, m - 1) if kind == TOP_L else (2, m)
    agents, ranked, lengths = [], [], []
    for no, text in it:
        head, sep, body = text.partition(":")
        if not sep:
            raise ParseError("expected 'agent: i1 > i2 > ...'", str(path), no)
        agent = _int(head.strip(), "agent id", path, no)
        if agent < 1 or (n_agents is not None and agent > n_agents):
            bound = f"[1, {n_agents}]" if n_agents is not None else ">= 1"
            raise ParseError(f"agent {agent} out of range {bound}", str(path), no)
        items = [_int(t.strip(), "alternative", path, no) for t in body.split(">")]
        if any(not 1 <= i <= m for i in items):
            raise ParseError(f"alternative index out of range [1, {m}]", str(path), no)
        if len(set(items)) != len(items):
            raise ParseError("order repeats an alternative", str(path), no)
        if not lo <= len(items) <= hi:
            raise ParseError(f"{kind} order length {len(items)} outside [{lo}, {hi}]", str(path), no)
        seen = {i - 1 for i in items}
        agents.append(agent - 1)
        ranked.append([i - 1 for i in items] + [i for i in range(m) if i not in seen])
        lengths.append(len(items))
    return Profile(agents, np.array(ranked, dtype=np.int64).reshape(len(agents), m), lengths, m, kind)


# ---------------------------------------------------------------- parameters


def save_params(path, params: MixtureParams, m: int | None = None) -> None:
    """``k= d= [m=]`` header, an ``alpha:`` line, k ``beta:`` lines and optionally ``phi:``."""
    if m is None and params.phi is not None:
        m = params.phi.shape[0] + 1
    head = f"k={params.k} d={params.d}" + (f" m={m}" if m is not None else "")
    out = [head, "alpha: " + " ".join(_fmt(a) for a in params.alpha)]
    out += ["beta: " + " ".join(_fmt(b) for b in row) for row in params.betas]
    if params.phi is not None:
        out.append("phi: " + " ".join(_fmt(p) for p in params.phi))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def load_params(path) -> MixtureParams:
    it = _lines(path)
    try:
        no, text = next(it)
    except StopIteration:
        raise ParseError("empty parameter file", str(path)) from None
    h = _header(no, text, path, ("k", "d"))
    k, d = _int(h["k"], "k", path, no), _int(h["d"], "d", path, no)
    m = _int(h["m"], "m", path, no) if "m" in h else None
    alpha, betas, phi = None, [], None
    for no, text in it:
        label, sep, body = text.partition(":")
        label = label.strip()
        if not sep:
            raise ParseError("expected 'label: values'", str(path), no)
        if label == "alpha":
            alpha = _floats(body, k, path, no)
        elif label == "beta":
            betas.append(_floats(body, d, path, no))
        elif label == "phi":
            phi = _floats(body, m - 1 if m is not None else None, path, no)
        else:
            raise ParseError(f"unknown label {label!r}", str(path), no)
    if alpha is None:
        alpha = [1.0] if k == 1 else None
    if alpha is None:
        raise ParseError("missing 'alpha:' line", str(path))
    if len(betas) != k:
        raise ParseError(f"expected {k} beta lines, found {len(betas)}", str(path))
    try:
        return MixtureParams(np.array(alpha), np.array(betas), None if phi is None else np.array(phi))
    except (DimensionError, ValueError) as exc:
        raise ParseError(str(exc), str(path)) from None


def load_weight_table(path) -> dict[int, float]:
    """Lines ``l w`` mapping an order length to its pair weight."""
    table = {}
    for no, text in _lines(path):
        parts = text.split()
        if len(parts) != 2:
            raise ParseError("expected 'l w'", str(path), no)
        l = _int(parts[0], "length", path, no)
        w = _floats(parts[1], 1, path, no)[0]
        if w <= 0:
            raise ParseError(f"weight for l={l} must be positive", str(path), no)
        table[l] = w
    if not table:
        raise ParseError("empty weight table", str(path))
    return table


# ---------------------------------------------------------------- reports


def write_report(path, rows: Iterable[dict]) -> None:
    """CSV with columns ``n,trial,estimator,metric,value,ci_halfwidth,seconds``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _cell(row.get(k, "")) for k in REPORT_COLUMNS})


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return _fmt(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def read_report(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ParseError(f"report header must be {','.join(REPORT_COLUMNS)}", str(path), 1)
        return list(reader)
