"""JSON file formats for operators, strategies, games, and certificates.

All numeric values are written with 12 significant digits, and object keys
are emitted in sorted order, so identical inputs serialize to identical
bytes.  Matrices are stored as ``{"row_dims", "col_dims", "entries"}`` with
row-major ``[re, im]`` entry pairs.
"""

from __future__ import annotations

import json
from math import prod

import numpy as np

from . import sdp
from .localops import CONES, PartySpaces, SeparableDecomposition
from .strategies import (
    CO_STRATEGY,
    STRATEGY,
    Channel,
    MeasuringStrategy,
    OperationalStrategy,
    RoundSpaces,
    Strategy,
)


def _sig12(x: float) -> float:
    if x == 0:
        return 0.0
    return float(f"{x:.12g}")


def canonical(obj):
    """Recursively round floats to 12 significant digits for stable output."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _sig12(float(obj))
    return obj


def dumps(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, separators=(",", ":")) + "\n"


def save(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

def matrix_to_obj(mat, row_dims=None, col_dims=None) -> dict:
    mat = np.atleast_2d(np.asarray(mat, dtype=np.complex128))
    rows, cols = mat.shape
    row_dims = [rows] if row_dims is None else [int(d) for d in row_dims]
    col_dims = [cols] if col_dims is None else [int(d) for d in col_dims]
    if prod(row_dims) != rows or prod(col_dims) != cols:
        raise ValueError("declared factor dimensions do not match the matrix shape")
    flat = mat.reshape(-1)
    return {
        "row_dims": row_dims,
        "col_dims": col_dims,
        "entries": [[float(v.real), float(v.imag)] for v in flat],
    }


def matrix_from_obj(obj) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    row_dims = tuple(int(d) for d in obj["row_dims"])
    col_dims = tuple(int(d) for d in obj["col_dims"])
    rows, cols = prod(row_dims), prod(col_dims)
    entries = obj["entries"]
    if len(entries) != rows * cols:
        raise ValueError(f"expected {rows * cols} entries, found {len(entries)}")
    flat = np.array([complex(re, im) for re, im in entries], dtype=np.complex128)
    return flat.reshape(rows, cols), row_dims, col_dims


def hermitian_from_obj(obj) -> tuple[np.ndarray, tuple[int, ...]]:
    mat, row_dims, col_dims = matrix_from_obj(obj)
    if row_dims != col_dims:
        raise ValueError("a Hermitian operator must declare equal row and column factors")
    return mat, row_dims


# ---------------------------------------------------------------------------
# strategies
# ---------------------------------------------------------------------------

def strategy_to_obj(s) -> dict:
    out = {
        "rounds": s.spaces.rounds,
        "in_dims": list(s.spaces.in_dims),
        "out_dims": list(s.spaces.out_dims),
        "kind": s.kind,
    }
    dims = list(s.spaces.factors) or [1]
    if isinstance(s, MeasuringStrategy):
        out["outcomes"] = [{"label": label, "q": matrix_to_obj(q, dims, dims)}
                           for label, q in zip(s.outcomes, s.qs)]
    else:
        out["q"] = matrix_to_obj(s.q, dims, dims)
    return out


def strategy_from_obj(obj):
    spaces = RoundSpaces(tuple(obj["in_dims"]), tuple(obj["out_dims"]))
    if int(obj["rounds"]) != spaces.rounds:
        raise ValueError("declared round count does not match the dimension lists")
    kind = obj["kind"]
    if kind not in (STRATEGY, CO_STRATEGY):
        raise ValueError(f"unknown kind {kind!r}")
    if "outcomes" in obj:
        labels, qs = [], []
        for entry in obj["outcomes"]:
            labels.append(entry["label"])
            qs.append(hermitian_from_obj(entry["q"])[0])
        return MeasuringStrategy(spaces, kind, tuple(labels), tuple(qs))
    return Strategy(spaces, kind, hermitian_from_obj(obj["q"])[0])


def operational_to_obj(op: OperationalStrategy) -> dict:
    out = {
        "rounds": op.spaces.rounds,
        "in_dims": list(op.spaces.in_dims),
        "out_dims": list(op.spaces.out_dims),
        "kind": op.kind,
        "channels": [
            {
                "in_dims": list(ch.in_dims),
                "out_dims": list(ch.out_dims),
                "kraus": [matrix_to_obj(k, ch.out_dims, ch.in_dims) for k in ch.kraus],
            }
            for ch in op.channels
        ],
    }
    if op.measurement is not None:
        out["measurement"] = [{"label": label, "p": matrix_to_obj(p)}
                              for label, p in op.measurement]
    return out


def operational_from_obj(obj) -> OperationalStrategy:
    spaces = RoundSpaces(tuple(obj["in_dims"]), tuple(obj["out_dims"]))
    channels = []
    for ch in obj["channels"]:
        kraus = tuple(matrix_from_obj(k)[0] for k in ch["kraus"])
        channels.append(Channel(kraus, tuple(ch["in_dims"]), tuple(ch["out_dims"])))
    measurement = None
    if "measurement" in obj:
        measurement = tuple((m["label"], matrix_from_obj(m["p"])[0])
                            for m in obj["measurement"])
    return OperationalStrategy(spaces, obj["kind"], tuple(channels), measurement)


# ---------------------------------------------------------------------------
# separable decompositions
# ---------------------------------------------------------------------------

def decomposition_to_obj(dec: SeparableDecomposition) -> dict:
    return {
        "parties": dec.spaces.parties,
        "party_in_dims": list(dec.spaces.in_dims),
        "party_out_dims": list(dec.spaces.out_dims),
        "cones": list(dec.cones),
        "terms": [
            {"weight": float(w), "factors": [matrix_to_obj(f) for f in factors]}
            for w, factors in dec.terms
        ],
    }


def decomposition_from_obj(obj) -> SeparableDecomposition:
    spaces = PartySpaces(tuple(obj["party_in_dims"]), tuple(obj["party_out_dims"]))
    cones = tuple(obj["cones"])
    if len(cones) != spaces.parties or any(c not in CONES for c in cones):
        raise ValueError("invalid cone tags")
    terms = []
    for t in obj["terms"]:
        factors = tuple(matrix_from_obj(f)[0] for f in t["factors"])
        if len(factors) != spaces.parties:
            raise ValueError("each term needs one factor per party")
        terms.append((float(t["weight"]), factors))
    return SeparableDecomposition(spaces, cones, tuple(terms))


# ---------------------------------------------------------------------------
# semidefinite problems
# ---------------------------------------------------------------------------

def _herm_to_vec_basis(d: int) -> np.ndarray:
    from .linalg import herm_basis, vec_col
    return np.column_stack([vec_col(b) for b in herm_basis(d)])


def _block_diag(mats) -> np.ndarray:
    total = sum(m.shape[0] for m in mats)
    out = np.zeros((total, total), dtype=np.complex128)
    off = 0
    for m in mats:
        out[off:off + m.shape[0], off:off + m.shape[0]] = m
        off += m.shape[0]
    return out


def problem_to_obj(problem: sdp.SdpProblem) -> dict:
    """Problem triple as complex matrices: phi acts on column-stacked operators."""
    phi = problem.phi
    c_in = _block_diag([_herm_to_vec_basis(d) for d in phi.in_dims])
    c_out = _block_diag([_herm_to_vec_basis(d) for d in phi.out_dims])
    k = c_out @ phi.matrix() @ c_in.conj().T
    return {
        "blocks_in": [[d] for d in phi.in_dims],
        "blocks_out": [[d] for d in phi.out_dims],
        "phi": matrix_to_obj(k),
        "a": matrix_to_obj(_block_diag(problem.a)),
        "b": matrix_to_obj(_block_diag(problem.b)),
    }


def _split_diag(mat, dims):
    out = []
    off = 0
    for d in dims:
        out.append(mat[off:off + d, off:off + d])
        off += d
    return out


def problem_from_obj(obj) -> sdp.SdpProblem:
    in_dims = tuple(prod(shape) for shape in obj["blocks_in"])
    out_dims = tuple(prod(shape) for shape in obj["blocks_out"])
    k = matrix_from_obj(obj["phi"])[0]
    c_in = _block_diag([_herm_to_vec_basis(d) for d in in_dims])
    c_out = _block_diag([_herm_to_vec_basis(d) for d in out_dims])
    m = c_out.conj().T @ k @ c_in
    if np.abs(m.imag).max() > 1e-10:
        raise ValueError("the stored map is not Hermitian-preserving")
    m = m.real
    blocks = {}
    ro = np.cumsum([0] + [d * d for d in out_dims])
    co = np.cumsum([0] + [d * d for d in in_dims])
    for i in range(len(out_dims)):
        for j in range(len(in_dims)):
            sub = m[ro[i]:ro[i + 1], co[j]:co[j + 1]]
            if np.any(sub):
                blocks[(i, j)] = sub.copy()
    phi = sdp.HermitianMap(in_dims, out_dims, blocks)
    a = _split_diag(matrix_from_obj(obj["a"])[0], in_dims)
    b = _split_diag(matrix_from_obj(obj["b"])[0], out_dims)
    return sdp.SdpProblem(phi, a, b)
