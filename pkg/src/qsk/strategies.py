"""Finite-round interaction strategies and co-strategies.

A party that receives messages on input spaces X_1..X_r and replies on output
spaces Y_1..Y_r is represented by a single PSD operator on
Y_1 (x) ... (x) Y_r (x) X_1 (x) ... (x) X_r: the Choi matrix of the composed
round maps with the final memory traced out.  The partner in the interaction
("co-strategy", who sends the X messages and receives the Y messages) is
represented on the same space through the Choi matrix of the adjoint of its
composed map, so that outcome probabilities are plain inner products.

Operationally a strategy is a list of channels

    round 1:  X_1           -> Y_1 (x) Z_1
    round i:  X_i (x) Z_i-1 -> Y_i (x) Z_i

with an optional measurement on the final memory Z_r.  A co-strategy sends
first, so its operational description is the same shape shifted by one round:
r + 1 channels over input spaces (1, Y_1, .., Y_r) and output spaces
(X_1, .., X_r, 1), the first channel being the state preparation and the last
absorbing Y_r into the measured memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from . import linalg, sdp
from .linalg import Array, fro_norm

STRATEGY = "strategy"
CO_STRATEGY = "costrategy"
KINDS = (STRATEGY, CO_STRATEGY)


def other_kind(kind: str) -> str:
    return CO_STRATEGY if kind == STRATEGY else STRATEGY


@dataclass(frozen=True)
class RoundSpaces:
    """Input and output message dimensions, one entry per round."""

    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))
        object.__setattr__(self, "out_dims", tuple(int(d) for d in self.out_dims))
        if len(self.in_dims) != len(self.out_dims):
            raise ValueError("need one input and one output dimension per round")
        if any(d < 1 for d in self.in_dims + self.out_dims):
            raise ValueError("message dimensions must be >= 1")

    @property
    def rounds(self) -> int:
        return len(self.in_dims)

    @property
    def factors(self) -> tuple[int, ...]:
        """Factor dimensions of the representation space (outputs first)."""
        return self.out_dims + self.in_dims

    @property
    def dim_in(self) -> int:
        return prod(self.in_dims)

    @property
    def dim_out(self) -> int:
        return prod(self.out_dims)

    @property
    def dim(self) -> int:
        return self.dim_in * self.dim_out

    def truncated(self, k: int) -> "RoundSpaces":
        if not 0 <= k <= self.rounds:
            raise ValueError(f"cannot truncate {self.rounds} rounds to {k}")
        return RoundSpaces(self.in_dims[:k], self.out_dims[:k])


@dataclass(frozen=True, eq=False)
class Strategy:
    spaces: RoundSpaces
    kind: str
    q: Array

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        q, _ = linalg.hermitize(np.atleast_2d(np.asarray(self.q, dtype=np.complex128)), 1e-6)
        if q.shape[0] != self.spaces.dim:
            raise ValueError(f"representation has dimension {q.shape[0]}, "
                             f"expected {self.spaces.dim}")
        object.__setattr__(self, "q", q)


@dataclass(frozen=True, eq=False)
class MeasuringStrategy:
    spaces: RoundSpaces
    kind: str
    outcomes: tuple
    qs: tuple[Array, ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if len(self.outcomes) != len(self.qs) or not self.outcomes:
            raise ValueError("need one operator per outcome label")
        qs = tuple(linalg.hermitize(np.atleast_2d(np.asarray(q, dtype=np.complex128)), 1e-6)[0]
                   for q in self.qs)
        if any(q.shape[0] != self.spaces.dim for q in qs):
            raise ValueError("outcome operators must live on the full representation space")
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "qs", qs)

    def total(self) -> Strategy:
        """The non-measuring strategy obtained by summing all outcomes."""
        return Strategy(self.spaces, self.kind, sum(self.qs))

    def outcome(self, label) -> Array:
        return self.qs[self.outcomes.index(label)]


@dataclass(frozen=True, eq=False)
class Channel:
    """A completely positive map given by Kraus operators with factored shapes."""

    kraus: tuple[Array, ...]
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        kraus = tuple(linalg.as_complex(k) for k in self.kraus)
        if not kraus:
            raise ValueError("a channel needs at least one Kraus operator")
        din, dout = prod(self.in_dims), prod(self.out_dims)
        if any(k.shape != (dout, din) for k in kraus):
            raise ValueError(f"Kraus operators must be {dout} x {din}")
        object.__setattr__(self, "kraus", kraus)
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))
        object.__setattr__(self, "out_dims", tuple(int(d) for d in self.out_dims))

    @property
    def dim_in(self) -> int:
        return prod(self.in_dims)

    @property
    def dim_out(self) -> int:
        return prod(self.out_dims)

    def choi(self) -> Array:
        return linalg.choi_from_kraus(self.kraus)

    def is_cptp(self, tol: float = linalg.DEFAULT_TOL) -> bool:
        j = self.choi()
        ok_psd, _ = linalg.psd_check(j, tol)
        tp = linalg.partial_trace(j, (self.dim_out, self.dim_in), [0])
        return ok_psd and fro_norm(tp - np.eye(self.dim_in)) <= tol * max(1.0, fro_norm(j))


@dataclass(frozen=True, eq=False)
class OperationalStrategy:
    """Round-by-round channels, plus an optional final measurement.

    For ``kind == "costrategy"`` the channel list follows the shifted layout
    described in the module docstring (r + 1 channels, preparation first).
    """

    spaces: RoundSpaces
    kind: str
    channels: tuple[Channel, ...]
    measurement: tuple | None = None  # tuple of (label, operator) pairs

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        object.__setattr__(self, "channels", tuple(self.channels))
        ins, outs = self._shifted_spaces()
        chans = self.channels
        if len(chans) != len(ins):
            raise ValueError(f"expected {len(ins)} channels, got {len(chans)}")
        mem = 1
        for i, ch in enumerate(chans):
            want_in = (ins[i],) if i == 0 else (ins[i], mem)
            if ch.in_dims != want_in:
                raise ValueError(f"channel {i} expects input factors {ch.in_dims}, "
                                 f"interaction requires {want_in}")
            if len(ch.out_dims) != 2 or ch.out_dims[0] != outs[i]:
                raise ValueError(f"channel {i} must output factors ({outs[i]}, memory)")
            mem = ch.out_dims[1]
        if self.measurement is not None:
            meas = tuple((label, linalg.hermitize(np.asarray(p, dtype=np.complex128), 1e-6)[0])
                         for label, p in self.measurement)
            if any(p.shape[0] != mem for _, p in meas):
                raise ValueError("measurement operators must act on the final memory")
            total = sum(p for _, p in meas)
            if fro_norm(total - np.eye(mem)) > 1e-6 * max(1.0, mem):
                raise ValueError("measurement operators must sum to the identity")
            object.__setattr__(self, "measurement", meas)

    def _shifted_spaces(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Per-channel (input message, output message) dimensions."""
        if self.kind == STRATEGY:
            return self.spaces.in_dims, self.spaces.out_dims
        return (1,) + self.spaces.out_dims, self.spaces.in_dims + (1,)

    @property
    def memory_dims(self) -> tuple[int, ...]:
        return tuple(ch.out_dims[1] for ch in self.channels)


# ---------------------------------------------------------------------------
# building the representation
# ---------------------------------------------------------------------------

def _permute_rows(mat: Array, row_dims, perm) -> Array:
    dims = tuple(row_dims)
    cols = mat.shape[1]
    tens = mat.reshape(dims + (cols,))
    return tens.transpose(tuple(perm) + (len(dims),)).reshape(mat.shape)


def _compose_kraus(channels, in_dims, out_dims) -> list[Array]:
    """Kraus operators of the composed map X_1..X_r -> Y_1..Y_r (x) Z_r."""
    r = len(channels)
    acc = [np.eye(1, dtype=np.complex128)]  # rows (memory), cols ()
    y_so_far: list[int] = []
    x_so_far: list[int] = []
    mem = 1
    for i, ch in enumerate(channels):
        dy_prev = prod(y_so_far)
        new_acc = []
        for k in acc:
            # append the incoming message to the input side
            widened = np.kron(k, np.eye(in_dims[i]))
            # rows currently (Y.., Z_{i-1}, X_i); channel wants (X_i, Z_{i-1})
            row_dims = tuple(y_so_far) + (mem, in_dims[i])
            n = len(row_dims)
            widened = _permute_rows(widened, row_dims, list(range(n - 2)) + [n - 1, n - 2])
            for b in ch.kraus:
                new_acc.append(np.kron(np.eye(dy_prev), b) @ widened)
        acc = new_acc
        y_so_far.append(out_dims[i])
        x_so_far.append(in_dims[i])
        mem = ch.out_dims[1]
    return acc


def _traced_choi(kraus, dim_y: int, dim_mem: int, dim_x: int,
                 meas: Array | None = None) -> Array:
    """Sum of vec-outer-products with the memory factor traced (or measured)."""
    out = np.zeros((dim_y * dim_x, dim_y * dim_x), dtype=np.complex128)
    for k in kraus:
        v = k.reshape(dim_y, dim_mem, dim_x)
        if meas is None:
            out += np.einsum("azx,bzw->axbw", v, v.conj()).reshape(out.shape)
        else:
            out += np.einsum("zw,awx,bzv->axbv", meas, v, v.conj()).reshape(out.shape)
    return (out + out.conj().T) / 2


def build_strategy(op: OperationalStrategy):
    """Representation of an operational description.

    Returns a :class:`Strategy` for non-measuring descriptions and a
    :class:`MeasuringStrategy` when a final measurement is present.
    """
    spaces = op.spaces
    ins, outs = op._shifted_spaces()
    kraus = _compose_kraus(op.channels, ins, outs)
    dim_y, dim_x = prod(outs), prod(ins)
    dim_mem = op.channels[-1].out_dims[1] if op.channels else 1

    def finish(mat: Array) -> Array:
        if op.kind == STRATEGY:
            return mat
        # adjoint representation: conjugate, then move the Y factors in front
        r = spaces.rounds
        dims = outs + ins  # (x_1..x_r, 1, 1, y_1..y_r)
        perm = list(range(r + 2, 2 * r + 2)) + list(range(r)) + [r, r + 1]
        return linalg.permute_systems(mat.conj(), dims, perm)

    if op.measurement is None:
        q = finish(_traced_choi(kraus, dim_y, dim_mem, dim_x))
        return Strategy(spaces, op.kind, q)
    qs = [finish(_traced_choi(kraus, dim_y, dim_mem, dim_x, meas=p))
          for _, p in op.measurement]
    labels = tuple(label for label, _ in op.measurement)
    return MeasuringStrategy(spaces, op.kind, labels, qs)


# ---------------------------------------------------------------------------
# validation and truncation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    valid: bool
    kind: str
    residuals: dict[str, float]
    max_residual: float
    min_eig: float
    chain: list[Array]
    rank: int


def _strategy_chain(q: Array, spaces: RoundSpaces) -> list[Array]:
    """Truncations of q to 0..r-1 rounds, recovered by partial traces."""
    r = spaces.rounds
    chain = []
    for k in range(r):
        traced = list(range(k, r)) + list(range(r + k, 2 * r))
        scale = prod(spaces.in_dims[k:])
        chain.append(linalg.partial_trace(q, spaces.factors, traced) / scale)
    return chain  # chain[k] is the k-round truncation


def validate(q, spaces: RoundSpaces, kind: str,
             tol: float = linalg.DEFAULT_TOL) -> ValidationReport:
    """Check the linear-constraint characterization of (co-)strategies.

    Failures are reported through the result, never thrown.  The chain of
    truncations used by the constraints is returned for reuse.
    """
    q = np.atleast_2d(np.asarray(q, dtype=np.complex128))
    r = spaces.rounds
    scale = max(1.0, fro_norm(q))
    residuals: dict[str, float] = {}
    residuals["hermitian"] = float(np.linalg.norm(q - q.conj().T)) / scale
    q = (q + q.conj().T) / 2
    lam = linalg.min_eig(q) if q.size > 1 else float(q[0, 0].real)
    residuals["psd"] = max(0.0, -lam) / scale
    chain: list[Array] = []

    if r == 0:
        residuals["normalization"] = abs(float(q[0, 0].real) - 1.0)
    elif kind == STRATEGY:
        chain = _strategy_chain(q, spaces)
        chain[0] = np.eye(1, dtype=np.complex128)  # the 0-round object is fixed
        for k in range(r, 0, -1):
            traced_y = list(range(k - 1, r))
            reduced = linalg.partial_trace(q, spaces.factors, traced_y)
            target = np.kron(chain[k - 1], np.eye(prod(spaces.in_dims[k - 1:])))
            residuals[f"round_{k}"] = fro_norm(reduced - target) / scale
    else:
        m, dims = q, list(spaces.factors)
        for k in range(r, 0, -1):
            y_pos = k - 1
            d_y = dims[y_pos]
            reduced = linalg.partial_trace(m, dims, [y_pos]) / d_y
            del dims[y_pos]
            rebuilt, _ = linalg.embed_identity(reduced, dims, (d_y,), (y_pos,))
            residuals[f"round_{k}"] = fro_norm(m - rebuilt) / scale
            x_pos = y_pos + k - 1  # X_k in the reduced factor list
            m = linalg.partial_trace(reduced, dims, [x_pos])
            del dims[x_pos]
            chain.append(m)
        residuals["normalization"] = abs(float(m[0, 0].real) - 1.0)
        chain = chain[::-1]  # chain[k] is the k-round truncation, k = 0..r-1

    max_residual = max(residuals.values())
    rank = int(np.linalg.matrix_rank(q, tol=max(tol, 1e-12) * scale, hermitian=True)) \
        if q.size > 1 else 1
    return ValidationReport(
        valid=bool(max_residual <= tol),
        kind=kind,
        residuals=residuals,
        max_residual=float(max_residual),
        min_eig=float(lam),
        chain=chain,
        rank=rank,
    )


def truncate(s: Strategy, k: int) -> Strategy:
    """The (co-)strategy obtained by terminating after k rounds."""
    r = s.spaces.rounds
    if not 0 <= k <= r:
        raise ValueError(f"cannot truncate {r} rounds to {k}")
    if k == r:
        return s
    report = validate(s.q, s.spaces, s.kind)
    if not report.valid:
        raise ValueError(f"cannot truncate an invalid {s.kind} "
                         f"(max residual {report.max_residual:.3e})")
    return Strategy(s.spaces.truncated(k), s.kind, report.chain[k])


def uniform_strategy(spaces: RoundSpaces, kind: str) -> Strategy:
    """The completely noisy valid (co-)strategy on the given spaces."""
    d = spaces.dim_out if kind == STRATEGY else spaces.dim_in
    return Strategy(spaces, kind, np.eye(spaces.dim) / d)


# ---------------------------------------------------------------------------
# interaction probabilities
# ---------------------------------------------------------------------------

def interaction_probability(s: MeasuringStrategy, t: MeasuringStrategy) -> Array:
    """Joint outcome probabilities of an interaction, as inner products.

    Rows follow ``s.outcomes``, columns ``t.outcomes``.  The two sides must
    have opposite kinds and identical round spaces.
    """
    if s.kind == t.kind:
        raise ValueError("an interaction pairs a strategy with a co-strategy")
    if s.spaces != t.spaces:
        raise ValueError("interaction partners must share the same round spaces")
    probs = np.empty((len(s.outcomes), len(t.outcomes)))
    for i, qa in enumerate(s.qs):
        for j, rb in enumerate(t.qs):
            probs[i, j] = linalg.inner(qa, rb)
    return probs


# ---------------------------------------------------------------------------
# maximum forcing probability
# ---------------------------------------------------------------------------

def chain_block_dims(spaces: RoundSpaces, kind: str) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Factor dims (y_part, x_part) of the constraint-chain blocks.

    Strategy chains live on (Y_1..Y_i, X_1..X_i); co-strategy chains on
    (Y_1..Y_{i-1}, X_1..X_i).
    """
    r = spaces.rounds
    if kind == STRATEGY:
        return [(spaces.out_dims[:i], spaces.in_dims[:i]) for i in range(1, r + 1)]
    return [(spaces.out_dims[:i - 1], spaces.in_dims[:i]) for i in range(1, r + 1)]


def add_strategy_chain_constraints(spaces: RoundSpaces, kind: str, blocks: list[Array]):
    """Constraint-block values whose negativity certifies chain feasibility.

    For ``kind == "strategy"`` (chain S_1..S_r) the blocks are
      Tr_{Y_1} S_1 - I,  Tr_{Y_i} S_i - S_{i-1} (x) I_{X_i}
    and feasibility means every block <= 0.  For co-strategy chains T_1..T_r,
      Tr(T_1) - 1,  Tr_{X_i} T_i - embed_{Y_{i-1}}(T_{i-1}).
    """
    r = spaces.rounds
    dims = chain_block_dims(spaces, kind)
    out = []
    if kind == STRATEGY:
        first = linalg.partial_trace(blocks[0], dims[0][0] + dims[0][1], [0])
        out.append(first - np.eye(spaces.in_dims[0]))
        for i in range(1, r):
            y_part, x_part = dims[i]
            reduced = linalg.partial_trace(blocks[i], y_part + x_part, [i])
            out.append(reduced - np.kron(blocks[i - 1], np.eye(spaces.in_dims[i])))
    else:
        out.append(np.array([[np.trace(blocks[0]).real - 1.0]], dtype=np.complex128))
        for i in range(1, r):
            y_part, x_part = dims[i]
            x_pos = len(y_part) + len(x_part) - 1
            reduced = linalg.partial_trace(blocks[i], y_part + x_part, [x_pos])
            prev_y, prev_x = dims[i - 1]
            embedded, _ = linalg.embed_identity(
                blocks[i - 1], prev_y + prev_x, (spaces.out_dims[i - 1],), (i - 1,))
            out.append(reduced - embedded)
    return out


def repair_chain(spaces: RoundSpaces, kind: str, blocks: list[Array]) -> list[Array]:
    """Enlarge an inequality-feasible chain so the constraints hold exactly.

    Adds the (nearly PSD) deficits back through a maximally mixed factor, the
    construction used to round solver output into bona fide (co-)strategies.
    """
    r = spaces.rounds
    dims = chain_block_dims(spaces, kind)
    fixed: list[Array] = []
    if kind == STRATEGY:
        for i in range(r):
            y_part, x_part = dims[i]
            d_y = spaces.out_dims[i]
            reduced = linalg.partial_trace(blocks[i], y_part + x_part, [i])
            target = np.eye(spaces.in_dims[0]) if i == 0 else \
                np.kron(fixed[i - 1], np.eye(spaces.in_dims[i]))
            deficit = target - reduced
            patch, _ = linalg.embed_identity(deficit / d_y, y_part[:-1] + x_part,
                                             (d_y,), (i,))
            fixed.append(blocks[i] + patch)
    else:
        for i in range(r):
            y_part, x_part = dims[i]
            d_x = spaces.in_dims[i]
            x_pos = len(y_part) + len(x_part) - 1
            reduced = linalg.partial_trace(blocks[i], y_part + x_part, [x_pos])
            if i == 0:
                deficit = np.array([[1.0 - np.trace(blocks[0]).real]])
            else:
                prev_y, prev_x = dims[i - 1]
                embedded, _ = linalg.embed_identity(
                    fixed[i - 1], prev_y + prev_x, (spaces.out_dims[i - 1],), (i - 1,))
                deficit = embedded - reduced
            fixed.append(blocks[i] + np.kron(deficit, np.eye(d_x) / d_x))
    return fixed


def shrink_super_chain(spaces: RoundSpaces, blocks: list[Array]) -> list[Array]:
    """Round a super-normalized strategy chain down to an exact one.

    Input blocks satisfy Tr_{Y_1} S_1 >= I and Tr_{Y_i} S_i >= S'_{i-1} (x) I;
    each round is conjugated as needed so the equalities hold exactly while
    positive semidefiniteness is preserved (unlike an additive correction,
    this is safe however large the surplus is).
    """
    r = spaces.rounds
    dims = chain_block_dims(spaces, STRATEGY)
    fixed: list[Array] = []
    for i in range(r):
        y_part, x_part = dims[i]
        d_y = spaces.out_dims[i]
        reduced = linalg.partial_trace(blocks[i], y_part + x_part, [i])
        target = np.eye(spaces.in_dims[0], dtype=np.complex128) if i == 0 else \
            np.kron(fixed[i - 1], np.eye(spaces.in_dims[i]))
        w = linalg.sqrtm_psd(target) @ linalg.inv_sqrtm_psd(reduced)
        w_big, _ = linalg.embed_identity(w, y_part[:-1] + x_part, (d_y,), (i,))
        fixed.append(w_big @ blocks[i] @ w_big.conj().T)
    return fixed


def chain_top_to_strategy(spaces: RoundSpaces, kind: str, top: Array) -> Strategy:
    """Final chain element -> full representation (co-strategies gain I_{Y_r})."""
    if kind == STRATEGY:
        return Strategy(spaces, kind, top)
    r = spaces.rounds
    y_part = spaces.out_dims[:r - 1]
    x_part = spaces.in_dims
    q, _ = linalg.embed_identity(top, y_part + x_part, (spaces.out_dims[r - 1],), (r - 1,))
    return Strategy(spaces, kind, q)


def forcing_problem(target: Array, spaces: RoundSpaces, kind: str) -> sdp.SdpProblem:
    """SDP whose optimum is max <target, R> over opposite-kind (co-)strategies R.

    ``kind`` names the kind of the measuring object being forced: the primal
    maximizes over the opponents, the dual finds the least p with
    target <= p x (valid object of ``kind``).
    """
    r = spaces.rounds
    opp = other_kind(kind)
    var_dims = chain_block_dims(spaces, opp)
    in_dims = [prod(y) * prod(x) for y, x in var_dims] + [spaces.dim]
    dom_dims = chain_block_dims(spaces, kind)
    if kind == STRATEGY:
        out_dims = [1] + [prod(y) * prod(x) for y, x in dom_dims[:-1]] + [spaces.dim]
    else:
        out_dims = [spaces.in_dims[0]] + [prod(y) * prod(x) for y, x in dom_dims[1:]] \
            + [spaces.dim]

    def fn(blocks):
        chain, top = blocks[:-1], blocks[-1]
        cons = add_strategy_chain_constraints(spaces, opp, chain)
        # re-zero the inhomogeneous parts: they belong in b, not the map
        if opp == STRATEGY:
            cons[0] = cons[0] + np.eye(spaces.in_dims[0])
        else:
            cons[0] = cons[0] + np.array([[1.0]])
        full = chain_top_to_strategy(spaces, opp, chain[-1]).q
        cons.append(top - full)
        return cons

    phi = sdp.HermitianMap.from_function(in_dims, out_dims, fn)
    a = [np.zeros((d, d)) for d in in_dims[:-1]] + [np.asarray(target, dtype=np.complex128)]
    if opp == STRATEGY:
        b = [np.eye(spaces.in_dims[0])] + [np.zeros((d, d)) for d in out_dims[1:]]
    else:
        b = [np.array([[1.0]])] + [np.zeros((d, d)) for d in out_dims[1:]]
    return sdp.SdpProblem(phi, a, b)


@dataclass
class MaxProbResult:
    probability: float
    witness: Strategy          # dominating object: target <= probability x witness
    forcing: Strategy          # opposite-kind optimizer achieving the maximum
    primal_value: float
    dual_value: float
    gap: float
    status: str


def max_output_probability(s: MeasuringStrategy, outcome,
                           tol: float = 1e-9, max_iter: int = 200) -> MaxProbResult:
    """Maximum probability an interacting partner can force the given outcome.

    Solved as a single SDP over scaled constraint chains; the primal optimum
    is the forcing probability and the dual optimum is the least p admitting
    a dominating (co-)strategy, reported together as a cross-check.
    """
    target = s.outcome(outcome)
    spaces, kind = s.spaces, s.kind
    if spaces.rounds == 0:
        p = float(np.real(target.reshape(-1)[0]))
        w = Strategy(spaces, kind, np.array([[1.0]]))
        return MaxProbResult(p, w, Strategy(spaces, other_kind(kind), np.array([[1.0]])),
                             p, p, 0.0, "optimal")

    problem = forcing_problem(target, spaces, kind)
    sol = sdp.solve(problem, tol=tol, max_iter=max_iter)
    if sol.status != "optimal":
        raise RuntimeError(f"forcing SDP did not converge: status {sol.status}")

    opp = other_kind(kind)
    forcing_chain = repair_chain(spaces, opp, sol.primal_x[:-1])
    forcing = chain_top_to_strategy(spaces, opp, forcing_chain[-1])

    p = float(sol.dual_value)
    # dual blocks: (p, W_1..W_{r-1}, top) for strategies, (T_1..T_r, top) for
    # co-strategies; the top multiplier doubles as the final chain element
    dom_chain_raw = sol.dual_y[1:] if kind == STRATEGY else sol.dual_y[:-1]
    if p > 1e-9:
        dom_chain = repair_chain(spaces, kind, [w / p for w in dom_chain_raw])
        witness = chain_top_to_strategy(spaces, kind, dom_chain[-1])
    else:
        witness = uniform_strategy(spaces, kind)
    return MaxProbResult(
        probability=min(max(p, 0.0), 1.0),
        witness=witness,
        forcing=forcing,
        primal_value=float(sol.primal_value),
        dual_value=float(sol.dual_value),
        gap=float(sol.gap),
        status=sol.status,
    )


# ---------------------------------------------------------------------------
# operational interaction simulator (oracle for the inner-product law)
# ---------------------------------------------------------------------------

class _Register:
    """Density matrix with named tensor factors."""

    def __init__(self):
        self.mat = np.eye(1, dtype=np.complex128)
        self.dims: list[int] = []
        self.labels: list[str] = []

    def add(self, state: Array, dims, labels):
        self.mat = np.kron(self.mat, state)
        self.dims += list(dims)
        self.labels += list(labels)

    def _front(self, labels):
        idx = [self.labels.index(l) for l in labels]
        rest = [i for i in range(len(self.dims)) if i not in idx]
        perm = idx + rest
        self.mat = linalg.permute_systems(self.mat, tuple(self.dims), perm)
        self.dims = [self.dims[p] for p in perm]
        self.labels = [self.labels[p] for p in perm]
        return prod(self.dims[:len(idx)])

    def apply(self, channel: Channel, in_labels, out_labels):
        d_in = self._front(in_labels)
        if d_in != channel.dim_in:
            raise ValueError("channel input does not match the register")
        d_rest = prod(self.dims[len(in_labels):]) if self.dims[len(in_labels):] else 1
        out = np.zeros((channel.dim_out * d_rest,) * 2, dtype=np.complex128)
        for k in channel.kraus:
            big = np.kron(k, np.eye(d_rest))
            out += big @ self.mat @ big.conj().T
        self.mat = out
        self.dims = list(channel.out_dims) + self.dims[len(in_labels):]
        self.labels = list(out_labels) + self.labels[len(in_labels):]

    def joint_probability(self, ops_a, ops_b, label_a, label_b):
        self._front([label_a, label_b])
        d_rest = prod(self.dims[2:]) if self.dims[2:] else 1
        rho = linalg.partial_trace(self.mat, tuple(self.dims), range(2, len(self.dims))) \
            if d_rest > 1 else self.mat
        probs = np.empty((len(ops_a), len(ops_b)))
        for i, pa in enumerate(ops_a):
            for j, pb in enumerate(ops_b):
                probs[i, j] = np.real(np.trace(np.kron(pa, pb) @ rho))
        return probs


def simulate_joint_distribution(op_s: OperationalStrategy,
                                op_c: OperationalStrategy) -> Array:
    """Exact joint outcome distribution of the operational interaction.

    ``op_s`` must be a measuring strategy and ``op_c`` a measuring co-strategy
    on the same round spaces.  Rows follow the strategy's outcome order.
    """
    if op_s.kind != STRATEGY or op_c.kind != CO_STRATEGY:
        raise ValueError("need a strategy description and a co-strategy description")
    if op_s.spaces != op_c.spaces:
        raise ValueError("interaction partners must share round spaces")
    if op_s.measurement is None or op_c.measurement is None:
        raise ValueError("both parties must measure to produce outcomes")
    r = op_s.spaces.rounds
    reg = _Register()
    reg.add(np.eye(1, dtype=np.complex128), (), ())
    # co-strategy preparation: channel 0 on a trivial input
    reg.add(np.eye(1, dtype=np.complex128), (1,), ("prep",))
    reg.apply(op_c.channels[0], ["prep"], ["X1", "W1"])
    for i in range(1, r + 1):
        in_labels = [f"X{i}"] if i == 1 else [f"X{i}", f"Z{i - 1}"]
        reg.apply(op_s.channels[i - 1], in_labels, [f"Y{i}", f"Z{i}"])
        reg.apply(op_c.channels[i], [f"Y{i}", f"W{i}"],
                  [f"X{i + 1}" if i < r else "Xend", f"W{i + 1}"])
    return reg.joint_probability([p for _, p in op_s.measurement],
                                 [p for _, p in op_c.measurement],
                                 f"Z{r}", f"W{r + 1}")
