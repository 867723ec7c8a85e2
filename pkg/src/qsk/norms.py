"""Distance measures for strategies: the round-r norm, its dual, and friends.

For a Hermitian-preserving map given by its Choi matrix j on the usual
(outputs, inputs) factor layout, the round-r norm is the maximum of
<T0 - T1, j> over two-outcome measuring co-strategies {T0, T1}; the dual
variant maximizes over measuring strategies instead.  At one round the norm
coincides with the diamond norm, which this module also estimates by direct
search over input states as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np
from scipy.optimize import minimize

from . import linalg, sdp
from .linalg import Array
from .strategies import (
    CO_STRATEGY,
    STRATEGY,
    MeasuringStrategy,
    RoundSpaces,
    Strategy,
    add_strategy_chain_constraints,
    chain_block_dims,
    chain_top_to_strategy,
    max_output_probability,
    other_kind,
    repair_chain,
    validate,
)

__all__ = [
    "NormResult",
    "StrategySetHull",
    "snorm",
    "diamond_norm_oracle",
    "diamond_agreement_check",
    "DiamondAgreement",
    "unit_ball_certificate",
    "UnitBallCertificate",
    "distinguish_sets",
    "DistinguishResult",
]


@dataclass
class NormResult:
    value: float
    optimizer: MeasuringStrategy
    gap: float


def _measuring_pair_problem(j: Array, spaces: RoundSpaces, chain_kind: str,
                            extra_pairs: list[Array] | None = None):
    """SDP over PSD pairs (T0, T1) dominated by a valid (co-)strategy.

    Maximizes <T0 - T1, j>; with ``extra_pairs`` the objective is replaced by
    a shared slack variable bounded by every <T0 - T1, D> (the fixed-
    distinguisher program over a finite generator difference set).
    """
    r = spaces.rounds
    dim = spaces.dim
    c_dims = chain_block_dims(spaces, chain_kind)
    base_dim = spaces.in_dims[0] if chain_kind == STRATEGY else 1
    pairs = extra_pairs or []
    has_slack = bool(pairs)

    in_dims = [dim, dim] + ([1] if has_slack else []) + \
              [prod(y) * prod(x) for y, x in c_dims]
    out_dims = [1] * len(pairs) + [base_dim] + \
               [prod(y) * prod(x) for y, x in _middle_dims(spaces, chain_kind)] + [dim]

    def fn(blocks):
        t0, t1 = blocks[0], blocks[1]
        if has_slack:
            u = blocks[2]
            chain = blocks[3:]
        else:
            chain = blocks[2:]
        cons = []
        for d_op in pairs:
            val = float(np.real(u[0, 0])) - linalg.inner(d_op, t0) + linalg.inner(d_op, t1)
            cons.append(np.array([[val]]))
        chain_cons = add_strategy_chain_constraints(spaces, chain_kind, chain)
        if chain_kind == STRATEGY:
            chain_cons[0] = chain_cons[0] + np.eye(spaces.in_dims[0])
        else:
            chain_cons[0] = chain_cons[0] + np.array([[1.0]])
        cons += chain_cons
        top = chain_top_to_strategy(spaces, chain_kind, chain[-1]).q
        cons.append(t0 + t1 - top)
        return cons

    phi = sdp.HermitianMap.from_function(in_dims, out_dims, fn)
    a = [np.zeros((d, d)) for d in in_dims]
    if has_slack:
        a[2] = np.array([[1.0]])
    else:
        a[0] = np.asarray(j, dtype=np.complex128)
        a[1] = -np.asarray(j, dtype=np.complex128)
    b = [np.ones((1, 1))] * len(pairs)
    b += [np.eye(base_dim) if chain_kind == STRATEGY else np.ones((1, 1))]
    b += [np.zeros((d, d)) for d in out_dims[len(pairs) + 1:]]
    return sdp.SdpProblem(phi, a, b)


def _middle_dims(spaces: RoundSpaces, chain_kind: str):
    if chain_kind == STRATEGY:
        return chain_block_dims(spaces, CO_STRATEGY)[1:]
    return chain_block_dims(spaces, STRATEGY)[:-1]


def _extract_pair(sol: sdp.SdpSolution, spaces: RoundSpaces, chain_kind: str,
                  has_slack: bool) -> MeasuringStrategy:
    t0, t1 = sol.primal_x[0], sol.primal_x[1]
    chain_raw = sol.primal_x[3 if has_slack else 2:]
    chain = repair_chain(spaces, chain_kind, chain_raw)
    top = chain_top_to_strategy(spaces, chain_kind, chain[-1]).q
    # split the slack evenly so the pair sums to a valid (co-)strategy while
    # the difference T0 - T1 is untouched
    slack = (top - t0 - t1) / 2
    return MeasuringStrategy(spaces, chain_kind, (0, 1), (t0 + slack, t1 + slack))


def snorm(j, spaces: RoundSpaces, dual: bool = False,
          tol: float = 1e-9, max_iter: int = 200) -> NormResult:
    """Round-r norm (or its dual) of a Hermitian Choi matrix.

    ``dual=False`` maximizes over measuring co-strategies, ``dual=True`` over
    measuring strategies; the returned optimizer is the attaining pair.
    """
    j, _ = linalg.hermitize(np.asarray(j, dtype=np.complex128), 1e-6)
    chain_kind = STRATEGY if dual else CO_STRATEGY
    problem = _measuring_pair_problem(j, spaces, chain_kind)
    sol = sdp.solve(problem, tol=tol, max_iter=max_iter)
    if sol.status != "optimal":
        raise RuntimeError(f"norm SDP did not converge: status {sol.status}")
    optimizer = _extract_pair(sol, spaces, chain_kind, has_slack=False)
    return NormResult(value=float(sol.primal_value), optimizer=optimizer,
                      gap=float(sol.gap))


# ---------------------------------------------------------------------------
# diamond-norm oracle (direct search, no semidefinite machinery)
# ---------------------------------------------------------------------------

def _batch_value(j4: Array, states: Array, dim_in: int) -> Array:
    """Trace norms of (map (x) id) applied to a batch of pure states."""
    n = states.shape[0]
    u3 = states.reshape(n, dim_in, dim_in)
    out = np.einsum("iajb,naw,nbv->niwjv", j4, u3, u3.conj(), optimize=True)
    d = j4.shape[0] * dim_in
    svals = np.linalg.svd(out.reshape(n, d, d), compute_uv=False)
    return svals.sum(axis=1)


def diamond_norm_oracle(j, dim_out: int, dim_in: int, samples: int = 5000,
                        seed: int = 0, refinements: int = 4) -> float:
    """Brute-force diamond norm: sampled pure inputs plus local refinement.

    The auxiliary space matches the input dimension, which suffices for the
    maximum.  Accuracy is limited by the search (about 1e-4 at qubit scale);
    the value never exceeds the true norm by more than numerical noise.
    """
    j = np.asarray(j, dtype=np.complex128)
    j4 = j.reshape(dim_out, dim_in, dim_out, dim_in)
    rng = np.random.default_rng(seed)
    d2 = dim_in * dim_in

    def to_state(params):
        v = params[:d2] + 1j * params[d2:]
        norm = np.linalg.norm(v)
        return v / (norm if norm > 0 else 1.0)

    raw = rng.standard_normal((samples, 2 * d2))
    states = raw[:, :d2] + 1j * raw[:, d2:]
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    values = _batch_value(j4, states, dim_in)
    best_idx = np.argsort(values)[-refinements:]

    best = float(values.max())
    for idx in best_idx:
        start = np.concatenate([states[idx].real, states[idx].imag])

        def neg(params):
            u = to_state(params)
            return -float(_batch_value(j4, u[None, :], dim_in)[0])

        res = minimize(neg, start, method="Nelder-Mead",
                       options={"maxiter": 4000, "xatol": 1e-9, "fatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


@dataclass
class DiamondAgreement:
    norm_value: float
    oracle_value: float
    difference: float


def diamond_agreement_check(j, spaces: RoundSpaces, tol: float = 1e-9,
                            samples: int = 5000, seed: int = 0) -> DiamondAgreement:
    """Compare the one-round norm with the brute-force diamond value."""
    if spaces.rounds != 1:
        raise ValueError("the diamond norm comparison is defined at one round only")
    value = snorm(j, spaces, dual=False, tol=tol).value
    oracle = diamond_norm_oracle(j, spaces.dim_out, spaces.dim_in,
                                 samples=samples, seed=seed)
    return DiamondAgreement(norm_value=value, oracle_value=oracle,
                            difference=abs(value - oracle))


# ---------------------------------------------------------------------------
# unit ball certificate
# ---------------------------------------------------------------------------

@dataclass
class UnitBallCertificate:
    inside: bool
    norm_value: float
    least_scale: float           # least p with |j| <= p x (valid object)
    dominating: Strategy | None  # valid object with |j| <= dominating, if inside


def unit_ball_certificate(j, spaces: RoundSpaces, dual: bool = False,
                          tol: float = 1e-8) -> UnitBallCertificate:
    """Norm membership plus an explicit dominating (co-)strategy for |j|.

    The norm is at most one exactly when |j| fits under some valid strategy
    (``dual=False``) or co-strategy (``dual=True``); the dominating object is
    found by the least-scale domination program, whose optimum equals the
    norm and is reported for cross-checking.
    """
    j, _ = linalg.hermitize(np.asarray(j, dtype=np.complex128), 1e-6)
    value = snorm(j, spaces, dual=dual, tol=min(tol, 1e-9)).value
    pos, neg = linalg.jordan_decompose(j)
    absolute = pos + neg
    dom_kind = STRATEGY if not dual else CO_STRATEGY
    pseudo = MeasuringStrategy(spaces, dom_kind, ("abs",), (absolute,))
    res = max_output_probability(pseudo, "abs", tol=min(tol, 1e-9))
    inside = value <= 1.0 + tol
    return UnitBallCertificate(inside=bool(inside), norm_value=value,
                               least_scale=float(res.dual_value),
                               dominating=res.witness if inside else None)


# ---------------------------------------------------------------------------
# distinguishing convex sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StrategySetHull:
    """Convex hull of finitely many valid (co-)strategies of one shape."""

    kind: str
    spaces: RoundSpaces
    generators: tuple[Strategy, ...]

    def __post_init__(self):
        if not self.generators:
            raise ValueError("a hull needs at least one generator")
        for g in self.generators:
            if g.kind != self.kind or g.spaces != self.spaces:
                raise ValueError("all generators must share the hull's kind and spaces")
            rep = validate(g.q, self.spaces, self.kind)
            if not rep.valid:
                raise ValueError(f"hull generator fails validation "
                                 f"(max residual {rep.max_residual:.3e})")

    def mix(self, weights) -> Array:
        weights = np.asarray(weights, dtype=float)
        return sum(w * g.q for w, g in zip(weights, self.generators))


@dataclass
class DistinguishResult:
    distance: float
    distinguisher: MeasuringStrategy
    gap: float


def distinguish_sets(s0: StrategySetHull, s1: StrategySetHull,
                     tol: float = 1e-9, max_iter: int = 200) -> DistinguishResult:
    """Optimal fixed measuring pair separating two hulls of (co-)strategies.

    Solves max t with <T0 - T1, G0 - G1> >= t over all generator pairs in a
    single program: since the inner minimum of a bilinear form over a product
    of simplices is attained at vertices, no net over mixtures is needed.
    The distance equals the minimal norm between the hulls.
    """
    if s0.kind != s1.kind or s0.spaces != s1.spaces:
        raise ValueError("hulls must share kind and round spaces")
    chain_kind = other_kind(s0.kind)
    diffs = [g0.q - g1.q for g0 in s0.generators for g1 in s1.generators]
    # the slack variable carries a +1 shift so the program has an interior
    problem = _measuring_pair_problem(None, s0.spaces, chain_kind, extra_pairs=diffs)
    sol = sdp.solve(problem, tol=tol, max_iter=max_iter)
    if sol.status != "optimal":
        raise RuntimeError(f"distinguishing SDP did not converge: status {sol.status}")
    pair = _extract_pair(sol, s0.spaces, chain_kind, has_slack=True)
    return DistinguishResult(distance=float(sol.primal_value) - 1.0,
                             distinguisher=pair, gap=float(sol.gap))
