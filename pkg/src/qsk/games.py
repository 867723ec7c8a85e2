"""Zero-sum refereed quantum games: values, audits, repetition checks.

A game is an r-round referee (a measuring co-strategy whose message spaces
split into Alice and Bob halves) together with a real payout per referee
outcome.  The value is computed by one semidefinite program over Bob's
strategy chain and a scaled co-strategy chain for Alice's side, with a trace
cap that keeps the feasible set bounded; the same module audits coin-flipping
protocols and checks the semidefinite half of parallel repetition.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod, sqrt

import numpy as np

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
    forcing_problem,
    max_output_probability,
    repair_chain,
    shrink_super_chain,
    validate,
)


@dataclass(frozen=True, eq=False)
class GameSpec:
    """Referee plus payouts, with the per-round Alice/Bob space split.

    Per round i the referee sends question spaces of dimension
    ``alice_q[i]`` and ``bob_q[i]`` and expects answers of dimension
    ``alice_a[i]`` and ``bob_a[i]``; its own round spaces are the products.
    """

    alice_q: tuple[int, ...]
    alice_a: tuple[int, ...]
    bob_q: tuple[int, ...]
    bob_a: tuple[int, ...]
    referee: MeasuringStrategy
    payout: dict

    def __post_init__(self):
        for name in ("alice_q", "alice_a", "bob_q", "bob_a"):
            object.__setattr__(self, name, tuple(int(d) for d in getattr(self, name)))
        r = len(self.alice_q)
        if not all(len(getattr(self, n)) == r for n in ("alice_a", "bob_q", "bob_a")):
            raise ValueError("all four dimension lists must cover the same rounds")
        want = RoundSpaces(
            tuple(a * b for a, b in zip(self.alice_q, self.bob_q)),
            tuple(c * d for c, d in zip(self.alice_a, self.bob_a)))
        if self.referee.spaces != want:
            raise ValueError("referee round spaces do not match the declared split")
        if self.referee.kind != CO_STRATEGY:
            raise ValueError("the referee must be a measuring co-strategy")
        if set(self.payout) != set(self.referee.outcomes):
            raise ValueError("payouts must cover exactly the referee outcomes")
        rep = validate(self.referee.total().q, self.referee.spaces, CO_STRATEGY)
        if not rep.valid:
            raise ValueError(f"referee fails co-strategy validation "
                             f"(max residual {rep.max_residual:.3e})")

    @property
    def rounds(self) -> int:
        return len(self.alice_q)

    @property
    def alice_spaces(self) -> RoundSpaces:
        return RoundSpaces(self.alice_q, self.alice_a)

    @property
    def bob_spaces(self) -> RoundSpaces:
        return RoundSpaces(self.bob_q, self.bob_a)

    @property
    def refined_factors(self) -> tuple[int, ...]:
        """Referee factors with each round split as (C_i, D_i) / (A_i, B_i)."""
        out = []
        for c, d in zip(self.alice_a, self.bob_a):
            out += [c, d]
        for a, b in zip(self.alice_q, self.bob_q):
            out += [a, b]
        return tuple(out)


def rescale_payouts(payout: dict) -> tuple[dict, float, float]:
    """Shift and scale payouts into [0, 1]; returns (rescaled, scale, shift).

    The original payout is recovered as scale * rescaled + shift.  A constant
    payout is clamped into [0, 1] with scale one.
    """
    values = [float(v) for v in payout.values()]
    lo, hi = min(values), max(values)
    if hi == lo:
        clamped = min(max(lo, 0.0), 1.0)
        return {k: clamped for k in payout}, 1.0, lo - clamped
    denom = abs(hi) + abs(lo)
    rescaled = {k: (float(v) + abs(lo)) / denom for k, v in payout.items()}
    return rescaled, denom, -abs(lo)


def _hardwire(game: GameSpec, payoff_op: Array, player_op: Array,
              player_is_bob: bool) -> Array:
    """Trace the named player's spaces out of (player (x) I) payoff_op.

    Returns the induced operator on the other player's (answers, questions)
    space, ordered to match that player's strategy representation.
    """
    r = game.rounds
    refined = game.refined_factors
    if player_is_bob:
        own = game.bob_a + game.bob_q
        own_slots = [2 * i + 1 for i in range(r)] + [2 * r + 2 * i + 1 for i in range(r)]
    else:
        own = game.alice_a + game.alice_q
        own_slots = [2 * i for i in range(r)] + [2 * r + 2 * i for i in range(r)]
    other_slots = [p for p in range(4 * r) if p not in own_slots]
    extra_dims = [refined[p] for p in other_slots]
    embedded, _ = linalg.embed_identity(player_op, own, extra_dims, other_slots)
    return linalg.partial_trace(embedded @ payoff_op, refined, own_slots)


def combine_players(game: GameSpec, alice: Strategy, bob: Strategy) -> Strategy:
    """Joint strategy A (x) B on the referee's interleaved message spaces."""
    r = game.rounds
    big = np.kron(alice.q, bob.q)
    dims = game.alice_a + game.alice_q + game.bob_a + game.bob_q
    perm = []
    for i in range(r):
        perm += [i, 2 * r + i]          # C_i then D_i
    for i in range(r):
        perm += [r + i, 3 * r + i]      # A_i then B_i
    q = linalg.permute_systems(big, dims, perm)
    return Strategy(game.referee.spaces, STRATEGY, q)


@dataclass
class GameValueResult:
    value: float
    alice_strategy: Strategy
    bob_strategy: Strategy
    primal_value: float
    dual_value: float
    gap: float


@dataclass
class WellBoundedness:
    delta: float
    t: float
    x0_blocks: list[Array]
    margin: float


def _payoff_operator(game: GameSpec, payout: dict) -> Array:
    return sum(float(payout[label]) * game.referee.outcome(label)
               for label in game.referee.outcomes)


def _game_map(game: GameSpec, payoff_op: Array, cap: float):
    """The block map and constants of the game value program.

    Input blocks are Bob's strategy chain followed by the scaled co-strategy
    chain for Alice's side; output blocks are the two chain-constraint
    families, the payoff domination link, and the negated trace cap.
    """
    r = game.rounds
    bob_sp, alice_sp = game.bob_spaces, game.alice_spaces
    bob_dims = chain_block_dims(bob_sp, STRATEGY)
    q_dims = chain_block_dims(alice_sp, CO_STRATEGY)
    in_dims = [prod(y) * prod(x) for y, x in bob_dims] + \
              [prod(y) * prod(x) for y, x in q_dims]

    out_dims = [bob_sp.in_dims[0]] + \
               [prod(y) * prod(x) for y, x in chain_block_dims(bob_sp, CO_STRATEGY)[1:]] + \
               [prod(y) * prod(x) for y, x in chain_block_dims(alice_sp, STRATEGY)[:-1]] + \
               [alice_sp.dim, 1]

    def fn(blocks):
        bob, alice = blocks[:r], blocks[r:]
        cons = add_strategy_chain_constraints(bob_sp, STRATEGY, bob)
        cons[0] = cons[0] + np.eye(bob_sp.in_dims[0])
        co_cons = add_strategy_chain_constraints(alice_sp, CO_STRATEGY, alice)
        cons += [-c for c in co_cons[1:]]
        dominating = chain_top_to_strategy(alice_sp, CO_STRATEGY, alice[-1]).q
        cons.append(dominating - _hardwire(game, payoff_op, bob[-1], player_is_bob=True))
        # trace cap, with the row normalized by the cap for conditioning
        cons.append(np.array([[-sum(np.trace(b).real for b in blocks) / cap]]))
        return cons

    phi = sdp.HermitianMap.from_function(in_dims, out_dims, fn)
    e_blocks = [np.zeros((d, d)) for d in out_dims]
    e_blocks[0] = np.eye(bob_sp.in_dims[0])
    e_blocks[-1] = np.array([[-1.0]])
    f_blocks = [np.zeros((d, d)) for d in in_dims]
    f_blocks[r] = np.eye(in_dims[r])
    return phi, e_blocks, f_blocks


def well_boundedness_constants(game: GameSpec) -> WellBoundedness:
    """Inner/outer bounding constants of the game program's feasible set.

    delta is a feasibility-preserving perturbation radius around an explicit
    strictly feasible point and t caps the trace of an optimal solution; the
    point itself is built and its strict feasibility margin is measured.
    """
    r = game.rounds
    bob_sp, alice_sp = game.bob_spaces, game.alice_spaces
    dim_d = prod(game.bob_a)
    delta = 1.0 / (3.0 * dim_d)
    dim_yxc = game.referee.spaces.dim * prod(game.alice_a)
    t = 2.0 * (r + 2) ** 3 * dim_yxc

    gamma = (r + 4.0 / 3.0) * game.referee.spaces.dim_out * prod(game.bob_q)
    blocks = []
    for i in range(1, r + 1):
        d = prod(game.bob_a[:i])
        blocks.append((i + 1.0) / d * np.eye(d * prod(game.bob_q[:i])))
    for i in range(1, r + 1):
        dim_rest = prod(game.alice_q[i:])
        d = prod(game.alice_a[:i - 1]) * prod(game.alice_q[:i])
        blocks.append((r - i + 2.0) * dim_rest * gamma * np.eye(d))

    payout, _, _ = rescale_payouts(game.payout)
    payoff_op = _payoff_operator(game, payout)
    phi, e_blocks, f_blocks = _game_map(game, payoff_op, cap=t)
    del f_blocks
    values = phi.apply(blocks)
    margin = min(linalg.min_eig(v - e) for v, e in zip(values, e_blocks))
    return WellBoundedness(delta=delta, t=t, x0_blocks=blocks, margin=float(margin))


def game_value(game: GameSpec, tol: float = 1e-9, max_iter: int = 200) -> GameValueResult:
    """Value of the zero-sum game plus near-optimal witnesses for both players.

    Payouts are rescaled into [0, 1] internally and the value is mapped back.
    Bob's witness is rounded to an exactly valid strategy; Alice's is her
    best response to it, computed by an independent forcing program.
    """
    payout, scale, shift = rescale_payouts(game.payout)
    payoff_op = _payoff_operator(game, payout)
    wb = well_boundedness_constants(game)
    phi, e_blocks, f_blocks = _game_map(game, payoff_op, cap=wb.t)
    problem = sdp.SdpProblem(phi.adjoint(), e_blocks, f_blocks)
    sol = sdp.solve(problem, tol=tol, max_iter=max_iter)
    if sol.status != "optimal":
        raise RuntimeError(f"game value SDP did not converge: status {sol.status}")

    r = game.rounds
    bob_chain = shrink_super_chain(game.bob_spaces, sol.dual_y[:r])
    bob_strategy = Strategy(game.bob_spaces, STRATEGY, bob_chain[-1])

    hardwired = _hardwire(game, payoff_op, bob_strategy.q, player_is_bob=True)
    hardwired = (hardwired + hardwired.conj().T) / 2
    response = forcing_problem(hardwired, game.alice_spaces, CO_STRATEGY)
    br = sdp.solve(response, tol=tol, max_iter=max_iter)
    if br.status != "optimal":
        raise RuntimeError(f"best-response SDP did not converge: status {br.status}")
    alice_chain = repair_chain(game.alice_spaces, STRATEGY, br.primal_x[:-1])
    alice_strategy = Strategy(game.alice_spaces, STRATEGY, alice_chain[-1])

    return GameValueResult(
        value=scale * float(sol.dual_value) + shift,
        alice_strategy=alice_strategy,
        bob_strategy=bob_strategy,
        primal_value=scale * float(sol.primal_value) + shift,
        dual_value=scale * float(sol.dual_value) + shift,
        gap=scale * float(sol.gap),
    )


# ---------------------------------------------------------------------------
# coin flipping
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoinFlipProtocol:
    """Honest strategies of a two-outcome coin-flipping protocol."""

    alice: MeasuringStrategy   # kind "strategy", outcomes 0 and 1
    bob: MeasuringStrategy     # kind "costrategy", outcomes 0 and 1

    def __post_init__(self):
        if self.alice.kind != STRATEGY or self.bob.kind != CO_STRATEGY:
            raise ValueError("Alice plays the strategy side, Bob the co-strategy side")
        if self.alice.spaces != self.bob.spaces:
            raise ValueError("the parties must agree on the round spaces")
        if len(self.alice.outcomes) != 2 or len(self.bob.outcomes) != 2:
            raise ValueError("coin flipping needs exactly two outcomes per party")

    def honest_probabilities(self) -> tuple[float, float]:
        return (linalg.inner(self.alice.qs[0], self.bob.qs[0]),
                linalg.inner(self.alice.qs[1], self.bob.qs[1]))


@dataclass
class CoinFlipAudit:
    honest: tuple[float, float]
    p_alice: dict          # outcome -> forcing probability against honest Alice
    p_bob: dict            # outcome -> forcing probability against honest Bob
    products: dict         # outcome -> p_alice * p_bob
    kitaev_ok: bool


def coinflip_audit(protocol: CoinFlipProtocol, tol: float = 1e-6) -> CoinFlipAudit:
    """Forcing probabilities of both cheaters and the 1/sqrt(2) lower bound.

    Raises if the protocol is not honest (both matched-outcome probabilities
    must equal one half within ``tol``).
    """
    honest = protocol.honest_probabilities()
    if any(abs(h - 0.5) > tol for h in honest):
        raise ValueError(f"protocol is not honest: matched-outcome "
                         f"probabilities {honest}")
    p_alice, p_bob = {}, {}
    for idx, label in enumerate(protocol.alice.outcomes):
        p_alice[label] = max_output_probability(protocol.alice, label).probability
        p_bob[protocol.bob.outcomes[idx]] = \
            max_output_probability(protocol.bob, protocol.bob.outcomes[idx]).probability
    bound = 1.0 / sqrt(2.0)
    labels = list(protocol.alice.outcomes)
    kitaev_ok = all(max(p_alice[l], p_bob[protocol.bob.outcomes[i]]) >= bound - tol
                    for i, l in enumerate(labels))
    products = {l: p_alice[l] * p_bob[protocol.bob.outcomes[i]]
                for i, l in enumerate(labels)}
    return CoinFlipAudit(honest=honest, p_alice=p_alice, p_bob=p_bob,
                         products=products, kitaev_ok=bool(kitaev_ok))


# ---------------------------------------------------------------------------
# parallel repetition
# ---------------------------------------------------------------------------

@dataclass
class ParallelRepetitionResult:
    hypothesis_ok: bool
    hypothesis_min_eig: float
    ok: bool
    min_eig: float


def parallel_repetition_check(r_accept: Array, strat: Strategy, s: float, k: int,
                              tol: float = linalg.DEFAULT_TOL,
                              max_dim: int = 4096) -> ParallelRepetitionResult:
    """Check s^k R^(x)k >= R_accept^(x)k given the single-copy domination.

    The k-fold Kronecker powers are materialized with factors reordered to
    the repeated protocol's layout (round-grouped outputs before inputs), so
    the total dimension is capped at ``max_dim``.
    """
    if k < 1:
        raise ValueError("the repetition count must be at least 1")
    spaces = strat.spaces
    if spaces.dim ** k > max_dim:
        raise ValueError(f"k-fold dimension {spaces.dim ** k} exceeds the "
                         f"cap of {max_dim}")
    r_accept = np.asarray(r_accept, dtype=np.complex128)
    hyp_ok, hyp_eig = linalg.psd_check(s * strat.q - r_accept, tol)
    if not hyp_ok:
        return ParallelRepetitionResult(False, float(hyp_eig), False, float("nan"))

    r = spaces.rounds
    q_pow = strat.q
    acc_pow = r_accept
    for _ in range(k - 1):
        q_pow = np.kron(q_pow, strat.q)
        acc_pow = np.kron(acc_pow, r_accept)
    dims = spaces.factors * k
    perm = [c * 2 * r + j for j in range(r) for c in range(k)] + \
           [c * 2 * r + r + j for j in range(r) for c in range(k)]
    lhs = linalg.permute_systems((s ** k) * q_pow - acc_pow, dims, perm)
    ok, eig = linalg.psd_check(lhs, tol)
    return ParallelRepetitionResult(True, float(hyp_eig), bool(ok), float(eig))
