"""Independent numerical oracles used to cross-check the SDP-based paths."""

from __future__ import annotations

import numpy as np

from qsk import linalg
from qsk.games import GameSpec, _hardwire, _payoff_operator, rescale_payouts
from qsk.strategies import STRATEGY, Strategy, _traced_choi


def _stiefel_opt(w_mat, d_in, d_out, rng, maximize, iters=400, tol=1e-13):
    """Locally optimize vec(V)' W vec(V) over isometries V (PSD W).

    Conditional-gradient steps through the polar factor are monotone for a
    convex objective; minimization runs on the reflected operator, which is
    equivalent because the Stiefel manifold has constant Frobenius norm.
    """
    if not maximize:
        shift = float(np.trace(w_mat).real) + 1.0
        w_eff = shift * np.eye(w_mat.shape[0]) - w_mat
    else:
        w_eff = w_mat
    v = linalg.random_isometry(rng, d_in, d_out)
    prev = -np.inf
    for _ in range(iters):
        grad = (w_eff @ v.reshape(-1)).reshape(d_out, d_in)
        v = linalg.polar_factor(grad)
        val = float(np.real(np.vdot(v.reshape(-1), w_eff @ v.reshape(-1))))
        if val - prev <= tol * max(1.0, abs(val)):
            break
        prev = val
    payoff = float(np.real(np.vdot(v.reshape(-1), w_mat @ v.reshape(-1))))
    return v, payoff


def _player_choi(v, d_answer, d_mem, d_question):
    return _traced_choi([v], d_answer, d_mem, d_question)


def _embedded_payoff(m_op, d_answer, d_mem, d_question):
    big, _ = linalg.embed_identity(m_op, (d_answer, d_question), (d_mem,), (1,))
    return big


def alternating_game_oracle(game: GameSpec, restarts: int = 50, seed: int = 0,
                            sweeps: int = 60) -> float:
    """Equilibrium value by alternating parameterized best responses.

    One-round games only.  Declared an oracle, not a proof: local optima are
    handled by random restarts and the reported value is the tightest
    upper/lower envelope midpoint found.
    """
    if game.rounds != 1:
        raise ValueError("the alternating oracle handles one-round games")
    rng = np.random.default_rng(seed)
    payout, scale, shift = rescale_payouts(game.payout)
    payoff_op = _payoff_operator(game, payout)
    d_a, d_c = game.alice_q[0], game.alice_a[0]
    d_b, d_d = game.bob_q[0], game.bob_a[0]
    mem_a, mem_b = d_a * d_c, d_b * d_d

    best_gap, best_val = np.inf, None
    for _ in range(restarts):
        v_bob = linalg.random_isometry(rng, d_b, d_d * mem_b)
        up = low = None
        for _ in range(sweeps):
            bob_choi = _player_choi(v_bob, d_d, mem_b, d_b)
            m_alice = _hardwire(game, payoff_op, bob_choi, player_is_bob=True)
            w_a = _embedded_payoff(m_alice, d_c, mem_a, d_a)
            v_alice, up = _stiefel_opt(w_a, d_a, d_c * mem_a, rng, maximize=True)
            alice_choi = _player_choi(v_alice, d_c, mem_a, d_a)
            m_bob = _hardwire(game, payoff_op, alice_choi, player_is_bob=False)
            w_b = _embedded_payoff(m_bob, d_d, mem_b, d_b)
            v_bob, low = _stiefel_opt(w_b, d_b, d_d * mem_b, rng, maximize=False)
            if up - low < 1e-10:
                break
        if up - low < best_gap:
            best_gap, best_val = up - low, (up + low) / 2
    return scale * best_val + shift


def grid_min_mixture(evaluate, n0: int, n1: int, points: int = 101) -> float:
    """Minimize a two-hull mixture objective on a uniform simplex grid.

    Supports two-generator hulls: mixtures are parameterized by one weight
    per side and ``evaluate(w0, w1)`` scores the mixed difference.
    """
    if n0 > 2 or n1 > 2:
        raise ValueError("the grid oracle covers hulls with at most 2 generators")
    grid = np.linspace(0.0, 1.0, points)
    best = np.inf
    for p in (grid if n0 == 2 else [1.0]):
        w0 = (p, 1 - p) if n0 == 2 else (1.0,)
        for q in (grid if n1 == 2 else [1.0]):
            w1 = (q, 1 - q) if n1 == 2 else (1.0,)
            best = min(best, evaluate(w0, w1))
    return best


def honest_protocol(rng, rounds: int = 1):
    """Random honest coin-flipping protocol with exact half correlations.

    One-round protocols send half of a random maximally entangled pair and
    measure in matched bases; two-round protocols are random-basis partial
    commitments (a qubit commitment, a coin exchange, a reveal with
    verification, aborts folded into outcome zero).
    """
    from qsk.strategies import (CO_STRATEGY, Channel, OperationalStrategy,
                                RoundSpaces, build_strategy)
    from qsk.games import CoinFlipProtocol

    e = np.eye(2, dtype=np.complex128)
    if rounds == 1:
        u = linalg.random_isometry(rng, 2, 2)
        v = linalg.random_isometry(rng, 2, 2)
        sp = RoundSpaces((2,), (1,))
        state = (np.kron(u, v) @ np.array([1, 0, 0, 1]) / np.sqrt(2)).reshape(4, 1)
        bob_op = OperationalStrategy(
            sp, CO_STRATEGY,
            (Channel((state,), (1,), (2, 2)), Channel((np.eye(2),), (1, 2), (1, 2))),
            measurement=tuple((b, np.outer(v[:, b], v[:, b].conj())) for b in (0, 1)))
        alice_op = OperationalStrategy(
            sp, STRATEGY,
            (Channel((np.eye(2),), (2,), (1, 2)),),
            measurement=tuple((b, np.outer(u[:, b], u[:, b].conj())) for b in (0, 1)))
        return CoinFlipProtocol(build_strategy(alice_op), build_strategy(bob_op))

    if rounds != 2:
        raise ValueError("protocol families cover one or two rounds")
    # commitment states with a random overlap, in a random frame
    theta = rng.uniform(0.1, np.pi / 2 - 0.1)
    frame = linalg.random_isometry(rng, 2, 2)
    psi = [frame @ np.array([1.0, 0.0]),
           frame @ np.array([np.cos(theta), np.sin(theta)])]
    sp = RoundSpaces((1, 2), (2, 2))
    commit = Channel(tuple(np.sqrt(0.5) * np.kron(psi[a].reshape(2, 1), e[:, a:a + 1])
                           for a in (0, 1)), (1,), (2, 2))
    reveal = np.zeros((8, 4), dtype=np.complex128)
    for b in (0, 1):
        for a in (0, 1):
            reveal[a * 4 + a * 2 + b, b * 2 + a] = 1.0
    alice_meas = []
    for c in (0, 1):
        p = np.zeros((4, 4))
        for a in (0, 1):
            for b in (0, 1):
                if a ^ b == c:
                    p[a * 2 + b, a * 2 + b] = 1.0
        alice_meas.append((c, p))
    alice_op = OperationalStrategy(
        sp, STRATEGY, (commit, Channel((reveal,), (2, 2), (2, 4))),
        measurement=tuple(alice_meas))

    stash = Channel(tuple(np.sqrt(0.5) * np.kron(e[:, b:b + 1], np.kron(np.eye(2), e[:, b:b + 1]))
                          for b in (0, 1)), (2, 1), (2, 4))
    bob_meas = []
    ver = [np.outer(p, p.conj()) for p in psi]
    for c in (0, 1):
        q = np.zeros((8, 8), dtype=np.complex128)
        for ap in (0, 1):
            for b in (0, 1):
                if ap ^ b == c:
                    q += np.kron(np.outer(e[:, ap], e[:, ap]),
                                 np.kron(ver[ap], np.outer(e[:, b], e[:, b])))
        if c == 0:
            passed = sum(np.kron(np.outer(e[:, ap], e[:, ap]), np.kron(ver[ap], np.eye(2)))
                         for ap in (0, 1))
            q += np.eye(8) - passed
        bob_meas.append((c, q))
    bob_op = OperationalStrategy(
        sp, CO_STRATEGY,
        (Channel((np.eye(1),), (1,), (1, 1)), stash, Channel((np.eye(8),), (2, 4), (1, 8))),
        measurement=tuple(bob_meas))
    return CoinFlipProtocol(build_strategy(alice_op), build_strategy(bob_op))
