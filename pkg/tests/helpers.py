"""Shared random generators for the test suite."""

from __future__ import annotations

from math import prod

import numpy as np

from qsk import linalg
from qsk.strategies import (
    CO_STRATEGY,
    STRATEGY,
    Channel,
    MeasuringStrategy,
    OperationalStrategy,
    RoundSpaces,
    build_strategy,
)


def random_channel(rng, in_dims, out_dims, kraus_count=1):
    """Random CPTP channel with the given factor shapes."""
    din, dout = prod(in_dims), prod(out_dims)
    if kraus_count == 1 and dout >= din:
        kraus = [linalg.random_isometry(rng, din, dout)]
    else:
        env = max(kraus_count, (din + dout - 1) // dout)
        kraus = linalg.random_cptp_kraus(rng, din, dout, env_dim=env)
    return Channel(tuple(kraus), tuple(in_dims), tuple(out_dims))


def random_measurement(rng, dim, outcomes=2):
    """Random POVM on a ``dim``-dimensional space."""
    gs = [linalg.random_density(rng, dim) + 0.05 * np.eye(dim) for _ in range(outcomes)]
    total = sum(gs)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    povm = [inv_sqrt @ g @ inv_sqrt for g in gs]
    return [(i, (p + p.conj().T) / 2) for i, p in enumerate(povm)]


def random_operational(rng, spaces: RoundSpaces, kind: str, max_memory=4,
                       measuring=False, outcomes=2, isometric=False):
    """Random operational description of a (co-)strategy."""
    if kind == STRATEGY:
        ins, outs = spaces.in_dims, spaces.out_dims
    else:
        ins, outs = (1,) + spaces.out_dims, spaces.in_dims + (1,)
    channels = []
    mem = 1
    for i in range(len(ins)):
        d_in_total = ins[i] * mem
        new_mem = int(rng.integers(2, max_memory + 1))
        if isometric:
            new_mem = max(new_mem, -(-d_in_total // outs[i]))  # ceil keeps isometries legal
        kraus_count = 1 if (isometric and outs[i] * new_mem >= d_in_total) else 2
        in_shape = (ins[i],) if i == 0 else (ins[i], mem)
        channels.append(random_channel(rng, in_shape, (outs[i], new_mem),
                                       kraus_count=kraus_count))
        mem = new_mem
    measurement = tuple(random_measurement(rng, mem, outcomes)) if measuring else None
    return OperationalStrategy(spaces, kind, tuple(channels), measurement)


def random_strategy(rng, spaces, kind, **kw):
    return build_strategy(random_operational(rng, spaces, kind, **kw))


def random_measuring_strategy(rng, spaces, kind, outcomes=2, **kw) -> MeasuringStrategy:
    return build_strategy(random_operational(rng, spaces, kind, measuring=True,
                                             outcomes=outcomes, **kw))


def qubit_spaces(rounds: int) -> RoundSpaces:
    return RoundSpaces((2,) * rounds, (2,) * rounds)
