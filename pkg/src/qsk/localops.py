"""Multi-party local operations: separable certificates and no-signaling tests.

Party i acts from an input space X_i to an output space Y_i; the designated
per-party operator space is either all of Herm(Y_i (x) X_i) or the span of
(scaled) trace-preserving-map Choi matrices, i.e. Hermitian operators whose
partial trace over Y_i is a real multiple of the identity.  Multi-party Choi
matrices are handled in two factor layouts: the standard one (all outputs,
then all inputs) and the party-paired one ((Y_1 X_1), (Y_2 X_2), ...), which
is where separable decompositions live.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import prod, sqrt

import numpy as np

from . import linalg
from .linalg import Array, fro_norm

CONE_FULL = "full-hermitian"
CONE_Q = "q-subspace"
CONES = (CONE_FULL, CONE_Q)


@dataclass(frozen=True)
class PartySpaces:
    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))
        object.__setattr__(self, "out_dims", tuple(int(d) for d in self.out_dims))
        if len(self.in_dims) != len(self.out_dims) or not self.in_dims:
            raise ValueError("need one input and one output dimension per party")
        if any(d < 1 for d in self.in_dims + self.out_dims):
            raise ValueError("party dimensions must be >= 1")

    @property
    def parties(self) -> int:
        return len(self.in_dims)

    @property
    def local_dims(self) -> tuple[int, ...]:
        """Dimension of each party's paired (output, input) space."""
        return tuple(y * x for y, x in zip(self.out_dims, self.in_dims))

    @property
    def standard_factors(self) -> tuple[int, ...]:
        return self.out_dims + self.in_dims

    def to_paired(self, mat: Array) -> Array:
        """Reorder a standard-layout operator into party-paired layout."""
        m = self.parties
        perm = []
        for i in range(m):
            perm += [i, m + i]
        return linalg.permute_systems(mat, self.standard_factors, perm)

    def to_standard(self, mat: Array) -> Array:
        m = self.parties
        dims = []
        for i in range(m):
            dims += [self.out_dims[i], self.in_dims[i]]
        perm = [2 * i for i in range(m)] + [2 * i + 1 for i in range(m)]
        return linalg.permute_systems(mat, tuple(dims), perm)


# ---------------------------------------------------------------------------
# per-party operator bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QSubspaceBasis:
    """Orthonormal basis of a party's designated Hermitian subspace."""

    party: int
    d_in: int
    d_out: int
    cone: str
    ops: tuple[Array, ...]

    @property
    def dim(self) -> int:
        return len(self.ops)

    def membership_residual(self, op: Array) -> float:
        """Distance from ``op`` to the span of the basis."""
        coeffs = [linalg.inner(e, op) for e in self.ops]
        rebuilt = sum(c * e for c, e in zip(coeffs, self.ops))
        return fro_norm(op - rebuilt)


def _project_q(op: Array, d_out: int, d_in: int) -> Array:
    """Orthogonal projection onto {X : Tr_out X = lambda I}."""
    reduced = linalg.partial_trace(op, (d_out, d_in), [0])
    traceless = reduced - (np.trace(reduced) / d_in) * np.eye(d_in)
    return op - np.kron(np.eye(d_out) / d_out, traceless)


def q_basis(party: int, d_in: int, d_out: int, cone: str = CONE_Q) -> QSubspaceBasis:
    """Orthonormal basis with the normalized identity as the first element.

    For the trace-preserving-span cone the dimension is
    (d_out d_in)^2 - d_in^2 + 1; with one-dimensional input the constraint
    degenerates and the whole Hermitian space is returned.
    """
    if cone not in CONES:
        raise ValueError(f"unknown cone tag {cone!r}")
    if d_in < 1 or d_out < 1:
        raise ValueError("dimensions must be >= 1")
    d = d_in * d_out
    if cone == CONE_FULL:
        expected = d * d
        project = lambda op: op  # noqa: E731
    else:
        expected = d * d - d_in * d_in + 1
        project = lambda op: _project_q(op, d_out, d_in)  # noqa: E731
    ops = [np.eye(d, dtype=np.complex128) / sqrt(d)]
    for cand in linalg.herm_basis(d):
        if len(ops) == expected:
            break
        vec = project(cand)
        for _ in range(2):  # re-orthogonalize for clean residuals
            for e in ops:
                vec = vec - linalg.inner(e, vec) * e
        norm = fro_norm(vec)
        if norm > 1e-8:
            ops.append(vec / norm)
    if len(ops) != expected:
        raise RuntimeError(f"basis construction found {len(ops)} elements, "
                           f"expected {expected}")
    return QSubspaceBasis(party=party, d_in=d_in, d_out=d_out, cone=cone,
                          ops=tuple(ops))


def party_bases(spaces: PartySpaces, cones) -> list[QSubspaceBasis]:
    cones = tuple(cones)
    if len(cones) != spaces.parties:
        raise ValueError("need one cone tag per party")
    return [q_basis(i, spaces.in_dims[i], spaces.out_dims[i], cone)
            for i, cone in enumerate(cones)]


# ---------------------------------------------------------------------------
# separable decompositions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SeparableDecomposition:
    """Nonnegative combination of product operators with unit-trace factors."""

    spaces: PartySpaces
    cones: tuple[str, ...]
    terms: tuple  # of (weight, tuple of per-party PSD operators)

    def reconstruct(self) -> Array:
        d = prod(self.spaces.local_dims)
        out = np.zeros((d, d), dtype=np.complex128)
        for weight, factors in self.terms:
            out += weight * linalg.kron_all(factors)
        return out

    def scaled(self, factor: float) -> "SeparableDecomposition":
        return SeparableDecomposition(
            self.spaces, self.cones,
            tuple((w * factor, fs) for w, fs in self.terms))

    @property
    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.terms))


def _normalized_term(weight: float, factors) -> tuple[float, tuple] | None:
    """Push factor traces into the weight; drop terms with a null factor."""
    out = []
    for f in factors:
        tr = float(np.trace(f).real)
        if tr < 1e-12:
            return None
        out.append(f / tr)
        weight *= tr
    if weight < 1e-15:
        return None
    return weight, tuple(out)


def product_expand(x: Array, bases: list[QSubspaceBasis]
                   ) -> tuple[np.ndarray, Array, float]:
    """Expand ``x`` in the product basis.

    Returns the real coefficient tensor, the rebuilt operator (the orthogonal
    projection onto the product span), and the projection residual.
    """
    m = len(bases)
    local = [b.d_in * b.d_out for b in bases]
    tens = x.reshape(tuple(local) * 2)
    # pair each party's row and column axes, then flatten the pairs
    axes = []
    for i in range(m):
        axes += [i, m + i]
    coeffs = tens.transpose(axes).reshape([l * l for l in local])
    for i, b in enumerate(bases):
        stack = np.stack([e.conj().reshape(-1) for e in b.ops])
        coeffs = np.moveaxis(np.tensordot(stack, coeffs, axes=([1], [i])), 0, i)
    if np.abs(coeffs.imag).max() > 1e-9 * max(1.0, fro_norm(x)):
        raise ValueError("expansion of a non-Hermitian operator")
    coeffs = np.ascontiguousarray(coeffs.real)
    rebuilt = np.zeros_like(x)
    for idx in np.ndindex(*[b.dim for b in bases]):
        c = coeffs[idx]
        if abs(c) > 1e-14:
            rebuilt = rebuilt + c * linalg.kron_all(
                [bases[i].ops[idx[i]] for i in range(m)])
    residual = float(fro_norm(x - rebuilt))
    return coeffs, rebuilt, residual


def sep_generate(x: Array, spaces: PartySpaces, cones,
                 tol: float = 1e-8) -> tuple[SeparableDecomposition, SeparableDecomposition]:
    """Split x = plus - minus into separable parts with bounded norm.

    Basis elements split as E = E+ - E- with E± = (||E|| I ± E)/2; products
    recurse by sign parity, and the expansion coefficients route each product
    term into the positive or negative part.  The construction guarantees
    ||plus||, ||minus|| <= 2^(m-1) sqrt(n) ||x||_F for n the product-space
    dimension.
    """
    x = np.asarray(x, dtype=np.complex128)
    bases = party_bases(spaces, cones)
    coeffs, _, residual = product_expand(x, bases)
    if residual > tol * max(1.0, fro_norm(x)):
        raise ValueError(f"operator lies outside the declared product space "
                         f"(residual {residual:.3e})")
    m = spaces.parties
    halves = []
    for b in bases:
        split = []
        for e in b.ops:
            nrm = linalg.op_norm(e)
            split.append(((nrm * np.eye(e.shape[0]) + e) / 2,
                          (nrm * np.eye(e.shape[0]) - e) / 2))
        halves.append(split)

    plus_terms, minus_terms = [], []
    for idx in np.ndindex(*[b.dim for b in bases]):
        c = float(coeffs[idx])
        if abs(c) < 1e-14:
            continue
        for pattern in np.ndindex(*([2] * m)):
            factors = [halves[i][idx[i]][pattern[i]] for i in range(m)]
            term = _normalized_term(abs(c), factors)
            if term is None:
                continue
            positive_product = (sum(pattern) % 2 == 0)
            goes_plus = (c > 0) == positive_product
            (plus_terms if goes_plus else minus_terms).append(term)
    plus = SeparableDecomposition(spaces, tuple(cones), tuple(plus_terms))
    minus = SeparableDecomposition(spaces, tuple(cones), tuple(minus_terms))
    return plus, minus


def _ball_recursion(factors) -> list[tuple[float, tuple]]:
    """Terms of ||P|| I - P for a product P of PSD cone elements."""
    head = list(factors[:-1])
    last = factors[-1]
    s_last = linalg.op_norm(last) * np.eye(last.shape[0]) - last
    if not head:
        return [t for t in [_normalized_term(1.0, (s_last,))] if t is not None]
    sub = _ball_recursion(tuple(head))
    out = []
    for cand in [_normalized_term(1.0, tuple(head) + (s_last,))]:
        if cand is not None:
            out.append(cand)
    for w, fs in sub:
        for tail in (last, s_last):
            cand = _normalized_term(w, fs + (tail,))
            if cand is not None:
                out.append(cand)
    return out


def identity_minus_sep(x: Array, spaces: PartySpaces, cones,
                       tol: float = 1e-8) -> SeparableDecomposition:
    """Explicit separable decomposition of c I - x at the guaranteed radius.

    c = 2^(m-1) sqrt(n) (n+1) ||x||_F.  The construction is free of convex
    caratheodory reductions: it expands x, peels ||P|| I - P off every
    positive product term recursively, and tops up with the identity.
    """
    x = np.asarray(x, dtype=np.complex128)
    m = spaces.parties
    bases = party_bases(spaces, cones)
    n = prod(b.dim for b in bases)
    norm_x = fro_norm(x)
    if norm_x == 0.0:
        return SeparableDecomposition(spaces, tuple(cones), ())
    c = 2 ** (m - 1) * sqrt(n) * (n + 1) * norm_x

    plus, minus = sep_generate(x, spaces, cones, tol)
    terms = list(minus.terms)
    spent = 0.0
    for w, factors in plus.terms:
        p_norm = prod(linalg.op_norm(f) for f in factors)
        spent += w * p_norm
        for bw, bf in _ball_recursion(factors):
            terms.append((w * bw, bf))
    leftover = c - spent
    if leftover < -1e-9 * max(1.0, c):
        raise RuntimeError("identity coefficient fell short of the spent mass")
    if leftover > 0:
        ident = tuple(np.eye(d, dtype=np.complex128) / d for d in spaces.local_dims)
        terms.append((leftover * prod(spaces.local_dims), ident))
    return SeparableDecomposition(spaces, tuple(cones), tuple(terms))


# ---------------------------------------------------------------------------
# the ball of locally implementable channels
# ---------------------------------------------------------------------------

@dataclass
class LosrBallResult:
    in_ball: bool
    radius: float              # Frobenius distance of I - d*J from the identity
    threshold: float           # 1/k, the certified ball radius
    span_residual: float
    decomposition: SeparableDecomposition | None

    def channel_weights(self) -> list[float]:
        """Convex weights of the induced product-channel mixture."""
        if self.decomposition is None:
            return []
        scale = prod(self.decomposition.spaces.in_dims)
        return [w / scale for w, _ in self.decomposition.terms]


def losr_ball_certificate(lambda_choi: Array, spaces: PartySpaces,
                          tol: float = 1e-8) -> LosrBallResult:
    """Certify a channel as a shared-randomness mixture of product channels.

    Writes the (paired-layout) Choi matrix as (I - A)/d with d the output
    dimension, projects A onto the product of trace-preserving spans, and if
    ||A||_F stays within the guaranteed radius 1/k builds the explicit
    separable decomposition.  A negative answer is inconclusive, not a
    disproof.
    """
    lambda_choi = np.asarray(lambda_choi, dtype=np.complex128)
    d_out = prod(spaces.out_dims)
    d_in = prod(spaces.in_dims)
    reduced = linalg.partial_trace(lambda_choi, (d_out, d_in), [0])
    if fro_norm(reduced - np.eye(d_in)) > 1e-6 * max(1.0, fro_norm(lambda_choi)):
        raise ValueError("the map is not trace-preserving")

    paired = spaces.to_paired(lambda_choi)
    a_op = np.eye(paired.shape[0]) - d_out * paired
    cones = (CONE_Q,) * spaces.parties
    bases = party_bases(spaces, cones)
    n = prod(b.dim for b in bases)
    k = 2 ** (spaces.parties - 1) * sqrt(n) * (n + 1)

    _, a_proj, span_residual = product_expand(a_op, bases)
    if span_residual > tol * max(1.0, fro_norm(a_op)):
        # the perturbation leaves the span of no-signaling operations
        return LosrBallResult(False, float(fro_norm(a_op)), 1.0 / k,
                              span_residual, None)
    radius = float(fro_norm(a_proj))
    if radius > 1.0 / k + 1e-12:
        return LosrBallResult(False, radius, 1.0 / k, span_residual, None)

    if radius == 0.0:
        ident = tuple(np.eye(d, dtype=np.complex128) / d for d in spaces.local_dims)
        dec = SeparableDecomposition(spaces, cones,
                                     ((float(prod(spaces.local_dims)), ident),))
    else:
        dec = identity_minus_sep(a_proj, spaces, cones, tol)
        c = 2 ** (spaces.parties - 1) * sqrt(n) * (n + 1) * radius
        slack = 1.0 - c
        if slack > 0:
            ident = tuple(np.eye(d, dtype=np.complex128) / d for d in spaces.local_dims)
            dec = SeparableDecomposition(
                spaces, cones,
                dec.terms + ((slack * prod(spaces.local_dims), ident),))
    dec = dec.scaled(1.0 / d_out)
    return LosrBallResult(True, radius, 1.0 / k, span_residual, dec)


# ---------------------------------------------------------------------------
# no-signaling membership
# ---------------------------------------------------------------------------

@dataclass
class NoSignalingReport:
    ok: bool
    max_residual: float
    residuals: dict  # subset (tuple of party indices) -> residual


def no_signaling_check(lambda_choi: Array, spaces: PartySpaces,
                       tol: float = linalg.DEFAULT_TOL,
                       max_parties: int = 8) -> NoSignalingReport:
    """Partial-trace product-structure test over every party subset.

    For each subset K the output factors of K are traced out of the Choi
    matrix and the remainder must factor as Q (x) I on K's input spaces; the
    report carries the reconstruction residual per subset.
    """
    m = spaces.parties
    if m > max_parties:
        raise ValueError(f"subset enumeration is capped at {max_parties} parties")
    lambda_choi = np.asarray(lambda_choi, dtype=np.complex128)
    dims = spaces.standard_factors
    if lambda_choi.shape[0] != prod(dims):
        raise ValueError("Choi matrix does not match the declared party spaces")
    ok_psd, lam = linalg.psd_check(lambda_choi, 1e-6)
    if not ok_psd:
        raise ValueError(f"the map is not completely positive (min eig {lam:.3e})")
    reduced = linalg.partial_trace(lambda_choi, (prod(spaces.out_dims),
                                                 prod(spaces.in_dims)), [0])
    if fro_norm(reduced - np.eye(prod(spaces.in_dims))) > 1e-6 * max(1.0, fro_norm(lambda_choi)):
        raise ValueError("the map is not trace-preserving")

    scale = max(1.0, fro_norm(lambda_choi))
    residuals = {}
    for size in range(m + 1):
        for subset in combinations(range(m), size):
            traced_out = list(subset)
            t = linalg.partial_trace(lambda_choi, dims, traced_out)
            remaining = [d for i, d in enumerate(dims) if i not in traced_out]
            # input factors of K sit after the surviving outputs
            kept_outputs = m - len(subset)
            x_positions = [kept_outputs + i for i in subset]
            x_dims = [spaces.in_dims[i] for i in subset]
            q_hat = linalg.partial_trace(t, remaining, x_positions) / prod(x_dims)
            rest = [d for i, d in enumerate(remaining) if i not in x_positions]
            rebuilt, _ = linalg.embed_identity(q_hat, rest, x_dims, x_positions)
            residuals[subset] = float(fro_norm(t - rebuilt)) / scale
    max_residual = max(residuals.values())
    return NoSignalingReport(ok=bool(max_residual <= tol),
                             max_residual=max_residual, residuals=residuals)


# ---------------------------------------------------------------------------
# the nonlocal box
# ---------------------------------------------------------------------------

@dataclass
class NonlocalBox:
    spaces: PartySpaces
    kraus: tuple[Array, ...]
    choi: Array                      # standard layout
    decomposition: SeparableDecomposition

    def apply(self, x: Array) -> Array:
        return sum(k @ x @ k.conj().T for k in self.kraus)


def nonlocal_box() -> NonlocalBox:
    """The two-party correlated-bit channel with a separable Choi matrix.

    Classical behaviour on basis states rho_ab: inputs 00, 01, 10 map to the
    even mixture of 00 and 11 outputs; input 11 maps to the even mixture of
    01 and 10, so the output parity equals the input AND.  Its eight product
    Kraus pairs, each with weight one half, furnish the separable
    decomposition of the Choi matrix over the full Hermitian cones.
    """
    e = np.eye(2, dtype=np.complex128)

    def hop(a, b):
        return np.outer(e[:, b], e[:, a].conj())

    routes = [((0, 0), (0, 0)), ((0, 1), (0, 1)),
              ((0, 0), (1, 0)), ((0, 1), (1, 1)),
              ((1, 0), (0, 0)), ((1, 1), (0, 1)),
              ((1, 0), (1, 1)), ((1, 1), (1, 0))]
    spaces = PartySpaces((2, 2), (2, 2))
    kraus = []
    terms = []
    for (a1, b1), (a2, b2) in routes:
        left, right = hop(a1, b1), hop(a2, b2)
        kraus.append(np.kron(left, right) / sqrt(2))
        f1 = np.outer(linalg.vec_col(left), linalg.vec_col(left).conj())
        f2 = np.outer(linalg.vec_col(right), linalg.vec_col(right).conj())
        terms.append((0.5, (f1, f2)))
    choi = linalg.choi_from_kraus(kraus)
    dec = SeparableDecomposition(spaces, (CONE_FULL, CONE_FULL), tuple(terms))
    return NonlocalBox(spaces=spaces, kraus=tuple(kraus), choi=choi,
                       decomposition=dec)


# ---------------------------------------------------------------------------
# standalone certificate verification
# ---------------------------------------------------------------------------

@dataclass
class DecompositionCheck:
    ok: bool
    reconstruction_residual: float
    min_factor_eig: float
    max_cone_residual: float
    min_weight: float


def verify_decomposition(dec: SeparableDecomposition, target_paired: Array,
                         tol: float = linalg.DEFAULT_TOL) -> DecompositionCheck:
    """Re-check a separable decomposition using eigenvalue tests only.

    Confirms the weighted product terms rebuild the target, every factor is
    PSD, weights are nonnegative, and each factor obeys its declared cone.
    """
    target_paired = np.asarray(target_paired, dtype=np.complex128)
    scale = max(1.0, fro_norm(target_paired))
    recon = dec.reconstruct()
    rres = float(fro_norm(recon - target_paired)) / scale
    min_eig = 0.0
    max_cone = 0.0
    min_weight = min((w for w, _ in dec.terms), default=0.0)
    for _, factors in dec.terms:
        for i, f in enumerate(factors):
            min_eig = min(min_eig, linalg.min_eig(f))
            if dec.cones[i] == CONE_Q:
                d_out, d_in = dec.spaces.out_dims[i], dec.spaces.in_dims[i]
                reduced = linalg.partial_trace(f, (d_out, d_in), [0])
                lam = np.trace(reduced) / d_in
                max_cone = max(max_cone, float(fro_norm(reduced - lam * np.eye(d_in))))
    ok = (rres <= tol and min_eig >= -tol and max_cone <= tol
          and min_weight >= -tol)
    return DecompositionCheck(ok=bool(ok), reconstruction_residual=rres,
                              min_factor_eig=float(min_eig),
                              max_cone_residual=float(max_cone),
                              min_weight=float(min_weight))
