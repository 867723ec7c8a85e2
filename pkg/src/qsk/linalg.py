"""Dense complex linear algebra over tensor-factored operator spaces.

Every operator in this package is a plain complex ``numpy`` matrix together
with an explicit, ordered list of tensor-factor dimensions.  Choi matrices of
maps from an input space to an output space always carry the output factors
*before* the input factors, and all basis-dependent isomorphisms (``vec_col``,
``choi_from_kraus``) are taken with respect to the standard computational
basis.
"""

from __future__ import annotations

from functools import lru_cache
from math import prod, sqrt

import numpy as np

DEFAULT_TOL = 1e-8

Array = np.ndarray


def as_complex(mat) -> Array:
    """Return ``mat`` as a 2-D complex128 array (no copy when possible)."""
    out = np.asarray(mat, dtype=np.complex128)
    if out.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {out.shape}")
    return out


def check_dims(dims, total: int) -> tuple[int, ...]:
    """Validate a factor-dimension list against a matrix side length."""
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"factor dimensions must be >= 1, got {dims}")
    if prod(dims) != total:
        raise ValueError(f"factor dimensions {dims} do not multiply to {total}")
    return dims


def kron(*mats) -> Array:
    """Kronecker product of one or more matrices, left to right."""
    out = as_complex(mats[0])
    for m in mats[1:]:
        out = np.kron(out, as_complex(m))
    return out


def kron_all(mats) -> Array:
    """Kronecker product of a sequence; the empty product is ``[[1]]``."""
    mats = list(mats)
    if not mats:
        return np.eye(1, dtype=np.complex128)
    return kron(*mats)


def hermitize(mat, tol: float = DEFAULT_TOL) -> tuple[Array, float]:
    """Symmetrize ``mat`` to (M + M†)/2 and report the relative residual.

    Raises ``ValueError`` when the residual exceeds ``tol`` relative to
    ``max(1, ||mat||_F)``; the returned matrix is exactly Hermitian.
    """
    mat = as_complex(mat)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("a Hermitian operator must be square")
    herm = (mat + mat.conj().T) / 2
    residual = float(np.linalg.norm(mat - herm))
    scale = max(1.0, float(np.linalg.norm(mat)))
    if residual > tol * scale:
        raise ValueError(f"matrix is not Hermitian: residual {residual:.3e} "
                         f"exceeds {tol:.1e} x {scale:.3e}")
    return herm, residual


def partial_trace(mat, dims, traced) -> Array:
    """Trace out the named tensor factors of a square operator.

    ``dims`` lists the factor dimensions of both sides; ``traced`` is an
    iterable of factor indices.  The output keeps the remaining factors in
    their original order.  Tracing every factor yields a 1x1 matrix.
    """
    mat = as_complex(mat)
    dims = check_dims(dims, mat.shape[0])
    traced = sorted(set(int(i) for i in traced))
    k = len(dims)
    if traced and (traced[0] < 0 or traced[-1] >= k):
        raise IndexError(f"traced factor index out of range for {k} factors")
    tens = mat.reshape(dims + dims)
    # einsum contracts row with matching column axis for each traced factor
    row_axes = list(range(k))
    col_axes = list(range(k, 2 * k))
    for i in traced:
        col_axes[i] = row_axes[i]
    keep = [i for i in range(k) if i not in traced]
    out_axes = [row_axes[i] for i in keep] + [col_axes[i] for i in keep]
    tens = np.einsum(tens, row_axes + col_axes, out_axes)
    d_keep = prod(dims[i] for i in keep) if keep else 1
    return tens.reshape(d_keep, d_keep)


def permute_systems(mat, dims, perm) -> Array:
    """Relabel tensor factors so output factor j is input factor perm[j]."""
    mat = as_complex(mat)
    dims = check_dims(dims, mat.shape[0])
    k = len(dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(k)):
        raise ValueError(f"{perm} is not a permutation of 0..{k - 1}")
    tens = mat.reshape(dims + dims)
    axes = perm + [k + p for p in perm]
    out = tens.transpose(axes).reshape(mat.shape)
    return out


def permuted_dims(dims, perm) -> tuple[int, ...]:
    return tuple(dims[p] for p in perm)


def embed_identity(mat, dims, extra_dims, positions) -> tuple[Array, tuple[int, ...]]:
    """Tensor identity factors onto ``mat`` and move them to ``positions``.

    Returns the enlarged operator together with its factor-dimension list.
    ``positions`` are indices in the *output* factor ordering.
    """
    mat = as_complex(mat)
    dims = check_dims(dims, mat.shape[0])
    extra_dims = tuple(int(d) for d in extra_dims)
    if len(extra_dims) != len(positions):
        raise ValueError("one position per inserted factor is required")
    big = np.kron(mat, np.eye(prod(extra_dims) if extra_dims else 1))
    all_dims = dims + extra_dims
    k = len(all_dims)
    out_positions = list(positions)
    if sorted(out_positions) != sorted(set(out_positions)) or any(
            p < 0 or p >= k for p in out_positions):
        raise ValueError(f"invalid insert positions {positions}")
    # output slot -> source factor index
    perm = [None] * k
    for j, p in enumerate(out_positions):
        perm[p] = len(dims) + j
    it = iter(range(len(dims)))
    for slot in range(k):
        if perm[slot] is None:
            perm[slot] = next(it)
    return permute_systems(big, all_dims, perm), permuted_dims(all_dims, perm)


def vec_col(mat) -> Array:
    """Stack the transposed rows of ``mat`` into a single column.

    For A: X -> Y the result lives in Y (x) X, and the map preserves inner
    products: <vec_col(A), vec_col(B)> = Tr(A† B).
    """
    return as_complex(mat).reshape(-1)


def unvec_col(vec, rows: int, cols: int) -> Array:
    vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
    if vec.size != rows * cols:
        raise ValueError("vector length does not match the requested shape")
    return vec.reshape(rows, cols)


def choi_from_kraus(kraus_left, kraus_right=None) -> Array:
    """Choi matrix sum_i vec(A_i) vec(B_i)† on (output (x) input).

    ``kraus_right`` defaults to ``kraus_left`` (the completely positive case).
    """
    kraus_left = [as_complex(a) for a in kraus_left]
    kraus_right = kraus_left if kraus_right is None else [as_complex(b) for b in kraus_right]
    if len(kraus_left) != len(kraus_right):
        raise ValueError("left and right operator lists must have equal length")
    d = kraus_left[0].size
    out = np.zeros((d, d), dtype=np.complex128)
    for a, b in zip(kraus_left, kraus_right):
        va = vec_col(a)
        vb = vec_col(b)
        out += np.outer(va, vb.conj())
    return out


def choi_apply(choi, x, dim_out: int, dim_in: int) -> Array:
    """Apply the map with the given Choi matrix: X -> Tr_in[(I (x) Xᵀ) J]."""
    choi = as_complex(choi)
    x = as_complex(x)
    if choi.shape[0] != dim_out * dim_in or x.shape[0] != dim_in:
        raise ValueError("Choi/input shapes do not match the declared dimensions")
    j4 = choi.reshape(dim_out, dim_in, dim_out, dim_in)
    return np.einsum("iajb,ab->ij", j4, x)


def adjoint_choi(choi, dim_out: int, dim_in: int) -> Array:
    """Choi matrix of the adjoint map, on (input (x) output)."""
    choi = as_complex(choi)
    swapped = permute_systems(choi.conj(), (dim_out, dim_in), (1, 0))
    return swapped


def jordan_decompose(mat, tol: float = DEFAULT_TOL) -> tuple[Array, Array]:
    """Split a Hermitian operator into PSD parts with orthogonal supports.

    Returns (pos, neg) with mat = pos - neg and pos·neg ~ 0; eigenvalues are
    clustered only by their sign, so the split is as fine as the eigensolver
    allows.
    """
    herm, _ = hermitize(mat, tol)
    vals, vecs = np.linalg.eigh(herm)
    pos = (vecs * np.clip(vals, 0.0, None)) @ vecs.conj().T
    neg = (vecs * np.clip(-vals, 0.0, None)) @ vecs.conj().T
    pos = (pos + pos.conj().T) / 2
    neg = (neg + neg.conj().T) / 2
    return pos, neg


def schatten_norms(mat) -> tuple[float, float, float]:
    """(trace norm, Frobenius norm, operator norm) of an arbitrary matrix."""
    svals = np.linalg.svd(as_complex(mat), compute_uv=False)
    if svals.size == 0:
        return 0.0, 0.0, 0.0
    return float(svals.sum()), float(np.sqrt((svals ** 2).sum())), float(svals[0])


def trace_norm(mat) -> float:
    return float(np.linalg.svd(as_complex(mat), compute_uv=False).sum())


def fro_norm(mat) -> float:
    return float(np.linalg.norm(np.asarray(mat)))


def op_norm(mat) -> float:
    svals = np.linalg.svd(as_complex(mat), compute_uv=False)
    return float(svals[0]) if svals.size else 0.0


def min_eig(mat) -> float:
    herm = as_complex(mat)
    herm = (herm + herm.conj().T) / 2
    return float(np.linalg.eigvalsh(herm)[0])


def psd_check(mat, tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Whether λ_min(mat) >= -tol relative to max(1, ||mat||_F)."""
    lam = min_eig(mat)
    return lam >= -tol * max(1.0, fro_norm(mat)), lam


def inner(a, b) -> float:
    """Real Hilbert-Schmidt inner product <A, B> = Tr(A† B) for Hermitian A, B."""
    return float(np.real(np.vdot(as_complex(a), as_complex(b))))


def herm_basis(d: int) -> list[Array]:
    """Canonical orthonormal basis of the d x d Hermitian operators.

    Ordered as: diagonal units, then (E_ij + E_ji)/√2 for i < j (row-major),
    then i(E_ij - E_ji)/√2 for i < j.  Matches ``svec``/``smat`` coordinates.
    """
    basis = []
    for i in range(d):
        e = np.zeros((d, d), dtype=np.complex128)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = e[j, i] = 1 / sqrt(2)
            basis.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[i, j] = 1j / sqrt(2)
            e[j, i] = -1j / sqrt(2)
            basis.append(e)
    return basis


@lru_cache(maxsize=None)
def _triu_indices(d: int):
    return np.triu_indices(d, 1)


def svec(mat) -> Array:
    """Real coordinates of a Hermitian matrix in the ``herm_basis`` ordering."""
    mat = as_complex(mat)
    d = mat.shape[0]
    iu = _triu_indices(d)
    off = mat[iu]
    return np.concatenate([mat.diagonal().real,
                           sqrt(2) * off.real,
                           sqrt(2) * off.imag])


def smat(vec, d: int) -> Array:
    """Inverse of ``svec``: rebuild the Hermitian matrix."""
    vec = np.asarray(vec, dtype=np.float64).reshape(-1)
    if vec.size != d * d:
        raise ValueError("coordinate vector length must be d^2")
    n_off = (d * (d - 1)) // 2
    out = np.zeros((d, d), dtype=np.complex128)
    out[np.diag_indices(d)] = vec[:d]
    iu = _triu_indices(d)
    off = (vec[d:d + n_off] + 1j * vec[d + n_off:]) / sqrt(2)
    out[iu] = off
    out[(iu[1], iu[0])] = off.conj()
    return out


def random_isometry(rng: np.random.Generator, d_from: int, d_to: int) -> Array:
    """Haar-random isometry from C^d_from into C^d_to (d_to >= d_from)."""
    if d_to < d_from:
        raise ValueError("an isometry needs d_to >= d_from")
    g = rng.standard_normal((d_to, d_from)) + 1j * rng.standard_normal((d_to, d_from))
    q, r = np.linalg.qr(g)
    # fix the phase ambiguity of QR so the distribution is Haar
    q = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
    return q


def random_cptp_kraus(rng: np.random.Generator, d_in: int, d_out: int,
                      env_dim: int | None = None) -> list[Array]:
    """Kraus operators of a Haar-random channel via a random dilation."""
    env_dim = env_dim if env_dim is not None else d_in
    v = random_isometry(rng, d_in, d_out * env_dim)
    v = v.reshape(d_out, env_dim, d_in)
    return [np.ascontiguousarray(v[:, k, :]) for k in range(env_dim)]


def random_density(rng: np.random.Generator, d: int, rank: int | None = None) -> Array:
    rank = rank if rank is not None else d
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, d: int) -> Array:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def polar_factor(mat) -> Array:
    """Isometric factor of the polar decomposition (tall or square input)."""
    u, _, vh = np.linalg.svd(as_complex(mat), full_matrices=False)
    return u @ vh


def sqrtm_psd(mat, floor: float = 0.0) -> Array:
    """PSD square root via the spectral decomposition; negatives clipped."""
    w, v = np.linalg.eigh(as_complex((mat + np.asarray(mat).conj().T) / 2))
    return (v * np.sqrt(np.clip(w, floor, None))) @ v.conj().T


def inv_sqrtm_psd(mat, floor: float = 1e-14) -> Array:
    """Inverse PSD square root with an eigenvalue floor for near-null modes."""
    w, v = np.linalg.eigh(as_complex((mat + np.asarray(mat).conj().T) / 2))
    w = np.clip(w, floor * max(1.0, float(w[-1])), None)
    return (v / np.sqrt(w)) @ v.conj().T
