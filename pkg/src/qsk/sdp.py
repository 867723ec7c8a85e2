"""Semidefinite optimization in super-operator form with a built-in solver.

A problem is a triple (phi, a, b) of a Hermitian-preserving map between
block-diagonal Hermitian spaces and two Hermitian operators.  It denotes the
pair

    primal:  maximize <a, X>  subject to  phi(X) <= b,  X >= 0
    dual:    minimize <b, Y>  subject to  phi*(Y) >= a,  Y >= 0

where <=, >= are the semidefinite orderings, applied per block.

The solver embeds the pair in a homogeneous self-dual model and follows the
central path with Mehrotra predictor-corrector steps, so it certifies
optimality through the duality gap and flags infeasible data instead of
returning a spurious optimum.  All arithmetic is dense and deterministic;
block structure is exploited throughout (cone operations and the Schur
complement are assembled block by block).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod, sqrt

import numpy as np

from . import linalg
from .linalg import Array, fro_norm, smat, svec

__all__ = [
    "HermitianMap",
    "SdpProblem",
    "SdpSolution",
    "VerificationReport",
    "adjoint_map",
    "solve",
    "verify_solution",
]


def _block_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"block dimensions must be positive, got {dims}")
    return dims


@dataclass(frozen=True)
class HermitianMap:
    """Linear map between block-diagonal Hermitian operator spaces.

    ``blocks[(i, j)]`` is the real matrix of the component feeding input
    block j into output block i, written in orthonormal Hermitian-basis
    coordinates (see ``linalg.svec``).  Real coordinates make the map
    Hermitian-preserving by construction; maps loaded from complex matrix
    files are checked for that property during conversion.
    """

    in_dims: tuple[int, ...]
    out_dims: tuple[int, ...]
    blocks: dict[tuple[int, int], Array] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "in_dims", _block_dims(self.in_dims))
        object.__setattr__(self, "out_dims", _block_dims(self.out_dims))
        for (i, j), mat in self.blocks.items():
            want = (self.out_dims[i] ** 2, self.in_dims[j] ** 2)
            if mat.shape != want:
                raise ValueError(f"block {(i, j)} has shape {mat.shape}, expected {want}")

    @staticmethod
    def from_function(in_dims, out_dims, fn) -> "HermitianMap":
        """Build the coordinate matrices by applying ``fn`` to basis elements.

        ``fn`` maps a list of Hermitian blocks (one per input block) to a list
        of Hermitian blocks (one per output block).
        """
        in_dims = _block_dims(in_dims)
        out_dims = _block_dims(out_dims)
        cols = {j: [] for j in range(len(in_dims))}
        for j, d in enumerate(in_dims):
            for k in range(d * d):
                basis_vec = np.zeros(d * d)
                basis_vec[k] = 1.0
                blocks_in = [np.zeros((dd, dd), dtype=np.complex128) for dd in in_dims]
                blocks_in[j] = smat(basis_vec, d)
                out = fn(blocks_in)
                cols[j].append([svec(o) for o in out])
        blocks = {}
        for j in range(len(in_dims)):
            for i in range(len(out_dims)):
                mat = np.column_stack([cols[j][k][i] for k in range(in_dims[j] ** 2)])
                if np.any(mat):
                    blocks[(i, j)] = mat
        return HermitianMap(in_dims, out_dims, blocks)

    @staticmethod
    def identity(dims) -> "HermitianMap":
        dims = _block_dims(dims)
        blocks = {(i, i): np.eye(d * d) for i, d in enumerate(dims)}
        return HermitianMap(dims, dims, blocks)

    def apply(self, xs) -> list[Array]:
        xs = [linalg.as_complex(x) for x in xs]
        if len(xs) != len(self.in_dims):
            raise ValueError("wrong number of input blocks")
        coords = [svec(x) for x in xs]
        out = []
        for i, d in enumerate(self.out_dims):
            acc = np.zeros(d * d)
            for j in range(len(self.in_dims)):
                blk = self.blocks.get((i, j))
                if blk is not None:
                    acc = acc + blk @ coords[j]
            out.append(smat(acc, d))
        return out

    def adjoint(self) -> "HermitianMap":
        blocks = {(j, i): mat.T.copy() for (i, j), mat in self.blocks.items()}
        return HermitianMap(self.out_dims, self.in_dims, blocks)

    def matrix(self) -> Array:
        """Dense real matrix on concatenated coordinates (out rows, in cols)."""
        n_in = sum(d * d for d in self.in_dims)
        n_out = sum(d * d for d in self.out_dims)
        out = np.zeros((n_out, n_in))
        ro = np.cumsum([0] + [d * d for d in self.out_dims])
        co = np.cumsum([0] + [d * d for d in self.in_dims])
        for (i, j), mat in self.blocks.items():
            out[ro[i]:ro[i + 1], co[j]:co[j + 1]] = mat
        return out

    def hermiticity_residual(self, seed: int = 7) -> float:
        """Residual of Hermitian-preservation on a random Hermitian sample."""
        rng = np.random.default_rng(seed)
        xs = [linalg.random_hermitian(rng, d) for d in self.in_dims]
        outs = self.apply(xs)
        return max(float(np.linalg.norm(o - o.conj().T)) for o in outs)


def adjoint_map(phi: HermitianMap) -> HermitianMap:
    """The unique map with <phi(S), T> = <S, adjoint(phi)(T)> for Hermitian S, T."""
    return phi.adjoint()


def _as_blocks(ops, dims, what: str) -> list[Array]:
    if isinstance(ops, np.ndarray) or np.isscalar(ops):
        ops = [ops]
    ops = [np.atleast_2d(np.asarray(o, dtype=np.complex128)) for o in ops]
    if len(ops) != len(dims):
        raise ValueError(f"{what}: expected {len(dims)} blocks, got {len(ops)}")
    out = []
    for o, d in zip(ops, dims):
        if o.shape != (d, d):
            raise ValueError(f"{what}: block shape {o.shape} does not match dimension {d}")
        herm, _ = linalg.hermitize(o, 1e-6)
        out.append(herm)
    return out


@dataclass(frozen=True)
class SdpProblem:
    phi: HermitianMap
    a: list[Array]
    b: list[Array]

    def __post_init__(self):
        object.__setattr__(self, "a", _as_blocks(self.a, self.phi.in_dims, "a"))
        object.__setattr__(self, "b", _as_blocks(self.b, self.phi.out_dims, "b"))


@dataclass
class SdpSolution:
    status: str                      # optimal | primal_infeasible_suspected |
    #                                  dual_infeasible_suspected | max_iter
    primal_x: list[Array] | None
    dual_y: list[Array] | None
    primal_value: float
    dual_value: float
    gap: float
    iterations: int
    residuals: dict[str, float]


# ---------------------------------------------------------------------------
# interior-point machinery
# ---------------------------------------------------------------------------

class _Cone:
    """Per-block state of the homogeneous iterate."""

    def __init__(self, dims):
        self.dims = dims
        self.X = [np.eye(d, dtype=np.complex128) for d in dims]
        self.S = [np.eye(d, dtype=np.complex128) for d in dims]

    @property
    def nu(self) -> int:
        return sum(self.dims)

    def dot(self, other_x=None) -> float:
        return sum(float(np.real(np.vdot(x, s))) for x, s in zip(self.X, self.S))


def _sym(m: Array) -> Array:
    return (m + m.conj().T) / 2


def _inv_psd(m: Array) -> Array:
    w, v = np.linalg.eigh(_sym(m))
    w = np.clip(w, 1e-300, None)
    return (v / w) @ v.conj().T


def _max_step(x: Array, dx: Array) -> float:
    """Largest alpha in (0, 1] keeping x + alpha dx PSD."""
    w, v = np.linalg.eigh(_sym(x))
    w = np.clip(w, 1e-300, None)
    ih = (v / np.sqrt(w)) @ v.conj().T
    lam = float(np.linalg.eigvalsh(_sym(ih @ dx @ ih.conj().T))[0])
    if lam >= -1e-14:
        return 1.0
    return min(1.0, -1.0 / lam)


class _Newton:
    """One iteration's factorization data for the HSD Newton systems."""

    def __init__(self, ablk, dims, X, S):
        self.ablk = ablk            # list of (m, d, d) constraint stacks
        self.dims = dims
        self.X = X
        self.Sinv = [_inv_psd(s) for s in S]
        m = ablk[0].shape[0]
        sch = np.zeros((m, m))
        for b, d in enumerate(dims):
            t = np.einsum("ij,mjk,kl->mil", X[b], ablk[b], self.Sinv[b], optimize=True)
            t = (t + t.conj().transpose(0, 2, 1)) / 2
            av = ablk[b].reshape(m, d * d)
            sch += np.real(av.conj() @ t.reshape(m, d * d).T)
        ridge = 1e-13 * max(1.0, float(np.trace(sch)) / m)
        for _ in range(8):
            try:
                self.chol = np.linalg.cholesky(sch + ridge * np.eye(m))
                break
            except np.linalg.LinAlgError:
                ridge *= 100.0
        else:
            raise np.linalg.LinAlgError("Schur complement is numerically singular")

    def _a_of(self, mats) -> Array:
        m = self.ablk[0].shape[0]
        out = np.zeros(m)
        for b, d in enumerate(self.dims):
            av = self.ablk[b].reshape(m, d * d)
            out += np.real(av.conj() @ mats[b].reshape(d * d))
        return out

    def _at_of(self, y) -> list[Array]:
        return [np.einsum("m,mij->ij", y, self.ablk[b]) for b in range(len(self.dims))]

    def _chol_solve(self, rhs):
        z = np.linalg.solve(self.chol, rhs)
        return np.linalg.solve(self.chol.conj().T, z)

    def solve(self, u, vblocks, wblocks):
        """Solve  A dx = u,  -A' dy - ds = v,  dX S + X dS = w  (HKM)."""
        g = []
        for b in range(len(self.dims)):
            gb = (wblocks[b] + self.X[b] @ vblocks[b]) @ self.Sinv[b]
            g.append(_sym(gb))
        dy = self._chol_solve(u - self._a_of(g))
        aty = self._at_of(dy)
        ds = [-vblocks[b] - aty[b] for b in range(len(self.dims))]
        dx = [_sym((wblocks[b] - self.X[b] @ ds[b]) @ self.Sinv[b])
              for b in range(len(self.dims))]
        return dy, ds, dx


def _constraint_stacks(phi: HermitianMap, cone_dims):
    """Rows of the equality system [M_phi | I] as Hermitian matrix stacks."""
    n_in = len(phi.in_dims)
    m = sum(d * d for d in phi.out_dims)
    row_off = np.cumsum([0] + [d * d for d in phi.out_dims])
    stacks = []
    for b, d in enumerate(cone_dims):
        rows = np.zeros((m, d, d), dtype=np.complex128)
        if b < n_in:
            for (i, j), mat in phi.blocks.items():
                if j != b:
                    continue
                for r in range(mat.shape[0]):
                    rows[row_off[i] + r] += smat(mat[r], d)
        else:
            i = b - n_in
            basis = linalg.herm_basis(d)
            for r in range(d * d):
                rows[row_off[i] + r] = basis[r]
        stacks.append(rows)
    return stacks


def solve(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 500) -> SdpSolution:
    """Solve the primal/dual pair; deterministic for fixed inputs.

    Infeasible data is reported through ``status``; the solver never labels
    an infeasible problem "optimal".  ``max_iter`` exhaustion is likewise
    reported via ``status``.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    phi = problem.phi
    in_dims, out_dims = phi.in_dims, phi.out_dims
    cone_dims = tuple(in_dims) + tuple(out_dims)

    scale_a = max(1.0, sqrt(sum(fro_norm(x) ** 2 for x in problem.a)))
    scale_b = max(1.0, sqrt(sum(fro_norm(x) ** 2 for x in problem.b)))
    a_s = [x / scale_a for x in problem.a]
    b_s = [x / scale_b for x in problem.b]

    m = sum(d * d for d in out_dims)
    b_eq = np.concatenate([svec(x) for x in b_s])
    c_blocks = [-x for x in a_s] + [np.zeros((d, d), dtype=np.complex128) for d in out_dims]
    c_vec = np.concatenate([svec(x) for x in c_blocks])
    norm_b = float(np.linalg.norm(b_eq))
    norm_c = float(np.linalg.norm(c_vec))

    ablk = _constraint_stacks(phi, cone_dims)
    cone = _Cone(cone_dims)
    y = np.zeros(m)
    tau, kappa = 1.0, 1.0
    nu = cone.nu + 1

    def x_vec():
        return np.concatenate([svec(x) for x in cone.X])

    def s_vec():
        return np.concatenate([svec(s) for s in cone.S])

    def unscale(blocks, factor):
        return [linalg.as_complex(blk) * factor for blk in blocks]

    status = "max_iter"
    iterations = 0
    residuals: dict[str, float] = {}

    for it in range(max_iter):
        iterations = it
        xv, sv = x_vec(), s_vec()
        newton = _Newton(ablk, cone_dims, cone.X, cone.S)
        axv = newton._a_of(cone.X)
        aty_full = newton._at_of(y)

        rp = axv - tau * b_eq
        rd_blocks = [-aty_full[b] - cone.S[b] + tau * c_blocks[b]
                     for b in range(len(cone_dims))]
        cx = float(c_vec @ xv)
        by = float(b_eq @ y)
        rg = by - cx - kappa
        mu = (cone.dot() + tau * kappa) / nu

        # convergence on the de-homogenized iterate
        pres = float(np.linalg.norm(rp / tau)) / (1 + norm_b)
        dres = sqrt(sum(fro_norm(r) ** 2 for r in rd_blocks)) / tau / (1 + norm_c)
        pobj, dobj = cx / tau, by / tau
        gap_rel = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        residuals = {"primal": pres, "dual": dres, "gap_rel": gap_rel, "mu": mu}
        if pres <= tol and dres <= tol and gap_rel <= tol:
            status = "optimal"
            break

        # infeasibility certificates from the homogeneous iterate
        aty_plus_s = sqrt(sum(fro_norm(aty_full[b] + cone.S[b]) ** 2
                              for b in range(len(cone_dims))))
        if by > tol and aty_plus_s / by <= tol and tau * norm_b < 0.1:
            status = "primal_infeasible_suspected"
            break
        ax_norm = float(np.linalg.norm(axv))
        if -cx > tol and ax_norm / (-cx) <= tol and tau * norm_c < 0.1:
            status = "dual_infeasible_suspected"
            break

        # predictor (affine scaling)
        eta = 1.0
        w_aff = [-(cone.X[b] @ cone.S[b]) for b in range(len(cone_dims))]
        v1 = [-eta * r for r in rd_blocks]
        dy1, ds1, dx1 = newton.solve(-eta * rp, v1, w_aff)
        v2 = [-cb for cb in c_blocks]
        dy2, ds2, dx2 = newton.solve(b_eq, v2, [np.zeros_like(w) for w in w_aff])

        def combine(dy1, ds1, dx1, rc_scalar, eta):
            num = rc_scalar - tau * (float(b_eq @ dy1) - float(
                c_vec @ np.concatenate([svec(d) for d in dx1])) + eta * rg)
            den = tau * (float(b_eq @ dy2) - float(
                c_vec @ np.concatenate([svec(d) for d in dx2]))) + kappa
            dtau = num / den if abs(den) > 1e-300 else 0.0
            dx = [dx1[b] + dtau * dx2[b] for b in range(len(cone_dims))]
            dsb = [ds1[b] + dtau * ds2[b] for b in range(len(cone_dims))]
            dy = dy1 + dtau * dy2
            dkappa = float(b_eq @ dy) - float(
                c_vec @ np.concatenate([svec(d) for d in dx])) + eta * rg
            return dx, dy, dsb, dtau, dkappa

        dx_a, dy_a, ds_a, dtau_a, dkap_a = combine(dy1, ds1, dx1, -tau * kappa, 1.0)

        alpha_a = 1.0
        for b in range(len(cone_dims)):
            alpha_a = min(alpha_a, _max_step(cone.X[b], dx_a[b]))
            alpha_a = min(alpha_a, _max_step(cone.S[b], ds_a[b]))
        if dtau_a < 0:
            alpha_a = min(alpha_a, -tau / dtau_a)
        if dkap_a < 0:
            alpha_a = min(alpha_a, -kappa / dkap_a)

        dot_aff = sum(float(np.real(np.vdot(cone.X[b] + alpha_a * dx_a[b],
                                            cone.S[b] + alpha_a * ds_a[b])))
                      for b in range(len(cone_dims)))
        mu_aff = (dot_aff + (tau + alpha_a * dtau_a) * (kappa + alpha_a * dkap_a)) / nu
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

        # combined corrector step
        eta = 1.0 - sigma
        w_cor = [sigma * mu * np.eye(d) - cone.X[b] @ cone.S[b] - dx_a[b] @ ds_a[b]
                 for b, d in enumerate(cone_dims)]
        v1 = [-eta * r for r in rd_blocks]
        dy1, ds1, dx1 = newton.solve(-eta * rp, v1, w_cor)
        rc_scalar = sigma * mu - tau * kappa - dtau_a * dkap_a
        dx, dy, ds, dtau, dkappa = combine(dy1, ds1, dx1, rc_scalar, eta)

        alpha = 1.0
        for b in range(len(cone_dims)):
            alpha = min(alpha, _max_step(cone.X[b], dx[b]))
            alpha = min(alpha, _max_step(cone.S[b], ds[b]))
        if dtau < 0:
            alpha = min(alpha, -tau / dtau)
        if dkappa < 0:
            alpha = min(alpha, -kappa / dkappa)
        alpha *= 0.98

        for b in range(len(cone_dims)):
            cone.X[b] = _sym(cone.X[b] + alpha * dx[b])
            cone.S[b] = _sym(cone.S[b] + alpha * ds[b])
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa

        if mu < 1e-300 or tau < 1e-300:
            break

    n_in = len(in_dims)
    if status == "optimal":
        x_hat = [cone.X[b] / tau for b in range(n_in)]
        y_hat = [-smat(seg, d) / tau for seg, d in
                 zip(np.split(y, np.cumsum([d * d for d in out_dims])[:-1]), out_dims)]
        primal_value = -pobj * scale_a * scale_b
        dual_value = -dobj * scale_a * scale_b
        return SdpSolution(
            status="optimal",
            primal_x=unscale(x_hat, scale_b),
            dual_y=unscale(y_hat, scale_a),
            primal_value=primal_value,
            dual_value=dual_value,
            gap=abs(primal_value - dual_value),
            iterations=iterations,
            residuals=residuals,
        )

    cert_x = cert_y = None
    if status == "primal_infeasible_suspected":
        norm = max(float(np.linalg.norm(y)), 1e-300)
        cert_y = [-smat(seg, d) / norm for seg, d in
                  zip(np.split(y, np.cumsum([d * d for d in out_dims])[:-1]), out_dims)]
    if status == "dual_infeasible_suspected":
        norm = max(sqrt(sum(fro_norm(cone.X[b]) ** 2 for b in range(n_in))), 1e-300)
        cert_x = [cone.X[b] / norm for b in range(n_in)]
    return SdpSolution(
        status=status,
        primal_x=cert_x,
        dual_y=cert_y,
        primal_value=float("nan"),
        dual_value=float("nan"),
        gap=float("nan"),
        iterations=iterations,
        residuals=residuals,
    )


@dataclass
class VerificationReport:
    ok: bool
    details: dict[str, float]


def verify_solution(problem: SdpProblem, solution: SdpSolution,
                    tol: float = 1e-8) -> VerificationReport:
    """Re-check a solution from scratch with eigenvalue and inner-product tests.

    Does not trust any residual reported by the solver: feasibility slacks and
    the duality gap are recomputed from the stored operators alone.
    """
    details: dict[str, float] = {}
    if solution.status != "optimal" or solution.primal_x is None or solution.dual_y is None:
        return VerificationReport(False, {"status_ok": 0.0})
    phi = problem.phi
    scale = max(1.0, max(fro_norm(x) for x in solution.primal_x),
                max(fro_norm(y) for y in solution.dual_y))

    details["x_min_eig"] = min(linalg.min_eig(x) for x in solution.primal_x)
    slack = [problem.b[i] - o for i, o in enumerate(phi.apply(solution.primal_x))]
    details["primal_slack_min_eig"] = min(linalg.min_eig(s) for s in slack)
    details["y_min_eig"] = min(linalg.min_eig(y) for y in solution.dual_y)
    dual_slack = [o - problem.a[j] for j, o in
                  enumerate(phi.adjoint().apply(solution.dual_y))]
    details["dual_slack_min_eig"] = min(linalg.min_eig(s) for s in dual_slack)

    pval = sum(linalg.inner(problem.a[j], solution.primal_x[j])
               for j in range(len(problem.a)))
    dval = sum(linalg.inner(problem.b[i], solution.dual_y[i])
               for i in range(len(problem.b)))
    details["primal_value"] = pval
    details["dual_value"] = dval
    details["gap"] = abs(pval - dval)

    thresh = -tol * scale
    ok = (details["x_min_eig"] >= thresh
          and details["primal_slack_min_eig"] >= thresh
          and details["y_min_eig"] >= thresh
          and details["dual_slack_min_eig"] >= thresh
          and details["gap"] <= tol * scale * 10 * (1 + abs(pval) + abs(dval)))
    return VerificationReport(bool(ok), details)
