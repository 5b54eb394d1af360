"""Dense primal-dual interior-point method for small block SDPs.

Standard form over a product of PSD blocks and one nonnegative orthant:

    minimize <C, X>  s.t.  <A_i, X> = b_i,  X >= 0
    maximize b^T y   s.t.  sum_i y_i A_i + Z = C,  Z >= 0

Search directions use Nesterov-Todd scaling with Mehrotra's predictor-corrector.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

log = logging.getLogger(__name__)


@dataclass
class BlockProblem:
    kinds: list[str]                # "s" (PSD) or "l" (nonnegative orthant), per block
    dims: list[int]
    c: list[np.ndarray]             # (d, d) symmetric or (d,) per block
    a: list[sp.csr_matrix]          # (m, d*d) with both triangles stored, or (m, d)
    b: np.ndarray

    @property
    def m(self) -> int:
        return len(self.b)


@dataclass
class IpmResult:
    x: list[np.ndarray]
    y: np.ndarray
    z: list[np.ndarray]
    status: str
    iterations: int
    primal_objective: float
    dual_objective: float
    history: list[tuple[float, float, float]] = field(default_factory=list)


@dataclass
class IpmSettings:
    tolerance: float = 1e-9
    max_iterations: int = 100
    step_factor: float = 0.95


def _inner(kinds, u, v) -> float:
    return float(sum(np.vdot(a, b) for a, b in zip(u, v)))


def _chol(x):
    return np.linalg.cholesky(x)


class _Solver:
    def __init__(self, prob: BlockProblem, settings: IpmSettings):
        self.p = prob
        self.s = settings
        # dense copies of the PSD constraint matrices, reused for the Schur complement
        self.dense = [
            a.toarray().reshape(prob.m, d, d) if k == "s" else None
            for k, d, a in zip(prob.kinds, prob.dims, prob.a)
        ]
        self.a_t = [a.T.tocsr() for a in prob.a]
        self.n_total = sum(prob.dims)

    def op(self, x) -> np.ndarray:
        out = np.zeros(self.p.m)
        for k, a, xb in zip(self.p.kinds, self.p.a, x):
            out += a @ (xb.ravel() if k == "s" else xb)
        return out

    def adj(self, y) -> list[np.ndarray]:
        out = []
        for k, d, at in zip(self.p.kinds, self.p.dims, self.a_t):
            v = at @ y
            out.append(v.reshape(d, d) if k == "s" else v)
        return out

    def initial_point(self):
        p = self.p
        norms_a = np.sqrt(sum(np.asarray(a.multiply(a).sum(axis=1)).ravel() for a in p.a))
        xi, eta = [], []
        for k, d, a, c in zip(p.kinds, p.dims, p.a, p.c):
            blk_norm = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
            xi.append(max(10.0, np.sqrt(d), d * np.max((1 + np.abs(p.b)) / (1 + blk_norm))))
            eta.append(max(10.0, np.sqrt(d), np.max(norms_a, initial=0.0), np.linalg.norm(c)))
        x = [v * (np.eye(d) if k == "s" else np.ones(d)) for v, k, d in zip(xi, p.kinds, p.dims)]
        z = [v * (np.eye(d) if k == "s" else np.ones(d)) for v, k, d in zip(eta, p.kinds, p.dims)]
        return x, np.zeros(p.m), z

    def scaling(self, x, z):
        sc = []
        for k, xb, zb in zip(self.p.kinds, x, z):
            if k == "s":
                lx, lz = _chol(xb), _chol(zb)
                u, d, vt = np.linalg.svd(lz.T @ lx)
                g = lx @ vt.T / np.sqrt(d)
                sc.append((g, g @ g.T, d, np.linalg.inv(g)))
            else:
                sc.append((None, xb / zb, np.sqrt(xb * zb), zb))
        return sc

    def schur(self, sc) -> np.ndarray:
        m = self.p.m
        mat = np.zeros((m, m))
        for k, a, dense, (g, w, lam, ginv) in zip(self.p.kinds, self.p.a, self.dense, sc):
            if k == "s":
                tmp = np.matmul(np.matmul(w, dense), w).reshape(m, -1)
                mat += np.asarray(a @ tmp.T)
            else:
                mat += (a @ sp.diags(w) @ a.T).toarray()
        return mat

    def direction(self, chol_m, sc, rp, rd, rc):
        """Solve for (dx, dy, dz) given residuals and the scaled complementarity target rc."""
        rhs = rp.copy()
        for k, a, (g, w, lam, ginv), rdb, rcb in zip(self.p.kinds, self.p.a, sc, rd, rc):
            if k == "s":
                rhs += a @ (w @ rdb @ w - rcb).ravel()
            else:
                rhs += a @ (w * rdb - rcb)
        dy = sla.cho_solve(chol_m, rhs)
        ady = self.adj(dy)
        dz = [rdb - v for rdb, v in zip(rd, ady)]
        dx = []
        for k, (g, w, lam, ginv), dzb, rcb in zip(self.p.kinds, sc, dz, rc):
            if k == "s":
                dxb = rcb - w @ dzb @ w
                dx.append((dxb + dxb.T) / 2)
            else:
                dx.append(rcb - w * dzb)
        return dx, dy, dz

    @staticmethod
    def max_step(kinds, v, dv) -> float:
        alpha = np.inf
        for k, vb, dvb in zip(kinds, v, dv):
            if k == "s":
                l = _chol(vb)
                li = sla.solve_triangular(l, np.eye(len(vb)), lower=True)
                ev = np.linalg.eigvalsh(li @ dvb @ li.T)[0]
                if ev < 0:
                    alpha = min(alpha, -1.0 / ev)
            else:
                neg = dvb < 0
                if np.any(neg):
                    alpha = min(alpha, np.min(-vb[neg] / dvb[neg]))
        return alpha

    def complementarity_rhs(self, sc, sigma_mu, corr=None):
        """Scaled right-hand side G S G^T of dX + W dZ W = ..."""
        out = []
        for i, (k, (g, w, lam, ginv)) in enumerate(zip(self.p.kinds, sc)):
            if k == "s":
                r = -2.0 * np.diag(lam**2) + 2.0 * sigma_mu * np.eye(len(lam))
                if corr is not None:
                    r -= corr[i]
                s = r / (lam[:, None] + lam[None, :])
                out.append(g @ s @ g.T)
            else:
                r = sigma_mu - lam**2
                if corr is not None:
                    r = r - corr[i]
                out.append(r / ginv)  # the LP entry stores z here
        return out

    def solve(self) -> IpmResult:
        p, st = self.p, self.s
        kinds = p.kinds
        x, y, z = self.initial_point()
        b_norm = 1 + np.linalg.norm(p.b)
        c_norm = 1 + np.sqrt(sum(np.linalg.norm(c) ** 2 for c in p.c))
        history = []
        status = "max_iterations"
        best = None
        it = 0
        for it in range(1, st.max_iterations + 1):
            rp = p.b - self.op(x)
            aty = self.adj(y)
            rd = [c - zb - v for c, zb, v in zip(p.c, z, aty)]
            mu = _inner(kinds, x, z) / self.n_total
            pobj = _inner(kinds, p.c, x)
            dobj = float(p.b @ y)
            pinf = np.linalg.norm(rp) / b_norm
            dinf = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in rd)) / c_norm
            gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
            history.append((pinf, dinf, gap))
            log.debug("iter %d pobj %.12g dobj %.12g pinf %.2e dinf %.2e gap %.2e", it, pobj, dobj, pinf, dinf, gap)
            err = max(pinf, dinf, gap)
            if best is None or err < best[0]:
                best = (err, [v.copy() for v in x], y.copy(), [v.copy() for v in z])
            if err < st.tolerance:
                status = "optimal"
                break
            try:
                sc = self.scaling(x, z)
                chol_m = sla.cho_factor(self.schur(sc))
            except (np.linalg.LinAlgError, sla.LinAlgError):
                status = "numerical_failure"
                break
            # predictor
            rc = self.complementarity_rhs(sc, 0.0)
            dx, dy, dz = self.direction(chol_m, sc, rp, rd, rc)
            ap = min(1.0, self.max_step(kinds, x, dx))
            ad = min(1.0, self.max_step(kinds, z, dz))
            mu_aff = _inner(kinds, [a + ap * b for a, b in zip(x, dx)], [a + ad * b for a, b in zip(z, dz)]) / self.n_total
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
            # corrector: second-order term in scaled coordinates
            corr = []
            for k, (g, w, lam, ginv), dxb, dzb in zip(kinds, sc, dx, dz):
                if k == "s":
                    xh = ginv @ dxb @ ginv.T
                    zh = g.T @ dzb @ g
                    corr.append(xh @ zh + zh @ xh)
                else:
                    corr.append(dxb * dzb)
            rc = self.complementarity_rhs(sc, sigma * mu, corr)
            dx, dy, dz = self.direction(chol_m, sc, rp, rd, rc)
            ap = min(1.0, st.step_factor * self.max_step(kinds, x, dx))
            ad = min(1.0, st.step_factor * self.max_step(kinds, z, dz))
            x = [a + ap * b for a, b in zip(x, dx)]
            y = y + ad * dy
            z = [a + ad * b for a, b in zip(z, dz)]
            x = [(v + v.T) / 2 if k == "s" else v for k, v in zip(kinds, x)]
            z = [(v + v.T) / 2 if k == "s" else v for k, v in zip(kinds, z)]
            if max(ap, ad) < 1e-10:
                status = "stalled"
                break
        if status != "optimal" and best is not None:
            _, x, y, z = best
            if best[0] < 1e-6:
                status = "near_optimal"
        return IpmResult(x, y, z, status, it, _inner(kinds, p.c, x), float(p.b @ y), history)


def solve(prob: BlockProblem, settings: IpmSettings | None = None) -> IpmResult:
    return _Solver(prob, settings or IpmSettings()).solve()
