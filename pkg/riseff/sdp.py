# Copyright (c) 2026 The riseff Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
# implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""
Dense primal-dual interior-point solver for small Hermitian SDPs.

Solves

    maximize    Tr(C Q)
    subject to  Tr(G_j Q) <= h_j  or  >= h_j
                Q_nn = 1                       (when diag_one)
                Q >= 0

The complex problem is embedded into a real symmetric one of twice the
dimension, H -> [[Re H, -Im H], [Im H, Re H]], with Tr(H Q) equal to half
the inner product of the embeddings. Inequalities get slack variables, so
the real problem is the standard form

    minimize <Cm, X> + c'x   s.t.   A(X) + B x = b,  X >= 0,  x >= 0

and is solved with the HKM search direction in a Mehrotra
predictor-corrector loop started from an infeasible point. A phase-1
problem that minimizes a common artificial constraint relaxation decides
feasibility before the objective is looked at.
"""

from collections import namedtuple

import numpy as np
from numpy.linalg import LinAlgError
from scipy import linalg

from riseff.common import DimensionMismatch, NotHermitian

OPTIMAL = 'optimal'
INFEASIBLE = 'infeasible'
MAX_ITER = 'max_iter'

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100
HERMITIAN_TOL = 1e-12
#: smallest phase-1 relaxation that is still called infeasible
PHASE1_FLOOR = 1e-6
#: fraction of the distance to the cone boundary taken per step
STEP_FRACTION = 0.95

LE = '<='
GE = '>='
_SENSES = {'<=': LE, '≤': LE, 'le': LE, '>=': GE, '≥': GE, 'ge': GE}


def embed(H):
    """Real symmetric 2n x 2n image of a Hermitian n x n matrix."""
    H = np.asarray(H)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def unembed(X):
    """Hermitian matrix whose embedding is closest to X."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0] // 2
    re = (X[:n, :n] + X[n:, n:]) / 2.0
    im = (X[n:, :n] - X[:n, n:]) / 2.0
    return re + 1j * im


def hermitian_error(H):
    H = np.asarray(H)
    if H.size == 0:
        return 0.0
    return float(np.max(np.abs(H - H.conj().T)))


def _check_hermitian(H, dim):
    H = np.array(H, dtype=complex)
    if H.shape != (dim, dim):
        raise DimensionMismatch('expected %d x %d matrix, got %r' %
                                (dim, dim, H.shape))
    err = hermitian_error(H)
    if err > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(H)))):
        raise NotHermitian(err)
    H = (H + H.conj().T) / 2.0
    H.flags.writeable = False
    return H


def _tr(H, Q):
    """Real part of Tr(H Q)."""
    return float(np.real(np.sum(H * Q.T)))


class SdpProblem(namedtuple('SdpProblem', 'objective ineq_constraints '
                            'diag_one dim')):
    """
    :param objective: n x n Hermitian matrix C of Tr(C Q)
    :param ineq_constraints: iterable of (G, sense, rhs), sense '<=' or '>='
    :param diag_one: fix every diagonal entry of Q to one
    """

    __slots__ = ()

    def __new__(cls, objective, ineq_constraints=(), diag_one=True):
        objective = np.asarray(objective)
        if objective.ndim != 2 or objective.shape[0] < 1:
            raise DimensionMismatch('objective must be a square matrix, got '
                                    '%r' % (objective.shape,))
        dim = objective.shape[0]
        objective = _check_hermitian(objective, dim)
        constraints = []
        for G, sense, rhs in ineq_constraints:
            try:
                sense = _SENSES[sense]
            except KeyError:
                raise ValueError('unknown constraint sense %r' % (sense,))
            rhs = float(rhs)
            if not np.isfinite(rhs):
                raise ValueError('constraint rhs must be finite')
            constraints.append((_check_hermitian(G, dim), sense, rhs))
        return super(SdpProblem, cls).__new__(
            cls, objective, tuple(constraints), bool(diag_one), dim)

    def constraint_scales(self):
        """Per-constraint normalization, max(||G||_F, |h|)."""
        scales = []
        for G, _sense, h in self.ineq_constraints:
            s = max(float(np.linalg.norm(G)), abs(h))
            scales.append(s if s > 0 else 1.0)
        return np.array(scales)


SdpDual = namedtuple('SdpDual', 'diag ineq')

SdpSolution = namedtuple('SdpSolution', 'Q value status kkt_residual '
                         'duality_gap dual iterations')

_Iterate = namedtuple('_Iterate', 'X x y Z z status iterations pinf dinf '
                      'gap pobj')


def _max_step(L, dX):
    """Largest a with L L' + a dX still positive semidefinite."""
    W = linalg.solve_triangular(L, dX, lower=True)
    W = linalg.solve_triangular(L, W.T, lower=True)
    lam = linalg.eigvalsh((W + W.T) / 2.0, subset_by_index=[0, 0])[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _vec_step(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def _hkm(Cm, c, Amat, B, b, tol, max_iter, target=None):
    """
    Infeasible-start predictor-corrector on the real standard form.

    Stops early once the primal objective reaches ``target`` with the
    primal residual already converged.
    """
    d = Cm.shape[0]
    m = len(b)
    nx = len(c)
    eye = np.eye(d)
    Af = Amat.reshape(m, d * d)
    X = eye.copy()
    Z = (1.0 + np.linalg.norm(Cm)) * eye
    x = np.ones(nx)
    z = np.ones(nx)
    y = np.zeros(m)
    nu = float(d + nx)
    bnorm = 1.0 + np.linalg.norm(b)
    cnorm = 1.0 + np.linalg.norm(Cm) + np.linalg.norm(c)
    status = MAX_ITER
    pinf = dinf = gap = pobj = np.inf
    iteration = 0
    for iteration in range(max_iter + 1):
        Aty = (y.dot(Af)).reshape(d, d)
        rp = b - Af.dot(X.ravel()) - B.dot(x)
        Rd = Cm - Aty - Z
        rd = c - B.T.dot(y) - z
        pobj = float(np.sum(Cm * X) + c.dot(x))
        dobj = float(b.dot(y))
        mu = (float(np.sum(X * Z)) + float(x.dot(z))) / nu
        pinf = np.linalg.norm(rp) / bnorm
        dinf = (np.linalg.norm(Rd) + np.linalg.norm(rd)) / cnorm
        gap = max(nu * mu, abs(pobj - dobj)) / (1.0 + abs(pobj))
        if pinf <= 0.1 * tol and (
                (dinf <= tol and gap <= tol) or
                (target is not None and pobj <= target)):
            status = OPTIMAL
            break
        if iteration == max_iter:
            break
        try:
            Lx = linalg.cholesky(X, lower=True)
            Lz = linalg.cholesky(Z, lower=True)
            Zi = linalg.cho_solve((Lz, True), eye)
            Zi = (Zi + Zi.T) / 2.0
            XAZ = np.matmul(np.matmul(X, Amat), Zi)
            ratio = x / z
            M = Af.dot(XAZ.reshape(m, d * d).T) + (B * ratio).dot(B.T)
            M = (M + M.T) / 2.0
            if m:
                try:
                    factor = linalg.cho_factor(M)

                    def schur_solve(rhs):
                        return linalg.cho_solve(factor, rhs)
                except LinAlgError:
                    def schur_solve(rhs):
                        return np.linalg.lstsq(M, rhs, rcond=None)[0]
            else:
                def schur_solve(rhs):
                    return np.zeros(0)

            def direction(Rc, rc):
                W = Rc.dot(Zi) - X.dot(Rd).dot(Zi)
                rhs = rp - Af.dot(W.ravel()) - B.dot(rc / z - ratio * rd)
                dy = schur_solve(rhs)
                Ady = (dy.dot(Af)).reshape(d, d)
                dX = W + X.dot(Ady).dot(Zi)
                dX = (dX + dX.T) / 2.0
                dZ = Rd - Ady
                dZ = (dZ + dZ.T) / 2.0
                Bdy = B.T.dot(dy)
                dx = rc / z - ratio * rd + ratio * Bdy
                dz = rd - Bdy
                return dX, dx, dy, dZ, dz

            XZ = X.dot(Z)
            aX, ax, _ay, aZ, az = direction(-XZ, -x * z)
            ap = min(1.0, _max_step(Lx, aX), _vec_step(x, ax))
            ad = min(1.0, _max_step(Lz, aZ), _vec_step(z, az))
            mu_aff = (float(np.sum((X + ap * aX) * (Z + ad * aZ))) +
                      float((x + ap * ax).dot(z + ad * az))) / nu
            sigma = min(1.0, (max(mu_aff, 0.0) / mu) ** 3) if mu > 0 else 0.0
            Rc = sigma * mu * eye - XZ - aX.dot(aZ)
            rc = sigma * mu - x * z - ax * az
            dX, dx, dy, dZ, dz = direction(Rc, rc)
            ap = min(1.0, STEP_FRACTION * _max_step(Lx, dX),
                     STEP_FRACTION * _vec_step(x, dx))
            ad = min(1.0, STEP_FRACTION * _max_step(Lz, dZ),
                     STEP_FRACTION * _vec_step(z, dz))
        except (LinAlgError, ValueError):
            break
        X = X + ap * dX
        X = (X + X.T) / 2.0
        x = x + ap * dx
        y = y + ad * dy
        Z = Z + ad * dZ
        Z = (Z + Z.T) / 2.0
        z = z + ad * dz
    return _Iterate(X, x, y, Z, z, status, iteration, pinf, dinf, gap, pobj)


def _standard_form(problem):
    n = problem.dim
    d = 2 * n
    rows, rhs = [], []
    if problem.diag_one:
        for k in range(d):
            E = np.zeros((d, d))
            E[k, k] = 1.0
            rows.append(E)
            rhs.append(1.0)
    scales = problem.constraint_scales()
    for (G, _sense, h), s in zip(problem.ineq_constraints, scales):
        rows.append(0.5 * embed(G) / s)
        rhs.append(h / s)
    Amat = np.array(rows).reshape(len(rows), d, d)
    signs = np.array([1.0 if sense == LE else -1.0
                      for _G, sense, _h in problem.ineq_constraints])
    return Amat, np.array(rhs, dtype=float), signs, scales


def solve(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """
    Solve an SdpProblem.

    :param problem: SdpProblem
    :param tol: relative tolerance on residuals and duality gap
    :param max_iter: iteration cap per phase
    :returns: SdpSolution; status is 'optimal', 'infeasible' or 'max_iter'
    """
    n = problem.dim
    d = 2 * n
    Amat, b, signs, scales = _standard_form(problem)
    m = len(b)
    ndiag = d if problem.diag_one else 0
    J = len(signs)
    C = problem.objective
    cnorm = float(np.linalg.norm(C))
    sc = min(1.0, cnorm) if cnorm > 0 else 1.0
    iterations = 0

    if J:
        B1 = np.zeros((m, J + 1))
        B1[ndiag + np.arange(J), np.arange(J)] = signs
        B1[ndiag:, J] = -signs
        c1 = np.zeros(J + 1)
        c1[J] = 1.0
        threshold = max(PHASE1_FLOOR, 10.0 * tol)
        first = _hkm(np.zeros((d, d)), c1, Amat, B1, b, tol, max_iter,
                     target=0.1 * threshold)
        iterations += first.iterations
        relaxation = float(first.x[J])
        if relaxation > threshold:
            Q = unembed(first.X)
            status = INFEASIBLE if first.status == OPTIMAL else MAX_ITER
            return SdpSolution(Q, float('nan'), status,
                               max(first.pinf, first.dinf), float('nan'),
                               None, iterations)

    B = np.zeros((m, J))
    B[ndiag + np.arange(J), np.arange(J)] = signs
    Cm = -0.5 * embed(C) / sc
    res = _hkm(Cm, np.zeros(J), Amat, B, b, tol, max_iter)
    iterations += res.iterations

    Q = unembed(res.X)
    Q = (Q + Q.conj().T) / 2.0
    if problem.diag_one:
        dq = np.sqrt(np.maximum(np.real(np.diag(Q)), np.finfo(float).tiny))
        Q = Q / np.outer(dq, dq)
        np.fill_diagonal(Q, 1.0)
    value = _tr(C, Q)
    if problem.diag_one:
        ydiag = -(res.y[:n] + res.y[n:d]) * sc
    else:
        ydiag = np.zeros(0)
    mult = -res.y[ndiag:] * sc / scales if J else np.zeros(0)
    dual = SdpDual(ydiag, mult)
    gap = _dual_value(problem, dual) - value
    return SdpSolution(Q, value, res.status, max(res.pinf, res.dinf), gap,
                       dual, iterations)


def _dual_value(problem, dual):
    h = np.array([rhs for _G, _s, rhs in problem.ineq_constraints])
    return float(np.sum(dual.diag)) + (float(dual.ineq.dot(h)) if len(h)
                                       else 0.0)


def dual_slack(problem, dual):
    """diag(y) + sum_j mu_j G_j - C, PSD for a dual feasible point."""
    Z = -np.array(problem.objective)
    if problem.diag_one:
        Z = Z + np.diag(dual.diag)
    for (G, _sense, _h), mu in zip(problem.ineq_constraints, dual.ineq):
        Z = Z + mu * G
    return Z


class VerifyReport(namedtuple('VerifyReport', [
        'value', 'hermitian_error', 'psd_margin', 'diag_violation',
        'ineq_violation', 'dual_psd_margin', 'dual_sign_violation',
        'dual_value', 'duality_gap', 'objective_norm'])):
    __slots__ = ()

    def within(self, psd_tol=1e-8, feas_tol=1e-7, gap_tol=1e-6,
               dual_tol=1e-6):
        """
        True when every margin meets the certificate tolerances. Dual
        margins are measured against max(1, ||C||_F); a report without
        multipliers is never within.
        """
        worst_ineq = float(np.max(self.ineq_violation)) \
            if len(self.ineq_violation) else 0.0
        dual_scale = dual_tol * max(1.0, self.objective_norm)
        return (self.psd_margin >= -psd_tol and
                self.diag_violation <= feas_tol and
                worst_ineq <= feas_tol and
                self.dual_psd_margin >= -dual_scale and
                self.dual_sign_violation <= dual_scale and
                abs(self.duality_gap) <= gap_tol * (1.0 + abs(self.value)))


def verify(problem, solution):
    """
    Recompute feasibility, PSD and duality margins of a solution from the
    problem data alone.

    Inequality violations are normalized by max(||G||_F, |h|). Dual margins
    are NaN when the solution carries no multipliers.
    """
    Q = np.asarray(solution.Q)
    herm = hermitian_error(Q)
    Qh = (Q + Q.conj().T) / 2.0
    psd = float(np.linalg.eigvalsh(Qh)[0])
    if problem.diag_one:
        diag = float(np.max(np.abs(np.diag(Qh) - 1.0)))
    else:
        diag = 0.0
    viol = []
    for (G, sense, h), s in zip(problem.ineq_constraints,
                                problem.constraint_scales()):
        val = _tr(G, Qh)
        excess = val - h if sense == LE else h - val
        viol.append(max(excess, 0.0) / s)
    value = _tr(problem.objective, Qh)
    norm = float(np.linalg.norm(problem.objective))
    if solution.dual is None:
        nan = float('nan')
        return VerifyReport(value, herm, psd, diag, np.array(viol), nan, nan,
                            nan, nan, norm)
    Z = dual_slack(problem, solution.dual)
    dual_psd = float(np.linalg.eigvalsh(Z)[0])
    wrong_sign = [max(-mu, 0.0) if sense == LE else max(mu, 0.0)
                  for (_G, sense, _h), mu in zip(problem.ineq_constraints,
                                                 solution.dual.ineq)]
    dual_value = _dual_value(problem, solution.dual)
    return VerifyReport(value, herm, psd, diag, np.array(viol), dual_psd,
                        max(wrong_sign) if wrong_sign else 0.0, dual_value,
                        dual_value - value, norm)
