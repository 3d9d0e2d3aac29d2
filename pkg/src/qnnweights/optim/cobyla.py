"""Powell's COBYLA without constraints.

The method keeps ``n + 1`` interpolation points: a pole (best point so far)
plus ``n`` vertices stored as offsets from it.  The linear interpolant of the
objective over that simplex is minimised inside a ball of radius ``rho``,
which for a linear model with no constraints is a steepest-descent step to
the ball's boundary.  The simplex is kept well-conditioned by occasional
geometry steps, and ``rho`` is halved whenever progress stalls until it
reaches ``rho_end``.

Reference: M. J. D. Powell, "A direct search optimization method that models
the objective and constraint functions by linear interpolation", Advances in
Optimization and Numerical Analysis, 1994, pp. 51-67.
"""
from __future__ import annotations

import numpy as np

from .objective import BudgetError, OptimizerState, as_counted

__all__ = ["Cobyla", "cobyla_minimize"]

# Powell's constants: acceptability thresholds and geometry-step length
ALPHA, BETA, GAMMA, DELTA = 0.25, 2.1, 0.5, 1.1


class Cobyla:
    """Resumable COBYLA run.

    Call :meth:`run` repeatedly with evaluation budgets; the simplex and trust
    radius persist between calls.  If the objective changes between calls
    (e.g. another parameter was retuned), :meth:`refresh` re-evaluates the
    pole and shifts the stored vertex values by the same amount, which keeps
    the linear model's slope.
    """

    def __init__(self, x0, rho_begin: float = 0.5, rho_end: float = 1e-4):
        if not rho_begin > rho_end > 0:
            raise ValueError("need rho_begin > rho_end > 0")
        self.x0 = np.array(x0, dtype=float).ravel()
        self.n = self.x0.size
        self.rho_begin, self.rho_end = float(rho_begin), float(rho_end)
        self.rho = self.rho_begin
        self.pole = self.x0.copy()
        self.fpole = np.nan
        self.offsets = np.zeros((self.n, self.n))  # row j: vertex j minus pole
        self.fvals = np.full(self.n, np.nan)
        self.simi = np.zeros((self.n, self.n))  # rows: inverse of offsets.T
        self.finished = False
        self._updates = 0
        self._pending = None
        self._gen = self._iterate()

    # -- driver -------------------------------------------------------------

    def run(self, objective, max_evals: int) -> OptimizerState:
        """Advance by at most ``max_evals`` objective evaluations."""
        obj = as_counted(objective)
        used, best_x, best_f = 0, None, np.inf
        history = []
        if np.isfinite(self.fpole):
            best_x, best_f = self.pole.copy(), self.fpole
        while not self.finished and used < max_evals:
            x = self._pending if self._pending is not None else self._advance(None)
            if x is None:
                break
            f = obj(x)
            used += 1
            if f < best_f or best_x is None:
                best_x, best_f = x.copy(), f
            history.append(best_f)
            self._pending = None
            nxt = self._advance(f)
            if nxt is None:
                break
            self._pending = nxt
        return OptimizerState(
            best_x=best_x if best_x is not None else self.pole.copy(),
            best_f=best_f,
            iterations_used=used,
            converged=self.finished,
            rho=self.rho,
            simplex=self.simplex(),
            simplex_values=np.concatenate([[self.fpole], self.fvals]),
            history=history,
        )

    def refresh(self, objective) -> float:
        """Re-evaluate the pole under ``objective`` and shift stored values (one evaluation)."""
        f = float(objective(self.pole.copy()))
        if np.isfinite(self.fpole):
            self.fvals += f - self.fpole
        self.fpole = f
        return f

    def simplex(self) -> np.ndarray:
        return np.vstack([self.pole, self.pole + self.offsets])

    def _advance(self, f):
        try:
            return self._gen.send(f) if f is not None else next(self._gen)
        except StopIteration:
            self.finished = True
            return None

    # -- algorithm ------------------------------------------------------------

    def _iterate(self):
        n = self.n
        self.fpole = yield self.pole.copy()
        # initial simplex: pole + rho * e_j, the pole moving to any better vertex
        for j in range(n):
            x = self.pole.copy()
            x[j] += self.rho
            f = yield x
            if f < self.fpole:
                self.offsets[:j, j] -= self.rho
                self.offsets[j] = 0.0
                self.offsets[j, j] = -self.rho
                self.fvals[j] = self.fpole
                self.pole, self.fpole = x, f
            else:
                self.offsets[j, j] = self.rho
                self.fvals[j] = f
        self.simi = np.linalg.inv(self.offsets.T)

        trust_step_next = True
        while True:
            self._make_pole_best()
            veta = np.sqrt((self.offsets**2).sum(axis=1))
            vsig = 1.0 / np.sqrt((self.simi**2).sum(axis=1))
            parsig, pareta = ALPHA * self.rho, BETA * self.rho
            acceptable = bool(np.all(vsig >= parsig) and np.all(veta <= pareta))

            if not trust_step_next and not acceptable:
                yield from self._geometry_step(veta, vsig, parsig, pareta)
                trust_step_next = True
                continue

            grad = self.simi.T @ (self.fvals - self.fpole)
            gnorm = np.sqrt(grad @ grad)
            improved = False
            if gnorm > 0 and np.isfinite(gnorm):
                dx = -(self.rho / gnorm) * grad
                prerem = self.rho * gnorm
                fnew = yield self.pole + dx
                trured = self.fpole - fnew
                self._maybe_replace(dx, fnew, trured, veta, vsig, parsig)
                improved = trured > 0 and trured >= 0.1 * prerem
            trust_step_next = True
            if improved:
                continue
            if not acceptable:
                trust_step_next = False
                continue
            if self.rho > self.rho_end:
                self.rho *= 0.5
                if self.rho <= 1.5 * self.rho_end:
                    self.rho = self.rho_end
                continue
            return

    def _make_pole_best(self):
        j = int(np.argmin(self.fvals))
        if not self.fvals[j] < self.fpole:
            return
        d = self.offsets[j].copy()
        self.pole = self.pole + d
        self.offsets -= d
        self.offsets[j] = -d
        self.fvals[j], self.fpole = self.fpole, self.fvals[j]
        # offsets.T -> offsets.T @ T with T = I - e_j (1 + e_j)^T; T is its own inverse
        self.simi[j] = -self.simi.sum(axis=0)

    def _replace(self, j, d, f):
        self.offsets[j] = d
        self.fvals[j] = f
        self.simi[j] /= self.simi[j] @ d
        coef = self.simi @ d
        coef[j] = 0.0
        self.simi -= np.outer(coef, self.simi[j])
        self._updates += 1
        if self._updates % (self.n + 1) == 0:
            # periodic re-inversion bounds drift from the rank-one updates
            self.simi = np.linalg.inv(self.offsets.T)

    def _geometry_step(self, veta, vsig, parsig, pareta):
        if veta.max() > pareta:
            j = int(np.argmax(veta))
        else:
            j = int(np.argmin(vsig))
        dx = GAMMA * self.rho * vsig[j] * self.simi[j]
        grad = self.simi.T @ (self.fvals - self.fpole)
        if grad @ dx > 0:
            dx = -dx
        f = yield self.pole + dx
        self._replace(j, dx, f)

    def _maybe_replace(self, dx, fnew, trured, veta, vsig, parsig):
        # Powell's rule: replacement is mandatory after a decrease, otherwise only
        # if it improves the simplex volume or drops a far-away vertex
        proj = np.abs(self.simi @ dx)
        ratio = 1.0 if trured <= 0 else 0.0
        jdrop = -1
        for j in range(self.n):
            if proj[j] > ratio:
                jdrop, ratio = j, proj[j]
        sigbar = proj * vsig
        edgmax = DELTA * self.rho
        far = -1
        for j in range(self.n):
            if sigbar[j] >= parsig or sigbar[j] >= vsig[j]:
                dist = veta[j] if trured <= 0 else np.sqrt(((dx - self.offsets[j]) ** 2).sum())
                if dist > edgmax:
                    far, edgmax = j, dist
        if far >= 0:
            jdrop = far
        if jdrop >= 0:
            self._replace(jdrop, dx, fnew)


def cobyla_minimize(objective, x0, max_evals: int, rho_begin: float = 0.5, rho_end: float = 1e-4) -> OptimizerState:
    """Minimise ``objective`` from ``x0`` with at most ``max_evals`` evaluations.

    Needs room for the initial simplex plus one step: ``max_evals >= len(x0) + 2``.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    if max_evals < x0.size + 2:
        raise BudgetError(f"COBYLA needs max_evals >= {x0.size + 2} for {x0.size} variables")
    return Cobyla(x0, rho_begin, rho_end).run(objective, max_evals)
