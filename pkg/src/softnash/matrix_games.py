"""Zero-sum matrix games solved by a dense tableau simplex.

The row player maximizes. Payoffs are shifted so every entry is at least 1,
which turns the pair of maximin/minimax programs into the normalized pair

    max 1'y  s.t.  A y <= 1, y >= 0        (column player, primal)
    min 1'x  s.t.  A'x >= 1, x >= 0        (row player, dual)

Both strategies come out of a single simplex run: ``y`` from the basic
variables, ``x`` from the reduced costs of the slack columns. The game value
is ``1 / 1'y`` minus the shift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

PIVOT_TOL = 1e-10

STATUS_OK = 0
STATUS_PIVOT_LIMIT = 1
STATUS_UNBOUNDED = 2
STATUS_NOT_FINITE = 3

_STATUS_TEXT = {
    STATUS_PIVOT_LIMIT: "pivot limit reached (anti-cycling exhausted)",
    STATUS_UNBOUNDED: "no admissible pivot row (singular basis)",
    STATUS_NOT_FINITE: "payoff matrix has non-finite entries",
}


class SolverError(RuntimeError):
    """The simplex could not certify an optimal solution."""


@dataclass(frozen=True)
class MatrixGameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    # value recovered from the row player's (dual) program; equals `value`
    # at optimality up to floating point
    dual_value: float


@njit(cache=True)
def _simplex_game(G, row_out, col_out, pivot_tol):
    """Solve one game in place. Returns (value, dual_value, status)."""
    m, n = G.shape
    lo = G[0, 0]
    for i in range(m):
        for j in range(n):
            g = G[i, j]
            if not np.isfinite(g):
                return np.nan, np.nan, STATUS_NOT_FINITE
            if g < lo:
                lo = g
    shift = 1.0 - lo

    width = n + m + 1
    tab = np.zeros((m + 1, width))
    for i in range(m):
        for j in range(n):
            tab[i, j] = G[i, j] + shift
        tab[i, n + i] = 1.0
        tab[i, width - 1] = 1.0
    for j in range(n):
        tab[m, j] = -1.0
    basis = np.empty(m, np.int64)
    for i in range(m):
        basis[i] = n + i

    max_pivots = 50 * (m + n) + 50
    status = STATUS_PIVOT_LIMIT
    for _ in range(max_pivots):
        # Bland: lowest-index improving column
        col = -1
        for j in range(n + m):
            if tab[m, j] < -pivot_tol:
                col = j
                break
        if col == -1:
            status = STATUS_OK
            break
        row = -1
        best = np.inf
        for i in range(m):
            a = tab[i, col]
            if a > pivot_tol:
                ratio = tab[i, width - 1] / a
                if ratio < best - 1e-14:
                    best = ratio
                    row = i
                elif ratio <= best + 1e-14 and basis[i] < basis[row]:
                    row = i
        if row == -1:
            status = STATUS_UNBOUNDED
            break
        piv = tab[row, col]
        for k in range(width):
            tab[row, k] /= piv
        for i in range(m + 1):
            if i != row:
                f = tab[i, col]
                if f != 0.0:
                    for k in range(width):
                        tab[i, k] -= f * tab[row, k]
        basis[row] = col

    if status != STATUS_OK:
        return np.nan, np.nan, status

    for j in range(n):
        col_out[j] = 0.0
    for i in range(m):
        if basis[i] < n:
            col_out[basis[i]] = max(tab[i, width - 1], 0.0)
    sy = 0.0
    for j in range(n):
        sy += col_out[j]
    sx = 0.0
    for i in range(m):
        x = max(tab[m, n + i], 0.0)
        row_out[i] = x
        sx += x
    if sy <= 0.0 or sx <= 0.0:
        return np.nan, np.nan, STATUS_UNBOUNDED
    for j in range(n):
        col_out[j] /= sy
    for i in range(m):
        row_out[i] /= sx
    return 1.0 / sy - shift, 1.0 / sx - shift, STATUS_OK


@njit(cache=True)
def _game_value(G):
    """Value only; used inside learner kernels. Returns (value, status)."""
    m, n = G.shape
    row = np.empty(m)
    col = np.empty(n)
    v, _, status = _simplex_game(G, row, col, PIVOT_TOL)
    return v, status


@njit(cache=True)
def _solve_batch(games, values, rows, cols, pivot_tol):
    worst = STATUS_OK
    for k in range(games.shape[0]):
        v, _, status = _simplex_game(games[k], rows[k], cols[k], pivot_tol)
        values[k] = v
        if status != STATUS_OK and worst == STATUS_OK:
            worst = status
    return worst


def _as_matrix(G) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] < 1 or G.shape[1] < 1:
        raise ValueError(f"payoff must be a non-empty 2-D matrix, got shape {G.shape}")
    return np.ascontiguousarray(G)


def solve_matrix_game(G, tol: float = 1e-9) -> MatrixGameSolution:
    """Maximin value and optimal mixed strategies of payoff matrix ``G``.

    Raises SolverError if the simplex fails or the primal and dual values
    disagree by more than ``tol``.
    """
    G = _as_matrix(G)
    row = np.empty(G.shape[0])
    col = np.empty(G.shape[1])
    v, u, status = _simplex_game(G, row, col, PIVOT_TOL)
    if status != STATUS_OK:
        raise SolverError(_STATUS_TEXT[status])
    if abs(v - u) >= tol:
        raise SolverError(f"duality gap {abs(v - u):.3e} exceeds tol {tol:.1e}")
    return MatrixGameSolution(float(v), row, col, float(u))


def solve_matrix_games(games: np.ndarray):
    """Batch version over a (k, m, n) stack. Returns (values, rows, cols)."""
    games = np.ascontiguousarray(games, dtype=float)
    if games.ndim != 3:
        raise ValueError("expected a (k, m, n) stack of payoff matrices")
    k, m, n = games.shape
    values = np.empty(k)
    rows = np.empty((k, m))
    cols = np.empty((k, n))
    status = _solve_batch(games, values, rows, cols, PIVOT_TOL)
    if status != STATUS_OK:
        raise SolverError(_STATUS_TEXT[status])
    return values, rows, cols


def maximin_value(G, pi_row) -> float:
    """Worst-case payoff of the mixed row strategy ``pi_row``."""
    G = _as_matrix(G)
    pi_row = np.asarray(pi_row, dtype=float)
    if pi_row.shape != (G.shape[0],):
        raise ValueError(f"row strategy has shape {pi_row.shape}, game has {G.shape[0]} rows")
    return float(np.min(pi_row @ G))


def minimax_value(G, pi_col) -> float:
    """Best payoff the row player can get against column strategy ``pi_col``."""
    G = _as_matrix(G)
    pi_col = np.asarray(pi_col, dtype=float)
    if pi_col.shape != (G.shape[1],):
        raise ValueError(f"column strategy has shape {pi_col.shape}, game has {G.shape[1]} columns")
    return float(np.max(G @ pi_col))
