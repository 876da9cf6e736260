"""Exact discrete optimal transport with Euclidean ground cost.

solve_transport runs a transportation network simplex: northwest-corner
initial basis (degenerate ties resolved so the tree is strongly feasible),
block search for the entering arc with lowest-index tie-breaking, and the
leaving arc chosen as the last blocking arc around the pivot cycle starting
from the apex, which preserves strong feasibility and rules out cycling.

w1_uniform_clouds is the fast path for equal-size uniform clouds (an
assignment problem); it returns the cost only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import ConfigError, ConvergenceError
from .measures import DiscreteMeasure

# full cost matrices are cached below this entry count; above it the pivot
# scan recomputes row blocks from the atoms on demand
COST_CACHE_LIMIT = 4_000_000
SCAN_BLOCK_ROWS = 128


@dataclass(frozen=True)
class TransportSolution:
    """Optimal basic solution of the transportation LP.

    coupling lists (i, j, mass) with positive mass, sorted by (i, j), at most
    n + m - 1 entries. dual_f, dual_g satisfy dual_f[i] + dual_g[j] <= c_ij
    everywhere, with equality on coupling entries, and strong duality
    cost == w . dual_f + q . dual_g. iterations counts simplex pivots.
    """

    cost: float
    coupling: tuple
    dual_f: np.ndarray
    dual_g: np.ndarray
    iterations: int


@dataclass(frozen=True)
class DualityReport:
    feasibility_violation: float   # max over (i,j) of f_i + g_j - c_ij
    slackness_violation: float     # max over plan entries of mass*|f_i + g_j - c_ij|
    marginal_error: float          # L1 error of plan marginals vs (w, q)
    duality_gap: float             # |cost - (w.f + q.g)|
    passed: bool


def _check_pair(mu: DiscreteMeasure, nu: DiscreteMeasure):
    if mu.d != nu.d:
        raise ConfigError("measures must live in the same dimension")


class _Simplex:
    """Static-tree transportation simplex over the bipartite complete graph."""

    def __init__(self, mu: DiscreteMeasure, nu: DiscreteMeasure):
        self.w = np.asarray(mu.weights, dtype=np.float64)
        self.q = np.asarray(nu.weights, dtype=np.float64)
        self.xa = mu.atoms
        self.xb = nu.atoms
        self.n = mu.n
        self.m = nu.n
        self.cache = None
        if self.n * self.m <= COST_CACHE_LIMIT:
            self.cache = cdist(self.xa, self.xb)
            cmax = float(self.cache.max()) if self.cache.size else 0.0
        else:
            lo = np.minimum(self.xa.min(axis=0), self.xb.min(axis=0))
            hi = np.maximum(self.xa.max(axis=0), self.xb.max(axis=0))
            cmax = float(np.linalg.norm(hi - lo))
        self.tol = 1e-11 * max(1.0, cmax)
        self._scan_row = 0

    def cost_rows(self, r0, r1):
        if self.cache is not None:
            return self.cache[r0:r1]
        return cdist(self.xa[r0:r1], self.xb)

    def cost_at(self, i, j):
        if self.cache is not None:
            return float(self.cache[i, j])
        return float(np.linalg.norm(self.xa[i] - self.xb[j]))

    # ---- initial basis -------------------------------------------------

    def init_northwest(self):
        n, m = self.n, self.m
        cells = []
        i = j = 0
        a = float(self.w[0])
        b = float(self.q[0])
        while True:
            take = min(a, b)
            cells.append((i, j, take))
            if i == n - 1 and j == m - 1:
                break
            a -= take
            b -= take
            if a > 0.0:
                j += 1
                b = float(self.q[j])
            elif b > 0.0:
                i += 1
                a = float(self.w[i])
            else:
                # simultaneous exhaustion: move DOWN with a degenerate cell so
                # the zero arc points from child (next source) to parent
                # (current target), i.e. toward the root; this keeps the
                # initial tree strongly feasible under degeneracy
                if i == n - 1:
                    # bottom row: remaining columns carry zero demand
                    for jj in range(j + 1, m):
                        cells.append((n - 1, jj, 0.0))
                    break
                cells.append((i + 1, j, 0.0))
                if j == m - 1:
                    # last column: remaining rows carry zero supply
                    for ii in range(i + 2, n):
                        cells.append((ii, m - 1, 0.0))
                    break
                i += 1
                j += 1
                a = float(self.w[i])
                b = float(self.q[j])
        self._build_tree(cells)

    def _build_tree(self, cells):
        n, m = self.n, self.m
        N = n + m
        adj = [[] for _ in range(N)]
        for i, j, fl in cells:
            s, t = i, n + j
            adj[s].append((t, i, j, fl))
            adj[t].append((s, i, j, fl))
        parent = np.full(N, -1, dtype=np.int64)
        depth = np.zeros(N, dtype=np.int64)
        arc_row = np.full(N, -1, dtype=np.int64)
        arc_col = np.full(N, -1, dtype=np.int64)
        flow = np.zeros(N, dtype=np.float64)
        pot = np.zeros(N, dtype=np.float64)
        children = [[] for _ in range(N)]
        seen = np.zeros(N, dtype=bool)
        seen[0] = True
        stack = [0]
        while stack:
            x = stack.pop()
            for y, i, j, fl in adj[x]:
                if seen[y]:
                    continue
                seen[y] = True
                parent[y] = x
                depth[y] = depth[x] + 1
                arc_row[y] = i
                arc_col[y] = j
                flow[y] = fl
                children[x].append(y)
                c = self.cost_at(i, j)
                pot[y] = c - pot[x]  # u_i + v_j = c_ij on tree arcs
                stack.append(y)
        if not seen.all():
            raise ConvergenceError("initial basis does not span all nodes")
        self.parent = parent
        self.depth = depth
        self.arc_row = arc_row
        self.arc_col = arc_col
        self.flow = flow
        self.pot = pot
        self.children = children

    # ---- pivoting ------------------------------------------------------

    def entering_arc(self):
        """Best negative-reduced-cost arc inside the first block that has
        one, scanning row blocks cyclically; ties fall to the lowest flat
        index via argmin. Returns (i, j, rc) or None at optimality."""
        n, m = self.n, self.m
        u = self.pot[:n]
        v = self.pot[n:]
        start = self._scan_row
        done = 0
        while done < n:
            r0 = self._scan_row
            r1 = min(n, r0 + SCAN_BLOCK_ROWS)
            rc = self.cost_rows(r0, r1) - u[r0:r1, None] - v[None, :]
            k = int(rc.argmin())
            val = float(rc.flat[k])
            done += r1 - r0
            self._scan_row = r1 % n
            if val < -self.tol:
                di, dj = divmod(k, m)
                return r0 + di, dj, val
            if self._scan_row == start and done:
                break
        return None

    def pivot(self, ei, ej, rc):
        n = self.n
        parent, depth = self.parent, self.depth
        s, t = ei, n + ej
        path_s, path_t = [], []
        a, b = s, t
        while depth[a] > depth[b]:
            path_s.append(a)
            a = parent[a]
        while depth[b] > depth[a]:
            path_t.append(b)
            b = parent[b]
        while a != b:
            path_s.append(a)
            a = parent[a]
            path_t.append(b)
            b = parent[b]

        # traversal order from the apex along the entering direction:
        # apex -> s (descending), entering arc, t -> apex (ascending).
        # sign +1 means the tree arc gains flow, -1 loses.
        seq = []
        for x in reversed(path_s):
            seq.append((x, 1 if parent[x] < n else -1))
        for x in path_t:
            seq.append((x, 1 if x < n else -1))

        delta = math.inf
        leave = -1
        for x, sign in seq:
            if sign < 0:
                f = self.flow[x]
                if f < delta:
                    delta = f
                    leave = x
                elif f == delta:
                    # last blocking arc in traversal order wins
                    leave = x
        if leave < 0:
            raise ConvergenceError("pivot cycle has no reverse arc")

        for x, sign in seq:
            self.flow[x] += sign * delta

        inside = s if leave in path_s else t
        outside = t if inside == s else s

        # re-root the detached subtree at `inside`
        chain = [inside]
        x = inside
        while x != leave:
            x = parent[x]
            chain.append(x)
        arcs = [(self.arc_row[chain[k]], self.arc_col[chain[k]], self.flow[chain[k]])
                for k in range(len(chain) - 1)]
        self.children[parent[leave]].remove(leave)
        for k in range(len(chain) - 1, 0, -1):
            lo, hi = chain[k - 1], chain[k]
            parent[hi] = lo
            self.arc_row[hi], self.arc_col[hi], self.flow[hi] = arcs[k - 1]
            self.children[hi].remove(lo)
            self.children[lo].append(hi)

        parent[inside] = outside
        self.arc_row[inside] = ei
        self.arc_col[inside] = ej
        self.flow[inside] = delta
        self.children[outside].append(inside)

        # refresh depth and shift potentials across the re-hung subtree:
        # sources move by +rc and targets by -rc when the subtree hangs off
        # the source endpoint, and the reverse otherwise
        du = rc if inside == s else -rc
        stack = [inside]
        while stack:
            x = stack.pop()
            depth[x] = depth[parent[x]] + 1
            self.pot[x] += du if x < n else -du
            stack.extend(self.children[x])

    def run(self, max_pivots=None):
        if max_pivots is None:
            max_pivots = 40 * (self.n + self.m) + 10 * self.n * self.m + 1000
        self.init_northwest()
        pivots = 0
        while True:
            arc = self.entering_arc()
            if arc is None:
                return pivots
            if pivots >= max_pivots:
                raise ConvergenceError(
                    f"network simplex pivot cap {max_pivots} reached "
                    f"(best reduced cost {arc[2]:.3e})",
                    iterations=pivots, residual=arc[2])
            self.pivot(*arc)
            pivots += 1


def solve_transport(mu: DiscreteMeasure, nu: DiscreteMeasure,
                    max_pivots=None) -> TransportSolution:
    """Exact W1 between two discrete measures, with optimal plan and duals."""
    _check_pair(mu, nu)
    sx = _Simplex(mu, nu)
    pivots = sx.run(max_pivots=max_pivots)
    n = sx.n
    entries = []
    for x in range(1, n + sx.m):
        if sx.flow[x] > 0.0:
            entries.append((int(sx.arc_row[x]), int(sx.arc_col[x]), float(sx.flow[x])))
    entries.sort()
    cost = math.fsum(mass * sx.cost_at(i, j) for i, j, mass in entries)
    dual_f = sx.pot[:n].copy()
    dual_g = sx.pot[n:].copy()
    dual_f.setflags(write=False)
    dual_g.setflags(write=False)
    return TransportSolution(cost=cost, coupling=tuple(entries),
                             dual_f=dual_f, dual_g=dual_g, iterations=pivots)


def w1_1d(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Exact 1-d W1 as the area between the two CDFs."""
    _check_pair(mu, nu)
    if mu.d != 1:
        raise ConfigError("w1_1d requires 1-d atoms")
    pos = np.concatenate([mu.atoms[:, 0], nu.atoms[:, 0]])
    sgn = np.concatenate([mu.weights, -nu.weights])
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    gap = np.diff(pos)
    cdf_diff = np.cumsum(sgn[order])[:-1]
    return float(np.abs(cdf_diff) @ gap)


def w1_uniform_clouds(x: np.ndarray, y: np.ndarray) -> float:
    """Exact W1 between two equal-size uniform point clouds (cost only).

    Sorted matching in 1-d, assignment solver otherwise. The matched
    distances are summed in sorted order so the value is symmetric in the
    inputs bit for bit.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape != y.shape or x.shape[0] == 0:
        raise ConfigError("clouds must be nonempty arrays of equal shape")
    k = x.shape[0]
    if x.shape[1] == 1:
        dists = np.abs(np.sort(x[:, 0]) - np.sort(y[:, 0]))
    else:
        c = cdist(x, y)
        rows, cols = linear_sum_assignment(c)
        dists = c[rows, cols]
    return float(np.sort(dists).sum() / k)


def coupling_cost(coupling, mu: DiscreteMeasure, nu: DiscreteMeasure,
                  marginal_tol: float = 1e-9) -> float:
    """Transport cost sum mass * ||x_i - y_j|| of a plan, recomputed.

    The plan must actually couple (mu, nu): its row and column mass totals
    are checked against the weights."""
    _check_pair(mu, nu)
    row = np.zeros(mu.n)
    col = np.zeros(nu.n)
    total = []
    for i, j, mass in coupling:
        if mass < 0:
            raise ConfigError("coupling masses must be nonnegative")
        row[i] += mass
        col[j] += mass
        total.append(mass * float(np.linalg.norm(mu.atoms[i] - nu.atoms[j])))
    err = max(float(np.abs(row - mu.weights).max()),
              float(np.abs(col - nu.weights).max()))
    if err > marginal_tol:
        raise ConfigError(f"plan marginals deviate from the measures by {err:.3e}")
    return math.fsum(total)


def check_duality(solution: TransportSolution, mu: DiscreteMeasure,
                  nu: DiscreteMeasure, tol: float = 1e-8) -> DualityReport:
    """Audit dual feasibility, complementary slackness, marginals, and the
    strong-duality identity of a solution against its instance."""
    _check_pair(mu, nu)
    c = cdist(mu.atoms, nu.atoms)
    f = np.asarray(solution.dual_f)
    g = np.asarray(solution.dual_g)
    feas = float((f[:, None] + g[None, :] - c).max())
    row = np.zeros(mu.n)
    col = np.zeros(nu.n)
    slack = 0.0
    for i, j, mass in solution.coupling:
        row[i] += mass
        col[j] += mass
        slack = max(slack, mass * abs(f[i] + g[j] - c[i, j]))
    marg = float(np.abs(row - mu.weights).sum() + np.abs(col - nu.weights).sum())
    gap = abs(solution.cost - (float(mu.weights @ f) + float(nu.weights @ g)))
    passed = feas <= tol and slack <= tol and marg <= tol and gap <= tol
    return DualityReport(feasibility_violation=feas, slackness_violation=slack,
                         marginal_error=marg, duality_gap=gap, passed=passed)
