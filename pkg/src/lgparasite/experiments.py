"""Orbit simulation, basin rasters, bifurcation scans and full-vs-reduced checks."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .analysis import (CaseLabel, EquilibriumSet, ReducedState, classify_case,
                       find_equilibria, reduced_map)
from .errors import DomainError
from .model import DemographyParams, DiseaseParams, FullState, demography_map, disease_iterate
from .reduction import ReducedParams, compute_nu, reduce_params_at_nu

CONVERGENCE_TOL = 1e-12
CONVERGENCE_STREAK = 10
MAX_ITER = 1_000_000
MATCH_TOL = 1e-6
UNRESOLVED = -1
THIN_AFTER = 1000
THIN_EVERY = 100


@dataclass(frozen=True)
class OrbitResult:
    """Outcome of iterating the reduced map from one initial state.

    ``limit`` is ``None`` when the orbit did not settle within ``max_iter``.
    ``iterations`` counts steps up to the start of the final run of
    sub-tolerance steps.  ``monotone_from`` is the first index after which
    both components are monotone (steps below the tolerance are ignored).
    """

    samples: list
    sample_index: list
    limit: ReducedState | None
    iterations: int
    monotone_from: int

    @property
    def converged(self):
        return self.limit is not None


def _scalar_map(rp):
    (a1, a2), (b1, b2) = rp.rS.tolist(), rp.rI.tolist()
    (s11, s12), (s21, s22) = rp.cS.tolist()
    (i11, i12), (i21, i22) = rp.cI.tolist()

    def H(x1, x2):
        return (x1 * (a1 / (1 + s11 * x1 + s12 * x2) + b1 / (1 + i11 * x1 + i12 * x2)),
                x2 * (a2 / (1 + s21 * x1 + s22 * x2) + b2 / (1 + i21 * x1 + i22 * x2)))

    return H


def simulate_orbit(rp: ReducedParams, x0, max_iter: int = MAX_ITER,
                   tol: float = CONVERGENCE_TOL, keep_full: bool = False) -> OrbitResult:
    if tol <= 0:
        raise DomainError("tol must be positive")
    x1, x2 = (float(v) for v in x0)
    if x1 < 0 or x2 < 0:
        raise DomainError("initial state must be componentwise non-negative")
    H = _scalar_map(rp)
    samples, index = [ReducedState(x1, x2)], [0]
    streak = 0
    # start index of the current monotone run and its direction, per component
    run_start = [0, 0]
    direction = [0, 0]
    n = 0
    while n < max_iter:
        y1, y2 = H(x1, x2)
        n += 1
        for c, step in enumerate((y1 - x1, y2 - x2)):
            if abs(step) <= tol:
                continue
            s = 1 if step > 0 else -1
            if direction[c] != s:
                if direction[c] != 0:
                    run_start[c] = n - 1
                direction[c] = s
        streak = streak + 1 if max(abs(y1 - x1), abs(y2 - x2)) < tol else 0
        x1, x2 = y1, y2
        if keep_full or n <= THIN_AFTER or n % THIN_EVERY == 0:
            samples.append(ReducedState(x1, x2))
            index.append(n)
        if streak >= CONVERGENCE_STREAK:
            if index[-1] != n:
                samples.append(ReducedState(x1, x2))
                index.append(n)
            return OrbitResult(samples, index, ReducedState(x1, x2),
                               n - CONVERGENCE_STREAK, max(run_start))
    if index[-1] != n:
        samples.append(ReducedState(x1, x2))
        index.append(n)
    return OrbitResult(samples, index, None, n, max(run_start))


def iterate_many(rp: ReducedParams, X0, max_iter: int = MAX_ITER,
                 tol: float = CONVERGENCE_TOL):
    """Iterate many initial states at once.

    Returns ``(limits, converged)``; rows of ``limits`` that did not converge
    hold the last iterate.
    """
    X = np.array(X0, dtype=float).reshape(-1, 2)
    streak = np.zeros(len(X), dtype=int)
    converged = np.zeros(len(X), dtype=bool)
    active = np.arange(len(X))
    for _ in range(max_iter):
        if active.size == 0:
            break
        Y = reduced_map(rp, X[active])
        step = np.abs(Y - X[active]).max(axis=1)
        X[active] = Y
        streak[active] = np.where(step < tol, streak[active] + 1, 0)
        done = streak[active] >= CONVERGENCE_STREAK
        converged[active[done]] = True
        active = active[~done]
    return X, converged


def match_equilibria(limits, converged, equilibria, tol: float = MATCH_TOL):
    """Index of the equilibrium each limit sits on, or ``UNRESOLVED``."""
    points = np.array([e.location for e in equilibria], dtype=float)
    dist = np.abs(limits[:, None, :] - points[None, :, :]).max(axis=2)
    close = dist <= tol
    labels = np.where(close.sum(axis=1) == 1, close.argmax(axis=1), UNRESOLVED)
    labels[~converged] = UNRESOLVED
    return labels


@dataclass(frozen=True, eq=False)
class BasinGrid:
    """Equilibrium reached from each cell centre.

    ``labels[row, col]`` refers to ``equilibria[label]``; row 0 is the lowest
    x2 band and column 0 the lowest x1 band.  ``UNRESOLVED`` (-1) marks cells
    whose orbit did not converge or whose limit matched no single equilibrium.
    """

    bounds: tuple
    resolution: tuple
    labels: np.ndarray
    equilibria: EquilibriumSet

    def cell_centres(self):
        (x_lo, x_hi), (y_lo, y_hi) = self.bounds
        nx, ny = self.resolution
        xs = x_lo + (np.arange(nx) + 0.5) * (x_hi - x_lo) / nx
        ys = y_lo + (np.arange(ny) + 0.5) * (y_hi - y_lo) / ny
        return xs, ys

    def counts(self):
        """Cell count per equilibrium name, plus ``"unresolved"``."""
        out = {e.name: int((self.labels == k).sum()) for k, e in enumerate(self.equilibria)}
        out["unresolved"] = int((self.labels == UNRESOLVED).sum())
        return out


def _basin_rows(rp, xs, ys, max_iter, tol):
    X0 = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    return iterate_many(rp, X0, max_iter, tol)


def basin_grid(rp: ReducedParams, resolution, bounds=None,
               max_iter: int = 100_000, tol: float = CONVERGENCE_TOL,
               workers: int = 1) -> BasinGrid:
    """Label every cell of a regular grid by the equilibrium its centre reaches.

    ``bounds`` defaults to the trapping box, which one step of the map sends
    the whole quadrant into.
    """
    nx, ny = (int(r) for r in resolution)
    if nx <= 0 or ny <= 0:
        raise DomainError("resolution must be positive in both directions")
    if bounds is None:
        top = rp.trapping_box()
        bounds = ((0.0, float(top[0])), (0.0, float(top[1])))
    bounds = tuple(tuple(float(v) for v in b) for b in bounds)
    eqs = find_equilibria(rp)
    grid = BasinGrid(bounds, (nx, ny), np.empty(0), eqs)
    xs, ys = grid.cell_centres()

    chunks = np.array_split(ys, max(1, min(workers, ny)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(partial(_basin_rows, rp, xs, max_iter=max_iter, tol=tol),
                                  chunks))
    else:
        parts = [_basin_rows(rp, xs, chunk, max_iter, tol) for chunk in chunks]
    limits = np.concatenate([p[0] for p in parts])
    converged = np.concatenate([p[1] for p in parts])
    labels = match_equilibria(limits, converged, eqs).reshape(ny, nx)
    labels.setflags(write=False)
    return BasinGrid(bounds, (nx, ny), labels, eqs)


# -- bifurcation scans -----------------------------------------------------

@dataclass(frozen=True)
class BifurcationScan:
    """Case labels on a grid: ``labels[a][b]`` is at ``nu_axis[a]``,
    ``p_axis[b]``."""

    param: str
    nu_axis: tuple
    p_axis: tuple
    labels: tuple

    def column(self, b):
        return [row[b] for row in self.labels]

    def row(self, a):
        return list(self.labels[a])


def case_sequence(labels, axis):
    """Collapse consecutive repeats.

    Returns ``(cases, transitions)`` where ``transitions[m]`` is the midpoint
    of the axis values on either side of the change into ``cases[m + 1]``.
    """
    cases, transitions = [], []
    for n, label in enumerate(labels):
        if cases and label == cases[-1]:
            continue
        if cases:
            transitions.append(0.5 * (axis[n - 1] + axis[n]))
        cases.append(label)
    return cases, transitions


def _scan_column(p, param, nu_axis, value):
    q = p.replace(param, value)
    return [classify_case(reduce_params_at_nu(q, nu)) for nu in nu_axis]


def bifurcation_scan(p: DemographyParams, nu_axis, param: str, p_axis,
                     workers: int = 1) -> BifurcationScan:
    """Classify the reduced system over a grid of ``nu`` and one demographic
    parameter (``bS1``, ``bI2``, ``c_SI_12``, ...)."""
    nu_axis = tuple(float(v) for v in nu_axis)
    p_axis = tuple(float(v) for v in p_axis)
    p.replace(param, p_axis[0] if p_axis else 1.0)
    if any(not 0 < nu < 1 for nu in nu_axis):
        raise DomainError("nu values must lie in (0, 1)")
    work = partial(_scan_column, p, param, nu_axis)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(work, p_axis))
    else:
        columns = [work(v) for v in p_axis]
    labels = tuple(tuple(col[a] for col in columns) for a in range(len(nu_axis)))
    return BifurcationScan(param, nu_axis, p_axis, labels)


# -- full model ------------------------------------------------------------

def full_orbit_limits(p: DemographyParams, d: DiseaseParams, k: int, X0,
                      max_iter: int = 100_000, tol: float = CONVERGENCE_TOL):
    """Iterate the four-variable model from many starts; returns
    ``(limits, converged)`` like :func:`iterate_many`."""
    X = np.array(X0, dtype=float).reshape(-1, 4)
    if np.any(X < 0) or np.any(X[:, 1] + X[:, 3] <= 0):
        raise DomainError("initial states must lie in Omega")
    streak = np.zeros(len(X), dtype=int)
    converged = np.zeros(len(X), dtype=bool)
    active = np.arange(len(X))
    for _ in range(max_iter):
        if active.size == 0:
            break
        Y = demography_map(p, disease_iterate(d, X[active], k))
        step = np.abs(Y - X[active]).max(axis=1)
        X[active] = Y
        streak[active] = np.where(step < tol, streak[active] + 1, 0)
        done = streak[active] >= CONVERGENCE_STREAK
        converged[active[done]] = True
        active = active[~done]
    return X, converged


@dataclass(frozen=True)
class CorrespondenceReport:
    """Outcome of one full-versus-reduced comparison.

    ``full_limit`` is the fixed point of ``S o F^k`` reached from ``x0``
    (a census taken right after reproduction).  ``disease_phase`` is
    ``F^k(full_limit)``, the same cycle observed right after the epidemic,
    which is the fixed point of the conjugate ordering ``F^k o S``.
    ``discrepancy`` compares ``disease_phase`` with ``predicted``;
    ``raw_discrepancy`` compares ``full_limit`` itself and
    ``totals_discrepancy`` compares species totals.  All three are
    max-norm gaps relative to the max-norm of the prediction.
    """

    x0: FullState
    full_limit: FullState | None
    disease_phase: FullState | None
    reduced_limit: ReducedState | None
    predicted: FullState | None
    discrepancy: float | None
    raw_discrepancy: float | None
    totals_discrepancy: float | None
    passed: bool | None

    def as_dict(self):
        def lst(v):
            return None if v is None else list(v)
        return {
            "x0": lst(self.x0),
            "full_limit": lst(self.full_limit),
            "disease_phase": lst(self.disease_phase),
            "reduced_limit": lst(self.reduced_limit),
            "predicted": lst(self.predicted),
            "discrepancy": self.discrepancy,
            "raw_discrepancy": self.raw_discrepancy,
            "totals_discrepancy": self.totals_discrepancy,
            "passed": self.passed,
        }


def correspondence_check(p: DemographyParams, d: DiseaseParams, k: int, x0,
                         tol: float = 1e-3, max_iter: int = 100_000):
    """Compare the long-run state of the full model with the endemic split of
    the reduced model's limit from the aggregated initial condition.

    ``x0`` may be one state or an array of states; a list of reports is
    returned in the second case.  When either model fails to converge the
    report carries ``passed=None``.  ``passed`` is judged on the
    post-epidemic state, see :class:`CorrespondenceReport`.
    """
    nu = compute_nu(d)
    rp = reduce_params_at_nu(p, nu)
    X0 = np.array(x0, dtype=float)
    single = X0.ndim == 1
    X0 = X0.reshape(-1, 4)
    full, full_ok = full_orbit_limits(p, d, k, X0, max_iter)
    phase = disease_iterate(d, full, k)
    totals0 = X0[:, 0::2] + X0[:, 1::2]
    reduced, red_ok = iterate_many(rp, totals0, max_iter)

    def rel(a, b, scale):
        gap = float(np.abs(a - b).max())
        return gap / scale if scale > 0 else gap

    reports = []
    for n in range(len(X0)):
        start = FullState(*X0[n].tolist())
        if not (full_ok[n] and red_ok[n]):
            reports.append(CorrespondenceReport(
                start,
                FullState(*full[n].tolist()) if full_ok[n] else None,
                FullState(*phase[n].tolist()) if full_ok[n] else None,
                ReducedState(*reduced[n].tolist()) if red_ok[n] else None,
                None, None, None, None, None))
            continue
        n1, n2 = reduced[n]
        predicted = np.array([nu * n1, (1 - nu) * n1, nu * n2, (1 - nu) * n2])
        scale = float(np.abs(predicted).max())
        disc = rel(phase[n], predicted, scale)
        raw = rel(full[n], predicted, scale)
        totals = rel(full[n, 0::2] + full[n, 1::2], reduced[n], scale)
        reports.append(CorrespondenceReport(
            start, FullState(*full[n].tolist()), FullState(*phase[n].tolist()),
            ReducedState(n1, n2), FullState(*predicted.tolist()),
            disc, raw, totals, disc <= tol))
    return reports[0] if single else reports


def random_interior_states(rng, n, upper):
    """``n`` uniform draws from the open box ``(0, upper[0]) x (0, upper[1])``."""
    upper = np.asarray(upper, dtype=float)
    U = rng.uniform(0.0, 1.0, size=(n, len(upper)))
    U = np.where(U == 0.0, 0.5, U)
    return U * upper


def simulate_full_orbit(p: DemographyParams, d: DiseaseParams, k: int, x0,
                        max_iter: int = 100_000, tol: float = CONVERGENCE_TOL):
    """Single orbit of the four-variable model, thinned like
    :func:`simulate_orbit`.  Returns ``(samples, sample_index, limit)`` with
    ``limit=None`` if the orbit did not settle."""
    x = np.array(x0, dtype=float)
    if np.any(x < 0) or x[1] + x[3] <= 0:
        raise DomainError("initial state must lie in Omega")
    samples, index = [FullState(*x.tolist())], [0]
    streak = 0
    for n in range(1, max_iter + 1):
        y = demography_map(p, disease_iterate(d, x, k))
        streak = streak + 1 if np.abs(y - x).max() < tol else 0
        x = y
        if n <= THIN_AFTER or n % THIN_EVERY == 0 or streak >= CONVERGENCE_STREAK:
            samples.append(FullState(*x.tolist()))
            index.append(n)
        if streak >= CONVERGENCE_STREAK:
            return samples, index, FullState(*x.tolist())
    return samples, index, None
