"""Experiment harness: tolerance metric, gamma sweeps, phase diagrams, rigidity demo."""

from __future__ import annotations

import io
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .certificate import build_certificate, certified_gamma_interval, condition_report
from .ensembles import EnsembleSpec, PHASE, RIGIDITY, random_sparse, random_lowrank
from .matcore import as_matrix, support_of, svd
from .solver import DecompositionResult, SolverConfig, decompose, decompose_t, t_to_gamma
from .tangent import TangentSpace, degrees, inc

__all__ = [
    "PhaseDiagramConfig",
    "PhaseDiagramResult",
    "RigidityResult",
    "SweepResult",
    "default_t_grid",
    "gamma_sweep",
    "parse_grid",
    "phase_diagram",
    "recommend_gamma",
    "rigidity_demo",
    "tol_metric",
]

log = logging.getLogger(__name__)

ENDPOINT_FRACTION = 0.01
SOLUTION_ZERO_TOL = 1e-9
SOLUTION_RANK_TOL = 1e-9
# solves next to a regime change converge slowly and are not on a plateau anyway
SWEEP_MAX_ITERS = 2000


def tol_metric(a_hat, b_hat, a_true, b_true):
    """||A_hat - A*||_F / ||A*||_F + ||B_hat - B*||_F / ||B*||_F."""
    na = np.linalg.norm(as_matrix(a_true))
    nb = np.linalg.norm(as_matrix(b_true))
    if na == 0 or nb == 0:
        raise ValueError("ground-truth components must be nonzero")
    return float(np.linalg.norm(as_matrix(a_hat) - a_true) / na
                 + np.linalg.norm(as_matrix(b_hat) - b_true) / nb)


def parse_grid(text, kind=int):
    """Inclusive ``lo:step:hi`` grid (or a single value)."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [kind(parts[0])]
        if len(parts) != 3:
            raise ValueError
        lo, step, hi = (kind(p) for p in parts)
    except ValueError:
        raise ValueError(f"grid must look like lo:step:hi, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise ValueError(f"grid needs step > 0 and hi >= lo, got {text!r}")
    if kind is int:
        return list(range(lo, hi + 1, step))
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def default_t_grid():
    return parse_grid("0.02:0.01:0.98", float)


# ---------------------------------------------------------------------------
# gamma sweep


@dataclass
class SweepResult:
    t_grid: list
    diff_t: list
    tol_t: list | None
    plateaus: list
    chosen_t: float | None
    chosen: DecompositionResult | None = field(default=None, repr=False)
    solves: int = 0
    complete: bool = True

    @property
    def chosen_gamma(self):
        return None if self.chosen_t is None else t_to_gamma(self.chosen_t)

    def to_dict(self):
        return {
            "t_grid": self.t_grid,
            "diff_t": self.diff_t,
            "tol_t": self.tol_t,
            "plateaus": [list(p) for p in self.plateaus],
            "chosen_t": self.chosen_t,
            "chosen_gamma": self.chosen_gamma,
            "solves": self.solves,
            "complete": self.complete,
        }


def _endpoint_thresholds(C):
    """t below which (C, 0) and above which (0, C) are provably optimal.

    (C, 0) is optimal once gamma * ||sign(C)|| <= 1 (dual gamma * sign(C));
    (0, C) once gamma >= ||U V^T||_inf (dual U V^T from the SVD of C).
    """
    s = np.linalg.norm(np.sign(C), 2)
    g_sparse = 1.0 / s
    res = svd(C)
    g_low = float(np.abs(res.u @ res.v.T).max())
    return g_sparse / (1.0 + g_sparse), g_low / (1.0 + g_low)


def _find_plateaus(diff, below, min_len):
    runs = []
    start = None
    for i, d in enumerate(diff):
        if d < below:
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(diff) - 1))
    return [r for r in runs if r[1] - r[0] + 1 >= min_len]


def gamma_sweep(C, eps=0.01, t_grid=None, diff_threshold=1e-3, config=None, a_true=None,
                b_true=None, min_plateau=3, endpoint_shortcut=True, early_stop=False):
    """Solve the t-weighted program along ``t_grid`` and locate stable regions.

    ``diff_t`` compares the solutions at ``t`` and ``t - eps``.  Runs of at
    least ``min_plateau`` consecutive grid points with ``diff_t`` below
    ``diff_threshold`` are plateaus; with exactly three, the middle one's
    midpoint becomes ``chosen_t``.  The all-sparse plateau may be missing
    when fewer than ``min_plateau`` grid points fall in the closed-form
    region where (C, 0) is optimal, since that region always exists and is
    then just too narrow for the grid.

    With ``endpoint_shortcut`` the closed-form optimal pairs (C, 0) and
    (0, C) are used where their optimality is certified, skipping those
    solves.  ``early_stop`` skips the solves between the end of a closed
    middle plateau and the closed-form low-rank region; skipped points get
    ``nan`` in ``diff_t``.
    """
    C = as_matrix(C, "C")
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = [float(t) for t in (default_t_grid() if t_grid is None else t_grid)]
    if len(grid) < 3:
        raise ValueError("t_grid needs at least 3 points")
    if any(not (eps < t < 1.0) for t in grid) or grid != sorted(grid):
        raise ValueError("t_grid must be increasing and inside (eps, 1)")
    base = config or SolverConfig(1.0, max_iters=SWEEP_MAX_ITERS)
    with_truth = a_true is not None and b_true is not None
    c_fro = np.linalg.norm(C)
    c_l1 = float(np.abs(C).sum())

    if c_l1 == 0.0:
        n = len(grid)
        tol = None
        plate = [(grid[0], grid[-1], "all-sparse")] if n >= min_plateau else []
        return SweepResult(grid, [0.0] * n, tol, plate, None, None, 0, True)

    t_sparse, t_low = _endpoint_thresholds(C) if endpoint_shortcut else (-1.0, 2.0)
    zeros = np.zeros_like(C)
    cache = {}
    solves = 0

    def solve(t):
        nonlocal solves
        key = round(t, 12)
        if key in cache:
            return cache[key]
        if t < t_sparse:
            res = DecompositionResult(C.copy(), zeros.copy(), 0, 0.0, 0.0, True, t_to_gamma(t), t)
        elif t > t_low:
            res = DecompositionResult(zeros.copy(), C.copy(), 0, 0.0, 0.0, True, t_to_gamma(t), t)
        else:
            res = decompose_t(C, t, base)
            solves += 1
        cache[key] = res
        return res

    diff, tol = [], []
    complete = True
    for t in grid:
        if not complete and t - eps <= t_low:
            # skipped: neither solved nor covered by the closed-form region
            diff.append(math.nan)
            if with_truth:
                tol.append(math.nan)
            continue
        lo = solve(t - eps)
        hi = solve(t)
        diff.append(float(np.linalg.norm(lo.a_hat - hi.a_hat) + np.linalg.norm(lo.b_hat - hi.b_hat)))
        if with_truth:
            tol.append(tol_metric(hi.a_hat, hi.b_hat, a_true, b_true))
        if early_stop and complete:
            runs = _find_plateaus(diff, diff_threshold, min_plateau)
            if sum(r[1] < len(diff) - 1 for r in runs) >= 2:
                complete = False

    runs = _find_plateaus(diff, diff_threshold, min_plateau)
    plateaus = []
    for idx, (s, e) in enumerate(runs):
        label = "middle"
        if idx == 0:
            first = cache.get(round(grid[s], 12))
            if first is not None and np.linalg.norm(first.b_hat) <= ENDPOINT_FRACTION * c_fro:
                label = "all-sparse"
        if idx == len(runs) - 1 and idx > 0:
            last = cache.get(round(grid[e], 12))
            if last is not None and np.abs(last.a_hat).sum() <= ENDPOINT_FRACTION * c_l1:
                label = "all-lowrank"
        plateaus.append((grid[s], grid[e], label))

    chosen_t = None
    chosen = None
    labels = [p[2] for p in plateaus]
    if labels == ["middle", "all-lowrank"]:
        t_exact = t_sparse if endpoint_shortcut else _endpoint_thresholds(C)[0]
        if sum(t < t_exact for t in grid) < min_plateau:
            labels = ["all-sparse"] + labels
    if labels == ["all-sparse", "middle", "all-lowrank"]:
        mid = plateaus[-2]
        chosen_t = round(0.5 * (mid[0] + mid[1]), 12)
        chosen = solve(chosen_t)
    return SweepResult(grid, diff, tol if with_truth else None, plateaus, chosen_t, chosen,
                       solves, complete)


# ---------------------------------------------------------------------------
# gamma selection from ground truth


def recommend_gamma(a_true, b_true, C=None, sweep_config=None, sweep_grid=None, sweep_eps=0.01,
                    sweep_min_plateau=3, early_stop=False):
    """Pick gamma for a planted pair; returns ``(gamma, source)``.

    Tries, in order: the bounded-degree/incoherence formula when its
    condition holds; the geometric midpoint of the exactly certified gamma
    interval; the middle plateau of a gamma sweep on ``C``; and finally
    ``1 / sqrt(max(n1, n2))``.
    """
    a_true = as_matrix(a_true, "a_true")
    b_true = as_matrix(b_true, "b_true")
    C = a_true + b_true if C is None else as_matrix(C, "C")
    omega = support_of(a_true)
    t = TangentSpace.from_matrix(b_true)
    _, deg_max = degrees(omega)
    inc_val = inc(t)
    if deg_max * inc_val < 1.0 / 12.0:
        return math.sqrt(3.0 * inc_val / deg_max), "corollary"
    # a fixed point this slow means sigma is close to 1; treat as not certifiable
    rng = certified_gamma_interval(a_true, b_true, fp_max_iters=2000)
    if rng.valid:
        return rng.recommended, "certified"
    sw = gamma_sweep(C, eps=sweep_eps, t_grid=sweep_grid, config=sweep_config,
                     min_plateau=sweep_min_plateau, early_stop=early_stop)
    if sw.chosen_t is not None:
        return sw.chosen_gamma, "sweep"
    return 1.0 / math.sqrt(max(C.shape)), "fallback"


# ---------------------------------------------------------------------------
# phase diagram

POLICIES = ("recommended", "fixed", "sweep")


@dataclass(frozen=True)
class PhaseDiagramConfig:
    """Grid of (m, k) cells over n x n instances.

    ``gamma_policy`` is ``"recommended"`` (see :func:`recommend_gamma`),
    ``"fixed"`` (use ``gamma``) or ``"sweep"`` (sweep midpoint only, falling
    back to 1/sqrt(n)).  Sweeps inside the diagram run on a coarser grid
    (``sweep_step``, with eps equal to the step so neighbouring points share
    solves and ``sweep_min_plateau`` points making a plateau), with capped
    solves, and stop once the middle plateau has closed.
    """

    n: int = 25
    m_grid: tuple = tuple(range(10, 251, 10))
    k_grid: tuple = tuple(range(1, 13))
    trials_per_cell: int = 10
    gamma_policy: str = "recommended"
    gamma: float | None = None
    success_tol: float = 1e-3
    seed: int = 0
    solver_max_iters: int = 1000
    sweep_step: float = 0.02
    sweep_max_iters: int = 150
    sweep_min_plateau: int = 2
    workers: int = 1

    def __post_init__(self):
        if not self.m_grid or not self.k_grid:
            raise ValueError("grids must be nonempty")
        if self.trials_per_cell < 1:
            raise ValueError("trials_per_cell must be >= 1")
        if self.gamma_policy not in POLICIES:
            raise ValueError(f"gamma_policy must be one of {POLICIES}")
        if self.gamma_policy == "fixed" and not (self.gamma and self.gamma > 0):
            raise ValueError("fixed policy needs a positive gamma")
        if not 0 < self.sweep_step <= 0.1:
            raise ValueError("sweep_step must lie in (0, 0.1]")
        for m in self.m_grid:
            if not 0 < m <= self.n * self.n:
                raise ValueError(f"m={m} outside [1, n^2]")
        for k in self.k_grid:
            if not 0 < k <= self.n:
                raise ValueError(f"k={k} outside [1, n]")

    def sweep_grid(self):
        h = self.sweep_step
        return parse_grid(f"{2 * h}:{h}:{1 - 2 * h}", float)

    def sweep_config(self):
        return SolverConfig(1.0, max_iters=self.sweep_max_iters)


@dataclass
class PhaseTrial:
    success: bool
    tol: float
    gamma: float
    source: str
    certified: bool


def _run_trial(cfg: PhaseDiagramConfig, m, k, trial):
    spec = EnsembleSpec(cfg.n, m, k, cfg.seed)
    a = random_sparse(spec, PHASE, m, k, trial)
    b = random_lowrank(spec, PHASE, m, k, trial)
    C = a + b
    solver_cfg = SolverConfig(1.0, max_iters=cfg.solver_max_iters)
    sweep = dict(sweep_config=cfg.sweep_config(), sweep_grid=cfg.sweep_grid(),
                 sweep_eps=cfg.sweep_step, sweep_min_plateau=cfg.sweep_min_plateau,
                 early_stop=True)
    try:
        if cfg.gamma_policy == "fixed":
            gamma, source = cfg.gamma, "fixed"
        elif cfg.gamma_policy == "sweep":
            sw = gamma_sweep(C, eps=cfg.sweep_step, t_grid=sweep["sweep_grid"],
                             config=sweep["sweep_config"], min_plateau=cfg.sweep_min_plateau,
                             early_stop=True)
            if sw.chosen_t is not None:
                gamma, source = sw.chosen_gamma, "sweep"
            else:
                gamma, source = 1.0 / math.sqrt(cfg.n), "fallback"
        else:
            gamma, source = recommend_gamma(a, b, C, **sweep)
        res = decompose(C, replace(solver_cfg, gamma=gamma))
        tol = tol_metric(res.a_hat, res.b_hat, a, b)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        log.warning("phase trial m=%d k=%d #%d failed: %s", m, k, trial, exc)
        return PhaseTrial(False, math.inf, math.nan, "error", False)
    try:
        certified = build_certificate(a, b, gamma, fp_max_iters=2000).verdict == "pass"
    except ValueError:
        certified = False
    return PhaseTrial(tol < cfg.success_tol, tol, gamma, source, certified)


def _run_cell(args):
    cfg, m, k = args
    return m, k, [_run_trial(cfg, m, k, t) for t in range(cfg.trials_per_cell)]


@dataclass
class PhaseDiagramResult:
    config: PhaseDiagramConfig
    cells: list  # dicts, ordered by (k, m)

    def probability(self, m, k):
        for c in self.cells:
            if c["m"] == m and c["k"] == k:
                return c["success_prob"]
        raise KeyError((m, k))

    def grid(self):
        """success_prob as an array indexed [k_index, m_index]."""
        ms, ks = list(self.config.m_grid), list(self.config.k_grid)
        out = np.zeros((len(ks), len(ms)))
        for c in self.cells:
            out[ks.index(c["k"]), ms.index(c["m"])] = c["success_prob"]
        return out

    def to_csv(self):
        buf = io.StringIO(newline="")
        buf.write("m,k,success_prob,trials,certified,mean_gamma,gamma_sources\n")
        for c in self.cells:
            buf.write(
                f"{c['m']},{c['k']},{c['success_prob']:.4f},{c['trials']},{c['certified']},"
                f"{c['mean_gamma']:.6f},{c['gamma_sources']}\n"
            )
        return buf.getvalue()

    def to_pgm(self):
        """8-bit ASCII PGM, one pixel per cell, rows = k and columns = m; white = success."""
        g = self.grid()
        h, w = g.shape
        lines = ["P2", f"{w} {h}", "255"]
        for row in g:
            lines.append(" ".join(str(int(round(255 * p))) for p in row))
        return "\n".join(lines) + "\n"


def phase_diagram(config: PhaseDiagramConfig):
    """Success probability of exact recovery over the (m, k) grid."""
    jobs = [(config, m, k) for k in config.k_grid for m in config.m_grid]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]
    cells = []
    for m, k, trials in sorted(results, key=lambda r: (r[1], r[0])):
        wins = sum(t.success for t in trials)
        gammas = [t.gamma for t in trials if math.isfinite(t.gamma)]
        sources = Counter(t.source for t in trials)
        cells.append({
            "m": m,
            "k": k,
            "success_prob": wins / len(trials),
            "trials": len(trials),
            "certified": sum(t.certified for t in trials),
            "certified_successes": sum(t.certified and t.success for t in trials),
            "mean_gamma": float(np.mean(gammas)) if gammas else math.nan,
            "gamma_sources": ";".join(f"{s}:{sources[s]}" for s in sorted(sources)),
        })
    return PhaseDiagramResult(config, cells)


# ---------------------------------------------------------------------------
# rigidity


@dataclass
class RigidityResult:
    n: int
    k_target: int
    m_planted: int
    support_size_found: int
    rank_found: int
    certified: bool
    gamma_used: float
    gamma_source: str
    reconstruction_error: float
    tol: float

    def to_dict(self):
        return dict(self.__dict__)


def rigidity_demo(n, epsilon, seed=0, config=None):
    """Plant n/ln(n) sparse corruptions on a rank ceil(eps n) matrix and recover them.

    The support size of the recovered sparse part upper-bounds the rigidity
    R_M(ceil(eps n)); ``certified`` records whether the dual certificate at the
    recovered pair passes.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if n < 2:
        raise ValueError("n must be >= 2")
    m = max(1, int(math.floor(n / math.log(n))))
    k = min(n, int(math.ceil(epsilon * n - 1e-12)))
    spec = EnsembleSpec(n, m, k, seed)
    a = random_sparse(spec, RIGIDITY)
    b = random_lowrank(spec, RIGIDITY)
    M = a + b
    gamma, source = recommend_gamma(a, b, M)
    cfg = SolverConfig(gamma) if config is None else replace(config, gamma=gamma)
    res = decompose(M, cfg)
    scale = max(1.0, float(np.abs(M).max()))
    a_hat = np.where(np.abs(res.a_hat) > SOLUTION_ZERO_TOL * scale, res.a_hat, 0.0)
    support = int(np.count_nonzero(a_hat))
    rank = svd(res.b_hat, SOLUTION_RANK_TOL).numerical_rank if np.any(res.b_hat) else 0
    recon = float(np.linalg.norm(M - res.a_hat - res.b_hat) / max(1.0, np.linalg.norm(M)))
    certified = False
    if support and rank:
        cert = build_certificate(a_hat, res.b_hat, gamma, rank_tol=SOLUTION_RANK_TOL)
        certified = (cert.verdict == "pass" and rank <= k and recon <= 10 * cfg.tol_primal)
    return RigidityResult(n, k, m, support, rank, certified, float(gamma), source, recon,
                          tol_metric(res.a_hat, res.b_hat, a, b))


def instance_report(a, b, xi_samples=0, seed=0):
    """Shortcut used by the CLI: the incoherence report as a dict."""
    return condition_report(a, b, xi_samples=xi_samples, seed=seed).to_dict()
