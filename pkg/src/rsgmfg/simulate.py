"""Finite-population SDE simulation and Monte Carlo cost estimation.

Euler-Maruyama on the shared time grid, with strategies held constant
between nodes.  All randomness comes from counter-based Philox streams
keyed by (seed, path): the increment consumed by a given (path, agent,
step) sits at a fixed counter offset, so results are bitwise reproducible
and independent of chunking, execution order, or worker count, and agent
j's noise is identical across population sizes (common random numbers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .control import acp_solve, closed_form_cost
from .core import Grids, InitialLaw, ProblemSpec
from .errors import ConfigError, SimulationError
from .gmfg import MeanFieldSolution
from .graphon import Graphon, StepWeights, coupling_error_eps1, sample_step
from .odesolve import RiccatiSolution, solve_riccati_pi

_MASK64 = (1 << 64) - 1
_RECORD_LIMIT = 4 * 10 ** 8  # array elements; larger runs must stream costs


@dataclass(frozen=True)
class DeviationSpec:
    """One agent plays an alternative affine law u = -(K x + k)."""

    agent: int                  # 0-based index
    K_path: np.ndarray          # (n_steps+1, m, n)
    k_path: np.ndarray          # (n_steps+1, m)
    label: str = "custom"


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run description; dt defaults to the solver step."""

    N: int
    M: int
    seed: int
    dt: float | None = None
    deviation: DeviationSpec | None = None
    chunk_doubles: int = 32_000_000

    def __post_init__(self):
        if self.N < 1 or self.M < 1:
            raise ConfigError("simulation needs N >= 1 and M >= 1")


@dataclass(frozen=True)
class PopulationPaths:
    """Recorded trajectories: states, controls, and weighted averages.

    Arrays are indexed (path, agent, time); xN stores the network-weighted
    averages (1/N) sum_j g^N_ij x_j computed with the stored weights.
    """

    x: np.ndarray
    u: np.ndarray
    xN: np.ndarray
    t: np.ndarray
    gN: np.ndarray
    agent_alphas: np.ndarray
    seed: int


@dataclass(frozen=True)
class CostEstimate:
    """Monte Carlo estimate of E[exp(gamma Lambda_T)] with tail diagnostics.

    log_domain_max is the largest exponent seen; M_effective is the
    effective sample size (sum w)^2 / sum w^2 of the max-shifted weights.
    tail_share reports the fraction of the mean carried by the top 1% of
    paths; above 0.5 the estimate is flagged heavy-tailed.
    """

    mean: float
    std_error: float
    log_domain_max: float
    M_effective: float
    median_exponent: float
    tail_share: float
    tail_warning: bool

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error,
                "log_domain_max": self.log_domain_max,
                "M_effective": self.M_effective,
                "median_exponent": self.median_exponent,
                "tail_share": self.tail_share,
                "tail_warning": self.tail_warning}


@dataclass(frozen=True)
class NashGapRow:
    N: int
    agent: int                  # 1-based label
    alpha: float
    J_hat: CostEstimate
    J_limit: float
    gap: float
    eps1: float
    eps2: float
    eps3: float
    deviation_delta: float | None = None
    deviation_cost: CostEstimate | None = None


@dataclass(frozen=True)
class NashGapReport:
    rows: tuple[NashGapRow, ...]
    seed: int
    M: int

    def to_dict(self) -> dict:
        rows = []
        for r in self.rows:
            d = {"N": r.N, "agent": r.agent, "alpha": r.alpha,
                 "J_hat": r.J_hat.to_dict(), "J_limit": r.J_limit,
                 "gap": r.gap, "eps1": r.eps1, "eps2": r.eps2,
                 "eps3": r.eps3}
            if r.deviation_cost is not None:
                d["deviation_delta"] = r.deviation_delta
                d["deviation_cost"] = r.deviation_cost.to_dict()
            rows.append(d)
        return {"seed": self.seed, "M": self.M, "rows": rows}


def _stream(seed: int, stream_id: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.Philox(key=np.array([seed & _MASK64, stream_id & _MASK64],
                                      dtype=np.uint64)))


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (cov + cov.T))
    return V * np.sqrt(np.clip(w, 0.0, None))


def _initial_draws(law: InitialLaw, means: np.ndarray, seed: int,
                   path: int) -> np.ndarray:
    """Initial states for one path, all agents; stream id 2*path."""
    A, n = means.shape
    if law.kind == "deterministic":
        return means.copy()
    gen = _stream(seed, 2 * path)
    if law.kind == "gaussian":
        fac = _psd_factor(law.dispersion)
        return means + gen.standard_normal((A, n)) @ fac.T
    radius = np.diag(law.dispersion)
    return means + gen.uniform(-1.0, 1.0, (A, n)) * radius[None, :]


def _noise_block(seed: int, path: int, A: int, steps: int, d: int,
                 sqrt_dt: float) -> np.ndarray:
    """Brownian increments for one path, agent-major layout; stream 2*path+1."""
    gen = _stream(seed, 2 * path + 1)
    return gen.standard_normal((A, steps, d)) * sqrt_dt


def sim_time_grid(spec: ProblemSpec, sim: SimConfig) -> Grids:
    dt = sim.dt if sim.dt is not None else spec.grids.h
    steps = round(spec.T / dt)
    if steps < 1 or abs(steps * dt - spec.T) > 1e-9 * max(1.0, spec.T):
        raise ConfigError(f"dt={dt} does not divide the horizon T={spec.T}")
    return Grids(T=spec.T, n_t=steps, n_alpha=spec.grids.n_alpha)


def _resample_path(values: np.ndarray, grid: Grids, t_nodes: np.ndarray) -> np.ndarray:
    """Linearly resample a grid path onto other time nodes (exact on nodes)."""
    x = t_nodes / grid.h
    i = np.clip(np.floor(x + 1e-9).astype(int), 0, grid.n_t)
    w = np.clip(x - i, 0.0, 1.0)
    upper = np.minimum(i + 1, grid.n_t)
    out = (1.0 - w).reshape((-1,) + (1,) * (values.ndim - 1)) * values[i] \
        + w.reshape((-1,) + (1,) * (values.ndim - 1)) * values[upper]
    return out


@dataclass
class _RunTables:
    """Per-node coefficient and strategy tables for the Euler loop."""

    t: np.ndarray
    A: np.ndarray            # (K+1, n, n)
    B: np.ndarray            # (K+1, n, m)
    D: np.ndarray
    sig: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    Kgain: np.ndarray        # (K+1, m, n)  R^-1 B^T Pi
    koff: np.ndarray         # (A, K+1, m)  R^-1 B^T S_agent
    Gamma: np.ndarray
    Gamma_f: np.ndarray
    Qf: np.ndarray


def _build_tables(spec: ProblemSpec, sim_grid: Grids, Pi: RiccatiSolution,
                  S_agents: np.ndarray) -> _RunTables:
    c = spec.coeffs
    ts = sim_grid.t
    K1 = len(ts)
    n, m = spec.n, spec.m
    A = np.empty((K1, n, n))
    B = np.empty((K1, n, m))
    D = np.empty((K1, n, n))
    sig = np.empty((K1, n, spec.d))
    Q = np.empty((K1, n, n))
    R = np.empty((K1, m, m))
    Kg = np.empty((K1, m, n))
    n_agents = S_agents.shape[0]
    koff = np.empty((n_agents, K1, m))
    for k, t in enumerate(ts):
        A[k] = c.A(t)
        B[k] = c.B(t)
        D[k] = c.D(t)
        sig[k] = c.sigma(t)
        Q[k] = c.Q(t)
        R[k] = c.R(t)
        RinvBt = np.linalg.solve(R[k], B[k].T)
        Kg[k] = RinvBt @ Pi.at(t)
        koff[:, k] = S_agents[:, k] @ RinvBt.T
    return _RunTables(t=ts, A=A, B=B, D=D, sig=sig, Q=Q, R=R, Kgain=Kg,
                      koff=koff, Gamma=c.Gamma, Gamma_f=c.Gamma_f, Qf=c.Qf)


def _quad(vec: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """Quadratic form over the trailing axis: <M v, v> per leading index."""
    return np.einsum("...i,ij,...j->...", vec, mat, vec)


def _run_chunk(spec: ProblemSpec, tables: _RunTables, sim_grid: Grids,
               law: InitialLaw, means: np.ndarray, seed: int,
               paths: range, gN: np.ndarray | None,
               z_frozen: np.ndarray | None, probe: np.ndarray,
               deviation: DeviationSpec | None, record: bool):
    """Euler-Maruyama march for a block of paths.

    Population mode (gN given): coupling through the weighted average
    xN = gN x / N.  Limit mode (z_frozen given): each agent tracks its own
    frozen deterministic mean path.  Returns per-path cost accumulators for
    the probed agents and, when asked, full trajectories.
    """
    P = len(paths)
    A_n = means.shape[0]
    n, m, d = spec.n, spec.m, spec.d
    K = sim_grid.n_t
    dt = sim_grid.h
    sqdt = math.sqrt(dt)

    x = np.empty((P, A_n, n))
    noise = np.empty((P, A_n, K, d))
    for j, p in enumerate(paths):
        x[j] = _initial_draws(law, means, seed, p)
        noise[j] = _noise_block(seed, p, A_n, K, d, sqdt)

    lam = np.zeros((P, len(probe)))
    rec_x = rec_u = rec_xN = None
    if record:
        rec_x = np.empty((P, A_n, K + 1, n))
        rec_u = np.empty((P, A_n, K + 1, m))
        rec_xN = np.empty((P, A_n, K + 1, n))

    dev = deviation
    for k in range(K + 1):
        if gN is not None:
            y = np.matmul(gN, x) / gN.shape[0]
        else:
            y = np.broadcast_to(z_frozen[:, k], (P, A_n, n))
        u = -np.einsum("ij,paj->pai", tables.Kgain[k], x) \
            - tables.koff[:, k][None]
        if dev is not None:
            u[:, dev.agent] = (-np.einsum("ij,pj->pi", dev.K_path[k],
                                          x[:, dev.agent])
                               - dev.k_path[k][None])
        # running cost at this node, trapezoid weight
        err = x[:, probe] - np.einsum("ij,paj->pai", tables.Gamma, y[:, probe])
        lam_inc = _quad(err, tables.Q[k]) + _quad(u[:, probe], tables.R[k])
        weight = 0.5 * dt if k in (0, K) else dt
        lam += weight * lam_inc
        if record:
            rec_x[:, :, k] = x
            rec_u[:, :, k] = u
            rec_xN[:, :, k] = y
        if k == K:
            term = x[:, probe] - np.einsum("ij,paj->pai", tables.Gamma_f,
                                           y[:, probe])
            lam += _quad(term, tables.Qf)
            break
        drift = (np.einsum("ij,paj->pai", tables.A[k], x)
                 + np.einsum("ij,paj->pai", tables.B[k], u)
                 + np.einsum("ij,paj->pai", tables.D[k], y))
        x = x + drift * dt + np.einsum("ij,paj->pai", tables.sig[k],
                                       noise[:, :, k])
        if not np.isfinite(np.sum(x)):
            bad = np.argwhere(~np.isfinite(x))
            p_bad, a_bad = int(bad[0, 0]), int(bad[0, 1])
            raise SimulationError(
                f"non-finite state at path={paths[p_bad]}, agent={a_bad}, "
                f"step={k + 1}")
    return lam, rec_x, rec_u, rec_xN


def _chunk_ranges(M: int, chunk: int):
    start = 0
    while start < M:
        stop = min(start + chunk, M)
        yield range(start, stop)
        start = stop


def _agent_offsets(spec: ProblemSpec, mfsol: MeanFieldSolution,
                   agent_alphas: np.ndarray, sim_grid: Grids) -> np.ndarray:
    """Per-agent offset paths S_{I_i*} resampled onto the simulation nodes."""
    idx = [mfsol.alpha_index(a) for a in agent_alphas]
    S = mfsol.S[idx]                       # (A, K_sol+1, n)
    out = np.empty((len(idx), sim_grid.n_t + 1, spec.n))
    for j in range(len(idx)):
        out[j] = _resample_path(S[j], mfsol.grid, sim_grid.t)
    return out


def _chunk_size(sim: SimConfig, A_n: int, steps: int, d: int) -> int:
    return max(1, sim.chunk_doubles // max(1, A_n * steps * d))


def simulate_population(spec: ProblemSpec, gN: StepWeights,
                        mfsol: MeanFieldSolution, sim: SimConfig) -> PopulationPaths:
    """Simulate the N-agent closed loop under the decentralized strategies.

        dx_i = [A x_i + B u_i + D xN_i] dt + sigma dW_i,
        u_i  = -R^-1 B^T Pi x_i - R^-1 B^T S_{I_i*},

    with initial states drawn independently from the configured law.  The
    full trajectory set is recorded; use the cost-only helpers for runs too
    large to hold in memory.
    """
    N = gN.N
    if sim.N != N:
        sim = replace(sim, N=N)
    sim_grid = sim_time_grid(spec, sim)
    K = sim_grid.n_t
    total = sim.M * N * (K + 1) * (2 * spec.n + spec.m)
    if total > _RECORD_LIMIT:
        raise SimulationError(
            f"recorded run would hold {total:.2e} elements; "
            "use nash_gap_experiment / cost streaming for runs this large")
    mids = (np.arange(N) + 0.5) / N
    Pi = solve_riccati_pi(spec)
    S_agents = _agent_offsets(spec, mfsol, mids, sim_grid)
    tables = _build_tables(spec, sim_grid, Pi, S_agents)
    means = spec.initial.mean(mids)
    probe = np.arange(N)

    xs, us, xns = [], [], []
    chunk = _chunk_size(sim, N, K, spec.d)
    for paths in _chunk_ranges(sim.M, chunk):
        _, rx, ru, rxn = _run_chunk(spec, tables, sim_grid, spec.initial,
                                    means, sim.seed, paths, gN.gN, None,
                                    probe, sim.deviation, record=True)
        xs.append(rx)
        us.append(ru)
        xns.append(rxn)
    return PopulationPaths(x=np.concatenate(xs), u=np.concatenate(us),
                           xN=np.concatenate(xns), t=sim_grid.t, gN=gN.gN,
                           agent_alphas=mids, seed=sim.seed)


def population_cost_exponents(spec: ProblemSpec, gN: StepWeights,
                              mfsol: MeanFieldSolution, sim: SimConfig,
                              probe_agents: np.ndarray,
                              deviation: DeviationSpec | None = None) -> np.ndarray:
    """Cost exponents gamma*Lambda_T for probed agents, without recording.

    Returns an (M, len(probe_agents)) array; memory use is bounded by the
    chunk size regardless of M.
    """
    N = gN.N
    sim_grid = sim_time_grid(spec, sim)
    mids = (np.arange(N) + 0.5) / N
    Pi = solve_riccati_pi(spec)
    S_agents = _agent_offsets(spec, mfsol, mids, sim_grid)
    tables = _build_tables(spec, sim_grid, Pi, S_agents)
    means = spec.initial.mean(mids)
    probe = np.asarray(probe_agents, dtype=int)

    out = np.empty((sim.M, len(probe)))
    chunk = _chunk_size(sim, N, sim_grid.n_t, spec.d)
    for paths in _chunk_ranges(sim.M, chunk):
        lam, _, _, _ = _run_chunk(spec, tables, sim_grid, spec.initial,
                                  means, sim.seed, paths, gN.gN, None,
                                  probe, deviation, record=False)
        out[paths.start:paths.stop] = spec.gamma * lam
    return out


def limit_cost_exponents(spec: ProblemSpec, z_path: np.ndarray,
                         S_path: np.ndarray, solver_grid: Grids,
                         sim: SimConfig, alpha: float) -> np.ndarray:
    """Cost exponents for the one-agent limit problem under its own optimum.

    The agent follows dx = [A_cl x - BR^-1B^T S_a + D z_a] dt + sigma dW
    against the frozen deterministic mean path z_a; the running cost tracks
    z_a.  Used to cross-check the closed-form optimal cost.
    """
    sim_grid = sim_time_grid(spec, sim)
    Pi = solve_riccati_pi(spec)
    S_agents = _resample_path(S_path, solver_grid, sim_grid.t)[None]
    z_frozen = _resample_path(z_path, solver_grid, sim_grid.t)[None]
    tables = _build_tables(spec, sim_grid, Pi, S_agents)
    means = spec.initial.mean(np.array([alpha]))
    probe = np.array([0])

    out = np.empty((sim.M, 1))
    chunk = _chunk_size(sim, 1, sim_grid.n_t, spec.d)
    for paths in _chunk_ranges(sim.M, chunk):
        lam, _, _, _ = _run_chunk(spec, tables, sim_grid, spec.initial,
                                  means, sim.seed, paths, None, z_frozen,
                                  probe, None, record=False)
        out[paths.start:paths.stop] = spec.gamma * lam
    return out[:, 0]


def limit_ensemble(spec: ProblemSpec, mfsol: MeanFieldSolution,
                   sim: SimConfig) -> PopulationPaths:
    """One Brownian path per node of the mean-field solution grid.

    Every node alpha gets an independent agent following the limit
    dynamics against its own frozen z_alpha; used for trajectory fans.
    """
    sim_grid = sim_time_grid(spec, sim)
    alphas = mfsol.alphas
    A_n = len(alphas)
    K = sim_grid.n_t
    Pi = solve_riccati_pi(spec)
    S_agents = np.empty((A_n, K + 1, spec.n))
    z_frozen = np.empty((A_n, K + 1, spec.n))
    for j in range(A_n):
        S_agents[j] = _resample_path(mfsol.S[j], mfsol.grid, sim_grid.t)
        z_frozen[j] = _resample_path(mfsol.z[j], mfsol.grid, sim_grid.t)
    tables = _build_tables(spec, sim_grid, Pi, S_agents)
    means = spec.initial.mean(alphas)
    probe = np.array([0])
    lam, rx, ru, rxn = _run_chunk(spec, tables, sim_grid, spec.initial,
                                  means, sim.seed, range(0, 1), None,
                                  z_frozen, probe, None, record=True)
    return PopulationPaths(x=rx, u=ru, xN=rxn, t=sim_grid.t,
                           gN=np.zeros((A_n, A_n)), agent_alphas=alphas,
                           seed=sim.seed)


def lambda_from_paths(spec: ProblemSpec, paths: PopulationPaths,
                      agent: int) -> np.ndarray:
    """Recompute the cost functional Lambda_T per path from recorded arrays."""
    c = spec.coeffs
    ts = paths.t
    dt = ts[1] - ts[0]
    K = len(ts) - 1
    x = paths.x[:, agent]
    u = paths.u[:, agent]
    y = paths.xN[:, agent]
    lam = np.zeros(x.shape[0])
    for k in range(K + 1):
        t = ts[k]
        err = x[:, k] - y[:, k] @ c.Gamma.T
        inc = _quad(err, c.Q(t)) + _quad(u[:, k], c.R(t))
        weight = 0.5 * dt if k in (0, K) else dt
        lam += weight * inc
    term = x[:, K] - y[:, K] @ c.Gamma_f.T
    lam += _quad(term, c.Qf)
    return lam


def cost_from_exponents(exponents: np.ndarray) -> CostEstimate:
    """Assemble a CostEstimate from per-path exponents gamma*Lambda_T.

    The mean is accumulated after a max shift; an exponent above 700 after
    shifting (i.e. a mean too large for double precision) raises, since the
    estimate is then effectively infinite at this risk sensitivity.
    """
    L = np.asarray(exponents, dtype=float)
    M = L.size
    m_star = float(np.max(L))
    if m_star > 700.0:
        raise SimulationError(
            f"cost overflow: largest exponent {m_star:.1f} exceeds 700; "
            "the exponentiated cost is effectively infinite at this "
            "risk sensitivity")
    w = np.exp(L - m_star)
    vals = np.exp(L)
    mean = float(np.mean(vals))
    std_error = float(np.std(vals, ddof=1) / math.sqrt(M)) if M > 1 else 0.0
    ess = float((w.sum() ** 2) / np.sum(w ** 2))
    top = max(1, math.ceil(0.01 * M))
    share = float(np.sort(vals)[-top:].sum() / vals.sum())
    return CostEstimate(mean=mean, std_error=std_error, log_domain_max=m_star,
                        M_effective=ess, median_exponent=float(np.median(L)),
                        tail_share=share,
                        tail_warning=bool(M > 1 and share > 0.5))


def estimate_cost(spec: ProblemSpec, paths: PopulationPaths,
                  gN: StepWeights | np.ndarray | None, agent: int) -> CostEstimate:
    """Monte Carlo risk-sensitive cost of one agent from recorded paths."""
    lam = lambda_from_paths(spec, paths, agent)
    return cost_from_exponents(spec.gamma * lam)


class ApproximationErrors(tuple):
    """(eps1, eps2, eps3) network, mean-path, and initial-mean step errors."""

    __slots__ = ()

    def __new__(cls, eps1: float, eps2: float, eps3: float):
        return super().__new__(cls, (eps1, eps2, eps3))

    @property
    def eps1(self) -> float:
        return self[0]

    @property
    def eps2(self) -> float:
        return self[1]

    @property
    def eps3(self) -> float:
        return self[2]


def approximation_errors(mfsol: MeanFieldSolution, gN: StepWeights,
                         g: Graphon, spec: ProblemSpec) -> ApproximationErrors:
    """Step-approximation error triple for a finite population of size N.

    eps1: row mass error between the sampled network and the kernel.
    eps2: sup over nodes and times of |z at the cell midpoint - z at alpha|,
          the gap between the step interpolation used by the N agents and
          the continuum solution; needs the solution on a reference grid at
          least 4x finer than N.
    eps3: sup over nodes of |step initial mean - continuum initial mean|.
    """
    N = gN.N
    n_fine = len(mfsol.alphas)
    if n_fine < 4 * N:
        raise ConfigError(
            f"eps2 needs a reference grid with >= {4 * N} nodes; "
            f"solution has {n_fine}")
    eps1 = coupling_error_eps1(gN, g)

    mids = (np.arange(N) + 0.5) / N
    # evaluation points: the fine solution grid plus the coarse cell edges
    edges = np.arange(N + 1) / N
    points = np.unique(np.concatenate([mfsol.alphas, edges]))
    cell = np.clip(np.ceil(points * N).astype(int) - 1, 0, N - 1)

    fine_idx_pts = np.argmin(
        np.abs(points[:, None] - mfsol.alphas[None, :]), axis=1)
    fine_idx_mids = np.argmin(
        np.abs(mids[:, None] - mfsol.alphas[None, :]), axis=1)

    z_at_pts = mfsol.z[fine_idx_pts]          # (P, K+1, n)
    z_step = mfsol.z[fine_idx_mids][cell]     # (P, K+1, n)
    eps2 = float(np.max(np.abs(z_step - z_at_pts)))

    m_pts = spec.initial.mean(points)
    m_step = spec.initial.mean(mids)[cell]
    eps3 = float(np.max(np.abs(m_step - m_pts)))
    return ApproximationErrors(float(eps1), eps2, eps3)


def default_probe_agents(N: int) -> np.ndarray:
    """First, middle, last agent (0-based indices, deduplicated)."""
    raw = [0, math.ceil(N / 2) - 1, N - 1]
    seen: dict[int, None] = {}
    for i in raw:
        seen.setdefault(i, None)
    return np.array(list(seen), dtype=int)


def nash_gap_experiment(spec: ProblemSpec, g: Graphon,
                        mfsol: MeanFieldSolution, N_list: list[int],
                        sim: SimConfig, deviate_delta: float | None = None,
                        probe_all: bool = False) -> NashGapReport:
    """Compare simulated decentralized costs against the limit closed form.

    For each population size N the kernel is sampled at the midpoints, M
    paths are simulated under the decentralized strategies with common
    random numbers across sizes, and each probe agent's Monte Carlo cost is
    set against the closed-form limit cost at its node, together with the
    step-approximation error triple.  Optionally one probe agent deviates
    to the damped-risk strategy (same noise) to bound the gain from
    unilateral deviation.
    """
    Pi = solve_riccati_pi(spec, mfsol.grid)
    rows: list[NashGapRow] = []
    for N in N_list:
        gNw = sample_step(g, N)
        probes = np.arange(N) if probe_all else default_probe_agents(N)
        run_sim = replace(sim, N=N)
        expo = population_cost_exponents(spec, gNw, mfsol, run_sim, probes)
        eps = approximation_errors(mfsol, gNw, g, spec)

        dev_cost = None
        dev_agent = int(probes[0])
        if deviate_delta is not None:
            mids = (np.arange(N) + 0.5) / N
            alpha_dev = float(mids[dev_agent])
            idx = mfsol.alpha_index(alpha_dev)
            acp = acp_solve(spec, deviate_delta, mfsol.z[idx],
                            grid=mfsol.grid, law=spec.initial,
                            alpha=alpha_dev)
            dev = _deviation_from_acp(spec, acp, mfsol.grid,
                                      sim_time_grid(spec, run_sim), dev_agent)
            expo_dev = population_cost_exponents(spec, gNw, mfsol, run_sim,
                                                 np.array([dev_agent]),
                                                 deviation=dev)
            dev_cost = cost_from_exponents(expo_dev[:, 0])

        mids = (np.arange(N) + 0.5) / N
        for j, a in enumerate(probes):
            alpha = float(mids[a])
            idx = mfsol.alpha_index(alpha)
            est = cost_from_exponents(expo[:, j])
            j_lim = closed_form_cost(spec, Pi, mfsol.S[idx], mfsol.r[idx],
                                     spec.initial, alpha)
            rows.append(NashGapRow(
                N=N, agent=int(a) + 1, alpha=alpha, J_hat=est,
                J_limit=float(j_lim), gap=float(abs(est.mean - j_lim)),
                eps1=eps.eps1, eps2=eps.eps2, eps3=eps.eps3,
                deviation_delta=deviate_delta if (dev_cost is not None
                                                  and a == dev_agent) else None,
                deviation_cost=dev_cost if a == dev_agent else None))
    return NashGapReport(rows=tuple(rows), seed=sim.seed, M=sim.M)


def _deviation_from_acp(spec: ProblemSpec, acp, solver_grid: Grids,
                        sim_grid: Grids, agent: int) -> DeviationSpec:
    """Affine gains of the damped-risk strategy on the simulation nodes."""
    c = spec.coeffs
    Pi_d = _resample_path(acp.Pi_delta.values, solver_grid, sim_grid.t)
    S_d = _resample_path(acp.S_delta, solver_grid, sim_grid.t)
    K1 = sim_grid.n_t + 1
    Kp = np.empty((K1, spec.m, spec.n))
    kp = np.empty((K1, spec.m))
    for k, t in enumerate(sim_grid.t):
        RinvBt = np.linalg.solve(c.R(t), c.B(t).T)
        Kp[k] = RinvBt @ Pi_d[k]
        kp[k] = RinvBt @ S_d[k]
    return DeviationSpec(agent=agent, K_path=Kp, k_path=kp,
                         label=f"damped-risk delta'={acp.delta_prime}")
