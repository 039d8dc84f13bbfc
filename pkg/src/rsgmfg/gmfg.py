"""Equilibrium mean-field system: fixed-point and spectral solvers.

The unknowns are, per node alpha, the weighted mean state z_alpha (forward)
and the affine costate offset S_alpha (backward), coupled through the
kernel:

    dz/dt =  (A - BR^-1B^T Pi) z_a + D (G z)(a) - BR^-1B^T (G S)(a),
    dS/dt = -(A^T - Pi BR^-1B^T + 2 gamma Pi sigma sigma^T) S_a
            + (Q Gamma - Pi D) z_a,
    z_a(0) = (G m)(a),   S_a(T) = -Qf Gamma_f z_a(T),

plus the scalar value-offset r_a recovered backward once (z, S) is known.
Two independent routes are provided: Picard iteration of the equivalent
integral fixed-point map, and decoupling through the kernel's spectrum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Grids, ProblemSpec, validate_assumptions, PSD_TOL
from .errors import AssumptionError, ConvergenceError
from .graphon import Graphon, SpectralDecomposition, grid_matrix, spectral_decompose
from .odesolve import (FundamentalMatrices, RiccatiSolution,
                       fundamental_matrices, solve_p_ell_stack,
                       solve_riccati_pi)


@dataclass(frozen=True)
class MeanFieldSolution:
    """Solution fields on the (alpha, t) grid.

    z and S have shape (n_alpha, n_t + 1, n); r has shape (n_alpha, n_t + 1).
    """

    z: np.ndarray
    S: np.ndarray
    r: np.ndarray
    method: str
    alphas: np.ndarray
    grid: Grids
    iterations: int | None = None
    residual: float | None = None
    extras: dict = field(default_factory=dict)

    def alpha_index(self, alpha: float) -> int:
        """Index of the grid node closest to ``alpha``."""
        return int(np.argmin(np.abs(self.alphas - alpha)))


@dataclass(frozen=True)
class ContractionReport:
    """Sufficient-contraction certificate for the fixed-point map.

    C_Xi bounds the operator norm of the integral map; C_Xi < 1 certifies a
    unique solution reachable by Picard iteration.  The bound is sufficient
    only: iteration may still converge when C_Xi >= 1.
    """

    c_g: float
    c_z: float
    c_S: float
    C_Xi: float
    contraction_ok: bool
    norm_D: float
    norm_BRB: float
    norm_QGammaPiD: float
    norm_QfGammaf: float
    T: float


@dataclass(frozen=True)
class MonotonicityReport:
    """Dominance-monotonicity certificate, identity-weight specialization.

    The three grid-checked matrix conditions are
      (i)   -(Q Gamma + Gamma^T Q - Pi D - D^T Pi)/2
            - gamma^2 Pi (sigma sigma^T)^2 Pi - D D^T / 4  >= 0,
      (ii)  B R^-1 B^T lambda_min - 2 I  > 0,
      (iii) -(Qf Gamma_f + Gamma_f^T Qf) >= 0,
    with lambda_min the smallest retained positive kernel eigenvalue.
    ``inequality_margins`` holds each condition's worst-case smallest
    eigenvalue over the time grid.
    """

    mu: float
    nu: float
    case: str  # "A", "B", or "neither"
    inequality_margins: tuple[float, float, float]
    lambda_min_positive: float


def _eigmin(mat: np.ndarray) -> float:
    if mat.shape == (1, 1):
        return float(mat[0, 0])
    return float(np.linalg.eigvalsh(0.5 * (mat + mat.T))[0])


def _eigmax(mat: np.ndarray) -> float:
    if mat.shape == (1, 1):
        return float(mat[0, 0])
    return float(np.linalg.eigvalsh(0.5 * (mat + mat.T))[-1])


def _spec_norm(mat: np.ndarray) -> float:
    if mat.shape == (1, 1):
        return abs(float(mat[0, 0]))
    return float(np.linalg.norm(mat, 2))


def _apply_kernel(W: np.ndarray, fld: np.ndarray) -> np.ndarray:
    """Midpoint quadrature of the kernel operator on an (a, t, n) field."""
    n_alpha = W.shape[0]
    return (W @ fld.reshape(n_alpha, -1)).reshape(fld.shape) / n_alpha


def _mats_on_grid(fn, grid: Grids) -> np.ndarray:
    return np.stack([np.asarray(fn(t), dtype=float) for t in grid.t])


def contraction_constant(spec: ProblemSpec, Pi: RiccatiSolution, g: Graphon,
                         grids: Grids | None = None,
                         psi: FundamentalMatrices | None = None) -> ContractionReport:
    """Evaluate the explicit operator-norm bound of the fixed-point map.

        C_Xi = c_g c_z |D| T
             + c_g c_z c_S |BR^-1B^T| (|Q Gamma - Pi D| T + |Qf Gamma_f|) T

    with c_g the largest kernel row mass, c_z / c_S the largest spectral
    norms of the two transition-matrix families over all grid time pairs,
    and time-varying coefficient norms maximized over the grid.
    """
    grids = grids or spec.grids
    c = spec.coeffs
    if psi is None:
        psi = fundamental_matrices(spec, Pi, grids)

    W = grid_matrix(g, grids.alpha)
    c_g = float(np.max(W.mean(axis=1)))

    def pair_max(fwd, inv):
        if spec.n == 1:
            return float(np.max(np.abs(fwd)) * np.max(np.abs(inv)))
        worst = 0.0
        for i in range(fwd.shape[0]):
            prods = fwd[i] @ inv  # (K+1, n, n)
            svals = np.linalg.svd(prods, compute_uv=False)
            worst = max(worst, float(np.max(svals[:, 0])))
        return worst

    c_z = pair_max(psi.z_fwd, psi.z_inv)
    c_S = pair_max(psi.s_fwd, psi.s_inv)

    norm_D = max(_spec_norm(c.D(t)) for t in grids.t)
    norm_BRB = max(_spec_norm(c.BRBt(t)) for t in grids.t)
    norm_QG = max(_spec_norm(c.Q(t) @ c.Gamma - Pi.values[k] @ c.D(t))
                  for k, t in enumerate(grids.t))
    norm_QfGf = _spec_norm(c.Qf @ c.Gamma_f)
    T = c.T
    C_Xi = (c_g * c_z * norm_D * T
            + c_g * c_z * c_S * norm_BRB * (norm_QG * T + norm_QfGf) * T)
    return ContractionReport(c_g=c_g, c_z=c_z, c_S=c_S, C_Xi=float(C_Xi),
                             contraction_ok=bool(C_Xi < 1.0), norm_D=norm_D,
                             norm_BRB=norm_BRB, norm_QGammaPiD=norm_QG,
                             norm_QfGammaf=norm_QfGf, T=T)


def apply_xi(spec: ProblemSpec, Pi: RiccatiSolution, psi: FundamentalMatrices,
             g: Graphon, z_field: np.ndarray,
             grids: Grids | None = None) -> np.ndarray:
    """Apply the integral fixed-point operator to a (alpha, t, n) field.

    Writing Psi_z / Psi_s for the transition matrices and G for the kernel
    quadrature, the image at (a, t) is

        int_0^t Psi_z(t,s) [ D (G z)(a,s) + BR^-1B^T (G w)(a,s) ] ds,
        w(b,s) = int_s^T Psi_s(s,r) (Q Gamma - Pi D) z(b,r) dr
               + Psi_s(s,T) Qf Gamma_f z(b,T),

    which is the source response of the mean equation once the backward
    offset is eliminated by variation of constants.  Time integrals use the
    trapezoid rule on the shared grid, node integrals the midpoint rule.
    """
    grids = grids or spec.grids
    c = spec.coeffs
    h = grids.h
    W = grid_matrix(g, grids.alpha)

    src = _mats_on_grid(lambda t: c.Q(t) @ c.Gamma, grids) \
        - Pi.values @ _mats_on_grid(c.D, grids)
    E = psi.s_inv @ src                       # Psi_s(0,r)(Q Gamma - Pi D)
    q = np.einsum("tij,atj->ati", E, z_field)

    # I(b, s) = int_s^T q dr, backward cumulative trapezoid
    inc = 0.5 * h * (q[:, :-1] + q[:, 1:])
    I = np.zeros_like(q)
    I[:, :-1] = np.cumsum(inc[:, ::-1], axis=1)[:, ::-1]

    term = np.einsum("ij,aj->ai", psi.s_inv[-1] @ (c.Qf @ c.Gamma_f),
                     z_field[:, -1])
    w = np.einsum("tij,atj->ati", psi.s_fwd, I + term[:, None, :])

    Gz = _apply_kernel(W, z_field)
    Gw = _apply_kernel(W, w)

    ZD = psi.z_inv @ _mats_on_grid(c.D, grids)
    ZB = psi.z_inv @ _mats_on_grid(c.BRBt, grids)
    p = (np.einsum("tij,atj->ati", ZD, Gz)
         + np.einsum("tij,atj->ati", ZB, Gw))

    inc = 0.5 * h * (p[:, :-1] + p[:, 1:])
    C = np.zeros_like(p)
    C[:, 1:] = np.cumsum(inc, axis=1)
    return np.einsum("tij,atj->ati", psi.z_fwd, C)


def _offset_operator_path(spec: ProblemSpec, Pi: RiccatiSolution, t: float,
                          gamma_eff: float | None = None) -> np.ndarray:
    c = spec.coeffs
    gam = c.gamma if gamma_eff is None else gamma_eff
    P = Pi.at(t)
    sig = c.sigma(t)
    return c.A(t).T - P @ c.BRBt(t) + 2.0 * gam * (P @ (sig @ sig.T))


def _solve_S_field(spec: ProblemSpec, Pi: RiccatiSolution, z_field: np.ndarray,
                   grids: Grids, gamma_eff: float | None = None) -> np.ndarray:
    """Backward RK4 for the offset equation, all nodes at once."""
    c = spec.coeffs
    h = grids.h
    K = grids.n_t
    S = np.einsum("ij,aj->ai", -(c.Qf @ c.Gamma_f), z_field[:, K])
    out = np.empty_like(z_field)
    out[:, K] = S

    def rhs(t, S_val, z_val):
        M = _offset_operator_path(spec, Pi, t, gamma_eff)
        srcm = c.Q(t) @ c.Gamma - Pi.at(t) @ c.D(t)
        return -S_val @ M.T + z_val @ srcm.T

    for k in range(K, 0, -1):
        t = grids.t[k]
        z_k = z_field[:, k]
        z_km = z_field[:, k - 1]
        z_mid = 0.5 * (z_k + z_km)
        k1 = rhs(t, S, z_k)
        k2 = rhs(t - 0.5 * h, S - 0.5 * h * k1, z_mid)
        k3 = rhs(t - 0.5 * h, S - 0.5 * h * k2, z_mid)
        k4 = rhs(t - h, S - h * k3, z_km)
        S = S - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[:, k - 1] = S
    return out


def _solve_r_field(spec: ProblemSpec, Pi: RiccatiSolution, z_field: np.ndarray,
                   S_field: np.ndarray, grids: Grids,
                   gamma_eff: float | None = None) -> np.ndarray:
    """Backward RK4 for the scalar value offset, all nodes at once.

        dr/dt = S^T (BR^-1B^T - 2 gamma sigma sigma^T) S - 2 z^T D^T S
                - z^T Gamma^T Q Gamma z - Tr(sigma sigma^T Pi),
        r(T)  = z(T)^T Gamma_f^T Qf Gamma_f z(T).
    """
    c = spec.coeffs
    h = grids.h
    K = grids.n_t
    gam = c.gamma if gamma_eff is None else gamma_eff

    zT = z_field[:, K]
    GfQfGf = c.Gamma_f.T @ c.Qf @ c.Gamma_f
    r = np.einsum("ai,ij,aj->a", zT, GfQfGf, zT)
    out = np.empty(z_field.shape[:2])
    out[:, K] = r

    def rhs(t, z_val, S_val):
        Kq = c.riccati_quadratic(t, gam)
        D = c.D(t)
        GQG = c.Gamma.T @ c.Q(t) @ c.Gamma
        sig = c.sigma(t)
        trace = float(np.trace(sig @ sig.T @ Pi.at(t)))
        return (np.einsum("ai,ij,aj->a", S_val, Kq, S_val)
                - 2.0 * np.einsum("ai,ij,aj->a", z_val, D.T, S_val)
                - np.einsum("ai,ij,aj->a", z_val, GQG, z_val) - trace)

    for k in range(K, 0, -1):
        t = grids.t[k]
        z_k, z_km = z_field[:, k], z_field[:, k - 1]
        S_k, S_km = S_field[:, k], S_field[:, k - 1]
        z_mid, S_mid = 0.5 * (z_k + z_km), 0.5 * (S_k + S_km)
        k1 = rhs(t, z_k, S_k)
        k2 = rhs(t - 0.5 * h, z_mid, S_mid)
        k3 = k2  # rhs does not depend on r, stages 2 and 3 coincide
        k4 = rhs(t - h, z_km, S_km)
        r = r - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[:, k - 1] = r
    return out


def solve_r(spec: ProblemSpec, Pi: RiccatiSolution, z_alpha: np.ndarray,
            S_alpha: np.ndarray, grid: Grids | None = None,
            gamma_eff: float | None = None) -> np.ndarray:
    """Scalar value-offset path for one node's (z, S) paths."""
    grid = grid or spec.grids
    return _solve_r_field(spec, Pi, z_alpha[None], S_alpha[None], grid,
                          gamma_eff)[0]


def _initial_section(spec: ProblemSpec, W: np.ndarray, grids: Grids) -> np.ndarray:
    m = spec.initial.mean(grids.alpha)          # (n_alpha, n)
    return W @ m / grids.n_alpha


def solve_fixed_point(spec: ProblemSpec, g: Graphon, grids: Grids | None = None,
                      tol: float = 1e-9, max_iter: int = 500,
                      force: bool = False, relaxation: float = 1.0,
                      Pi: RiccatiSolution | None = None,
                      psi: FundamentalMatrices | None = None) -> MeanFieldSolution:
    """Picard iteration of the integral fixed-point equation.

    Starts from the frozen initial section z(a, t) = z(a, 0) and iterates
    z <- Xi z + Psi_z(t, 0) z(., 0) until the sup-norm change drops below
    ``tol``.  Requires the contraction certificate unless ``force`` is set;
    the bound is sufficient, not necessary, so forcing can still converge.
    An optional ``relaxation`` factor in (0, 1] damps the update for use
    near C_Xi = 1.
    """
    grids = grids or spec.grids
    report = validate_assumptions(spec)
    if not report.h4_ok:
        raise AssumptionError(
            f"risk-sensitivity condition fails: min eigenvalue "
            f"{report.h4_min_eigenvalue:.6g} < 0")
    if Pi is None:
        Pi = solve_riccati_pi(spec, grids)
    if psi is None:
        psi = fundamental_matrices(spec, Pi, grids)
    con = contraction_constant(spec, Pi, g, grids, psi)
    if not con.contraction_ok and not force:
        raise AssumptionError(
            f"contraction bound C_Xi = {con.C_Xi:.4g} >= 1; pass force=True "
            "to iterate anyway or use the spectral solver")

    W = grid_matrix(g, grids.alpha)
    z0 = _initial_section(spec, W, grids)
    z_hom = np.einsum("tij,aj->ati", psi.z_fwd, z0)

    z = np.repeat(z0[:, None, :], grids.n_t + 1, axis=1)
    change = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        z_new = apply_xi(spec, Pi, psi, g, z, grids) + z_hom
        if relaxation != 1.0:
            z_new = (1.0 - relaxation) * z + relaxation * z_new
        change = float(np.max(np.abs(z_new - z)))
        z = z_new
        if not np.isfinite(change) or change > 1e8:
            raise ConvergenceError(
                f"fixed-point iteration diverged at iteration {iterations} "
                f"(change {change:.3e}); the contraction bound C_Xi="
                f"{con.C_Xi:.4g} was not met", change)
        if change <= tol:
            break
    else:
        raise ConvergenceError(
            f"fixed-point iteration did not reach tol={tol:.3g} after "
            f"{max_iter} iterations (last change {change:.3e})", change)

    S = _solve_S_field(spec, Pi, z, grids)
    r = _solve_r_field(spec, Pi, z, S, grids)
    return MeanFieldSolution(z=z, S=S, r=r, method="fixed_point",
                             alphas=grids.alpha, grid=grids,
                             iterations=iterations, residual=change,
                             extras={"C_Xi": con.C_Xi,
                                     "contraction_ok": con.contraction_ok})


def solve_spectral(spec: ProblemSpec, g: Graphon, grids: Grids | None = None,
                   rank_tol: float = 1e-8,
                   decomp: SpectralDecomposition | None = None,
                   Pi: RiccatiSolution | None = None) -> MeanFieldSolution:
    """Decouple the forward-backward system through the kernel's spectrum.

    The costate field is expressed as S = P z where P acts as P_perp on the
    subspace orthogonal to the retained eigenfunctions and as P_l along
    eigenfunction f_l.  Each eigencomponent c_l of z then obeys the closed
    forward equation

        dc_l/dt = (A - BR^-1B^T Pi + l D - l BR^-1B^T P_l) c_l,

    the orthogonal remainder follows the l = 0 dynamics, and the field is
    reassembled before recovering r node by node.
    """
    grids = grids or spec.grids
    report = validate_assumptions(spec)
    if not report.h4_ok:
        raise AssumptionError(
            f"risk-sensitivity condition fails: min eigenvalue "
            f"{report.h4_min_eigenvalue:.6g} < 0")
    if Pi is None:
        Pi = solve_riccati_pi(spec, grids)
    if decomp is None:
        decomp = spectral_decompose(g, grids.alpha, rank_tol)
    psi = fundamental_matrices(spec, Pi, grids)
    c = spec.coeffs
    K = grids.n_t
    h = grids.h
    n_alpha = grids.n_alpha

    W = grid_matrix(g, grids.alpha)
    z0 = _initial_section(spec, W, grids)

    F = decomp.eigenvectors                 # (n_alpha, L)
    lam = decomp.eigenvalues                # (L,)
    L = decomp.rank
    if L > 0:
        C0 = F.T @ z0 / n_alpha             # (L, n)
        rho0 = z0 - F @ C0
    else:
        C0 = np.zeros((0, spec.n))
        rho0 = z0

    rho = np.einsum("tij,aj->ati", psi.z_fwd, rho0)
    P_perp = solve_p_ell_stack(spec, Pi, np.zeros(1), grids)[0]

    if L > 0:
        P_stack = solve_p_ell_stack(spec, Pi, lam, grids)   # (L, K+1, n, n)
        lam_c = lam[:, None, None]

        def comp_rhs(t, C_val, P_val):
            BRB = c.BRBt(t)
            A_cl = c.A(t) - BRB @ Pi.at(t)
            M = A_cl[None] + lam_c * (c.D(t)[None] - BRB[None] @ P_val)
            return np.einsum("lij,lj->li", M, C_val)

        C_path = np.empty((L, K + 1, spec.n))
        C_path[:, 0] = C0
        C_val = C0
        for k in range(K):
            t = grids.t[k]
            P_k = P_stack[:, k]
            P_kp = P_stack[:, k + 1]
            P_mid = 0.5 * (P_k + P_kp)
            k1 = comp_rhs(t, C_val, P_k)
            k2 = comp_rhs(t + 0.5 * h, C_val + 0.5 * h * k1, P_mid)
            k3 = comp_rhs(t + 0.5 * h, C_val + 0.5 * h * k2, P_mid)
            k4 = comp_rhs(t + h, C_val + h * k3, P_kp)
            C_val = C_val + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            C_path[:, k + 1] = C_val

        z = rho + np.einsum("al,ltn->atn", F, C_path)
        PC = np.einsum("ltij,ltj->lti", P_stack, C_path)
        S = (np.einsum("tij,atj->ati", P_perp, rho)
             + np.einsum("al,ltn->atn", F, PC))
    else:
        z = rho
        S = np.einsum("tij,atj->ati", P_perp, rho)

    r = _solve_r_field(spec, Pi, z, S, grids)
    return MeanFieldSolution(z=z, S=S, r=r, method="spectral",
                             alphas=grids.alpha, grid=grids,
                             extras={"rank": L,
                                     "eigenvalues": lam.tolist(),
                                     "spectral_residual": decomp.residual})


def consistency_residual(sol: MeanFieldSolution, spec: ProblemSpec, g: Graphon,
                         grids: Grids | None = None) -> float:
    """Self-consistency gap of a candidate solution.

    The mean state of every node is re-propagated forward,

        d(Ex_a)/dt = (A - BR^-1B^T Pi) Ex_a - BR^-1B^T S_a + D z_a,
        Ex_a(0) = mean of the initial law at a,

    and the result is the sup over the grid of
    | z_a(t) - (G Ex.(t))(a) |: zero exactly when z regenerates itself.
    """
    grids = grids or sol.grid
    c = spec.coeffs
    Pi = solve_riccati_pi(spec, grids)
    h = grids.h
    K = grids.n_t

    X = spec.initial.mean(grids.alpha)
    path = np.empty_like(sol.z)
    path[:, 0] = X

    def rhs(t, X_val, z_val, S_val):
        BRB = c.BRBt(t)
        A_cl = c.A(t) - BRB @ Pi.at(t)
        return X_val @ A_cl.T - S_val @ BRB.T + z_val @ c.D(t).T

    for k in range(K):
        t = grids.t[k]
        z_k, z_kp = sol.z[:, k], sol.z[:, k + 1]
        S_k, S_kp = sol.S[:, k], sol.S[:, k + 1]
        z_mid, S_mid = 0.5 * (z_k + z_kp), 0.5 * (S_k + S_kp)
        k1 = rhs(t, X, z_k, S_k)
        k2 = rhs(t + 0.5 * h, X + 0.5 * h * k1, z_mid, S_mid)
        k3 = rhs(t + 0.5 * h, X + 0.5 * h * k2, z_mid, S_mid)
        k4 = rhs(t + h, X + h * k3, z_kp, S_kp)
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        path[:, k + 1] = X

    W = grid_matrix(g, grids.alpha)
    regenerated = _apply_kernel(W, path)
    return float(np.max(np.abs(sol.z - regenerated)))


def check_monotonicity(spec: ProblemSpec, Pi: RiccatiSolution, g: Graphon,
                       grids: Grids | None = None,
                       decomp: SpectralDecomposition | None = None,
                       rank_tol: float = 1e-8) -> MonotonicityReport:
    """Evaluate the dominance-monotonicity certificate on the grid.

    Returns the worst-case eigenvalue margins of the three matrix
    conditions together with the constants (mu, nu) they induce.  Case "A"
    needs all conditions with the gain condition strict (mu > 0); case "B"
    is the boundary where the gain condition is tight but the state-weight
    conditions are strict (nu > 0); anything else is "neither".
    """
    grids = grids or spec.grids
    c = spec.coeffs
    if decomp is None:
        decomp = spectral_decompose(g, grids.alpha, rank_tol)
    positive = decomp.eigenvalues[decomp.eigenvalues > rank_tol]
    lam_min = float(positive.min()) if positive.size else 0.0

    n = spec.n
    eye = np.eye(n)
    margin1 = np.inf
    margin2 = np.inf
    lamQ_max = -np.inf   # sup_t of the largest eigenvalue in condition (i)
    lamR_min = np.inf    # inf_t |largest eigenvalue| in condition (ii)
    for k, t in enumerate(grids.t):
        P = Pi.values[k]
        D = c.D(t)
        sig = c.sigma(t)
        ssT = sig @ sig.T
        QG = c.Q(t) @ c.Gamma
        M_q = (0.5 * (QG + QG.T - P @ D - D.T @ P)
               + c.gamma ** 2 * (P @ ssT @ ssT @ P) + 0.25 * (D @ D.T))
        margin1 = min(margin1, _eigmin(-M_q))
        lamQ_max = max(lamQ_max, _eigmax(M_q))
        M_r = c.BRBt(t) * lam_min - 2.0 * eye
        margin2 = min(margin2, _eigmin(M_r))
        lamR_min = min(lamR_min, abs(_eigmax(-M_r)))
    M_f = -(c.Qf @ c.Gamma_f + c.Gamma_f.T @ c.Qf)
    margin3 = _eigmin(M_f)
    lamQf = _eigmax(-0.5 * M_f)

    mu = float(lamR_min)
    nu = float(abs(max(lamQ_max, lamQf)))

    cond1 = margin1 >= -PSD_TOL
    cond3 = margin3 >= -PSD_TOL
    if cond1 and cond3 and margin2 > PSD_TOL:
        case = "A"
    elif cond1 and cond3 and margin2 >= -PSD_TOL and nu > PSD_TOL:
        case = "B"
        mu = 0.0
    else:
        case = "neither"
    return MonotonicityReport(mu=mu, nu=nu, case=case,
                              inequality_margins=(float(margin1),
                                                  float(margin2),
                                                  float(margin3)),
                              lambda_min_positive=lam_min)
