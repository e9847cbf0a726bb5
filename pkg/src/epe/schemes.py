"""Backward-Euler time stepping: operator-splitting and monolithic engines.

Both schemes share one Discretization (assembled operators; coefficients
are time-independent, so every matrix is built once per run and factorized
once). The splitting scheme advances each step in two sub-steps:

  A (electromagnetic): eliminate the cellwise-constant H exactly
     (H^n = H^{n-1} - (tau/mu) curl E^n, exact because curl E_h is cellwise
     constant at lowest order) and solve one SPD system for E^n:
       (eps + tau*sigma) M_E E + (tau^2/mu) C^T M_H^{-1} C E
         = eps M_E E^{n-1} + tau C^T H^{n-1} + tau L G_pe p^{n-1} + tau (j(t_n), .)
  B (Biot): solve the symmetric indefinite saddle system
       a(u, v) - (p, alpha div v)            = (f(t_n), v)
       (c0 p + alpha div u, q) + tau kappa (grad p, grad q)
         = (c0 p^{n-1} + alpha div u^{n-1}, q) + tau L (E^n, grad q) + tau (g(t_n), q)

The monolithic reference solves all four equations in one coupled
(non-symmetric) linear system per step with the pressure coupling taken
implicitly, via one reused sparse LU factorization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from epe.core import PhysicalParams, RunConfig
from epe.fem.assembly import assemble_load, assemble_matrix, curl_dof_operator
from epe.fem.dofs import Layouts, make_layouts, reduce_matrix
from epe.linalg import LuSolver, SaddleSolver, SpdSolver, spd_solve
from epe.mesh import TetMesh, build_unit_cube_mesh
from epe.mms import zero_scalar_source, zero_vector_source


@dataclass(frozen=True)
class State:
    """Coefficient vectors of one time level (full DOF sets, zeros on boundary)."""

    E: np.ndarray
    H: np.ndarray
    u: np.ndarray
    p: np.ndarray
    n: int
    t: float


@dataclass(frozen=True)
class Sources:
    """Right-hand sides j (electric), f (elastic), g (pressure)."""

    j: Callable = zero_vector_source
    f: Callable = zero_vector_source
    g: Callable = zero_scalar_source


class Discretization:
    """Assembled full-space operators for one mesh and parameter set."""

    def __init__(
        self,
        mesh: TetMesh,
        layouts: Layouts,
        params: PhysicalParams,
        quad_assembly: int = 2,
    ):
        self.mesh = mesh
        self.layouts = layouts
        self.params = params
        self.quad_assembly = quad_assembly
        L = layouts

        self.M_E = assemble_matrix(mesh, L.E, L.E, "MASS_E", 1.0, quad_assembly)
        self.C = assemble_matrix(mesh, L.H, L.E, "CURL_TO_H", 1.0, quad_assembly)
        self.M_H = assemble_matrix(mesh, L.H, L.H, "H_MASS", 1.0, quad_assembly)
        self.W = curl_dof_operator(mesh)
        self.G_pe = assemble_matrix(mesh, L.E, L.P, "GRAD_P_TO_E", 1.0, quad_assembly)
        self.G_qe = assemble_matrix(mesh, L.P, L.E, "E_TO_GRAD_Q", 1.0, quad_assembly)
        self.A_el = assemble_matrix(
            mesh, L.U, L.U, "ELASTICITY", (params.lambda_c, params.G), quad_assembly
        )
        self.B_div = assemble_matrix(mesh, L.P, L.U, "DIV_COUPLING", params.alpha, quad_assembly)
        self.M_P = assemble_matrix(mesh, L.P, L.P, "P_MASS", 1.0, quad_assembly)
        self.K_P = assemble_matrix(mesh, L.P, L.P, "P_STIFF", 1.0, quad_assembly)
        self.M_U = assemble_matrix(mesh, L.U, L.U, "U_MASS", 1.0, quad_assembly)

        self.M_E_ff = reduce_matrix(self.M_E, L.E, L.E)
        self.A_el_ff = reduce_matrix(self.A_el, L.U, L.U)
        self.B_ff = reduce_matrix(self.B_div, L.P, L.U)
        self.M_P_ff = reduce_matrix(self.M_P, L.P, L.P)
        self.K_P_ff = reduce_matrix(self.K_P, L.P, L.P)
        # C restricted to free E columns; M_H is diagonal, so the condensed
        # curl-curl block C^T M_H^{-1} C is formed explicitly and stays sparse.
        self.C_f = self.C.tocsc()[:, L.E.free].tocsr()
        inv_mh = sp.diags(1.0 / self.M_H.diagonal())
        self.K_curl_ff = (self.C_f.T @ inv_mh @ self.C_f).tocsr()

    def load(self, space: str, fn, t: float) -> np.ndarray:
        layout = getattr(self.layouts, space)
        return assemble_load(self.mesh, layout, fn, t, self.quad_assembly)


def zero_state(layouts: Layouts) -> State:
    return State(
        E=np.zeros(layouts.E.count),
        H=np.zeros(layouts.H.count),
        u=np.zeros(layouts.U.count),
        p=np.zeros(layouts.P.count),
        n=0,
        t=0.0,
    )


def initial_state(disc: Discretization, fields, spd_tol: float = 1e-12) -> State:
    """L2-orthogonal projection of the initial fields onto the four spaces.

    ``fields`` provides evaluators E, H, u, p taking (t, pts); they are
    sampled at t = 0. Each projection solves the unconstrained mass system,
    then the boundary constraints are imposed (exact zeros) on E, u, p.
    """
    L = disc.layouts
    bE, _ = spd_solve(disc.M_E, disc.load("E", fields.E, 0.0), tol=spd_tol)
    bH = disc.load("H", fields.H, 0.0) / disc.M_H.diagonal()
    bU, _ = spd_solve(disc.M_U, disc.load("U", fields.u, 0.0), tol=spd_tol)
    bP, _ = spd_solve(disc.M_P, disc.load("P", fields.p, 0.0), tol=spd_tol)
    bE[L.E.constrained] = 0.0
    bU[L.U.constrained] = 0.0
    bP[L.P.constrained] = 0.0
    return State(E=bE, H=bH, u=bU, p=bP, n=0, t=0.0)


class BhOperator:
    """Discrete pressure-to-dilation map: p -> alpha div u with a(u, v) = (p, alpha div v).

    Self-adjoint and monotone on the constrained pressure space; the inner
    product (Bh p, q) equals q^T B A^{-1} B^T p on free DOFs.
    """

    def __init__(self, disc: Discretization, spd_tol: float = 1e-12):
        self.disc = disc
        self.spd_tol = spd_tol
        self._lu_A = LuSolver(disc.A_el_ff, tol=1e-8) if disc.A_el_ff.shape[0] else None

    def _schur(self, p_free: np.ndarray) -> np.ndarray:
        if self._lu_A is None:
            return np.zeros(0)
        u_free, _ = self._lu_A.solve(self.disc.B_ff.T @ p_free)
        return self.disc.B_ff @ u_free

    def apply(self, p_full: np.ndarray) -> np.ndarray:
        """Coefficients of the L2 representative of alpha div u in the P space."""
        L = self.disc.layouts.P
        rhs = self._schur(L.reduce(p_full))
        if rhs.size == 0:
            return np.zeros(L.count)
        x, _ = spd_solve(self.disc.M_P_ff, rhs, tol=self.spd_tol)
        return L.extend(x)

    def inner(self, p_full: np.ndarray, q_full: np.ndarray) -> float:
        """(Bh p, q) in L2."""
        L = self.disc.layouts.P
        return float(L.reduce(q_full) @ self._schur(L.reduce(p_full)))


def discrete_energy(
    state: State, params: PhysicalParams, tau: float, disc: Discretization, bh: BhOperator
) -> float:
    """Energy eps||E||^2 + mu||H||^2 + ((c0 + Bh) p, p) + tau kappa ||grad p||^2."""
    S = params.epsilon * float(state.E @ (disc.M_E @ state.E))
    S += params.mu * float(state.H @ (disc.M_H @ state.H))
    S += params.c0 * float(state.p @ (disc.M_P @ state.p))
    S += bh.inner(state.p, state.p)
    S += tau * params.kappa * float(state.p @ (disc.K_P @ state.p))
    return S


class SplittingScheme:
    """EM sub-step (condensed SPD solve by default) followed by Biot sub-step."""

    name = "splitting"

    def __init__(
        self,
        disc: Discretization,
        tau: float,
        sources: Sources,
        spd_tol: float = 1e-10,
        saddle_tol: float = 1e-9,
        direct_threshold: int = 200_000,
        condensed: bool = True,
    ):
        self.disc = disc
        self.tau = tau
        self.sources = sources
        self.condensed = condensed
        p = disc.params
        L = disc.layouts

        A0 = (p.epsilon + tau * p.sigma) * disc.M_E_ff
        if condensed:
            self._em = SpdSolver(A0 + (tau**2 / p.mu) * disc.K_curl_ff, tol=spd_tol)
        else:
            if L.E.num_free + L.H.count > 0:
                K = sp.bmat(
                    [[A0, -tau * self.disc.C_f.T], [tau * self.disc.C_f, p.mu * disc.M_H]],
                    format="csc",
                )
                self._em_block = LuSolver(K, tol=spd_tol * 10)
            else:
                self._em_block = None

        C_p = p.c0 * disc.M_P_ff + tau * p.kappa * disc.K_P_ff
        self._saddle = SaddleSolver(
            disc.A_el_ff, disc.B_ff, C_p, tol=saddle_tol, direct_threshold=direct_threshold
        )

    def step(self, state: State) -> State:
        disc, p, tau = self.disc, self.disc.params, self.tau
        L = disc.layouts
        t_new = state.t + tau

        # sub-step A: electromagnetic fields
        rhs_common = p.epsilon * (disc.M_E @ state.E)
        rhs_common += tau * p.L * (disc.G_pe @ state.p)
        rhs_common += tau * disc.load("E", self.sources.j, t_new)
        if self.condensed:
            rhs = rhs_common[L.E.free] + tau * (self.disc.C_f.T @ state.H)
            E_free, _ = self._em.solve(rhs)
        else:
            rhs = np.concatenate(
                [rhs_common[L.E.free], p.mu * (disc.M_H @ state.H)]
            )
            x, _ = self._em_block.solve(rhs)
            E_free = x[: L.E.num_free]
        E_new = L.E.extend(E_free)
        H_new = state.H - (tau / p.mu) * (disc.W @ E_new)

        # sub-step B: Biot consolidation
        f_u = disc.load("U", self.sources.f, t_new)[L.U.free]
        f_p = (p.c0 * (disc.M_P @ state.p) + disc.B_div @ state.u)[L.P.free]
        f_p += tau * p.L * (disc.G_qe @ E_new)[L.P.free]
        f_p += tau * disc.load("P", self.sources.g, t_new)[L.P.free]
        (u_free, p_free), _ = self._saddle.solve(f_u, f_p)

        return State(
            E=E_new,
            H=H_new,
            u=L.U.extend(u_free),
            p=L.P.extend(p_free),
            n=state.n + 1,
            t=t_new,
        )


class MonolithicScheme:
    """One coupled backward-Euler solve per step for (E, H, u, p)."""

    name = "monolithic"

    def __init__(
        self,
        disc: Discretization,
        tau: float,
        sources: Sources,
        saddle_tol: float = 1e-9,
    ):
        self.disc = disc
        self.tau = tau
        self.sources = sources
        p = disc.params
        L = disc.layouts
        fE, fU, fP = L.E.free, L.U.free, L.P.free

        A0 = (p.epsilon + tau * p.sigma) * disc.M_E_ff
        Gpe_f = disc.G_pe.tocsr()[fE][:, fP]
        Gqe_f = disc.G_qe.tocsr()[fP][:, fE]
        B_ffT = disc.B_ff.T
        C_p = p.c0 * disc.M_P_ff + tau * p.kappa * disc.K_P_ff
        K = sp.bmat(
            [
                [A0, -tau * disc.C_f.T, None, -tau * p.L * Gpe_f],
                [tau * disc.C_f, p.mu * disc.M_H, None, None],
                [None, None, disc.A_el_ff, -B_ffT],
                [-tau * p.L * Gqe_f, None, disc.B_ff, C_p],
            ],
            format="csc",
        )
        self._sizes = (len(fE), L.H.count, len(fU), len(fP))
        self._lu = LuSolver(K, tol=saddle_tol)

    def step(self, state: State) -> State:
        disc, p, tau = self.disc, self.disc.params, self.tau
        L = disc.layouts
        t_new = state.t + tau
        nE, nH, nU, nP = self._sizes

        rhs = np.concatenate(
            [
                (p.epsilon * (disc.M_E @ state.E) + tau * disc.load("E", self.sources.j, t_new))[
                    L.E.free
                ],
                p.mu * (disc.M_H @ state.H),
                disc.load("U", self.sources.f, t_new)[L.U.free],
                (p.c0 * (disc.M_P @ state.p) + disc.B_div @ state.u)[L.P.free]
                + tau * disc.load("P", self.sources.g, t_new)[L.P.free],
            ]
        )
        x, _ = self._lu.solve(rhs)
        oE, oH, oU = nE, nE + nH, nE + nH + nU
        return State(
            E=L.E.extend(x[:oE]),
            H=x[oE:oH],
            u=L.U.extend(x[oH:oU]),
            p=L.P.extend(x[oU:]),
            n=state.n + 1,
            t=t_new,
        )


@dataclass(frozen=True)
class StepRecord:
    n: int
    t: float
    wall_time: float
    energy: float | None = None


@dataclass(frozen=True)
class PhaseTimings:
    assemble: float
    factorize: float
    loop: float

    @property
    def total(self) -> float:
        return self.assemble + self.factorize + self.loop


@dataclass(frozen=True)
class RunResult:
    state: State
    timings: PhaseTimings
    steps: tuple[StepRecord, ...]

    @property
    def energy_trace(self) -> np.ndarray:
        return np.array([s.energy for s in self.steps if s.energy is not None])


def make_scheme(
    name: str, disc: Discretization, tau: float, sources: Sources, config: RunConfig, **kw
):
    if name == "splitting":
        return SplittingScheme(
            disc,
            tau,
            sources,
            spd_tol=config.spd_tol,
            saddle_tol=config.saddle_tol,
            direct_threshold=config.direct_threshold,
            **kw,
        )
    if name == "monolithic":
        return MonolithicScheme(disc, tau, sources, saddle_tol=config.saddle_tol)
    raise ValueError(f"unknown scheme {name!r}")


def run(
    config: RunConfig,
    sources: Sources,
    initial,
    observers: Sequence[Callable] = (),
    scheme: str | None = None,
    track_energy: bool = False,
    condensed: bool = True,
    mesh: TetMesh | None = None,
    disc: Discretization | None = None,
    start_state: State | None = None,
) -> RunResult:
    """Advance N backward-Euler steps and report per-phase wall times.

    ``initial`` provides the exact initial fields (projected in the L2
    sense) unless ``start_state`` passes explicit coefficients. Observers
    are called as obs(n, t, state, energy, step_wall_time) after every
    step, including the initial one at n = 0.
    """
    scheme_name = scheme or config.scheme
    t0 = time.perf_counter()
    if disc is None:
        if mesh is None:
            mesh = build_unit_cube_mesh(config.mesh_n)
        disc = Discretization(mesh, make_layouts(mesh), config.params, config.quad_assembly)
    t_assemble = time.perf_counter() - t0

    t0 = time.perf_counter()
    kw = {"condensed": condensed} if scheme_name == "splitting" else {}
    engine = make_scheme(scheme_name, disc, config.grid.tau, sources, config, **kw)
    bh = BhOperator(disc) if track_energy else None
    t_factorize = time.perf_counter() - t0

    if start_state is not None:
        state = start_state
    else:
        state = initial_state(disc, initial, spd_tol=min(config.spd_tol, 1e-12))

    t0 = time.perf_counter()
    records = []
    energy = (
        discrete_energy(state, config.params, config.grid.tau, disc, bh) if track_energy else None
    )
    records.append(StepRecord(0, 0.0, 0.0, energy))
    for obs in observers:
        obs(0, 0.0, state, energy, 0.0)
    for n in range(1, config.grid.N + 1):
        ts = time.perf_counter()
        state = engine.step(state)
        wall = time.perf_counter() - ts
        energy = (
            discrete_energy(state, config.params, config.grid.tau, disc, bh)
            if track_energy
            else None
        )
        records.append(StepRecord(n, state.t, wall, energy))
        for obs in observers:
            obs(n, state.t, state, energy, wall)
    t_loop = time.perf_counter() - t0

    return RunResult(
        state=state,
        timings=PhaseTimings(assemble=t_assemble, factorize=t_factorize, loop=t_loop),
        steps=tuple(records),
    )
