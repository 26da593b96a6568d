"""Coefficient dynamics in the instantaneous eigenbasis.

The total wavefunction is expanded over instantaneous eigenstates with
dynamical phases theta_n(t) = -(1/hbar) * integral of E_n.  The expansion
coefficients obey

    dc_m/dt = - sum_{n != m} c_n * alpha_rate * psi_m(0) psi_n(0) / (E_n - E_m)
              * exp(i (theta_n - theta_m)),

which is integrated together with the phases (theta as explicit state
variables, so phase error stays inside the step controller) by an embedded
Dormand-Prince 4(5) pair with per-component error control.  Every
right-hand-side evaluation re-solves the spectrum, warm-started from the
previous wavevectors; the FSAL stage reuses the last evaluation of the
preceding step, so repeated alphas cost nothing.

The integration loop is JIT-compiled: phases oscillate at the level energies
and a slow ramp needs ~1e5 steps, which a Python-callback integrator cannot
deliver inside the sweep runtime budget.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DimensionMismatchError, StepUnderflowError
from .eigensolver import Spectrum, _spectrum_arrays, solve_spectrum
from .geometry import BarrierProtocol, BoxGeometry, UnitSystem, _alpha_of_t, _alpha_rate_of_t


@dataclass(frozen=True)
class StateVector:
    """Coefficients and accumulated phases at one instant."""

    t: float
    c: np.ndarray        # complex, len N
    theta: np.ndarray    # real, len N, theta_n(0) = 0 and non-increasing
    alpha: float

    def norm(self) -> float:
        return float(np.sum(np.abs(self.c) ** 2))


@dataclass
class TrajectoryRecord:
    """Sampled trajectory: coefficients, phases, and spectrum summaries per sample."""

    times: np.ndarray    # (S,)
    alpha: np.ndarray    # (S,)
    c: np.ndarray        # (S, N) complex
    theta: np.ndarray    # (S, N)
    k: np.ndarray        # (S, N)
    E: np.ndarray        # (S, N)
    meta: dict = field(default_factory=dict)

    @property
    def n_levels(self) -> int:
        return self.c.shape[1]

    def populations(self) -> np.ndarray:
        return np.abs(self.c) ** 2

    def norms(self) -> np.ndarray:
        return np.sum(np.abs(self.c) ** 2, axis=1)

    def state_at(self, i: int) -> StateVector:
        return StateVector(t=float(self.times[i]), c=self.c[i].copy(),
                           theta=self.theta[i].copy(), alpha=float(self.alpha[i]))

    @property
    def final_state(self) -> StateVector:
        return self.state_at(len(self.times) - 1)


# -- right-hand side ----------------------------------------------------------


def rhs(sv: StateVector, spec: Spectrum, alpha_rate: float,
        units: UnitSystem | None = None) -> tuple:
    """(dc/dt, dtheta/dt) at the state's instant.

    spec must be the spectrum at sv.alpha with the same level count.
    """
    n = len(sv.c)
    if spec.n_levels != n or len(sv.theta) != n:
        raise DimensionMismatchError(
            f"state has {n} levels, spectrum has {spec.n_levels}")
    units = units or UnitSystem.natural(spec.geom.L)
    psi0 = spec.psi0s()
    E = spec.energies()
    dE = E[None, :] - E[:, None]
    np.fill_diagonal(dE, 1.0)  # diagonal never used
    W = np.outer(psi0, psi0) / dE
    np.fill_diagonal(W, 0.0)
    phase = np.exp(1j * (sv.theta[None, :] - sv.theta[:, None]))
    dc = -alpha_rate * (W * phase) @ np.asarray(sv.c)
    dtheta = -E / units.hbar
    return dc, dtheta


@njit(cache=True)
def _dyn_rhs(t, y, dy, a, b, kind, ratec, tau, tbl_t, tbl_a,
             h2_over_2m, inv_hbar, kcache, Atmp, Btmp, psik, Ek):
    """dy for the packed state y = [c_1..c_n, theta_1..theta_n] (theta in complex slots)."""
    n = kcache.shape[0]
    alpha = _alpha_of_t(t, kind, ratec, tau, tbl_t, tbl_a)
    adot = _alpha_rate_of_t(t, kind, ratec, tau, tbl_t, tbl_a)
    alpha_eff = alpha / h2_over_2m
    _spectrum_arrays(alpha_eff, a, b, kcache, Atmp, Btmp, psik)
    for i in range(n):
        Ek[i] = h2_over_2m * kcache[i] * kcache[i]
    for m in range(n):
        acc = 0.0 + 0.0j
        thm = y[n + m].real
        pm = psik[m]
        for j in range(n):
            if j == m:
                continue
            dE = Ek[j] - Ek[m]
            acc += y[j] * (pm * psik[j] / dE) * np.exp(1j * (y[n + j].real - thm))
        dy[m] = -adot * acc
        dy[n + m] = complex(-Ek[m] * inv_hbar, 0.0)


@njit(cache=True)
def _evolve_loop(a, b, kind, ratec, tau, tbl_t, tbl_a, h2_over_2m, inv_hbar,
                 c0, rtol, atol, t_samples):
    """Adaptive Dormand-Prince 4(5) with FSAL; lands exactly on every sample time.

    Returns (samples, status, nfev, naccept, nreject); status 1 = step underflow.
    """
    n = c0.shape[0]
    dim = 2 * n
    S = t_samples.shape[0]
    out = np.zeros((S, dim), np.complex128)
    y = np.zeros(dim, np.complex128)
    for i in range(n):
        y[i] = c0[i]
    out[0] = y

    kcache = np.zeros(n)
    Atmp = np.empty(n)
    Btmp = np.empty(n)
    psik = np.empty(n)
    Ek = np.empty(n)

    k1 = np.zeros(dim, np.complex128)
    k2 = np.zeros(dim, np.complex128)
    k3 = np.zeros(dim, np.complex128)
    k4 = np.zeros(dim, np.complex128)
    k5 = np.zeros(dim, np.complex128)
    k6 = np.zeros(dim, np.complex128)
    k7 = np.zeros(dim, np.complex128)
    yt = np.zeros(dim, np.complex128)
    y5 = np.zeros(dim, np.complex128)

    _dyn_rhs(0.0, y, k1, a, b, kind, ratec, tau, tbl_t, tbl_a,
             h2_over_2m, inv_hbar, kcache, Atmp, Btmp, psik, Ek)
    nfev = 1
    nacc = 0
    nrej = 0
    status = 0

    # initial step from the usual |y|/|f| heuristic
    d0 = 0.0
    d1 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(k1[i]) / sc) ** 2
    d0 = math.sqrt(d0 / dim)
    d1 = math.sqrt(d1 / dim)
    h = 0.01 * d0 / d1 if d1 > 0.0 else tau * 1e-3
    if h > 0.1 * tau:
        h = 0.1 * tau
    if h < 1e-12 * tau:
        h = 1e-12 * tau

    t = 0.0
    isamp = 1
    h_floor = 1e-14 * tau

    while isamp < S:
        t_target = t_samples[isamp]
        hit = False
        hs = h
        if t + hs >= t_target:
            hs = t_target - t
            hit = True

        for i in range(dim):
            yt[i] = y[i] + hs * (0.2 * k1[i])
        _dyn_rhs(t + 0.2 * hs, yt, k2, a, b, kind, ratec, tau, tbl_t, tbl_a,
                 h2_over_2m, inv_hbar, kcache, Atmp, Btmp, psik, Ek)
        for i in range(dim):
            yt[i] = y[i] + hs * (3.0 / 40.0 * k1[i] + 9.0 / 40.0 * k2[i])
        _dyn_rhs(t + 0.3 * hs, yt, k3, a, b, kind, ratec, tau, tbl_t, tbl_a,
                 h2_over_2m, inv_hbar, kcache, Atmp, Btmp, psik, Ek)
        for i in range(dim):
            yt[i] = y[i] + hs * (44.0 / 45.0 * k1[i] - 56.0 / 15.0 * k2[i]
                                 + 32.0 / 9.0 * k3[i])
        _dyn_rhs(t + 0.8 * hs, yt, k4, a, b, kind, ratec, tau, tbl_t, tbl_a,
                 h2_over_2m, inv_hbar, kcache, Atmp, Btmp, psik, Ek)
        for i in range(dim):
            yt[i] = y[i] + hs * (19372.0 / 6561.0 * k1[i] - 25360.0 / 2187.0 * k2[i]
                                 + 64448.0 / 6561.0 * k3[i] - 212.0 / 729.0 * k4[i])
        _dyn_rhs(t + 8.0 / 9.0 * hs, yt, k5, a, b, kind, ratec, tau, tbl_t, tbl_a,
                 h2_over_2m, inv_hbar, kcache, Atmp, Btmp, psik, Ek)
        for i in range(dim):
            yt[i] = y[i] + hs * (9017.0 / 3168.0 * k1[i] - 355.0 / 33.0 * k2[i]
                                 + 46732.0 / 5247.0 * k3[i] + 49.0 / 176.0 * k4[i]
                                 - 5103.0 / 18656.0 * k5[i])
        _dyn_rhs(t + hs, yt, k6, a, b, kind, ratec, tau, tbl_t, tbl_a,
                 h2_over_2m, inv_hbar, kcache, Atmp, Btmp, psik, Ek)
        for i in range(dim):
            y5[i] = y[i] + hs * (35.0 / 384.0 * k1[i] + 500.0 / 1113.0 * k3[i]
                                 + 125.0 / 192.0 * k4[i] - 2187.0 / 6784.0 * k5[i]
                                 + 11.0 / 84.0 * k6[i])
        _dyn_rhs(t + hs, y5, k7, a, b, kind, ratec, tau, tbl_t, tbl_a,
                 h2_over_2m, inv_hbar, kcache, Atmp, Btmp, psik, Ek)
        nfev += 6

        errn = 0.0
        for i in range(dim):
            e = hs * (71.0 / 57600.0 * k1[i] - 71.0 / 16695.0 * k3[i]
                      + 71.0 / 1920.0 * k4[i] - 17253.0 / 339200.0 * k5[i]
                      + 22.0 / 525.0 * k6[i] - 1.0 / 40.0 * k7[i])
            sc = atol + rtol * max(abs(y[i]), abs(y5[i]))
            errn += (abs(e) / sc) ** 2
        errn = math.sqrt(errn / dim)

        if errn <= 1.0:
            nacc += 1
            t = t_target if hit else t + hs
            for i in range(dim):
                y[i] = y5[i]
                k1[i] = k7[i]
            if hit:
                out[isamp] = y
                isamp += 1
        else:
            nrej += 1

        if errn != errn:        # NaN from a pathological stage: retreat hard
            fac = 0.2
        elif errn == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * errn ** -0.2
            if fac > 5.0:
                fac = 5.0
            if fac < 0.2:
                fac = 0.2
        h = hs * fac
        if h < h_floor and isamp < S:
            status = 1
            break

    return out, status, nfev, nacc, nrej


# -- public driver ------------------------------------------------------------


def evolve(geom: BoxGeometry, protocol: BarrierProtocol, n_levels: int = 6,
           c0=None, rtol: float = 1e-8, atol: float = 1e-10,
           n_samples: int = 201, units: UnitSystem | None = None) -> TrajectoryRecord:
    """Integrate the coefficient ODEs over the full insertion protocol.

    c0 defaults to the ground state (c_1 = 1).  Samples are recorded on a
    uniform time grid including t = 0 and t = tau; the spectrum summary at
    each sample and the final norm deviation land in the record.
    """
    if n_levels < 2:
        raise ValueError(f"n_levels must be >= 2, got {n_levels}")
    units = units or UnitSystem.natural(geom.L)
    if c0 is None:
        c0 = np.zeros(n_levels, dtype=complex)
        c0[0] = 1.0
    else:
        c0 = np.asarray(c0, dtype=complex)
        if c0.shape != (n_levels,):
            raise DimensionMismatchError(
                f"c0 has shape {c0.shape}, expected ({n_levels},)")
        nrm = np.sum(np.abs(c0) ** 2)
        if abs(nrm - 1.0) > 1e-6:
            raise ValueError(f"initial coefficients must be normalized, got |c0|^2={nrm}")
        c0 = c0 / math.sqrt(nrm)
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")

    kind, ratec, tau, tbl_t, tbl_a = protocol.jit_args()
    h2_over_2m = units.hbar**2 / (2.0 * units.mass)
    t_samples = np.linspace(0.0, tau, n_samples)

    out, status, nfev, nacc, nrej = _evolve_loop(
        geom.a, geom.b, kind, ratec, tau, tbl_t, tbl_a, h2_over_2m,
        1.0 / units.hbar, c0, rtol, atol, t_samples)
    if status == 1:
        raise StepUnderflowError(
            "integration step underflowed; tolerances too tight for this protocol")

    c = out[:, :n_levels].copy()
    theta = out[:, n_levels:].real.copy()
    alphas = np.array([protocol.alpha_at(t) for t in t_samples])

    ks = np.empty((n_samples, n_levels))
    Es = np.empty((n_samples, n_levels))
    spec = None
    for i, al in enumerate(alphas):
        spec = solve_spectrum(al, geom, n_levels, warm_start=spec, units=units)
        ks[i] = spec.ks()
        Es[i] = spec.energies()

    norms = np.sum(np.abs(c) ** 2, axis=1)
    meta = {
        "rtol": rtol,
        "atol": atol,
        "n_levels": n_levels,
        "nfev": int(nfev),
        "naccept": int(nacc),
        "nreject": int(nrej),
        "norm_dev_final": float(abs(norms[-1] - 1.0)),
        "norm_dev_max": float(np.max(np.abs(norms - 1.0))),
        "protocol_kind": protocol.kind,
        "tau": tau,
    }
    return TrajectoryRecord(times=t_samples, alpha=alphas, c=c, theta=theta,
                            k=ks, E=Es, meta=meta)


@dataclass(frozen=True)
class ConvergenceReport:
    n_levels: int
    n_levels_ref: int
    max_population_dev: float
    threshold: float
    converged: bool


def convergence_check(record: TrajectoryRecord, geom: BoxGeometry,
                      protocol: BarrierProtocol, extra_levels: int = 2,
                      threshold: float = 1e-4,
                      units: UnitSystem | None = None) -> ConvergenceReport:
    """Re-run the trajectory with extra basis levels and compare final populations."""
    n = record.n_levels
    n_ref = n + extra_levels
    c0 = np.zeros(n_ref, dtype=complex)
    c0[:n] = record.c[0]
    ref = evolve(geom, protocol, n_levels=n_ref, c0=c0,
                 rtol=record.meta.get("rtol", 1e-8),
                 atol=record.meta.get("atol", 1e-10),
                 n_samples=2, units=units)
    pop = record.populations()[-1]
    pop_ref = ref.populations()[-1][:n]
    dev = float(np.max(np.abs(pop - pop_ref)))
    return ConvergenceReport(n_levels=n, n_levels_ref=n_ref,
                             max_population_dev=dev, threshold=threshold,
                             converged=dev <= threshold)
