"""Fisher information of the source momentum carried by arrival times.

The score variance for n ordered detections reduces to a single
one-dimensional integral of

    F_n(Omega) * omega * Omega^(n-1) * S_n / (n-1)!

where S_n combines the log-derivative of the intensity with the running
integrals dOmega = int domega and dOmega~ = int domega^2/omega, plus a lump
term for the NO-event outcome when the total mass Omega(inf) is finite.
The integral is evaluated over the tabulated profile in t and continued in
the mass variable u with the constant-intensity late-time model (beam mode),
where the integrand has closed form.

A Monte Carlo score-variance estimator over sampled records provides an
independent oracle for the quadrature, and the time-stationary constants
give the exact sparse-beam limits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import intensity as it
from . import process as pr
from .deltakernel import DeltaParams
from .errors import ModeError, ToleranceError
from .quadrature import geometric_edges, integrate_panels, uniform_edges
from .scenario import StateFamily, log_family_Fn


@dataclass(frozen=True)
class FisherReport:
    """Information budget of the n-detection arrival model."""

    n: int
    value: float            # I_n, units 1/pbar^2
    detection_part: float
    noevent_part: float
    p_tot: float
    conditional: float      # I_n^(c), information given >= n detections


@dataclass(frozen=True)
class StationaryConstants:
    n: int
    value: float


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _hn_vec(family: StateFamily, n: int, u):
    """H_n = F_{n+1}/F_n as an array, 0 where F_n vanishes (weight is 0 there)."""
    u = np.asarray(u, dtype=float)
    if family.kind == "coherent":
        return np.ones_like(u)
    if family.kind == "quasifree":
        return (n + 1.0) / (1.0 + u)
    big_n = family.param
    if n >= big_n:
        return np.zeros_like(u)
    with np.errstate(divide="ignore"):
        return np.where(u < big_n, (big_n - n) / np.where(u < big_n, big_n - u, 1.0), 0.0)


def _log_weight(family: StateFamily, n: int, u):
    """log of F_n(u) u^(n-1) / (n-1)!, elementwise; -inf where it vanishes."""
    u = np.asarray(u, dtype=float)
    logf = np.atleast_1d(log_family_Fn(family, n, u))
    if n == 1:
        pw = np.zeros_like(np.atleast_1d(u), dtype=float)
    else:
        with np.errstate(divide="ignore"):
            pw = (n - 1) * np.log(np.atleast_1d(u))
    return logf + pw - gammaln(n)


def i_infinity(p0: float, dp: DeltaParams) -> float:
    """Squared late-time log-derivative of the beam intensity.

    a^2 m^2 / (p0^2 (p0 + a m / 2)^2); the per-detection information scale
    of the sparse beam.
    """
    return dp.a ** 2 * dp.m ** 2 / (p0 ** 2 * (p0 + dp.alpha) ** 2)


# ---------------------------------------------------------------------------
# stationary constants and sparse limits
# ---------------------------------------------------------------------------

def stationary_constant(n: int, family: StateFamily, check_tol: float = 1e-8) -> StationaryConstants:
    """Quadrature of F_n(u) u^(n-1) [n - u H_n(u)]^2 / (n-1)! over all mass.

    For the coherent and quasi-free families the closed forms n and
    n/(n+2) are asserted against the quadrature at ``check_tol``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")

    def integrand(u):
        with np.errstate(over="ignore"):
            w = np.exp(_log_weight(family, n, u))
        return w * (n - u * _hn_vec(family, n, u)) ** 2

    if family.kind == "fock":
        big_n = family.param
        if n > big_n:
            return StationaryConstants(n, 0.0)
        if n == big_n - 1:
            raise ToleranceError(
                "stationary constant diverges for the fixed-number family at n = N-1 "
                "(non-integrable endpoint)")
        val = float(integrate_panels(integrand, uniform_edges(0.0, big_n, 384), 24))
        return StationaryConstants(n, val)

    u_head = n + 60.0 + 14.0 * math.sqrt(n)
    if family.kind == "coherent":
        val = float(integrate_panels(integrand, uniform_edges(0.0, u_head, 192), 24))
        closed = float(n)
    else:
        u_big = 1e10
        edges = np.concatenate([uniform_edges(0.0, u_head, 192),
                                geometric_edges(u_head, u_big, 16)[1:]])
        val = float(integrate_panels(integrand, edges, 24)) + n / u_big
        closed = n / (n + 2.0)
    if abs(val - closed) > check_tol * max(1.0, closed):
        raise ToleranceError(
            f"stationary-constant quadrature {val!r} disagrees with the closed form "
            f"{closed!r} beyond {check_tol:g}", estimate=val)
    return StationaryConstants(n, val)


def sparse_limit_I(n: int, family: StateFamily, p0: float, dp: DeltaParams) -> float:
    """Vanishing-density limit of the beam information: C_n * I_inf(p0)."""
    if family.kind == "coherent":
        c_n = float(n)
    elif family.kind == "quasifree":
        c_n = n / (n + 2.0)
    else:
        raise ModeError("sparse-beam limits exist for the coherent and quasi-free "
                        "families only")
    return c_n * i_infinity(p0, dp)


# ---------------------------------------------------------------------------
# the quadrature formula
# ---------------------------------------------------------------------------

def _tail_S(n, family, u, tail_state):
    """Closed-form S_n in the mass variable under the late-time model."""
    u_end, w_inf, wd_inf, dom_end, domt_end = tail_state
    dt_model = (u - u_end) / w_inf
    dom = dom_end + wd_inf * dt_model
    domt = domt_end + (wd_inf * wd_inf / w_inf) * dt_model
    phi_inf = wd_inf / w_inf
    ratio = dom / u
    ratio_t = domt / u
    hn = _hn_vec(family, n, u)
    return ((n - 1.0 - u * hn) * ratio + phi_inf) ** 2 \
        + (n - 1.0) * np.maximum(ratio_t - ratio * ratio, 0.0)


def fisher_info(n: int, family: StateFamily, profile: it.IntensityProfile,
                rtol: float = 1e-3, atol: float = 1e-9) -> FisherReport:
    """Information carried by n ordered arrival times (plus the NO outcome).

    The detection part integrates the tabulated profile in t and, for the
    beam, continues in the mass variable with the constant-intensity tail
    model.  The NO-event part uses the closed-form derivative of the total
    detection probability.  A grid-thinning check guards the tabulated
    integral; failure raises :class:`ToleranceError` with the estimate.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not profile.has_derivative:
        raise ModeError("profile was built without momentum derivatives; "
                        "rebuild with derivative=True")
    t = profile.t
    u = profile.Omega
    om = profile.omega
    dom = profile.domega
    interior = om > 0.0
    pos = np.flatnonzero(interior)
    if pos.size and np.any(~interior[pos[0]:pos[-1] + 1]):
        warnings.warn("intensity touches 0 in the interior; the mass substitution "
                      "is unreliable there")
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(interior, dom / np.where(interior, om, 1.0), 0.0)
        upos = u > 0.0
        ratio = np.where(upos, profile.dOmega / np.where(upos, u, 1.0), 0.0)
        ratio_t = np.where(upos, profile.dOmega_tilde / np.where(upos, u, 1.0), 0.0)
    hn = _hn_vec(family, n, u)
    s_vals = ((n - 1.0 - u * hn) * ratio + phi) ** 2 \
        + (n - 1.0) * np.maximum(ratio_t - ratio * ratio, 0.0)
    with np.errstate(over="ignore"):
        integrand = np.exp(_log_weight(family, n, u)) * om * s_vals
    bulk = float(np.trapezoid(integrand, t))
    bulk_coarse = float(np.trapezoid(integrand[::2], t[::2]))

    tail_val = 0.0
    if profile.mode == "beam":
        bt = profile.beam_tail
        tail_state = (u[-1], bt.omega_inf, bt.domega_dp0_inf,
                      profile.dOmega[-1], profile.dOmega_tilde[-1])

        def tail_integrand(uu):
            with np.errstate(over="ignore"):
                w = np.exp(_log_weight(family, n, uu))
            return w * _tail_S(n, family, uu, tail_state)

        u_end = u[-1]
        u_head = max(u_end * (1.0 + 1e-12), n + 60.0 + 14.0 * math.sqrt(n), u_end + 60.0)
        if family.kind == "fock":
            u_head = min(u_head, family.param)
            if u_head > u_end:
                tail_val = float(integrate_panels(tail_integrand,
                                                  uniform_edges(u_end, u_head, 256), 24))
        elif family.kind == "coherent":
            tail_val = float(integrate_panels(tail_integrand,
                                              uniform_edges(u_end, u_head, 256), 24))
        else:
            u_big = max(1e9, 1e4 * u_head)
            edges = np.concatenate([uniform_edges(u_end, u_head, 192),
                                    geometric_edges(u_head, u_big, 16)[1:]])
            phi_inf = profile.beam_tail.domega_dp0_inf / profile.beam_tail.omega_inf
            tail_val = float(integrate_panels(tail_integrand, edges, 24)) \
                + n * phi_inf ** 2 / u_big

    detection = bulk + tail_val
    # thinning check on the tabulated part only (the tail is panel-resolved)
    if abs(bulk - bulk_coarse) > rtol * abs(detection) + atol:
        raise ToleranceError(
            f"profile grid too coarse for the information integral at n={n} "
            f"(thinning moved it by {abs(bulk - bulk_coarse):.3e})",
            estimate=detection, achieved=abs(bulk - bulk_coarse))

    p_tot = pr.total_prob(n, family, profile)
    mass = pr.noevent_mass(n, family, profile) if profile.mode != "beam" else 0.0
    if mass > 0.0:
        dp_tot = pr.total_prob_dp(n, family, profile)
        noevent = dp_tot * dp_tot / mass
    else:
        noevent = 0.0
    value = detection + noevent
    if mass > 0.0 and p_tot > 0.0:
        dp_tot = pr.total_prob_dp(n, family, profile)
        conditional = (value - dp_tot * dp_tot / (p_tot * mass)) / p_tot
    else:
        conditional = value if p_tot > 0.0 else math.nan
    return FisherReport(n=n, value=value, detection_part=detection,
                        noevent_part=noevent, p_tot=p_tot, conditional=conditional)


def fisher_conditional(report: FisherReport) -> float:
    """Information of the model conditioned on reaching n detections."""
    if report.p_tot <= 0.0:
        raise ValueError("conditional information undefined at p_tot = 0")
    return report.conditional


# ---------------------------------------------------------------------------
# Monte Carlo oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McScore:
    variance: float
    std_error: float      # jackknife standard error of the variance
    mean: float
    mean_se: float
    samples: int
    resampled: int        # records with degenerate likelihood, redrawn


def _loglik_vector(times, n_det, n, family, profile):
    """Vectorised log-likelihood of sampled records under ``profile``."""
    count = times.shape[0]
    out = np.empty(count)
    full = n_det == n
    if np.any(full):
        tt = times[full]
        om = profile.omega_at(tt.ravel()).reshape(tt.shape)
        lw = np.sum(np.log(np.maximum(om, 1e-300)), axis=1)
        u_last = np.atleast_1d(profile.Omega_at(tt[:, -1]))
        out[full] = lw + np.atleast_1d(log_family_Fn(family, n, u_last))
    if np.any(~full):
        mass = pr.noevent_mass(n, family, profile)
        out[~full] = math.log(mass) if mass > 0.0 else -np.inf
    return out


def mc_score_variance(n: int, family: StateFamily, profile: it.IntensityProfile,
                      samples: int, seed: int, fd_step: float = 1e-3,
                      profile_builder=None) -> McScore:
    """Sample variance of the finite-difference score at the true momentum.

    Draws records at p0, evaluates the score as a central difference of the
    log-likelihood over profiles rebuilt at p0 +- fd_step (the NO branch
    contributes d log(1 - p_tot)), and reports the variance with its
    jackknife standard error.  ``profile_builder`` overrides how the shifted
    profiles are produced (synthetic models in tests).
    """
    if samples < 10_000:
        raise ValueError("use at least 1e4 samples for a stable variance")
    scn = profile.scn
    if profile_builder is None:
        t_max = float(profile.t[-1])
        dt = float(profile.t[-1] - profile.t[-2])

        def profile_builder(p0):
            return it.build_profile(scn.at_p0(p0), t_max=t_max, dt=dt)

    prof_plus = profile_builder(scn.p0 + fd_step)
    prof_minus = profile_builder(scn.p0 - fd_step)
    times, n_det = pr.sample_times_matrix(n, family, profile, samples, seed)
    ll_p = _loglik_vector(times, n_det, n, family, prof_plus)
    ll_m = _loglik_vector(times, n_det, n, family, prof_minus)
    score = (ll_p - ll_m) / (2.0 * fd_step)
    bad = ~np.isfinite(score)
    resampled = int(bad.sum())
    if resampled:
        # degenerate likelihood at the shifted momentum: redraw those records
        times2, n_det2 = pr.sample_times_matrix(n, family, profile, resampled,
                                                seed, stream_index=1)
        ll_p2 = _loglik_vector(times2, n_det2, n, family, prof_plus)
        ll_m2 = _loglik_vector(times2, n_det2, n, family, prof_minus)
        score[bad] = (ll_p2 - ll_m2) / (2.0 * fd_step)
        warnings.warn(f"{resampled} records had degenerate shifted likelihoods and "
                      "were redrawn")
    var = float(np.var(score, ddof=1))
    se = _jackknife_se_of_variance(score)
    mean = float(np.mean(score))
    mean_se = float(np.std(score, ddof=1) / math.sqrt(samples))
    return McScore(variance=var, std_error=se, mean=mean, mean_se=mean_se,
                   samples=samples, resampled=resampled)


def _jackknife_se_of_variance(x):
    """Delete-one jackknife standard error of the sample variance."""
    n = x.size
    s1 = np.sum(x)
    s2 = np.sum(x * x)
    mu_i = (s1 - x) / (n - 1)
    var_i = (s2 - x * x - (n - 1) * mu_i * mu_i) / (n - 2)
    return float(math.sqrt((n - 1) / n * np.sum((var_i - np.mean(var_i)) ** 2)))


# ---------------------------------------------------------------------------
# maximum-likelihood study (Cramer-Rao sanity)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MleStudy:
    n: int
    datasets: int
    records_per_dataset: int
    variance: float        # sample variance of the per-dataset MLE
    variance_se: float     # moment-based standard error of that variance
    crb: float             # one-parameter bound 1/(records * I_n)
    mean: float


def mle_variance_study(n: int, family: StateFamily, profile: it.IntensityProfile,
                       datasets: int, records_per_dataset: int, seed: int,
                       bracket: float = 0.5, grid_points: int = 41,
                       chunk: int = 2500) -> MleStudy:
    """Maximum-likelihood momentum estimates over many synthetic datasets.

    Each dataset holds ``records_per_dataset`` independent n-arrival
    records; the total log-likelihood is maximised over the bracket
    p0 +- ``bracket`` on a fixed momentum grid (vectorised across datasets)
    with a parabolic refinement of the winning node, which resolves the
    optimum far below the sampling spread.  Returns the estimator variance
    next to the one-parameter information bound.
    """
    if profile.mode != "beam":
        raise ModeError("the estimator study is implemented for beam profiles")
    scn = profile.scn
    t_max = float(profile.t[-1])
    dt = float(profile.t[-1] - profile.t[-2])
    p_grid = np.linspace(scn.p0 - bracket, scn.p0 + bracket, grid_points)
    profiles = [it.build_profile(scn.at_p0(p), t_max=t_max, dt=dt) for p in p_grid]
    loglik = np.zeros((datasets, grid_points))
    for start in range(0, datasets, chunk):
        block = min(chunk, datasets - start)
        times, n_det = pr.sample_times_matrix(
            n, family, profile, block * records_per_dataset, seed,
            stream_index=2 + start)
        if np.any(n_det < n):
            raise ModeError("beam records must always reach n detections")
        flat = times.reshape(-1)
        last = times[:, -1]
        for j, prof_j in enumerate(profiles):
            lw = np.log(prof_j.omega_at(flat)).reshape(times.shape).sum(axis=1)
            lf = np.atleast_1d(log_family_Fn(family, n, prof_j.Omega_at(last)))
            per_record = lw + lf
            loglik[start:start + block, j] += per_record.reshape(block, -1).sum(axis=1)
    best = np.argmax(loglik, axis=1)
    inner = np.clip(best, 1, grid_points - 2)
    lm = loglik[np.arange(datasets), inner - 1]
    l0 = loglik[np.arange(datasets), inner]
    lp = loglik[np.arange(datasets), inner + 1]
    denom = lm - 2.0 * l0 + lp
    shift = np.where(np.abs(denom) > 0, 0.5 * (lm - lp) / np.where(denom != 0, denom, 1.0), 0.0)
    step = p_grid[1] - p_grid[0]
    estimates = p_grid[inner] + np.clip(shift, -1.0, 1.0) * step
    estimates = np.where(best == 0, p_grid[0], estimates)
    estimates = np.where(best == grid_points - 1, p_grid[-1], estimates)
    var = float(np.var(estimates, ddof=1))
    centred = estimates - estimates.mean()
    m4 = float(np.mean(centred ** 4))
    var_se = math.sqrt(max(m4 - (datasets - 3) / (datasets - 1) * var * var, 0.0) / datasets)
    info = fisher_info(n, family, profile).value
    crb = 1.0 / (records_per_dataset * info)
    return MleStudy(n=n, datasets=datasets, records_per_dataset=records_per_dataset,
                    variance=var, variance_se=var_se, crb=crb,
                    mean=float(estimates.mean()))


# ---------------------------------------------------------------------------
# density sweep (beam)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepTable:
    n_values: tuple
    r0_values: tuple
    family_kind: str
    info: np.ndarray  # shape (len(n_values), len(r0_values))


def density_sweep(n_list, r0_list, family: StateFamily, p0: float,
                  dp: DeltaParams, t_max: float | None = None,
                  dt: float | None = None) -> SweepTable:
    """Beam information on an (n, r0) grid; r0 = 0 slots take the sparse limit."""
    from .scenario import Scenario

    n_values = tuple(int(v) for v in n_list)
    r0_values = tuple(float(v) for v in r0_list)
    out = np.empty((len(n_values), len(r0_values)))
    for j, r0 in enumerate(r0_values):
        if r0 == 0.0:
            for i, n in enumerate(n_values):
                out[i, j] = sparse_limit_I(n, family, p0, dp)
            continue
        scn = Scenario(m=dp.m, a=dp.a, eps=0.0, p0=p0, x0=-20.0,
                       navg=math.inf, r0=r0)
        prof = it.build_profile(scn, t_max=t_max, dt=dt)
        for i, n in enumerate(n_values):
            out[i, j] = fisher_info(n, family, prof).value
    return SweepTable(n_values, r0_values, family.kind, out)
