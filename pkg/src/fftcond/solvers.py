"""Fixed-point solvers for the periodic two-phase conductivity problem.

Four schemes share one contract: drive the equilibrium residual of the
flux to zero and report the effective conductivity along the applied
field. ``basic`` and ``em`` iterate on the physical electric field (the
latter through the polarization-like variable w = (sigma + sigma0) e
with reference sigma0 = sqrt(sigma1)); ``basic_sub`` and ``em_sub`` run
the same two iterations in the augmented (Q, S, T) space, where the
inclusion conductivity is replaced by the mapped parameter
t = map_t(sigma1) whose disk coordinate is closer to the origin whenever
the singularities of the effective conductivity are confined to the
assumed interval. All four converge to the same discrete solution.

Stopping: equilibrium residual <= tol and a relative change in the
effective-conductivity estimate <= tol, with a divergence guard at 1e6
times the initial residual. Runs are deterministic for a fixed
configuration.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BranchCutError, ContractError, DegenerateParamError, IntervalError
from .geometry import PhaseMap
from .spectral_ops import (
    AugmentedField,
    VectorField,
    _compensated_total,
    _gamma1_arr,
    _mean_vec,
    apply_local_A,
    gamma0_aug,
    gamma1,
    norm,
)
from .transform import (
    SchemeKind,
    SpectralInterval,
    SubstitutionParams,
    map_t,
    solve_p,
)

DIVERGENCE_FACTOR = 1e6
_TINY = 1e-300


class TerminationStatus(Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int
    sigma_star: complex
    residual: float


class ConvergenceHistory:
    """Per-iteration record of the effective-conductivity estimate and residual."""

    def __init__(self):
        self.records: list[HistoryRecord] = []

    def append(self, iteration: int, sigma_star: complex, residual: float):
        if not math.isfinite(residual):
            raise ContractError(f"residual must be finite, got {residual}")
        if self.records and iteration <= self.records[-1].iteration:
            raise ContractError("iteration indices must increase strictly")
        self.records.append(HistoryRecord(iteration, sigma_star, residual))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def residuals(self) -> list[float]:
        return [r.residual for r in self.records]

    def sigma_stars(self) -> list[complex]:
        return [r.sigma_star for r in self.records]


@dataclass
class SolverConfig:
    """Run parameters shared by all schemes.

    ``interval`` is required for the substituted schemes; ``e0`` is the
    applied (average) field direction; ``sigma0_override`` replaces the
    scheme's default reference conductivity.
    """

    scheme: SchemeKind
    sigma1: complex
    interval: SpectralInterval | None = None
    e0: tuple[complex, complex] = (1.0, 0.0)
    tol: float = 1e-8
    max_iters: int = 1000
    sigma0_override: complex | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.scheme.substituted and self.interval is None:
            raise IntervalError(
                f"scheme {self.scheme.value} needs a spectral interval"
            )
        if abs(complex(self.e0[0])) == 0 and abs(complex(self.e0[1])) == 0:
            raise ContractError("applied field e0 must be nonzero")

    def e0_vector(self) -> np.ndarray:
        return np.array(
            [complex(self.e0[0]), complex(self.e0[1])], dtype=np.complex128
        )


@dataclass
class SolveResult:
    sigma_star: complex
    E_field: VectorField
    J_field: VectorField
    history: ConvergenceHistory
    status: TerminationStatus
    degenerate_flux: bool = False
    aug_field: AugmentedField | None = None  # final iterate of substituted runs

    @property
    def iterations(self) -> int:
        return len(self.history)

    @property
    def converged(self) -> bool:
        return self.status is TerminationStatus.CONVERGED


def extract_sigma_star(e: VectorField, pmap: PhaseMap, sigma1: complex, e0=(1.0, 0.0)) -> complex:
    """Effective conductivity along e0 from an electric field iterate."""
    e0v = np.array([complex(e0[0]), complex(e0[1])])
    e0sq = np.vdot(e0v, e0v).real
    if e0sq == 0:
        raise ContractError("applied field e0 must be nonzero")
    sigma = np.where(pmap.chi, complex(sigma1), 1.0 + 0j)
    jmean = _mean_vec(sigma * e.data)
    return complex(np.vdot(e0v, jmean)) / e0sq


def extract_sigma_star_aug(
    f: AugmentedField,
    t: complex,
    params: SubstitutionParams,
    pmap: PhaseMap,
    e0=(1.0, 0.0),
) -> complex:
    """Effective conductivity from an augmented iterate: mean flux Q-slot."""
    e0v = np.array([complex(e0[0]), complex(e0[1])])
    e0sq = np.vdot(e0v, e0v).real
    if e0sq == 0:
        raise ContractError("applied field e0 must be nonzero")
    flux = apply_local_A(f, t, params, pmap)
    return complex(np.vdot(e0v, flux.Q.mean())) / e0sq


def recover_physical_fields(
    f: AugmentedField, t: complex, params: SubstitutionParams, pmap: PhaseMap
) -> tuple[VectorField, VectorField]:
    """Electric and current fields encoded by a converged augmented solution.

    E is the Q-slot of the field; J is the Q-slot of the local flux A F.
    No division by the inclusion conductivity occurs, so an insulating
    inclusion (sigma1 = 0) is handled without special casing.
    """
    flux = apply_local_A(f, t, params, pmap)
    return VectorField(f.Q.data.copy()), flux.Q


def equilibrium_residual(j: VectorField) -> float:
    """Norm of the curl-free part of the flux over the norm of its mean."""
    den = float(np.linalg.norm(_mean_vec(j.data)))
    if den < _TINY:
        raise ContractError("mean flux vanishes; residual is undefined")
    return norm(gamma1(j)) / den


def equilibrium_residual_aug(jaug: AugmentedField, pmap: PhaseMap) -> float:
    """Augmented-space analogue: gradient-type part over constant part."""
    den = float(np.linalg.norm(gamma0_aug(jaug)))
    if den < _TINY:
        raise ContractError("mean flux vanishes; residual is undefined")
    npix = pmap.chi.size
    g = _gamma1_arr(jaug.Q.data)
    total = _compensated_total(np.abs(g) ** 2)
    total += _compensated_total(np.abs(jaug.S.data) ** 2 * pmap.chi)
    return math.sqrt(total / npix) / den


def estimate_rate(history: ConvergenceHistory, window: int) -> float:
    """Geometric-mean ratio of successive residuals over the final window."""
    if window < 1:
        raise ContractError(f"window must be >= 1, got {window}")
    if len(history) < window + 1:
        raise ContractError(
            f"need {window + 1} records for a window of {window}, got {len(history)}"
        )
    tail = history.residuals()[-(window + 1):]
    if any(r <= 0 for r in tail):
        raise ContractError("rate estimate needs strictly positive residuals")
    return (tail[-1] / tail[0]) ** (1.0 / window)


def _reference_h(cfg: SolverConfig, accelerated: bool) -> complex:
    sigma1 = complex(cfg.sigma1)
    if cfg.sigma0_override is not None:
        sigma0 = complex(cfg.sigma0_override)
    elif accelerated:
        if sigma1.imag == 0.0 and sigma1.real <= 0.0:
            raise BranchCutError(
                f"sigma1 = {sigma1} lies on the closed negative real axis; "
                "the square-root reference is undefined"
            )
        sigma0 = cmath.sqrt(sigma1)
    else:
        sigma0 = (sigma1 + 1.0) / 2.0
    if sigma0 == 0:
        raise DegenerateParamError("reference conductivity sigma0 vanishes")
    if accelerated and (sigma1 + sigma0 == 0 or 1.0 + sigma0 == 0):
        raise DegenerateParamError(
            f"sigma + sigma0 vanishes in one phase (sigma0 = {sigma0})"
        )
    return sigma0


class _Monitor:
    """Shared stopping logic: record, test convergence, guard divergence."""

    def __init__(self, cfg: SolverConfig):
        self.cfg = cfg
        self.history = ConvergenceHistory()
        self.status = TerminationStatus.MAX_ITERS
        self.degenerate_flux = False
        self._res0 = None
        self._prev_sstar = None

    def step(self, k: int, sstar: complex, res: float) -> bool:
        """Record one evaluation; True means stop iterating."""
        if not (math.isfinite(res) and cmath.isfinite(sstar)):
            # iterate blew past double range; report divergence, keep the
            # history free of non-finite records
            self.status = TerminationStatus.DIVERGED
            return True
        self.history.append(k, sstar, res)
        if self._res0 is None:
            self._res0 = res
        tol = self.cfg.tol
        settled = self._prev_sstar is None or abs(sstar - self._prev_sstar) <= tol * abs(sstar)
        if res <= tol and settled:
            self.status = TerminationStatus.CONVERGED
            return True
        if self._res0 > 0 and res > DIVERGENCE_FACTOR * self._res0:
            self.status = TerminationStatus.DIVERGED
            return True
        self._prev_sstar = sstar
        return False

    def flag_degenerate(self):
        self.degenerate_flux = True
        self.status = TerminationStatus.DIVERGED


def _solve_h(pmap: PhaseMap, cfg: SolverConfig, accelerated: bool) -> SolveResult:
    sigma1 = complex(cfg.sigma1)
    sigma0 = _reference_h(cfg, accelerated)
    chi = pmap.chi
    ny, nx = chi.shape
    npix = chi.size
    sigma = np.where(chi, sigma1, 1.0 + 0j)
    e0v = cfg.e0_vector()
    e0sq = np.vdot(e0v, e0v).real
    e0f = np.empty((2, ny, nx), dtype=np.complex128)
    e0f[0], e0f[1] = e0v[0], e0v[1]

    mon = _Monitor(cfg)
    if accelerated:
        w = (sigma + sigma0) * e0f
    else:
        e_raw = e0f.copy()
    e = j = g = None

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, cfg.max_iters + 1):
            if k > 1:
                if accelerated:
                    rw = (sigma - sigma0) * e_raw
                    w = 2.0 * sigma0 * e0f - 2.0 * _gamma1_arr(rw) + rw
                else:
                    e_raw = e - g / sigma0
            if accelerated:
                e_raw = w / (sigma + sigma0)
            delta = e0v - _mean_vec(e_raw)
            e = e_raw + delta[:, None, None]
            j = sigma * e
            jmean = _mean_vec(j)
            den = float(np.linalg.norm(jmean))
            sstar = complex(np.vdot(e0v, jmean)) / e0sq
            if den < _TINY and math.isfinite(den):
                mon.flag_degenerate()
                break
            g = _gamma1_arr(j)
            res = math.sqrt(_compensated_total(np.abs(g) ** 2) / npix) / den
            if mon.step(k, sstar, res):
                break

    sigma_star = mon.history.records[-1].sigma_star if len(mon.history) else sstar
    return SolveResult(
        sigma_star=sigma_star,
        E_field=VectorField(e),
        J_field=VectorField(j),
        history=mon.history,
        status=mon.status,
        degenerate_flux=mon.degenerate_flux,
    )


def _reference_aug(cfg: SolverConfig, t: complex, accelerated: bool) -> complex:
    if cfg.sigma0_override is not None:
        sigma0 = complex(cfg.sigma0_override)
    elif accelerated:
        if t.imag == 0.0 and t.real <= 0.0:
            raise BranchCutError(
                f"t = {t} lies on the closed negative real axis; sigma1 sits "
                "inside the assumed singular interval"
            )
        sigma0 = cmath.sqrt(t)
    else:
        if t == -1.0:
            raise DegenerateParamError("t = -1 makes the reference (t+1)/2 vanish")
        sigma0 = (t + 1.0) / 2.0
    if sigma0 == 0:
        raise DegenerateParamError("reference sigma0 vanishes")
    if accelerated and (1.0 + sigma0 == 0 or t + sigma0 == 0):
        raise DegenerateParamError(f"A + sigma0 I is singular for sigma0 = {sigma0}")
    return sigma0


def _apply_A_arrays(q, s, t_arr, t, params, chi):
    """A = (t - 1) chi'' + I on a raw (Q, S, T) array triple."""
    u = np.where(chi, params.p1 * q + params.p2 * s + params.p3 * t_arr, 0.0)
    tm1 = t - 1.0
    return (
        tm1 * params.p1 * u + q,
        np.where(chi, tm1 * params.p2 * u + s, 0.0),
        np.where(chi, tm1 * params.p3 * u + t_arr, 0.0),
    )


def _solve_aug(pmap: PhaseMap, cfg: SolverConfig, accelerated: bool) -> SolveResult:
    sigma1 = complex(cfg.sigma1)
    interval = cfg.interval
    t = map_t(sigma1, interval)
    params = solve_p(interval)
    sigma0 = _reference_aug(cfg, t, accelerated)
    chi = pmap.chi
    ny, nx = chi.shape
    npix = chi.size
    p1, p2, p3 = params.p1, params.p2, params.p3
    e0v = cfg.e0_vector()
    e0sq = np.vdot(e0v, e0v).real
    e0f = np.empty((2, ny, nx), dtype=np.complex128)
    e0f[0], e0f[1] = e0v[0], e0v[1]
    zeros = np.zeros((2, ny, nx), dtype=np.complex128)
    chi_f = chi.astype(np.float64)

    mon = _Monitor(cfg)
    fq_raw, fs_raw, ft_raw = e0f.copy(), zeros.copy(), zeros.copy()
    if accelerated:
        aq, as_, at = _apply_A_arrays(fq_raw, fs_raw, ft_raw, t, params, chi)
        wq, ws, wt = aq + sigma0 * fq_raw, as_ + sigma0 * fs_raw, at + sigma0 * ft_raw
        inv_scale = 1.0 / (1.0 + sigma0)
        inv_c = (t - 1.0) / (t + sigma0)
    fq = fs = ft = jq = js = g = None
    jq_raw = js_raw = jt_raw = None
    tm1p1 = (t - 1.0) * p1 * chi_f

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, cfg.max_iters + 1):
            if k > 1:
                if accelerated:
                    rq = jq_raw - sigma0 * fq_raw
                    rs = js_raw - sigma0 * fs_raw
                    rt = jt_raw - sigma0 * ft_raw
                    wq = 2.0 * sigma0 * e0f - 2.0 * _gamma1_arr(rq) + rq
                    ws = -rs
                    wt = rt
                else:
                    fq_raw = fq - g / sigma0
                    fs_raw = np.where(chi, fs - js / sigma0, 0.0)
            if accelerated:
                u = np.where(chi, p1 * wq + p2 * ws + p3 * wt, 0.0)
                fq_raw = inv_scale * (wq - inv_c * p1 * u)
                fs_raw = np.where(chi, inv_scale * (ws - inv_c * p2 * u), 0.0)
                ft_raw = np.where(chi, inv_scale * (wt - inv_c * p3 * u), 0.0)
            jq_raw, js_raw, jt_raw = _apply_A_arrays(fq_raw, fs_raw, ft_raw, t, params, chi)
            # Constant Q-slot correction pins the mean field at e0 for
            # reporting; the update path keeps the raw iterate so the map
            # stays exact.
            delta = e0v - _mean_vec(fq_raw)
            dfield = delta[:, None, None]
            fq, fs, ft = fq_raw + dfield, fs_raw, ft_raw
            jq = jq_raw + p1 * tm1p1 * dfield + dfield
            js = js_raw + p2 * tm1p1 * dfield
            jmean = _mean_vec(jq)
            den = float(np.linalg.norm(jmean))
            sstar = complex(np.vdot(e0v, jmean)) / e0sq
            if den < _TINY and math.isfinite(den):
                mon.flag_degenerate()
                break
            g = _gamma1_arr(jq)
            total = _compensated_total(np.abs(g) ** 2)
            total += _compensated_total(np.abs(js) ** 2 * chi)
            res = math.sqrt(total / npix) / den
            if mon.step(k, sstar, res):
                break

    sigma_star = mon.history.records[-1].sigma_star if len(mon.history) else sstar
    return SolveResult(
        sigma_star=sigma_star,
        E_field=VectorField(fq),
        J_field=VectorField(jq),
        history=mon.history,
        status=mon.status,
        degenerate_flux=mon.degenerate_flux,
        aug_field=AugmentedField(VectorField(fq), VectorField(fs), VectorField(ft)),
    )


def _check_scheme(cfg: SolverConfig, expected: SchemeKind):
    if cfg.scheme is not expected:
        raise ContractError(
            f"config carries scheme {cfg.scheme.value!r}, expected {expected.value!r}"
        )


def solve_basic(pmap: PhaseMap, cfg: SolverConfig) -> SolveResult:
    """Fixed-point iteration with reference sigma0 = (sigma1 + 1)/2."""
    _check_scheme(cfg, SchemeKind.BASIC)
    return _solve_h(pmap, cfg, accelerated=False)


def solve_em(pmap: PhaseMap, cfg: SolverConfig) -> SolveResult:
    """Accelerated iteration with reference sigma0 = sqrt(sigma1).

    Runs on w = (sigma + sigma0) e; the per-pixel contraction factor has
    the same magnitude in both phases, which is what buys the speedup.
    """
    _check_scheme(cfg, SchemeKind.EYRE_MILTON)
    return _solve_h(pmap, cfg, accelerated=True)


def solve_basic_sub(pmap: PhaseMap, cfg: SolverConfig) -> SolveResult:
    """Basic iteration in the augmented space with t = map_t(sigma1)."""
    _check_scheme(cfg, SchemeKind.BASIC_SUB)
    return _solve_aug(pmap, cfg, accelerated=False)


def solve_em_sub(pmap: PhaseMap, cfg: SolverConfig) -> SolveResult:
    """Accelerated iteration in the augmented space, reference sqrt(t)."""
    _check_scheme(cfg, SchemeKind.EYRE_MILTON_SUB)
    return _solve_aug(pmap, cfg, accelerated=True)


_DISPATCH = {
    SchemeKind.BASIC: solve_basic,
    SchemeKind.EYRE_MILTON: solve_em,
    SchemeKind.BASIC_SUB: solve_basic_sub,
    SchemeKind.EYRE_MILTON_SUB: solve_em_sub,
}


def solve(pmap: PhaseMap, cfg: SolverConfig) -> SolveResult:
    """Run the scheme selected by ``cfg.scheme``."""
    return _DISPATCH[cfg.scheme](pmap, cfg)
