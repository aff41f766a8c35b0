"""Field containers and the Fourier/local operators of both solver spaces.

A VectorField samples a complex 2-vector on the periodic pixel grid. The
projection gamma1 (zero-mean curl-free part) acts mode-wise in Fourier
space with multiplier k (x) k / |k|^2 on integer wave vectors
m in {-n/2, ..., n/2 - 1}; the zero mode is dropped and Nyquist rows use
the same formula. An AugmentedField is a (Q, S, T) triple of
VectorFields whose S and T slots vanish off the inclusion; the local
operators couple the three slots through a complex parameter triple p
with p.p = 1 and are inverted pixel-wise in closed form.

All arithmetic is complex double precision. Reductions (means, norms)
run row-wise with a pairwise sum and combine rows with an exactly
rounded sum, so results are deterministic for a fixed grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateParamError, SupportError
from .geometry import PhaseMap
from .transform import SubstitutionParams

# Test hook: scales the nonzero-mode multiplier of gamma1. Leave at 1.0.
_gamma1_scale = 1.0


def _compensated_total(values: np.ndarray) -> float:
    """Deterministic total of a real array: pairwise rows, exact combine."""
    m = values.reshape(-1, values.shape[-1]) if values.ndim > 1 else values.reshape(1, -1)
    rows = np.sum(m, axis=-1)
    if not np.all(np.isfinite(rows)):
        return float(np.sum(rows))  # propagate inf/nan instead of fsum overflow
    return math.fsum(rows.tolist())


def _compensated_ctotal(values: np.ndarray) -> complex:
    if np.iscomplexobj(values):
        return complex(
            _compensated_total(values.real), _compensated_total(values.imag)
        )
    return complex(_compensated_total(values), 0.0)


def _mean_vec(data: np.ndarray) -> np.ndarray:
    """Compensated per-component mean of a (2, ny, nx) array."""
    npix = data.shape[-1] * data.shape[-2]
    return np.array(
        [_compensated_ctotal(data[0]) / npix, _compensated_ctotal(data[1]) / npix]
    )


@dataclass
class VectorField:
    """Complex 2-vector samples on an ny-by-nx periodic grid.

    ``data[c, j, i]`` is component c (0 = x, 1 = y) at pixel (i, j).
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 3 or self.data.shape[0] != 2:
            raise ValueError(f"expected shape (2, ny, nx), got {self.data.shape}")

    @classmethod
    def zeros(cls, ny: int, nx: int) -> "VectorField":
        return cls(np.zeros((2, ny, nx), dtype=np.complex128))

    @classmethod
    def constant(cls, vec, ny: int, nx: int) -> "VectorField":
        v = np.asarray(vec, dtype=np.complex128).reshape(2)
        data = np.empty((2, ny, nx), dtype=np.complex128)
        data[0] = v[0]
        data[1] = v[1]
        return cls(data)

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]

    def mean(self) -> np.ndarray:
        """Pixel mean, a complex 2-vector."""
        return _mean_vec(self.data)

    def copy(self) -> "VectorField":
        return VectorField(self.data.copy())


def inner(f: VectorField, g: VectorField) -> complex:
    """Mean over pixels of conj(f) . g."""
    npix = f.data.shape[-1] * f.data.shape[-2]
    return _compensated_ctotal(np.conj(f.data) * g.data) / npix


def norm(f: VectorField) -> float:
    """Norm induced by :func:`inner`."""
    npix = f.data.shape[-1] * f.data.shape[-2]
    total = _compensated_total(np.abs(f.data) ** 2)
    return math.sqrt(total / npix)


@lru_cache(maxsize=8)
def _wavevectors(ny: int, nx: int):
    kx = np.fft.fftfreq(nx, d=1.0 / nx)[None, :]
    ky = np.fft.fftfreq(ny, d=1.0 / ny)[:, None]
    k2 = kx * kx + ky * ky
    inv_k2 = np.zeros_like(k2)
    nz = k2 != 0
    inv_k2[nz] = 1.0 / k2[nz]
    return kx, ky, inv_k2


def _gamma1_arr(data: np.ndarray) -> np.ndarray:
    ny, nx = data.shape[-2], data.shape[-1]
    kx, ky, inv_k2 = _wavevectors(ny, nx)
    fh = np.fft.fft2(data, axes=(-2, -1))
    dot = (kx * fh[0] + ky * fh[1]) * (inv_k2 * _gamma1_scale)
    out = np.empty_like(fh)
    out[0] = kx * dot
    out[1] = ky * dot
    return np.fft.ifft2(out, axes=(-2, -1))


def gamma1(f: VectorField) -> VectorField:
    """Projection onto zero-mean curl-free fields (Fourier multiplier)."""
    return VectorField(_gamma1_arr(f.data))


def gamma0(f: VectorField) -> np.ndarray:
    """Projection onto constants: the compensated pixel mean."""
    return f.mean()


@dataclass
class AugmentedField:
    """Triple (Q, S, T) of vector fields on one grid.

    Q lives on the whole cell; S and T must vanish identically on
    phase-2 pixels of the map they are used with. Operators enforce the
    support by masking after every application.
    """

    Q: VectorField
    S: VectorField
    T: VectorField

    def __post_init__(self):
        shape = self.Q.grid_shape
        if self.S.grid_shape != shape or self.T.grid_shape != shape:
            raise ValueError("Q, S, T must share one grid")

    @classmethod
    def from_mean(cls, vec, ny: int, nx: int) -> "AugmentedField":
        """(e0, 0, 0): the initial iterate of the substituted schemes."""
        return cls(
            VectorField.constant(vec, ny, nx),
            VectorField.zeros(ny, nx),
            VectorField.zeros(ny, nx),
        )

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.Q.grid_shape

    def copy(self) -> "AugmentedField":
        return AugmentedField(self.Q.copy(), self.S.copy(), self.T.copy())


def _check_support(field: AugmentedField, pmap: PhaseMap):
    outside = ~pmap.chi
    if np.any(field.S.data[:, outside]) or np.any(field.T.data[:, outside]):
        raise SupportError("S/T slots carry data on phase-2 pixels")


def inner_aug(f: AugmentedField, g: AugmentedField, pmap: PhaseMap) -> complex:
    """Mean of [conj(S).S' + conj(T).T'] chi + conj(Q).Q'."""
    chi = pmap.chi
    npix = chi.size
    total = _compensated_ctotal(np.conj(f.Q.data) * g.Q.data)
    total += _compensated_ctotal(
        (np.conj(f.S.data) * g.S.data + np.conj(f.T.data) * g.T.data) * chi
    )
    return total / npix


def norm_aug(f: AugmentedField, pmap: PhaseMap) -> float:
    chi = pmap.chi
    npix = chi.size
    total = _compensated_total(np.abs(f.Q.data) ** 2)
    total += _compensated_total(
        (np.abs(f.S.data) ** 2 + np.abs(f.T.data) ** 2) * chi
    )
    return math.sqrt(total / npix)


def gamma0_aug(f: AugmentedField) -> np.ndarray:
    """Projection onto constant Q-slot fields: the mean of Q."""
    return f.Q.mean()


def gamma1_aug(f: AugmentedField, pmap: PhaseMap) -> AugmentedField:
    """Projection onto gradient-type augmented fields: (gamma1 Q, S, 0)."""
    _check_support(f, pmap)
    ny, nx = f.grid_shape
    return AugmentedField(gamma1(f.Q), f.S.copy(), VectorField.zeros(ny, nx))


def _chi_aug_arrays(
    q: np.ndarray,
    s: np.ndarray,
    t_arr: np.ndarray,
    params: SubstitutionParams,
    chi: np.ndarray,
):
    u = params.p1 * q + params.p2 * s + params.p3 * t_arr
    u = np.where(chi, u, 0.0)
    return params.p1 * u, params.p2 * u, params.p3 * u


def apply_chi_aug(
    f: AugmentedField, params: SubstitutionParams, pmap: PhaseMap
) -> AugmentedField:
    """Rank-one slot mixer (p (x) p) restricted to phase-1 pixels.

    Idempotent because p.p = 1; not self-adjoint for complex p.
    """
    qo, so, to = _chi_aug_arrays(
        f.Q.data, f.S.data, f.T.data, params, pmap.chi
    )
    return AugmentedField(VectorField(qo), VectorField(so), VectorField(to))


def apply_local_A(
    f: AugmentedField, t: complex, params: SubstitutionParams, pmap: PhaseMap
) -> AugmentedField:
    """The local constitutive operator A = (t - 1) chi'' + I."""
    chi = pmap.chi
    qo, so, to = _chi_aug_arrays(f.Q.data, f.S.data, f.T.data, params, chi)
    tm1 = complex(t) - 1.0
    q = tm1 * qo + f.Q.data
    s = np.where(chi, tm1 * so + f.S.data, 0.0)
    t_out = np.where(chi, tm1 * to + f.T.data, 0.0)
    return AugmentedField(VectorField(q), VectorField(s), VectorField(t_out))


def invert_shifted_A(
    f: AugmentedField,
    t: complex,
    sigma0: complex,
    params: SubstitutionParams,
    pmap: PhaseMap,
) -> AugmentedField:
    """Pixel-local closed-form inverse of (A + sigma0 I).

    Uses the rank-one structure: on phase-2 pixels divides by
    (1 + sigma0); on phase-1 pixels additionally removes the p-direction
    excess via the factor (t - 1)/(t + sigma0).
    """
    tt, s0 = complex(t), complex(sigma0)
    if 1.0 + s0 == 0:
        raise DegenerateParamError("shift sigma0 = -1 makes A + sigma0 I singular")
    if tt + s0 == 0:
        raise DegenerateParamError("shift sigma0 = -t makes A + sigma0 I singular")
    chi = pmap.chi
    qo, so, to = _chi_aug_arrays(f.Q.data, f.S.data, f.T.data, params, chi)
    c = (tt - 1.0) / (tt + s0)
    scale = 1.0 / (1.0 + s0)
    q = scale * (f.Q.data - c * qo)
    s = np.where(chi, scale * (f.S.data - c * so), 0.0)
    t_out = np.where(chi, scale * (f.T.data - c * to), 0.0)
    return AugmentedField(VectorField(q), VectorField(s), VectorField(t_out))
