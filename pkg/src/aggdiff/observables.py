"""Scalar observables of a field and time series of them.

Lebesgue norms are midpoint quadratures, the homogeneous Sobolev seminorm
H^m is evaluated spectrally as

    ||u||_{H^m}^2 = L^-dim * sum_j |k_j|^(2m) |u_hat_j|^2,

and W^{m,p} is the multiindex form sum_{|i|=m} ||d_i u||_p.  In 1D the two
Sobolev forms coincide; in 2D they are equivalent up to bounded multinomial
constants (the spectral form carries cross-derivative weights binom(m,i) >= 1,
so wmp/spectral lies in [1, sqrt(m+1)]).  The spectral form is the primary
definition; the multiindex form is retained and reported alongside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import FieldError
from .fields import Field, Grid, spectral_derivative

DEFAULT_M_MAX = 4


def mass(field: Field) -> float:
    """Total mass h^dim * sum(u); conserved by the flow."""
    return field.grid.cell_volume * float(field.values.sum())


def first_moment(field: Field) -> float:
    """Concentration functional integral |x| u(x) dx (midpoint quadrature)."""
    return field.grid.cell_volume * float((field.grid.radius * field.values).sum())


def lp_norm(field: Field, p: float) -> float:
    """Lebesgue norm ||u||_p for p in [1, inf]; p = inf is the discrete max."""
    if p < 1:
        raise FieldError(f"p must be >= 1, got {p}")
    a = np.abs(field.values)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float((field.grid.cell_volume * (a**p).sum()) ** (1.0 / p))


def _power_spectrum(field: Field) -> np.ndarray:
    what = np.fft.fftn(field.values)
    return (what.real**2 + what.imag**2).astype(np.float64)


def _hm_from_power(grid: Grid, power: np.ndarray, m: int) -> float:
    # factor h^(2 dim) from the transform convention divided by L^dim
    factor = grid.cell_volume**2 / grid.L**grid.dim
    if m == 0:
        return float(np.sqrt(factor * power.sum()))
    return float(np.sqrt(factor * (grid.k_squared**m * power).sum()))


def sobolev_seminorm(field: Field, m: int, m_max: int = DEFAULT_M_MAX) -> float:
    """Homogeneous Sobolev seminorm ||u||_{H^m}, spectral definition."""
    if m < 0:
        raise FieldError(f"Sobolev order m must be >= 0, got {m}")
    if m > m_max:
        raise FieldError(f"Sobolev order m = {m} exceeds m_max = {m_max}")
    return _hm_from_power(field.grid, _power_spectrum(field), m)


def sobolev_seminorms(field: Field, m_list) -> dict[int, float]:
    """All requested H^m seminorms from a single transform."""
    power = _power_spectrum(field)
    return {int(m): _hm_from_power(field.grid, power, int(m)) for m in m_list}


def multiindices(dim: int, m: int) -> list[tuple[int, ...]]:
    """All derivative multiindices of total order m, lexicographic."""
    if dim == 1:
        return [(m,)]
    return [(i, m - i) for i in range(m, -1, -1)]


def wmp_seminorm(
    field: Field, m: int, p: float, m_max: int = DEFAULT_M_MAX
) -> float:
    """Multiindex homogeneous seminorm sum_{|i|=m} ||d_i u||_p."""
    if m < 0:
        raise FieldError(f"order m must be >= 0, got {m}")
    if m > m_max:
        raise FieldError(f"order m = {m} exceeds m_max = {m_max}")
    if m == 0:
        return lp_norm(field, p)
    total = 0.0
    for mi in multiindices(field.grid.dim, m):
        total += lp_norm(spectral_derivative(field, mi, max_order=m_max), p)
    return total


@dataclass(frozen=True)
class ObservableRecord:
    """Snapshot of all configured observables at one time."""

    t: float
    mass: float
    first_moment: float
    lp: dict[float, float]
    hm: dict[int, float]
    wmp: dict[tuple[int, float], float] | None = None


def record_observables(field: Field, t: float, p_list, m_list) -> ObservableRecord:
    return ObservableRecord(
        t=float(t),
        mass=mass(field),
        first_moment=first_moment(field),
        lp={float(p): lp_norm(field, p) for p in p_list},
        hm=sobolev_seminorms(field, m_list),
    )


def column_label_p(p: float) -> str:
    if math.isinf(p):
        return "inf"
    if float(p).is_integer():
        return str(int(p))
    return repr(float(p))


@dataclass
class ObservableSeries:
    """Time-ordered observable records of one run."""

    records: list[ObservableRecord] = dataclass_field(default_factory=list)

    def append(self, record: ObservableRecord) -> None:
        if self.records and record.t < self.records[-1].t:
            raise FieldError("records must be appended in non-decreasing time order")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    @property
    def p_values(self) -> list[float]:
        return sorted(self.records[0].lp) if self.records else []

    @property
    def m_values(self) -> list[int]:
        return sorted(self.records[0].hm) if self.records else []

    def column_names(self) -> list[str]:
        names = ["t", "mass", "moment1"]
        names += [f"Lp_{column_label_p(p)}" for p in self.p_values]
        names += [f"Hm_{m}" for m in self.m_values]
        return names

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.times
        if name == "mass":
            return np.array([r.mass for r in self.records])
        if name == "moment1":
            return np.array([r.first_moment for r in self.records])
        if name.startswith("Lp_"):
            p = math.inf if name[3:] == "inf" else float(name[3:])
            return np.array([r.lp[p] for r in self.records])
        if name.startswith("Hm_"):
            m = int(name[3:])
            return np.array([r.hm[m] for r in self.records])
        raise KeyError(f"unknown observable column {name!r}")


def time_integral(series: ObservableSeries, name: str) -> float:
    """Trapezoid integral of one observable column over the recorded times."""
    if len(series) == 0:
        raise FieldError("cannot integrate an empty series")
    if len(series) == 1:
        return 0.0
    return float(np.trapezoid(series.column(name), series.times))


def length_scale(series: ObservableSeries, m: int, min_samples: int = 16) -> float:
    """Characteristic length <||u||_{H^m}> / <||u||_{H^(m+1)}> (time averages).

    The averages share the window [0, T], so the ratio of trapezoid
    integrals equals the ratio of averages.
    """
    if len(series) == 0:
        raise FieldError("cannot compute a length scale from an empty series")
    if len(series) < min_samples:
        raise FieldError(
            f"series has {len(series)} samples, need >= {min_samples}"
        )
    num = time_integral(series, f"Hm_{m}")
    den = time_integral(series, f"Hm_{m + 1}")
    if den == 0.0:
        raise FieldError(f"H^{m + 1} time integral vanishes")
    return num / den
