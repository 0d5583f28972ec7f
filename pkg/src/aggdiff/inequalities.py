"""Exponent algebra and numerical ratio checks for the Gagliardo-Nirenberg
and Hardy-Littlewood-Sobolev inequalities.

gn_solve computes the Lebesgue exponent r from

    N/r = beta - theta (m - N/p) + (1 - theta) N/q,

valid for integers m > beta >= 0 and beta/m <= theta < 1, excluding the
endpoint case beta = 0, r = q = inf with m - N/p a non-negative integer.
hls_solve computes q from 1/p + lambda/N = 1/q + 1 with p, q in (1, inf)
and 0 < lambda < N.

Constants are never asserted; the ratio helpers return the left-hand side
divided by the constant-free right-hand side, whose finiteness, homogeneity
invariance and dilation stability are the testable content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convolution import riesz_convolve
from .errors import AdmissibilityError, FieldError, ResolutionError
from .fields import Field
from .observables import lp_norm, wmp_seminorm

RELATION_TOL = 1e-12


def _inv(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


def _check_lebesgue(name: str, p: float, lower: float, open_lower: bool) -> float:
    p = float(p)
    if math.isnan(p) or (open_lower and p <= lower) or (not open_lower and p < lower):
        cmp = ">" if open_lower else ">="
        raise AdmissibilityError(f"{name} must be {cmp} {lower:g}, got {p}")
    return p


@dataclass(frozen=True)
class GNParams:
    """Admissible exponents of ||v||_{W^{beta,r}} <= C ||v||_{W^{m,p}}^theta ||v||_q^(1-theta)."""

    N: int
    m: int
    beta: int
    p: float
    q: float
    theta: float
    r: float

    def relation_residual(self) -> float:
        lhs = self.N * _inv(self.r)
        rhs = (
            self.beta
            - self.theta * (self.m - self.N * _inv(self.p))
            + (1.0 - self.theta) * self.N * _inv(self.q)
        )
        return abs(lhs - rhs)

    def __post_init__(self):
        if self.relation_residual() > RELATION_TOL:
            raise AdmissibilityError(
                f"exponent relation violated by {self.relation_residual():.3e}"
            )


def gn_solve(N: int, m: int, beta: int, p: float, q: float, theta: float) -> GNParams:
    """Solve the interpolation relation for r and validate admissibility."""
    if N < 1:
        raise AdmissibilityError(f"N must be a positive integer, got {N}")
    if not (isinstance(m, (int, np.integer)) and isinstance(beta, (int, np.integer))):
        raise AdmissibilityError("m and beta must be integers")
    if not m > beta >= 0:
        raise AdmissibilityError(f"need m > beta >= 0, got m={m}, beta={beta}")
    p = _check_lebesgue("p", p, 1.0, open_lower=False)
    q = _check_lebesgue("q", q, 1.0, open_lower=False)
    theta = float(theta)
    if not (beta / m <= theta < 1.0):
        raise AdmissibilityError(
            f"theta must lie in [beta/m, 1) = [{beta / m:g}, 1), got {theta}"
        )
    n_over_r = (
        beta - theta * (m - N * _inv(p)) + (1.0 - theta) * N * _inv(q)
    )
    if n_over_r < -RELATION_TOL:
        raise AdmissibilityError(
            f"relation gives N/r = {n_over_r:g} < 0: no admissible r"
        )
    r = math.inf if n_over_r <= RELATION_TOL else N / n_over_r
    if r < 1.0:
        raise AdmissibilityError(f"relation gives r = {r:g} < 1: inadmissible")
    if beta == 0 and math.isinf(r) and math.isinf(q):
        s = m - N * _inv(p)
        if s >= 0 and abs(s - round(s)) <= RELATION_TOL:
            raise AdmissibilityError(
                "excluded endpoint case: beta = 0, r = q = inf, "
                f"m - N/p = {s:g} is a non-negative integer"
            )
    return GNParams(N=int(N), m=int(m), beta=int(beta), p=p, q=q, theta=theta, r=r)


@dataclass(frozen=True)
class HLSParams:
    """Admissible exponents of || |x|^-lambda * v ||_q <= C ||v||_p."""

    N: int
    p: float
    q: float
    lam: float

    def relation_residual(self) -> float:
        return abs(_inv(self.p) + self.lam / self.N - _inv(self.q) - 1.0)

    def __post_init__(self):
        if self.relation_residual() > RELATION_TOL:
            raise AdmissibilityError(
                f"exponent relation violated by {self.relation_residual():.3e}"
            )


def hls_solve(N: int, p: float, lam: float) -> HLSParams:
    """Solve 1/p + lambda/N = 1/q + 1 for q and validate admissibility."""
    if N < 1:
        raise AdmissibilityError(f"N must be a positive integer, got {N}")
    p = float(p)
    if not (1.0 < p < math.inf):
        raise AdmissibilityError(f"p must lie in (1, inf), got {p}")
    lam = float(lam)
    if not (0.0 < lam < N):
        raise AdmissibilityError(f"lambda must lie in (0, N) = (0, {N}), got {lam}")
    inv_q = 1.0 / p + lam / N - 1.0
    if not (0.0 < inv_q < 1.0):
        raise AdmissibilityError(
            f"relation gives 1/q = {inv_q:g} outside (0, 1): q inadmissible"
        )
    return HLSParams(N=N, p=p, q=1.0 / inv_q, lam=lam)


def check_resolved(field: Field, tail_fraction: float = 0.1, tol: float = 1e-10):
    """Require the spectral tail (top band of either axis) below tol * peak."""
    what = np.abs(np.fft.fftn(field.values))
    peak = what.max()
    if peak == 0.0:
        raise FieldError("zero field")
    n = field.grid.n
    half = n // 2
    band = max(1, int(round(tail_fraction * half)))
    tail = 0.0
    for axis in range(field.grid.dim):
        sl = [slice(None)] * field.grid.dim
        sl[axis] = slice(half - band + 1, half + band)
        tail = max(tail, float(what[tuple(sl)].max()))
    if tail > tol * peak:
        raise ResolutionError(
            f"spectral tail {tail / peak:.3e} of peak exceeds {tol:g}: "
            "field is not resolved on this grid"
        )


def gn_ratio(field: Field, params: GNParams) -> float:
    """LHS / constant-free RHS of the Gagliardo-Nirenberg inequality."""
    if field.grid.dim != params.N:
        raise FieldError(f"field dimension {field.grid.dim} != N = {params.N}")
    check_resolved(field)
    lhs = wmp_seminorm(field, params.beta, params.r)
    a = wmp_seminorm(field, params.m, params.p)
    b = lp_norm(field, params.q)
    if lhs == 0.0 or a == 0.0 or b == 0.0:
        raise FieldError("degenerate field: a norm in the ratio vanishes")
    return lhs / (a**params.theta * b ** (1.0 - params.theta))


def hls_ratio(field: Field, params: HLSParams) -> float:
    """|| |x|^-lambda * u ||_q / ||u||_p."""
    if field.grid.dim != params.N:
        raise FieldError(f"field dimension {field.grid.dim} != N = {params.N}")
    check_resolved(field)
    den = lp_norm(field, params.p)
    if den == 0.0:
        raise FieldError("degenerate field: ||u||_p vanishes")
    return lp_norm(riesz_convolve(field, params.lam), params.q) / den


# ---------------------------------------------------------------------------
# standard numerical suite

GN_DILATION_DRIFT_TOL = 0.02
HLS_DILATION_DRIFT_TOL = 0.03
HOMOGENEITY_TOL = 1e-12
ENSEMBLE_SHARP_MARGIN = 0.10


@dataclass(frozen=True)
class SuiteRow:
    """One line of the inequality verification report."""

    check: str
    params: str
    statistic: str
    value: float
    threshold: float | None
    passed: bool


def hls_sharp_constant_1d_half() -> float:
    """Sharp constant of the symmetric 1D case lambda = 1/2, p = 4/3, q = 4,
    which is Gamma(1/4)/Gamma(3/4) by the classical rearrangement result."""
    from scipy.special import gamma as _gamma

    return float(_gamma(0.25) / _gamma(0.75))


def random_concentrated_field(grid, rng, envelope_sigma=None) -> Field:
    """Band-limited random field under a Gaussian envelope.

    Low-mode random spectra keep the field resolved; the envelope keeps it
    concentrated, so periodization plays no role in the ratios.  The envelope
    width L/14 keeps the periodization kink of the envelope itself below the
    spectral-tail tolerance of check_resolved.
    """
    if envelope_sigma is None:
        envelope_sigma = grid.L / 14.0
    band = max(2, grid.n // 16)
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    idx = np.arange(-band, band + 1)
    if grid.dim == 1:
        coeffs[idx] = rng.standard_normal(idx.size) + 1j * rng.standard_normal(idx.size)
    else:
        ix, iy = np.meshgrid(idx, idx, indexing="ij")
        vals = rng.standard_normal(ix.shape) + 1j * rng.standard_normal(ix.shape)
        coeffs[ix, iy] = vals
    raw = np.fft.ifftn(coeffs).real
    mesh = grid.center_mesh()
    envelope = np.exp(-sum(c**2 for c in mesh) / (2.0 * envelope_sigma**2))
    values = raw * envelope
    peak = np.abs(values).max()
    if peak == 0.0:
        values = envelope
    return Field(grid, values / max(peak, 1e-300))


def _gaussian_family(grid, sigmas, M=1.0):
    from .fields import gaussian

    return [gaussian(grid, M, s) for s in sigmas]


def _drift_row(check, params_str, ratios, tol) -> SuiteRow:
    drift = max(ratios) / min(ratios) - 1.0
    return SuiteRow(
        check=check, params=params_str, statistic="dilation_drift",
        value=drift, threshold=tol, passed=bool(drift <= tol),
    )


def standard_inequality_suite(seed: int = 20240, ensemble_size: int = 200):
    """Relation round-trips, homogeneity invariance, dilation stability, and
    ensemble maxima.  Returns a list of SuiteRows (all should pass)."""
    from .fields import gaussian, make_grid

    rows: list[SuiteRow] = []

    gn_cases = [
        (1, 1, 0, 2.0, 1.0, 1.0 / 3.0),
        (1, 1, 0, 2.0, 1.0, 1.0 / 5.0),
        (1, 2, 1, 2.0, 1.0, 0.75),
        (1, 2, 0, 2.0, 1.0, 0.3),
        (2, 1, 0, 2.0, 1.0, 0.5),
        (2, 2, 1, 2.0, 2.0, 0.75),
    ]
    for case in gn_cases:
        prm = gn_solve(*case)
        res = prm.relation_residual()
        rows.append(SuiteRow(
            check="gn_relation", params=f"N={prm.N},m={prm.m},beta={prm.beta},"
            f"p={prm.p:g},q={prm.q:g},theta={prm.theta:g},r={prm.r:g}",
            statistic="residual", value=res, threshold=RELATION_TOL,
            passed=bool(res <= RELATION_TOL),
        ))
    hls_cases = [(1, 4.0 / 3.0, 0.5), (2, 4.0 / 3.0, 1.0), (2, 1.5, 0.8)]
    for case in hls_cases:
        prm = hls_solve(*case)
        res = prm.relation_residual()
        rows.append(SuiteRow(
            check="hls_relation",
            params=f"N={prm.N},p={prm.p:g},q={prm.q:g},lambda={prm.lam:g}",
            statistic="residual", value=res, threshold=RELATION_TOL,
            passed=bool(res <= RELATION_TOL),
        ))

    grid1 = make_grid(1, 1024, 16.0)
    grid2 = make_grid(2, 256, 8.0)
    gn1 = gn_solve(1, 1, 0, 2.0, 1.0, 1.0 / 3.0)
    gn1b = gn_solve(1, 2, 1, 2.0, 1.0, 0.75)
    gn2 = gn_solve(2, 1, 0, 2.0, 1.0, 0.5)
    hls1 = hls_solve(1, 4.0 / 3.0, 0.5)
    hls2 = hls_solve(2, 4.0 / 3.0, 1.0)

    u = gaussian(grid1, 1.0, 0.5)
    uc = Field(grid1, 3.7 * u.values)
    for name, fn, prm in (
        ("gn_homogeneity", gn_ratio, gn1),
        ("hls_homogeneity", hls_ratio, hls1),
    ):
        rel = abs(fn(uc, prm) / fn(u, prm) - 1.0)
        rows.append(SuiteRow(
            check=name, params="c=3.7", statistic="relative_change", value=rel,
            threshold=HOMOGENEITY_TOL, passed=bool(rel <= HOMOGENEITY_TOL),
        ))

    sig1 = (0.2, 0.35, 0.5, 0.7, 1.0)
    sig2 = (0.2, 0.3, 0.4, 0.5)
    fam1 = _gaussian_family(grid1, sig1)
    fam2 = _gaussian_family(grid2, sig2)
    rows.append(_drift_row(
        "gn_dilation", "N=1,m=1,beta=0,p=2,q=1,theta=1/3",
        [gn_ratio(f, gn1) for f in fam1], GN_DILATION_DRIFT_TOL))
    rows.append(_drift_row(
        "gn_dilation", "N=1,m=2,beta=1,p=2,q=1,theta=3/4",
        [gn_ratio(f, gn1b) for f in fam1], GN_DILATION_DRIFT_TOL))
    rows.append(_drift_row(
        "gn_dilation", "N=2,m=1,beta=0,p=2,q=1,theta=1/2",
        [gn_ratio(f, gn2) for f in fam2], GN_DILATION_DRIFT_TOL))
    rows.append(_drift_row(
        "hls_dilation", "N=1,lambda=1/2,p=4/3",
        [hls_ratio(f, hls1) for f in fam1], HLS_DILATION_DRIFT_TOL))
    rows.append(_drift_row(
        "hls_dilation", "N=2,lambda=1,p=4/3",
        [hls_ratio(f, hls2) for f in fam2], HLS_DILATION_DRIFT_TOL))

    rng = np.random.default_rng(seed)
    grid_e = make_grid(1, 512, 16.0)
    gn_max, hls_max = 0.0, 0.0
    for _ in range(ensemble_size):
        f = random_concentrated_field(grid_e, rng)
        gn_max = max(gn_max, gn_ratio(f, gn1))
        hls_max = max(hls_max, hls_ratio(f, hls1))
    rows.append(SuiteRow(
        check="gn_ensemble_max", params=f"size={ensemble_size}",
        statistic="max_ratio", value=gn_max, threshold=None,
        passed=bool(np.isfinite(gn_max) and gn_max > 0),
    ))
    sharp = hls_sharp_constant_1d_half()
    bound = sharp * (1.0 + ENSEMBLE_SHARP_MARGIN)
    rows.append(SuiteRow(
        check="hls_ensemble_max", params=f"size={ensemble_size},sharp={sharp:.6f}",
        statistic="max_ratio", value=hls_max, threshold=bound,
        passed=bool(hls_max <= bound),
    ))
    return rows
