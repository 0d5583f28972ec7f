"""Deterministic persistence: CSV series/sweeps, JSON reports, binary field
snapshots, and standalone SVG log-log figures.

Floats are written with 17 significant digits, which round-trips IEEE
doubles bit-exactly.  Column orders are fixed: a series is

    t, mass, moment1, Lp_<p>..., Hm_<m>...

and a sweep is

    eps, n, L, int_Hm_<m>..., sup_Hm_<m>..., init_Hm_<m>..., int_Lp_<p>...,
    length_scale_<m>..., mass_drift, failed, fail_reason

with the shared run configuration stored in '# key = value' comment lines.
Wall-clock timings are deliberately kept out of the sweep CSV so that
identical configurations produce byte-identical files; emit_timings_csv
writes them separately.
"""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError, FieldError
from .fields import Field, make_grid
from .observables import ObservableSeries, ObservableRecord, column_label_p
from .solver import RunConfig, SolverState
from .sweep import FitReport, SweepResult, SweepRow


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# observable series

def emit_series_csv(series: ObservableSeries, path) -> None:
    path = Path(path)
    lines = [",".join(series.column_names())]
    for r in series.records:
        cells = [fmt(r.t), fmt(r.mass), fmt(r.first_moment)]
        cells += [fmt(r.lp[p]) for p in sorted(r.lp)]
        cells += [fmt(r.hm[m]) for m in sorted(r.hm)]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def read_series_csv(path) -> ObservableSeries:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ConfigError(f"{path}: empty series file")
    header = lines[0].split(",")
    p_vals = [math.inf if h[3:] == "inf" else float(h[3:])
              for h in header if h.startswith("Lp_")]
    m_vals = [int(h[3:]) for h in header if h.startswith("Hm_")]
    series = ObservableSeries()
    for ln in lines[1:]:
        cells = [float(c) for c in ln.split(",")]
        it = iter(cells)
        t, m0, mom = next(it), next(it), next(it)
        lp = {p: next(it) for p in p_vals}
        hm = {m: next(it) for m in m_vals}
        series.append(ObservableRecord(t=t, mass=m0, first_moment=mom, lp=lp, hm=hm))
    return series


# ---------------------------------------------------------------------------
# sweep results

def _config_meta_lines(config: RunConfig) -> list[str]:
    pairs = [
        ("dim", str(config.dim)),
        ("eps", fmt(config.eps)),
        ("n", str(config.n)),
        ("L", fmt(config.L)),
        ("cfl", fmt(config.cfl)),
        ("sample_count", str(config.sample_count)),
        ("m_max", str(config.m_max)),
        ("p_list", ",".join(column_label_p(p) for p in config.p_list)),
        ("profile", config.profile),
        ("M", fmt(config.M)),
        ("sigma", fmt(config.sigma)),
    ]
    if config.T_star is not None:
        pairs.append(("T_star", fmt(config.T_star)))
    if config.center is not None:
        pairs.append(("center", ",".join(fmt(c) for c in config.center)))
    return [f"# {k} = {v}" for k, v in pairs]


def sweep_column_names(m_values, p_labels) -> list[str]:
    names = ["eps", "n", "L"]
    names += [f"int_Hm_{m}" for m in m_values]
    names += [f"sup_Hm_{m}" for m in m_values]
    names += [f"init_Hm_{m}" for m in m_values]
    names += [f"int_Lp_{p}" for p in p_labels]
    names += [f"length_scale_{m}" for m in m_values[:-1]]
    names += ["mass_drift", "failed", "fail_reason"]
    return names


def emit_sweep_csv(result: SweepResult, path) -> None:
    path = Path(path)
    cfg = result.base_config
    m_values = list(range(cfg.m_max + 1))
    p_sorted = sorted(cfg.p_list)
    p_labels = [column_label_p(p) for p in p_sorted]
    lines = _config_meta_lines(cfg)
    lines.append(",".join(sweep_column_names(m_values, p_labels)))
    for r in result.rows:
        if r.failed:
            blank = ["nan"] * (3 * len(m_values) + len(p_labels) + len(m_values) - 1)
            reason = (r.fail_reason or "").replace(",", ";").replace("\n", " ")
            cells = [fmt(r.eps), str(r.n), fmt(r.L), *blank, "nan", "1", reason]
        else:
            cells = [fmt(r.eps), str(r.n), fmt(r.L)]
            cells += [fmt(r.int_hm[m]) for m in m_values]
            cells += [fmt(r.sup_hm[m]) for m in m_values]
            cells += [fmt(r.init_hm[m]) for m in m_values]
            cells += [fmt(r.int_lp[p]) for p in p_sorted]
            cells += [fmt(r.length_scale[m]) for m in m_values[:-1]]
            cells += [fmt(r.mass_drift), "0", ""]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def read_sweep_csv(path) -> SweepResult:
    path = Path(path)
    meta_lines, rows_lines = [], []
    header = None
    for ln in path.read_text().splitlines():
        if not ln.strip():
            continue
        if ln.startswith("#"):
            meta_lines.append(ln[1:].strip())
        elif header is None:
            header = ln.split(",")
        else:
            rows_lines.append(ln)
    if header is None:
        raise ConfigError(f"{path}: no header line found")
    from .config import parse_config_text

    cfg = parse_config_text("\n".join(meta_lines), source=str(path))
    m_values = sorted(int(h[len("int_Hm_"):]) for h in header if h.startswith("int_Hm_"))
    p_labels = [h[len("int_Lp_"):] for h in header if h.startswith("int_Lp_")]
    p_vals = [math.inf if lbl == "inf" else float(lbl) for lbl in p_labels]
    rows = []
    for ln in rows_lines:
        cells = ln.split(",")
        # a sanitized fail_reason cannot contain commas, so widths agree
        it = iter(cells)
        eps, n, L = float(next(it)), int(next(it)), float(next(it))
        int_hm = {m: float(next(it)) for m in m_values}
        sup_hm = {m: float(next(it)) for m in m_values}
        init_hm = {m: float(next(it)) for m in m_values}
        int_lp = {p: float(next(it)) for p in p_vals}
        scales = {m: float(next(it)) for m in m_values[:-1]}
        drift = float(next(it))
        failed = next(it) == "1"
        reason = next(it, "")
        rows.append(SweepRow(
            eps=eps, n=n, L=L, int_hm=int_hm, sup_hm=sup_hm, init_hm=init_hm,
            int_lp=int_lp, length_scale=scales, mass_drift=drift,
            failed=failed, fail_reason=reason or None, runtime_s=math.nan,
        ))
    return SweepResult(base_config=cfg, rows=rows)


def emit_timings_csv(result: SweepResult, path) -> None:
    path = Path(path)
    lines = ["eps,n,runtime_s"]
    for r in result.rows:
        lines.append(f"{fmt(r.eps)},{r.n},{fmt(r.runtime_s)}")
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# fit reports

def emit_fit_reports_json(reports, path) -> None:
    path = Path(path)
    payload = [dataclasses.asdict(rep) for rep in reports]
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_fit_reports_json(path) -> list[FitReport]:
    path = Path(path)
    return [FitReport(**d) for d in json.loads(path.read_text())]


# ---------------------------------------------------------------------------
# binary field snapshots

_HEADER_INTS = ("dim", "n")
_HEADER_FLOATS = ("L", "t", "eps")


def write_field_snapshot(path, state: SolverState) -> None:
    """Header dim,n (little-endian int64), L,t,eps (little-endian float64),
    then the n^dim sample values as little-endian float64, C order."""
    path = Path(path)
    grid = state.field.grid
    with open(path, "wb") as f:
        f.write(np.array([grid.dim, grid.n], dtype="<i8").tobytes())
        f.write(np.array([grid.L, state.t, state.eps], dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(state.field.values, dtype="<f8").tobytes())


def read_field_snapshot(path) -> SolverState:
    path = Path(path)
    raw = path.read_bytes()
    dim, n = (int(v) for v in np.frombuffer(raw, dtype="<i8", count=2))
    L, t, eps = (float(v) for v in np.frombuffer(raw, dtype="<f8", count=3, offset=16))
    grid = make_grid(dim, n, L)
    values = np.frombuffer(raw, dtype="<f8", offset=40)
    if values.size != grid.cell_count:
        raise FieldError(
            f"{path}: expected {grid.cell_count} values, found {values.size}"
        )
    return SolverState(
        field=Field(grid, values.reshape(grid.shape).copy()), t=t, eps=eps
    )


# ---------------------------------------------------------------------------
# SVG figures

_SVG_W, _SVG_H = 640, 480
_ML, _MR, _MT, _MB = 70, 24, 42, 52


def _decade_ticks(lo: float, hi: float) -> list[float]:
    ticks = [t for t in range(math.ceil(lo - 1e-9), math.floor(hi + 1e-9) + 1)]
    if len(ticks) >= 2:
        return [float(t) for t in ticks]
    return [lo, 0.5 * (lo + hi), hi]


def emit_loglog_svg(report: FitReport, pairs, path) -> None:
    """Standalone SVG: data markers, fitted line, slope annotation."""
    pairs = [(float(e), float(v)) for e, v in pairs]
    if len(pairs) < 2:
        raise ConfigError(f"need >= 2 points for a figure, got {len(pairs)}")
    if any(e <= 0 or v <= 0 for e, v in pairs):
        raise ConfigError("log-log figure requires positive data")
    xs = np.log10([e for e, _ in pairs])
    ys = np.log10([v for _, v in pairs])
    x0, x1 = xs.min(), xs.max()
    y0, y1 = ys.min(), ys.max()
    pad_x = 0.06 * (x1 - x0 or 1.0)
    pad_y = 0.10 * (y1 - y0 or 1.0)
    x0, x1 = x0 - pad_x, x1 + pad_x
    y0, y1 = y0 - pad_y, y1 + pad_y
    pw, ph = _SVG_W - _ML - _MR, _SVG_H - _MT - _MB

    def px(x):
        return _ML + (x - x0) / (x1 - x0) * pw

    def py(y):
        return _SVG_H - _MB - (y - y0) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{_SVG_H}" viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect x="0" y="0" width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" '
        'stroke="black" stroke-width="1"/>',
        f'<text x="{_ML}" y="24" font-family="monospace" font-size="15">'
        f"{report.observable} vs eps (log-log)</text>",
    ]
    for t in _decade_ticks(x0, x1):
        X = px(t)
        parts.append(
            f'<line x1="{X:.2f}" y1="{_SVG_H - _MB}" x2="{X:.2f}" '
            f'y2="{_SVG_H - _MB + 6}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{X:.2f}" y="{_SVG_H - _MB + 22}" text-anchor="middle" '
            f'font-family="monospace" font-size="12">{10.0**t:.3g}</text>'
        )
    for t in _decade_ticks(y0, y1):
        Y = py(t)
        parts.append(
            f'<line x1="{_ML - 6}" y1="{Y:.2f}" x2="{_ML}" y2="{Y:.2f}" '
            'stroke="black"/>'
        )
        parts.append(
            f'<text x="{_ML - 10}" y="{Y + 4:.2f}" text-anchor="end" '
            f'font-family="monospace" font-size="12">{10.0**t:.3g}</text>'
        )
    # fitted line: natural-log fit y = slope*x + intercept maps to
    # log10 space with the same slope and intercept/ln(10)
    b10 = report.intercept / math.log(10.0)
    yl0, yl1 = report.slope * x0 + b10, report.slope * x1 + b10
    parts.append(
        f'<line x1="{px(x0):.3f}" y1="{py(yl0):.3f}" x2="{px(x1):.3f}" '
        f'y2="{py(yl1):.3f}" stroke="#c03030" stroke-width="1.5"/>'
    )
    for x, y in zip(xs, ys):
        parts.append(
            f'<circle cx="{px(x):.3f}" cy="{py(y):.3f}" r="4" fill="none" '
            'stroke="#1040a0" stroke-width="1.5"/>'
        )
    theory = "n/a" if report.theory_slope is None else f"{report.theory_slope:.4f}"
    parts.append(
        f'<text x="{_ML + 8}" y="{_MT + 18}" font-family="monospace" '
        f'font-size="13">fitted slope = {report.slope:.4f}, '
        f"theoretical slope = {theory}, R2 = {report.r_squared:.4f}</text>"
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")
