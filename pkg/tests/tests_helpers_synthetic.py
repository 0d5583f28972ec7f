"""Synthetic sweep rows drawn exactly from the theoretical scaling laws."""

import numpy as np

from aggdiff.io import emit_sweep_csv
from aggdiff.solver import RunConfig
from aggdiff.sweep import SweepResult, SweepRow


def synthetic_sweep_result(dim: int = 1) -> SweepResult:
    cfg = RunConfig(dim=dim, eps=0.1, n=256, L=16.0, sigma=0.5,
                    p_list=(1.0, 2.0, 3.0, 4.0))
    rows = []
    for e in np.geomspace(0.1, 0.00125, 10):
        rows.append(SweepRow(
            eps=float(e), n=256, L=16.0,
            int_hm={m: 2.0 * e ** (-(2 * m + dim) / 2.0) for m in range(4)},
            sup_hm={m: 1.5 * e ** (-(dim + 2 * m) / 2.0) for m in range(4)},
            init_hm={m: 1e-3 for m in range(4)},
            int_lp={p: e ** (-dim * (1.0 - 1.0 / p))
                    for p in (1.0, 2.0, 3.0, 4.0)},
            length_scale={m: 0.9 * e for m in range(3)},
            mass_drift=0.0, runtime_s=0.0,
        ))
    return SweepResult(base_config=cfg, rows=rows)


def synthetic_sweep_csv(tmp_path, dim: int = 1):
    path = tmp_path / "synthetic_sweep.csv"
    emit_sweep_csv(synthetic_sweep_result(dim), path)
    return path
