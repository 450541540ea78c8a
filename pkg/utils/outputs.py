import json
import os
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from utils.logger import log_success

MANIFEST_FILENAME = 'manifest.json'


def energy_unit(coupling_j):
    """Divisor and column suffix: energies are written in units of J when J > 0."""
    if coupling_j > 0:
        return coupling_j, '_over_J'
    return 1.0, ''


def spectrum_frame(eigenvalues, coupling_j) -> pd.DataFrame:
    """index, re, im for one spectrum ordered by real then imaginary part"""
    unit, suffix = energy_unit(coupling_j)
    vals = np.asarray(eigenvalues, dtype=complex)
    vals = vals[np.lexsort((vals.imag, vals.real))]
    return pd.DataFrame({
        'index': np.arange(vals.size),
        f're{suffix}': vals.real / unit,
        f'im{suffix}': vals.imag / unit,
    })


def flow_frame(gamma_grid, rows, coupling_j) -> pd.DataFrame:
    """gamma then re_i, im_i per eigenvalue; rows arrive sorted by (re, im)"""
    unit, suffix = energy_unit(coupling_j)
    rows = np.asarray(rows, dtype=complex)
    columns = {f'gamma{suffix}': np.asarray(gamma_grid, dtype=float) / unit}
    for i in range(rows.shape[1]):
        columns[f're_{i}{suffix}'] = rows[:, i].real / unit
        columns[f'im_{i}{suffix}'] = rows[:, i].imag / unit
    return pd.DataFrame(columns)


def threshold_frame(records: List[Dict], coupling_j) -> pd.DataFrame:
    """p, q, class, gamma_pt, bracket_lo, bracket_hi, evaluations; empty gamma_pt means no threshold"""
    unit, suffix = energy_unit(coupling_j)

    def scaled(value):
        return None if value is None else value / unit

    table = [{
        'p': r['p'],
        'q': r['q'],
        'class': r['class'],
        f'gamma_pt{suffix}': scaled(r['gamma_pt']),
        f'bracket_lo{suffix}': scaled(r['bracket_lo']),
        f'bracket_hi{suffix}': scaled(r['bracket_hi']),
        'evaluations': r['evaluations'],
    } for r in records]
    return pd.DataFrame(table, columns=[
        'p', 'q', 'class', f'gamma_pt{suffix}', f'bracket_lo{suffix}', f'bracket_hi{suffix}', 'evaluations'
    ])


def phase_frame(x_axis, y_axis, max_im, coupling_j) -> pd.DataFrame:
    """x, y, max_im in row-major order (y outer, x inner)"""
    unit, suffix = energy_unit(coupling_j)
    xx, yy = np.meshgrid(np.asarray(x_axis, dtype=float), np.asarray(y_axis, dtype=float))
    return pd.DataFrame({
        f'x{suffix}': xx.ravel() / unit,
        f'y{suffix}': yy.ravel() / unit,
        f'max_im{suffix}': np.asarray(max_im, dtype=float).ravel() / unit,
    })


def save_csv(df: pd.DataFrame, output_dir, filename) -> str:
    path = os.path.join(output_dir, filename)
    os.makedirs(output_dir, exist_ok=True)
    df.to_csv(path, index=False)
    log_success(f"Saved {filename}: {path} ({len(df)} rows)")
    return path


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def save_manifest(manifest: Dict, output_dir, filename: Optional[str] = None) -> str:
    """Write the run manifest next to the CSV outputs"""
    path = os.path.join(output_dir, filename or MANIFEST_FILENAME)
    os.makedirs(output_dir, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(_jsonable(manifest), f, indent=2, ensure_ascii=False)
    log_success(f"Saved run manifest: {path}")
    return path
