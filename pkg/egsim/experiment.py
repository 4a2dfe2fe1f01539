"""Single runs to disk and the collaboration on/off comparison."""

from __future__ import annotations

import logging
import multiprocessing as mp
from pathlib import Path

import pandas as pd
from tqdm import tqdm

from egsim.config import (
    COMPARE_COLUMNS,
    COMPARE_CSV,
    COMPARE_STATIC_COLUMNS,
    COMPARE_STATIC_CSV,
    COMPARE_WORKERS,
    CSV_FLOAT_FORMAT,
    SHOW_PROGRESS,
)
from egsim.metrics import emit_csv
from egsim.scenario import Scenario
from egsim.simulation import RunResult, run

logger = logging.getLogger(__name__)


def run_to_dir(scenario: Scenario, out: str | Path, seed: int | None = None) -> RunResult:
    """Run once and write the run's CSV files into ``out``."""
    result = run(scenario, seed=seed)
    emit_csv(result.metrics, Path(out))
    return result


def _saving_pct(baseline: float, energy: float) -> float:
    return 0.0 if baseline <= 0 else 100.0 * (baseline - energy) / baseline


def _compare_one(job: tuple[int, Scenario, int]) -> tuple[int, list[tuple], list[tuple]]:
    """Three arms for one seed: collaboration on, off, and the static baseline."""
    index, scenario, seed = job
    on = run(scenario.with_collaboration(True), seed=seed, progress=False)
    off = run(scenario.with_collaboration(False), seed=seed, progress=False)
    static = run(scenario.with_collaboration(True), seed=seed, static=True, progress=False)

    rows, static_rows = [], []
    for net in scenario.networks:
        nid, eg = net.network_id, net.gateway.eg_id
        e_on, e_off, e_static = on.total_energy(nid), off.total_energy(nid), static.total_energy(nid)
        det_on, det_off = on.metrics.detection(eg), off.metrics.detection(eg)
        rows.append((
            seed, nid, e_on, e_off, _saving_pct(e_off, e_on),
            det_on.mean_latency, det_off.mean_latency,
            det_on.misses, det_off.misses,
            det_on.false_alerts, det_off.false_alerts,
        ))
        static_rows.append((seed, nid, e_static, e_on, _saving_pct(e_static, e_on)))
    return index, rows, static_rows


def _with_mean_rows(df: pd.DataFrame) -> pd.DataFrame:
    """Append one ``seed = mean`` row per network."""
    numeric = [c for c in df.columns if c not in ("seed", "network_id")]
    means = df.groupby("network_id", sort=False)[numeric].mean().reset_index()
    means.insert(0, "seed", "mean")
    return pd.concat([df.astype({"seed": object}), means[df.columns]], ignore_index=True)


def compare(
    scenario: Scenario,
    seeds: list[int],
    out: str | Path,
    workers: int | None = None,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Run every seed with collaboration on and off (plus a static arm).

    Writes ``compare.csv`` and ``compare_static.csv`` into ``out`` and
    returns both tables. Results do not depend on ``workers``.
    """
    if not seeds:
        raise ValueError("compare needs at least one seed")
    workers = COMPARE_WORKERS if workers is None else workers
    jobs = [(i, scenario, int(s)) for i, s in enumerate(seeds)]

    results: list[tuple[int, list[tuple], list[tuple]]] = []
    if workers > 1 and len(jobs) > 1:
        with mp.Pool(processes=min(workers, len(jobs))) as pool:
            for res in tqdm(pool.imap_unordered(_compare_one, jobs), total=len(jobs),
                            desc="Seeds", disable=not SHOW_PROGRESS):
                results.append(res)
    else:
        for job in tqdm(jobs, desc="Seeds", disable=not SHOW_PROGRESS):
            results.append(_compare_one(job))
    results.sort(key=lambda r: r[0])

    table = pd.DataFrame([row for _, rows, _ in results for row in rows], columns=COMPARE_COLUMNS)
    table = table.astype({c: "float64" for c in ("energy_on", "energy_off", "energy_saving_pct",
                                                  "latency_on", "latency_off")})
    static = pd.DataFrame([row for _, _, rows in results for row in rows], columns=COMPARE_STATIC_COLUMNS)
    table, static = _with_mean_rows(table), _with_mean_rows(static)

    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    for name, df in ((COMPARE_CSV, table), (COMPARE_STATIC_CSV, static)):
        path = out / name
        try:
            df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc

    mean_on_off = table[table["seed"] == "mean"].set_index("network_id")
    for nid, row in static[static["seed"] == "mean"].set_index("network_id").iterrows():
        logger.info("%s: mean saving %.1f%% vs static, %.1f%% vs collaboration off",
                    nid, row["saving_vs_static_pct"], mean_on_off.loc[nid, "energy_saving_pct"])
    return table, static
