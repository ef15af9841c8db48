"""Monte-Carlo harness: seeded trials with the two-stage alternating
optimizer, baselines on identical channels, and CSV campaign output."""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .beamformer import baseline, compute_auxiliaries, fp_optimize, mmse_init
from .channel import assemble_equivalent, draw_channel_set, stream_rng
from .config import ScenarioConfig, config_hash
from .errors import CfrisError
from .metrics import RateReport, cdf_points, sum_rate
from .scattering import (
    coupling_diagnostic,
    decompose_B,
    init_scattering,
    local_grad_theta_b,
    riemannian_ascent,
    theta_gradient,
)

WORKERS_ENV = "CFRIS_WORKERS"

# Outer alternation stops once the sum-rate improves by less than this many bits.
OUTER_IMPROVEMENT_TOL = 1e-4

_BASELINE_MODES = {"mmse": "mmse_per_ap", "pa": "uniform_pa"}


@dataclass(frozen=True)
class TrialResult:
    trial: int
    reports: dict  # method name -> RateReport
    convergence: tuple  # sum-rate per FP iteration (first stage-2 run)
    coupling: dict  # (b, c) -> max ratio over users; empty when B < 2
    stage_seconds: dict
    outer_alternations: int
    fp_iterations: int
    stalled: bool


def _num_channel_streams(cfg: ScenarioConfig) -> int:
    b = len(cfg.surfaces)
    return b * cfg.aps + b * cfg.users + cfg.aps * cfg.users


def _make_theta_objective(channels, thetas, b, v_list, n0):
    """True sum-rate as a function of surface b's scattering matrix, with
    every other surface held fixed."""
    k_users = channels.num_users
    h_tx_bar_b = channels.h_tx_bar(b)
    h_rx_b = [channels.h_rx[b][k] for k in range(k_users)]
    fixed = []
    for k in range(k_users):
        f = channels.h_bar_direct(k)
        for bp, state in enumerate(thetas):
            if bp == b:
                continue
            f = f + channels.h_rx[bp][k] @ state.theta @ channels.h_tx_bar(bp)
        fixed.append(f)

    def objective(theta):
        e_list = [fixed[k] + h_rx_b[k] @ theta @ h_tx_bar_b for k in range(k_users)]
        return sum_rate(e_list, v_list, n0)

    return objective, fixed, h_rx_b, h_tx_bar_b


def _make_theta_gradient(channels, b, fixed, h_rx_b, h_tx_bar_b, v_list, y_list, z_list):
    """Surrogate gradient closure: exact (single surface) or local
    weak-coupling form (multiple surfaces)."""
    if channels.num_surfaces == 1:

        def grad_fn(theta):
            e_list = [f + hr @ theta @ h_tx_bar_b for f, hr in zip(fixed, h_rx_b)]
            return theta_gradient(h_rx_b, h_tx_bar_b, e_list, v_list, y_list, z_list)

        return grad_fn

    h_bar = [channels.h_bar_direct(k) for k in range(channels.num_users)]

    def grad_fn(theta):
        return local_grad_theta_b(h_rx_b, h_tx_bar_b, h_bar, theta, v_list, y_list, z_list)

    return grad_fn


def run_trial(cfg: ScenarioConfig, trial: int) -> TrialResult:
    """One deterministic trial: channel draw, alternating two-stage
    optimization, and baselines on the identical channels and final Theta."""
    n0 = cfg.n0_w
    p_ap = cfg.p_ap_w
    na = cfg.ap_antennas
    k_users = cfg.users
    surface_sizes = [s.elements for s in cfg.surfaces]

    t0 = time.perf_counter()
    channels = draw_channel_set(
        cfg.aps,
        cfg.users,
        cfg.user_antennas,
        cfg.ap_antennas,
        surface_sizes,
        cfg.links(),
        cfg.master_seed,
        trial,
        include_direct=cfg.include_direct,
    )
    base_stream = _num_channel_streams(cfg)
    thetas = [
        init_scattering(
            spec.arch(), spec.elements, stream_rng(cfg.master_seed, trial, base_stream + b),
            surface_index=b,
        )
        for b, spec in enumerate(cfg.surfaces)
    ]
    t_channel = time.perf_counter() - t0

    e_list = [assemble_equivalent(channels, thetas, k) for k in range(k_users)]
    beams = mmse_init(e_list, p_ap, n0, na)
    rate = sum_rate(e_list, beams.v, n0)

    convergence = ()
    stalled = False
    fp_iters = 0
    t_scatter = 0.0
    t_beam = 0.0
    outer_used = 0
    for outer in range(1, cfg.outer_alternations + 1):
        outer_used = outer
        # stage 1: per-surface Riemannian ascent, auxiliaries frozen
        t1 = time.perf_counter()
        aux = compute_auxiliaries(e_list, beams.v, n0)
        for b in range(len(thetas)):
            objective, fixed, h_rx_b, h_tx_bar_b = _make_theta_objective(
                channels, thetas, b, beams.v, n0
            )
            grad_fn = _make_theta_gradient(
                channels, b, fixed, h_rx_b, h_tx_bar_b, beams.v, aux.y, aux.z
            )
            result = riemannian_ascent(
                thetas[b], grad_fn, objective, max_iters=cfg.ascent_max_iters
            )
            thetas[b] = result.state
            stalled = stalled or result.stalled
        t_scatter += time.perf_counter() - t1

        # stage 2: FP beamforming on the updated equivalent channel
        t2 = time.perf_counter()
        e_list = [assemble_equivalent(channels, thetas, k) for k in range(k_users)]
        fp = fp_optimize(e_list, p_ap, n0, na, tol_rel=cfg.fp_tol, max_iters=cfg.fp_max_iters)
        beams = fp.beams
        fp_iters = fp.iterations
        t_beam += time.perf_counter() - t2
        if outer == 1:
            convergence = fp.trace
        new_rate = fp.trace[-1]
        improvement = new_rate - rate
        rate = new_rate
        if improvement < OUTER_IMPROVEMENT_TOL:
            break

    arch_label = "+".join(s.architecture for s in cfg.surfaces)
    meta = dict(
        seed=cfg.master_seed, trial=trial, architecture=arch_label, p_max_dbm=cfg.p_max_dbm
    )
    reports = {
        "proposed": RateReport.from_solution(e_list, beams, n0, **meta)
    }
    for name in cfg.baselines:
        bl = baseline(e_list, p_ap, n0, na, _BASELINE_MODES[name])
        reports[name] = RateReport.from_solution(e_list, bl, n0, **meta)

    coupling = {}
    if channels.num_surfaces >= 2:
        aux = compute_auxiliaries(e_list, beams.v, n0)
        for k in range(k_users):
            parts = decompose_B(channels, thetas, aux.y[k], aux.z[k], k)
            for pair, ratio in coupling_diagnostic(parts).items():
                coupling[pair] = max(coupling.get(pair, 0.0), ratio)

    return TrialResult(
        trial=trial,
        reports=reports,
        convergence=convergence,
        coupling=coupling,
        stage_seconds={"channel": t_channel, "scattering": t_scatter, "beamforming": t_beam},
        outer_alternations=outer_used,
        fp_iterations=fp_iters,
        stalled=stalled,
    )


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_trials(cfg: ScenarioConfig, trials: int | None = None) -> list:
    """Run the configured trials, optionally on a bounded worker pool, and
    return results ordered by trial index."""
    n = trials if trials is not None else cfg.trials
    workers = _worker_count()
    indices = list(range(n))
    if workers == 1:
        return [run_trial(cfg, t) for t in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run_trial, [cfg] * n, indices))
    return sorted(results, key=lambda r: r.trial)


@dataclass(frozen=True)
class SweepSpec:
    """Campaign sweep over total transmit power (single point when None)."""

    p_max_grid: tuple | None = None

    def points(self, cfg: ScenarioConfig) -> list:
        if not self.p_max_grid:
            return [cfg]
        return [cfg.with_p_max(p) for p in self.p_max_grid]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def run_campaign(
    cfg: ScenarioConfig,
    sweep: SweepSpec | None = None,
    out_dir: str = ".",
    timing: bool = False,
) -> dict:
    """Run every sweep point and emit per-trial, aggregate, convergence, and
    CDF CSVs (plus coupling/timing when applicable). Returns file paths."""
    sweep = sweep or SweepSpec()
    os.makedirs(out_dir, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise CfrisError(f"output directory {out_dir!r} is not writable")

    trial_rows = []
    agg_rows = []
    conv_rows = []
    cdf_rows = []
    coupling_rows = []
    timing_rows = []
    for point in sweep.points(cfg):
        chash = config_hash(point)
        arch = "+".join(s.architecture for s in point.surfaces)
        key = (chash, point.master_seed, _fmt(point.p_max_dbm), arch)
        results = run_trials(point)
        per_method = {}
        for res in results:
            for method, report in res.reports.items():
                trial_rows.append(
                    key
                    + (
                        res.trial,
                        method,
                        _fmt(report.sum_rate),
                        "|".join(_fmt(r) for r in report.per_user_rate),
                        "|".join(_fmt(p) for p in report.per_ap_power),
                        f"{sum(res.stage_seconds.values()):.6f}",
                    )
                )
                per_method.setdefault(method, []).append(report.sum_rate)
            for it, value in enumerate(res.convergence):
                conv_rows.append(key + (res.trial, it, _fmt(value)))
            for (b, c), ratio in sorted(res.coupling.items()):
                coupling_rows.append(key + (res.trial, b, c, _fmt(ratio)))
            if timing:
                timing_rows.append(
                    key
                    + (
                        res.trial,
                        point.users,
                        point.aps,
                        point.ap_antennas,
                        point.user_antennas,
                        f"{res.stage_seconds['scattering']:.6f}",
                        f"{res.stage_seconds['beamforming']:.6f}",
                    )
                )
        for method in sorted(per_method):
            vals = np.array(per_method[method])
            agg_rows.append(
                key
                + (
                    method,
                    len(vals),
                    _fmt(float(np.mean(vals))),
                    _fmt(float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0),
                    _fmt(
                        float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
                        if len(vals) > 1
                        else 0.0
                    ),
                )
            )
            for value, prob in cdf_points(vals):
                cdf_rows.append(key + (method, _fmt(float(value)), _fmt(prob)))

    base_key = ["config_hash", "master_seed", "p_max_dbm", "architecture"]
    paths = {}
    paths["trials"] = os.path.join(out_dir, "trials.csv")
    _write_csv(
        paths["trials"],
        base_key
        + ["trial", "method", "sum_rate", "per_user_rate", "per_ap_power", "wallclock_s"],
        trial_rows,
    )
    paths["aggregate"] = os.path.join(out_dir, "aggregate.csv")
    _write_csv(
        paths["aggregate"],
        base_key + ["method", "trials", "mean_sum_rate", "std_sum_rate", "stderr_sum_rate"],
        agg_rows,
    )
    paths["convergence"] = os.path.join(out_dir, "convergence.csv")
    _write_csv(paths["convergence"], base_key + ["trial", "iteration", "sum_rate"], conv_rows)
    paths["cdf"] = os.path.join(out_dir, "cdf.csv")
    _write_csv(paths["cdf"], base_key + ["method", "sum_rate", "probability"], cdf_rows)
    if coupling_rows:
        paths["coupling"] = os.path.join(out_dir, "coupling.csv")
        _write_csv(
            paths["coupling"],
            base_key + ["trial", "surface_b", "surface_c", "ratio"],
            coupling_rows,
        )
    if timing:
        paths["timing"] = os.path.join(out_dir, "timing.csv")
        _write_csv(
            paths["timing"],
            base_key
            + ["trial", "users", "aps", "ap_antennas", "user_antennas",
               "scattering_s", "beamforming_s"],
            timing_rows,
        )
    return paths
