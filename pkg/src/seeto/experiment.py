"""Sequence orchestration: sources, target runs, reports, figures."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .archive import SourceArchive, load_archive, make_task_record, save_archive
from .archive import canonical_text
from .config import ExperimentConfig
from .embedding import fit_embedder
from .errors import EvaluationError, UsageError
from .gp import train_gp
from .metrics import additional_fe_percent, delta_hv_percent, hypervolume_2d
from .optimizer import (
    MODE_BASELINE,
    MODE_SEETO,
    MODES,
    RunTrajectory,
    run_baseline,
    run_seeto,
)
from .problems import SyntheticTask, TaskFamily, analytic_hypervolume, make_task_family

_F17 = ".17g"


def _fmt(v: float) -> str:
    return format(float(v), _F17)


def family_from_config(cfg: ExperimentConfig) -> TaskFamily:
    f = cfg.family
    return make_task_family(
        n_source=f.n_source,
        n_target=f.n_target,
        cluster_spread=f.cluster_spread,
        outlier_targets=f.outlier_targets,
        seed=f.seed,
        dimension=f.dimension,
        conflict_offset=f.conflict_offset,
        frame_shape=f.frame_shape,
        n_frames=f.n_frames,
    )


def run_name(task_id: str, mode: str, seed: int) -> str:
    return f"{task_id}__{mode}__seed{seed}"


def write_trajectory_csv(traj: RunTrajectory, path) -> None:
    """One row per true evaluation; indices gap-free from 1."""
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["task_id", "mode", "seed", "fe", "f1", "f2", "incumbent_hv"])
    for r in traj.records:
        writer.writerow(
            [
                traj.task_id,
                traj.mode,
                traj.seed,
                r.fe_index,
                _fmt(r.objectives[0]),
                _fmt(r.objectives[1]),
                _fmt(r.incumbent_hv),
            ]
        )
    path.write_text(buf.getvalue(), encoding="utf-8")


def write_front_csv(traj: RunTrajectory, param_names, path) -> None:
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["f1", "f2", *param_names, "eval_index"])
    for s in traj.final_front:
        writer.writerow(
            [
                _fmt(s.objectives[0]),
                _fmt(s.objectives[1]),
                *[_fmt(v) for v in s.decision],
                s.eval_index,
            ]
        )
    path.write_text(buf.getvalue(), encoding="utf-8")


@dataclass
class RunOutcome:
    task_id: str
    mode: str
    seed: int
    trajectory: Optional[RunTrajectory]
    error: Optional[str] = None


@dataclass
class SequenceResult:
    out_dir: Path
    family: TaskFamily
    archive: SourceArchive
    outcomes: List[RunOutcome] = field(default_factory=list)
    summary_rows: List[dict] = field(default_factory=list)

    def trajectory(self, task_id: str, mode: str, seed: int) -> RunTrajectory:
        for o in self.outcomes:
            if (o.task_id, o.mode, o.seed) == (task_id, mode, seed) and o.trajectory:
                return o.trajectory
        raise UsageError(f"no completed run for {run_name(task_id, mode, seed)}")


def solve_sources(family: TaskFamily, cfg: ExperimentConfig) -> Tuple[SourceArchive, List[RunTrajectory]]:
    """Solve every source task with the baseline and build the archive."""
    embedder = fit_embedder(family.pretrain_states, cfg.family.latent_dim)
    archive = SourceArchive(embedder=embedder)
    trajectories = []
    for i, task in enumerate(family.sources):
        run_cfg = cfg.optimizer.with_seed(cfg.family.seed * 1000 + i)
        traj = run_baseline(task, run_cfg)
        dataset = traj.evaluated_solutions()
        surrogate = train_gp(dataset, task.bounds, cfg.optimizer.noise_floor)
        archive.append(
            make_task_record(
                task_id=task.task_id,
                state=task.state,
                bounds=task.bounds,
                dataset=dataset,
                surrogate=surrogate,
                embedder=embedder,
                metadata={
                    "mode": MODE_BASELINE,
                    "seed": run_cfg.seed,
                    "fe_max": run_cfg.fe_max,
                },
            )
        )
        trajectories.append(traj)
    return archive, trajectories


def execute_run(
    family: TaskFamily,
    archive: SourceArchive,
    cfg: ExperimentConfig,
    task_id: str,
    mode: str,
    seed: int,
) -> RunTrajectory:
    """One target run in one mode; transfer modes see a disposable archive copy."""
    if mode not in MODES:
        raise UsageError(f"unknown mode: {mode}")
    task = family.task_by_id(task_id)
    run_cfg = cfg.optimizer.with_seed(seed)
    if mode == MODE_BASELINE:
        return run_baseline(task, run_cfg)
    return run_seeto(task, task.state, archive.copy(), run_cfg, mode=mode)


def _job(args):
    family, archive, cfg, task_id, mode, seed = args
    try:
        traj = execute_run(family, archive, cfg, task_id, mode, seed)
        return RunOutcome(task_id, mode, seed, traj)
    except EvaluationError as exc:
        return RunOutcome(task_id, mode, seed, exc.partial_trajectory, str(exc))
    except Exception as exc:  # noqa: BLE001 - isolate per-run failures
        return RunOutcome(task_id, mode, seed, None, str(exc))


def run_sequence(cfg: ExperimentConfig, out_dir=None) -> SequenceResult:
    """The full protocol: sources, archive, target runs, reports, figures."""
    out = Path(out_dir) if out_dir is not None else cfg.resolved_output_dir()
    (out / "trajectories").mkdir(parents=True, exist_ok=True)
    (out / "fronts").mkdir(parents=True, exist_ok=True)
    (out / "figures").mkdir(parents=True, exist_ok=True)

    (out / "config.json").write_text(
        canonical_text(cfg.to_jsonable()) + "\n", encoding="utf-8"
    )

    family = family_from_config(cfg)
    param_names = [f"param_{i}" for i in range(cfg.family.dimension)]

    archive, source_trajs = solve_sources(family, cfg)
    for traj in source_trajs:
        write_trajectory_csv(
            traj, out / "trajectories" / (run_name(traj.task_id, traj.mode, traj.seed) + ".csv")
        )
    save_archive(archive, out / "archive.json")

    jobs = [
        (family, archive, cfg, task.task_id, mode, seed)
        for task in family.targets
        for mode in cfg.modes
        for seed in cfg.seeds
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_job, jobs))
    else:
        outcomes = [_job(j) for j in jobs]

    error_rows = []
    for o in outcomes:
        name = run_name(o.task_id, o.mode, o.seed)
        if o.trajectory is not None:
            write_trajectory_csv(o.trajectory, out / "trajectories" / (name + ".csv"))
            if o.error is None:
                write_front_csv(
                    o.trajectory, param_names, out / "fronts" / (name + ".csv")
                )
        if o.error is not None:
            error_rows.append([o.task_id, o.mode, o.seed, o.error])
    if error_rows:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["task_id", "mode", "seed", "error"])
        w.writerows(error_rows)
        (out / "errors.csv").write_text(buf.getvalue(), encoding="utf-8")

    summary_rows = summarize(cfg, outcomes)
    write_summary_csv(summary_rows, cfg, out / "summary.csv")
    _render_figures(cfg, family, outcomes, summary_rows, out)

    return SequenceResult(
        out_dir=out,
        family=family,
        archive=archive,
        outcomes=outcomes,
        summary_rows=summary_rows,
    )


def _completed(outcomes, task_id, mode) -> List[RunTrajectory]:
    return [
        o.trajectory
        for o in outcomes
        if o.task_id == task_id and o.mode == mode and o.trajectory is not None
        and o.error is None
    ]


def summarize(cfg: ExperimentConfig, outcomes: List[RunOutcome]) -> List[dict]:
    """Per (task, mode) aggregate rows: HV checkpoints, transfer deltas.

    ``delta_hv_pct`` compares a mode's mean reference-budget HV against the
    transfer run's own; ``add_fe_pct`` is the extra budget (percent of the
    reference) the mode's median trajectory needs to match the transfer
    run's median reference-budget HV. Both cells are blank for the transfer
    mode itself and when it was not run.
    """
    rows: List[dict] = []
    task_ids = sorted({o.task_id for o in outcomes})
    ref_fe = cfg.reference_fe
    for task_id in task_ids:
        seeto_trajs = _completed(outcomes, task_id, MODE_SEETO)
        seeto_ref_mean = (
            float(np.mean([t.hv_at(ref_fe) for t in seeto_trajs]))
            if seeto_trajs
            else None
        )
        seeto_ref_median = (
            float(np.median([t.hv_at(ref_fe) for t in seeto_trajs]))
            if seeto_trajs
            else None
        )
        for mode in cfg.modes:
            trajs = _completed(outcomes, task_id, mode)
            if not trajs:
                continue
            row: Dict[str, object] = {
                "task_id": task_id,
                "mode": mode,
                "n_runs": len(trajs),
            }
            for fe in cfg.hv_checkpoints:
                vals = np.array([t.hv_at(fe) for t in trajs])
                row[f"hv{fe}_mean"] = float(vals.mean())
                row[f"hv{fe}_std"] = float(vals.std())
            row["final_hv_median"] = float(
                np.median([t.records[-1].incumbent_hv for t in trajs])
            )
            if mode != MODE_SEETO and seeto_ref_mean and seeto_ref_mean > 0:
                row["delta_hv_pct"] = delta_hv_percent(
                    float(row[f"hv{ref_fe}_mean"]), seeto_ref_mean
                )
                H = np.vstack([[r.incumbent_hv for r in t.records] for t in trajs])
                med_traj = list(zip(range(1, H.shape[1] + 1), np.median(H, axis=0)))
                add = additional_fe_percent(med_traj, seeto_ref_median, ref_fe)
                row["add_fe_display"] = add.display
            else:
                row["delta_hv_pct"] = None
                row["add_fe_display"] = ""
            rows.append(row)
    return rows


def write_summary_csv(rows: List[dict], cfg: ExperimentConfig, path) -> None:
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["task_id", "mode", "n_runs"]
    for fe in cfg.hv_checkpoints:
        header += [f"hv{fe}_mean", f"hv{fe}_std"]
    header += ["final_hv_median", "delta_hv_pct", "add_fe_pct"]
    writer.writerow(header)
    for row in rows:
        out = [row["task_id"], row["mode"], row["n_runs"]]
        for fe in cfg.hv_checkpoints:
            out += [_fmt(row[f"hv{fe}_mean"]), _fmt(row[f"hv{fe}_std"])]
        out.append(_fmt(row["final_hv_median"]))
        out.append("" if row["delta_hv_pct"] is None else _fmt(row["delta_hv_pct"]))
        out.append(row["add_fe_display"])
        writer.writerow(out)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _render_figures(cfg, family, outcomes, summary_rows, out: Path) -> None:
    from .figures import save_hv_trajectory_figure, save_summary_bar_figure

    for task in family.targets:
        per_mode = {}
        for mode in cfg.modes:
            trajs = _completed(outcomes, task.task_id, mode)
            if trajs:
                per_mode[mode] = np.vstack(
                    [[r.incumbent_hv for r in t.records] for t in trajs]
                )
        if per_mode:
            save_hv_trajectory_figure(
                task.task_id,
                per_mode,
                out / "figures" / f"{task.task_id}_hv.png",
                analytic_hv=analytic_hypervolume(task),
            )
    if summary_rows:
        save_summary_bar_figure(
            summary_rows,
            cfg.reference_fe,
            out / "figures" / f"summary_hv{cfg.reference_fe}.png",
        )


def run_single(
    cfg: ExperimentConfig,
    task_id: str,
    mode: str,
    seed: int,
    archive_path=None,
    out_dir=None,
) -> Tuple[RunTrajectory, Path]:
    """One target run for the CLI; writes its trajectory and front files.

    Transfer modes need a saved archive (from run-sequence); the baseline
    runs standalone.
    """
    if mode not in MODES:
        raise UsageError(f"unknown mode: {mode}")
    family = family_from_config(cfg)
    out = Path(out_dir) if out_dir is not None else cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    if mode == MODE_BASELINE:
        archive = SourceArchive(embedder=None)
    else:
        if archive_path is None:
            raise UsageError(
                f"mode {mode!r} needs --archive (build one with run-sequence)"
            )
        archive = load_archive(archive_path)
    traj = execute_run(family, archive, cfg, task_id, mode, seed)
    name = run_name(task_id, mode, seed)
    write_trajectory_csv(traj, out / (name + ".trajectory.csv"))
    param_names = [f"param_{i}" for i in range(cfg.family.dimension)]
    write_front_csv(traj, param_names, out / (name + ".front.csv"))
    return traj, out
