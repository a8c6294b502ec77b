"""Command-line interface.

Exit codes: 0 success, 1 run error, 2 configuration/usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .errors import ConfigError, SeetoError, UsageError

_EXIT_OK = 0
_EXIT_RUN_ERROR = 1
_EXIT_CONFIG_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seeto",
        description=(
            "Sequential evolutionary transfer optimization for expensive "
            "multi-objective calibration problems."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "run-sequence",
        help="solve all sources, build the archive, run every target mode/seed",
    )
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--out", default=None, help="output directory override")
    p.add_argument("--workers", type=int, default=None, help="parallel run workers")

    p = sub.add_parser("run-single", help="run one target task in one mode")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--task", required=True, help="target task id, e.g. target-03")
    p.add_argument("--mode", required=True, help="run mode")
    p.add_argument("--seed", type=int, required=True, help="run seed")
    p.add_argument("--archive", default=None, help="archive file for transfer modes")
    p.add_argument("--out", default=None, help="output directory override")

    p = sub.add_parser("hv", help="exact 2-objective hypervolume of a front file")
    p.add_argument("--front", required=True, help="CSV with f1,f2 columns")
    p.add_argument("--ref", nargs=2, type=float, required=True, metavar=("R1", "R2"))

    p = sub.add_parser("archive-inspect", help="verify and summarize an archive")
    p.add_argument("--archive", required=True, help="archive file")

    p = sub.add_parser(
        "embed-similarity",
        help="print the similarity report for a target task against an archive",
    )
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--archive", required=True, help="archive file")
    p.add_argument("--task", required=True, help="target task id")
    return parser


def _read_front_file(path: Path):
    """Parse (f1, f2) pairs from a delimited front file.

    Accepts a header row naming f1/f2 columns, or plain two-column numeric
    rows. Raises UsageError with the offending line number.
    """
    if not path.exists():
        raise UsageError(f"front file not found: {path}")
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and any(not _is_number(c) for c in row[:2]):
                header = [c.strip().lower() for c in row]
                continue
            cols = (0, 1)
            if header is not None:
                try:
                    cols = (header.index("f1"), header.index("f2"))
                except ValueError as exc:
                    raise UsageError(
                        f"{path}:1: header must name f1 and f2 columns"
                    ) from exc
            try:
                rows.append((float(row[cols[0]]), float(row[cols[1]])))
            except (ValueError, IndexError) as exc:
                raise UsageError(
                    f"{path}:{lineno}: expected numeric f1,f2 values"
                ) from exc
    return rows


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _cmd_run_sequence(args) -> int:
    from .config import load_config
    from .experiment import run_sequence

    cfg = load_config(args.config)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        from dataclasses import replace

        cfg = replace(cfg, workers=args.workers)
    result = run_sequence(cfg, out_dir=args.out)
    n_err = sum(1 for o in result.outcomes if o.error is not None)
    print(f"completed {len(result.outcomes) - n_err}/{len(result.outcomes)} runs")
    print(f"outputs in {result.out_dir}")
    if n_err:
        print(f"{n_err} run(s) failed; see errors.csv", file=sys.stderr)
        return _EXIT_RUN_ERROR
    return _EXIT_OK


def _cmd_run_single(args) -> int:
    from .config import load_config
    from .experiment import run_single

    cfg = load_config(args.config)
    traj, out = run_single(
        cfg, args.task, args.mode, args.seed, archive_path=args.archive,
        out_dir=args.out,
    )
    final_hv = traj.records[-1].incumbent_hv if traj.records else 0.0
    print(
        f"{traj.task_id} [{traj.mode}] seed={traj.seed}: "
        f"fe={traj.fe} final_hv={final_hv:.6f} front_size={len(traj.final_front)}"
    )
    print(f"outputs in {out}")
    return _EXIT_OK


def _cmd_hv(args) -> int:
    from .metrics import hypervolume_2d

    front = _read_front_file(Path(args.front))
    value = hypervolume_2d(front, args.ref) if front else 0.0
    print(format(value, ".12f"))
    return _EXIT_OK


def _cmd_archive_inspect(args) -> int:
    from .archive import inspect_archive

    rows = inspect_archive(args.archive)
    print(f"archive ok: {len(rows)} record(s), checksums verified")
    for r in rows:
        meta = r["metadata"]
        print(
            f"  {r['task_id']}: {r['n_evaluations']} evaluations, "
            f"best f1={r['best_f1']:.6f} f2={r['best_f2']:.6f}, "
            f"mode={meta.get('mode', '?')} seed={meta.get('seed', '?')}"
        )
    return _EXIT_OK


def _cmd_embed_similarity(args) -> int:
    from .archive import load_archive
    from .config import load_config
    from .ensemble import choose_c
    from .experiment import family_from_config
    from .transfer import select_and_weight
    from .embedding import task_similarity

    cfg = load_config(args.config)
    archive = load_archive(args.archive)
    if archive.embedder is None or not archive.records:
        raise UsageError("archive has no embedder/records to compare against")
    family = family_from_config(cfg)
    task = family.task_by_id(args.task)
    sims = [
        task_similarity(archive.embedder, task.state, rec.state)
        for rec in archive.records
    ]
    opt = cfg.optimizer
    report = select_and_weight(sims, opt.gamma, opt.temperature)
    c = choose_c(report, opt.tau, opt.c_high, opt.c_low, opt.c_rule_on_raw_similarity)
    print(f"task {task.task_id} vs archive of {len(sims)} record(s)")
    print(f"gamma={report.gamma} temperature={report.temperature}")
    for i, s in enumerate(sims):
        mark = ""
        if i in report.selected:
            w = report.weights[report.selected.index(i)]
            mark = f"  selected, weight={w:.6f}"
        print(f"  [{i:2d}] {archive.records[i].task_id}: similarity={s:+.6f}{mark}")
    print(f"max_weight={report.max_weight:.6f} chosen_c={c}")
    return _EXIT_OK


_HANDLERS = {
    "run-sequence": _cmd_run_sequence,
    "run-single": _cmd_run_single,
    "hv": _cmd_hv,
    "archive-inspect": _cmd_archive_inspect,
    "embed-similarity": _cmd_embed_similarity,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG_ERROR
    except SeetoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_RUN_ERROR
    except KeyboardInterrupt:
        return _EXIT_RUN_ERROR


if __name__ == "__main__":
    sys.exit(main())
