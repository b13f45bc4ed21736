#!/usr/bin/env python3
"""End-to-end desk-scale experiment: data -> train -> select -> eval.

Runs the stock pipeline through the command line interface and finishes with
the trained-vs-flat-baseline MPJPE ratio on the held-out test split.  With
default settings this is the canonical seeded run (10k skeletons x 8 views,
width 256, batch 256, 20k steps); expect roughly 25 minutes on one CPU.

    python3 scripts/run_desk_experiment.py --out runs/desk
    python3 scripts/run_desk_experiment.py --out /tmp/smoke --smoke

Any extra arguments after ``--`` are forwarded verbatim to every subcommand,
e.g. ``-- --set "steps = 4000" --seed 3``.
"""
import argparse
import csv
import io
import sys
import time
from contextlib import redirect_stdout
from pathlib import Path

from poselift.cli import main as cli

SMOKE = [
    "--n-skeletons", "200",
    "--set", "hidden_width = 64",
    "--set", "batch_size = 64",
    "--set", "steps = 500",
    "--set", "checkpoint_every = 100",
]


def run(argv: list[str]) -> None:
    print("+ poselift " + " ".join(argv))
    rc = cli(argv)
    if rc != 0:
        sys.exit(f"subcommand failed with exit code {rc}")


def read_mpjpe(report: Path) -> float:
    with open(report) as fh:
        for row in csv.DictReader(fh):
            if row["class"] == "ALL":
                return float(row["mpjpe_mm"])
    sys.exit(f"no ALL row in {report}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True,
                    help="experiment directory (data/, run/, eval/ inside)")
    ap.add_argument("--smoke", action="store_true",
                    help="tiny profile for a quick wiring check")
    ap.add_argument("forward", nargs="*",
                    help="extra flags forwarded to every subcommand")
    args = ap.parse_args()

    out = Path(args.out)
    data, rundir, evaldir = out / "data", out / "run", out / "eval"
    evaldir.mkdir(parents=True, exist_ok=True)
    extra = (SMOKE if args.smoke else []) + args.forward

    t0 = time.time()
    run(["gen-data", "--out", str(data)] + extra)
    run(["train", "--data", str(data), "--run-dir", str(rundir)] + extra)
    train_minutes = (time.time() - t0) / 60.0

    # select prints one score per checkpoint and the winner's path last
    buf = io.StringIO()
    with redirect_stdout(buf):
        run(["select", "--run-dir", str(rundir),
             "--val-2d", str(data / "val_2d.csv"),
             "--val-3d", str(data / "val_3d.csv")] + extra)
    print(buf.getvalue(), end="")
    (evaldir / "select.txt").write_text(buf.getvalue())
    best = Path(buf.getvalue().strip().splitlines()[-1])

    run(["eval", "--checkpoint", str(best),
         "--test-2d", str(data / "test_2d.csv"),
         "--test-3d", str(data / "test_3d.csv"),
         "--out", str(evaldir / "model_report.csv")] + extra)
    run(["baseline",
         "--test-2d", str(data / "test_2d.csv"),
         "--test-3d", str(data / "test_3d.csv"),
         "--out", str(evaldir / "baseline_report.csv")] + extra)

    model_mm = read_mpjpe(evaldir / "model_report.csv")
    base_mm = read_mpjpe(evaldir / "baseline_report.csv")
    ratio = model_mm / base_mm
    print(f"\nbest checkpoint : {best}")
    print(f"model MPJPE     : {model_mm:.1f} mm")
    print(f"flat baseline   : {base_mm:.1f} mm")
    print(f"ratio           : {ratio:.3f} ({'<= 0.5, ok' if ratio <= 0.5 else 'ABOVE the 0.5 bar'})")
    print(f"train wall time : {train_minutes:.1f} min")


if __name__ == "__main__":
    main()
