"""Run a Monte Carlo comparison study from a JSON config and print its tables.

    python3 scripts/run_study.py scripts/configs/simulation1.json --out runs/sim1
    python3 scripts/run_study.py scripts/configs/simulation2.json --out runs/sim2 --jobs 4

Writes estimates.csv, efficiencies.csv, boxplot.csv and summary.json to --out.
"""

import argparse
import json

from odbsample.simulation import StudyConfig, run_study, stderr_progress, write_outputs


def print_tables(report) -> None:
    samplers = list(report.mean_efficiency)
    crits = list(next(iter(report.mean_efficiency.values())))
    print("mean efficiency")
    print(f"{'':8s}" + "".join(f"{s:>10s}" for s in samplers))
    for c in crits:
        print(f"{c:8s}" + "".join(f"{report.mean_efficiency[s][c]:10.4f}" for s in samplers))
    print("dataset efficiency: " + ", ".join(f"{c} {v:.4f}" for c, v in report.dataset_efficiency.items()))
    print("Monte Carlo covariance of the estimates")
    cov_names = list(report.mc_covariance)
    print(f"{'':8s}" + "".join(f"{s:>12s}" for s in cov_names))
    for label, key in (("trace", "trace"), ("det", "determinant")):
        print(f"{label:8s}" + "".join(f"{report.mc_covariance[s][key]:12.4g}" for s in cov_names))
    if report.errors:
        print(f"{len(report.errors)} sampler or fit failures (see summary.json)")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config")
    ap.add_argument("--out", default=None, help="output directory (default: no files written)")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--R", type=int, default=None, help="override the number of replications")
    args = ap.parse_args()
    with open(args.config) as fh:
        raw = json.load(fh)
    if args.R is not None:
        raw["R"] = args.R
    report = run_study(StudyConfig.from_dict(raw), jobs=args.jobs, progress=stderr_progress)
    print_tables(report)
    for stage, secs in report.timings.items():
        print(f"time {stage}: {secs:.1f} s")
    if args.out:
        paths = write_outputs(report, args.out)
        print("wrote " + ", ".join(sorted(paths.values())))


if __name__ == "__main__":
    main()
