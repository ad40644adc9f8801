"""Two-covariate quadratic example: ODB against IBOSS, PPS and SRS.

N=10000 rows from U(-1,1)^2, n=120, D-criterion.  Prints per-seed and mean
D-efficiencies along with the efficiency of the whole dataset.

    python3 scripts/example1.py --seeds 20
"""

import argparse

import numpy as np

from odbsample.design import CandidateSet, solve_continuous_design
from odbsample.model import Dataset, FeatureBasis, ModelSpec, efficiency, fit_box_transform, sample_info
from odbsample.samplers import iboss_select, odb_select, pps_select, pps_weights, srs_select
from odbsample.simulation import stream


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--N", type=int, default=10_000)
    ap.add_argument("--n", type=int, default=120)
    args = ap.parse_args()

    model = ModelSpec(FeatureBasis.quadratic(2))
    od = solve_continuous_design(CandidateSet.grid(2, 3), model, "D")
    print(f"optimal design: {od.design.k} support points, certified={od.certified}")
    names = ("DATA", "ODB", "IBOSS", "PPS", "SRS")
    table = []
    for seed in range(args.seeds):
        x = stream(seed, "example1-X").uniform(-1, 1, size=(args.N, 2))
        data = Dataset(x)
        tr = fit_box_transform(data)
        fz = model.basis.expand(tr.apply(x))
        rows = {
            "DATA": np.arange(args.N),
            "ODB": odb_select(data, model, "D", args.n, design=od, transform=tr).rows,
            "IBOSS": iboss_select(data, args.n).rows,
            "PPS": pps_select(pps_weights(data, model, tr), args.n, stream(seed, "example1-PPS")).rows,
            "SRS": srs_select(args.N, args.n, stream(seed, "example1-SRS")).rows,
        }
        effs = [efficiency(sample_info(fz[rows[s]], model), od.info, "D") for s in names]
        table.append(effs)
        print(f"seed {seed:3d}  " + "  ".join(f"{s} {e:.4f}" for s, e in zip(names, effs)))
    mean = np.mean(table, axis=0)
    print("mean      " + "  ".join(f"{s} {e:.4f}" for s, e in zip(names, mean)))


if __name__ == "__main__":
    main()
