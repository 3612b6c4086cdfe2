"""Permeability and boundary-layer constants at several resolutions.

    python scripts/constants_table.py --config scripts/configs/asymmetric_poiseuille.json \
        --resolutions 32 64 128
"""
import argparse
import sys
from pathlib import Path

from porelayer.config import ExperimentConfig
from porelayer.experiments import run_constants
from porelayer.report import write_rows_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--out", default="out/constants")
    args = ap.parse_args(argv)
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    rows = []
    print(f"{'res':>5s} {'K11':>10s} {'K12':>11s} {'K22':>10s} {'C1_bl':>10s} {'C_omega':>10s} energy")
    for r in args.resolutions:
        c = run_constants(cfg, r, r, check_truncation=False, min_cell_resolution=min(r, 32))
        K = c.K.K
        rows.append((r, K[0, 0], K[0, 1], K[1, 1], c.C1_bl, c.C_omega_bl, c.bl.energy_defect))
        print(f"{r:5d} {K[0, 0]:10.6f} {K[0, 1]:11.6f} {K[1, 1]:10.6f} {c.C1_bl:10.6f} "
              f"{c.C_omega_bl:10.6f} {c.bl.energy_defect:.1e}")
    write_rows_csv(Path(args.out) / "constants.csv",
                   ["resolution", "K11", "K12", "K22", "C1_bl", "C_omega_bl", "energy_defect"],
                   rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
