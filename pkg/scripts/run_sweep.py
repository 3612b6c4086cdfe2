"""eps-sweep: pore-scale flow against the effective model.

    python scripts/run_sweep.py --config scripts/configs/asymmetric_poiseuille.json

Writes sweep.csv, jump.csv, perturbation.csv and report.json to the config's
output directory and prints the norm table with fitted rates.
"""
import argparse
import logging
import sys
from pathlib import Path

from porelayer.config import ExperimentConfig
from porelayer.experiments import NORM_COLUMNS, run_convergence
from porelayer.report import write_report, write_rows_csv, write_sweep_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=None)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    out = Path(args.out or cfg.output.directory)
    rep = run_convergence(cfg)
    write_sweep_csv(out / "sweep.csv", rep.epsilons, rep.table)
    write_rows_csv(out / "jump.csv", ["eps", "measured_mean", "predicted_mean", "relative_error"],
                   [(e, j["measured_mean"], j["predicted_mean"], j["relative_error"])
                    for e, j in zip(rep.epsilons, rep.jump) if j])
    write_rows_csv(out / "perturbation.csv", ["eps", "l2_difference"],
                   [(e, v) for e, v in zip(rep.epsilons, rep.perturbation) if v])
    write_report(out, {"convergence": rep.to_dict(), "config": cfg.to_dict()})

    print(f"C1_bl = {rep.constants['C1_bl']:.6f}   C_omega_bl = {rep.constants['C_omega_bl']:.6f}")
    print(f"{'column':36s}" + "".join(f"{e:>12g}" for e in rep.epsilons) + "      rate")
    for c in NORM_COLUMNS + ("v_L2_interface",):
        vals = "".join(f"{v:12.4e}" if v is not None else f"{'-':>12s}" for v in rep.table[c])
        print(f"{c:36s}{vals}  {rep.rates.get(c, float('nan')):8.2f}")
    for e, j in zip(rep.epsilons, rep.jump):
        if j:
            print(f"jump eps={e:g}: measured {j['measured_mean']:+.5f} "
                  f"predicted {j['predicted_mean']:+.5f} rel.err {j['relative_error']:.3f}")
    print(f"interface-position differences {rep.perturbation} rate {rep.perturbation_rate:.2f}")
    for w in rep.warnings:
        print("warning:", w)
    print(f"{rep.seconds:.0f} s")
    return 1 if rep.failures else 0


if __name__ == "__main__":
    sys.exit(main())
