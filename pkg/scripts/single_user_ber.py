"""Reproduce the single-user BER study: simulation vs both theory paths.

Writes one CSV per configuration into results/ (created on demand).
Defaults match the headline operating points (sf=7, P in {2,4},
L in {2,4}, Nakagami m in {1,3}); trim --trials for a quick look.
"""

import argparse
from pathlib import Path

from chirpim.config import SystemConfig
from chirpim.harness import ExperimentSpec, run_ber_sim, run_ber_theory, write_results


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--snr", default="0:2:14")
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    start, step, stop = (float(v) for v in args.snr.split(":"))
    grid = tuple(start + i * step for i in range(int((stop - start) / step) + 1))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for n_rates in (2, 4):
        for n_active in (2, 4):
            cfg = SystemConfig(sf=7, n_rates=n_rates, n_active=n_active)
            for m in (1.0, 3.0):
                tag = f"sf7_p{n_rates}_l{n_active}_m{m:g}"
                sim_spec = ExperimentSpec(kind="ber-sim", cfg=cfg, snr_grid=grid,
                                          m=m, trials=args.trials, seed=args.seed)
                rows = run_ber_sim(sim_spec)
                rows += run_ber_theory(ExperimentSpec(
                    kind="ber-theory", cfg=cfg, snr_grid=grid, m=m))
                out = outdir / f"ber_{tag}.csv"
                write_results(out, rows, sim_spec, emit_meta=True)
                print(f"{tag}: {len(rows)} rows -> {out}")


if __name__ == "__main__":
    main()
