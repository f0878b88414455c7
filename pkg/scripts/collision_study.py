"""Collision resolution study: direct demodulation vs PD-SIC, BER and throughput.

Paired scenes (identical channels and noise) for N_u colliding users at
sf=7, P=4, L=2, K=8, m=3; one CSV per user count.
"""

import argparse
from pathlib import Path

from chirpim.config import SystemConfig
from chirpim.harness import ExperimentSpec, run_collision, write_results


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=50_000,
                    help="payload symbols per user per SNR point")
    ap.add_argument("--users", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--phases", type=int, default=8)
    ap.add_argument("--snr", default="4:2:14")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()

    start, step, stop = (float(v) for v in args.snr.split(":"))
    grid = tuple(start + i * step for i in range(int((stop - start) / step) + 1))
    cfg = SystemConfig(sf=7, n_rates=4, n_active=2)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    for n_users in args.users:
        spec = ExperimentSpec(kind="collision", cfg=cfg, snr_grid=grid, m=3.0,
                              trials=args.trials, seed=args.seed,
                              n_users=n_users, k_phases=args.phases)
        rows = run_collision(spec)
        out = outdir / f"collision_nu{n_users}.csv"
        write_results(out, rows, spec, emit_meta=True)
        print(f"Nu={n_users}: {len(rows)} rows -> {out}")


if __name__ == "__main__":
    main()
