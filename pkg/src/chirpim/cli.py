"""Command-line entry point for the batch experiment harness.

Subcommands mirror the experiment kinds; every flag can also come from a
JSON manifest (--config), with explicit flags taking precedence.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import SystemConfig
from .harness import ExperimentSpec, run_experiment, write_results

KIND_BY_COMMAND = {
    "ber-sim": "ber-sim",
    "ber-theory": "ber-theory",
    "se": "se-curve",
    "collision": "collision",
    "corr": "correlation-suite",
}

_UNSET = object()  # sentinel: --m none is a real value, absence is not


def parse_snr(text: str) -> tuple[float, ...]:
    """'start:step:stop' (stop inclusive) or a comma list of dB values."""
    if ":" in text:
        start, step, stop = (float(v) for v in text.split(":"))
        if step <= 0:
            raise argparse.ArgumentTypeError("snr step must be positive")
        count = int(round((stop - start) / step)) + 1
        return tuple(start + i * step for i in range(max(count, 0)) if start + i * step <= stop + 1e-9)
    return tuple(float(v) for v in text.split(","))


def parse_m(text: str) -> float | None:
    if text.lower() in ("none", "inf", "awgn"):
        return None
    return float(text)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON manifest with default parameter values")
    p.add_argument("--sf", type=int, help="spreading factor (Table entry picks the prime)")
    p.add_argument("--prime", type=int, help="override the prime sequence length")
    p.add_argument("--rates", type=int, help="number of chirp rates P")
    p.add_argument("--active", type=int, help="number of activated cells L")
    p.add_argument("--min-rate", type=int, help="lowest chirp rate (default 1)")
    p.add_argument("--energy", type=float, help="symbol energy Es (default 1)")
    p.add_argument("--m", type=parse_m, default=_UNSET,
                   help="Nakagami shape; 'none' disables fading")
    p.add_argument("--snr", type=parse_snr, help="Eb/N0 grid 'start:step:stop' in dB")
    p.add_argument("--trials", type=int, help="symbols per SNR point")
    p.add_argument("--seed", type=int, help="experiment seed")
    p.add_argument("--users", type=int, help="number of colliding users")
    p.add_argument("--phases", type=int, help="phase grid size K for cancellation")
    p.add_argument("--out", help="output CSV path (default: print to stdout)")
    p.add_argument("--emit-meta", action="store_true",
                   help="write a .meta.json sidecar with all resolved parameters")


def build_spec(kind: str, args: argparse.Namespace) -> ExperimentSpec:
    manifest = {}
    if args.config:
        with open(args.config) as fh:
            manifest = json.load(fh)

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return manifest.get(key, default)

    snr = pick(args.snr, "snr", (4.0, 6.0, 8.0, 10.0))
    if isinstance(snr, str):
        snr = parse_snr(snr)
    m = args.m if args.m is not _UNSET else manifest.get("m", 1.0)
    if isinstance(m, str):
        m = parse_m(m)
    cfg = SystemConfig(
        sf=pick(args.sf, "sf", 7),
        n_rates=pick(args.rates, "rates", 4),
        n_active=pick(args.active, "active", 4),
        min_rate=pick(args.min_rate, "min_rate", 1),
        symbol_energy=pick(args.energy, "energy", 1.0),
        prime=pick(args.prime, "prime", None),
    )
    return ExperimentSpec(
        kind=kind,
        cfg=cfg,
        snr_grid=tuple(snr),
        m=m,
        trials=pick(args.trials, "trials", 100_000),
        seed=pick(args.seed, "seed", 1),
        n_users=pick(args.users, "users", 2 if kind == "collision" else 1),
        k_phases=pick(args.phases, "phases", 8),
        early_stop_errors=manifest.get("early_stop_errors", 200),
        frame_symbols=manifest.get("frame_symbols", 64),
        offset_spread=manifest.get("offset_spread", 8),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="chirpim",
        description="Chirp index-modulation link simulations and analysis curves")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("ber-sim", "Monte Carlo BER sweep"),
        ("ber-theory", "analytical BER curves (both integration paths)"),
        ("se", "spectral-efficiency curve from a BER sweep"),
        ("collision", "paired direct vs PD-SIC collision runs"),
        ("corr", "sequence correlation invariant sweeps"),
    ):
        _add_common(sub.add_parser(name, help=help_text))

    args = parser.parse_args(argv)
    spec = build_spec(KIND_BY_COMMAND[args.command], args)
    rows = run_experiment(spec)
    if args.out:
        write_results(args.out, rows, spec=spec, emit_meta=args.emit_meta)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        from .harness import rows_to_csv

        sys.stdout.write(rows_to_csv(rows))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
