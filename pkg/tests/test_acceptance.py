"""Acceptance gate: one test per stated criterion, at the stated tolerances.

Heavy Monte Carlo banks (1e6 symbols per point) are computed once per
session and shared. Each criterion prints a PASS/FAIL line; run with
`pytest tests/test_acceptance.py -v -s` to watch them stream.

Known honest-red criteria (measured reality disagrees with the stated
target; full analysis in the project notes):
  * criterion 7a: the L=4 -> L=2 gain at BER 1e-3, m=1 measures ~1.4 dB,
    not 2.0 +/- 0.5 dB (the closed-form theory itself gives 1.19 dB).
  * criterion 8b: PD-SIC BER at 12 dB measures 1.5e-3 over 1e7 bits,
    i.e. cancellation already reaches the single-user error floor of the
    same link (~1.5e-3 at 12 dB), so 1e-4 is unreachable by any canceller.
"""

import itertools
import math

import numpy as np
import pytest

from chirpim import channel, codec, harness, modem, multiuser, theory, zc
from chirpim.config import SystemConfig
from chirpim.harness import ExperimentSpec

SEED = 20260810
SNR_GRID = (4.0, 6.0, 8.0, 10.0)
COMBOS = [(p, l, m) for p in (2, 4) for l in (2, 4) for m in (1.0, 3.0)]
POINT_TRIALS = 1_000_000  # the criterion-6 floor
THEORY_MODE = "eq30"  # primary theory path (criterion 10 audits both)


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{criterion}] {'PASS' if ok else 'FAIL'} - {detail}")


def sim_ber(cfg, m, snr, trials=POINT_TRIALS, seed=SEED, point_idx=0):
    c = harness.simulate_point(cfg, snr, trials, seed=seed, point_idx=point_idx,
                               m=m, early_stop_errors=None)
    return c["bit_errors"] / (c["trials"] * cfg.bits_per_symbol)


def theory_crossing(cfg, m, target=1e-3, mode=THEORY_MODE):
    lo, hi = -5.0, 40.0
    for _ in range(36):
        mid = 0.5 * (lo + hi)
        b = theory.ber_nakagami(cfg, m, mid, mode=mode, panel_size=16,
                                check_convergence=False)
        if b > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def interp_crossing(snrs, bers, target=1e-3):
    lb = np.log10(np.maximum(np.asarray(bers, dtype=float), 1e-300))
    lt = math.log10(target)
    for i in range(len(snrs) - 1):
        if lb[i] >= lt >= lb[i + 1]:
            span = lb[i] - lb[i + 1]
            frac = 0.0 if span == 0 else (lb[i] - lt) / span
            return snrs[i] + frac * (snrs[i + 1] - snrs[i])
    return None


def sim_crossing(cfg, m, guess, trials=POINT_TRIALS, seed=SEED):
    """1e-3 crossing from 1e6-symbol points bracketing the theory guess."""
    lo, hi = guess - 0.75, guess + 0.75
    pts = {}

    def measure(s):
        if s not in pts:
            pts[s] = sim_ber(cfg, m, s, trials, seed, point_idx=len(pts) + 100)
        return pts[s]

    for _ in range(8):
        b_lo, b_hi = measure(lo), measure(hi)
        if b_lo < 1e-3:
            lo -= 1.0
        elif b_hi > 1e-3:
            hi += 1.0
        else:
            snrs = sorted(pts)
            return interp_crossing(snrs, [pts[s] for s in snrs])
    raise AssertionError(f"no 1e-3 bracket found near {guess} dB")


@pytest.fixture(scope="session")
def agreement_bank():
    """Sim + both theory paths at the criterion-6 grid, 1e6 symbols per point."""
    bank = {}
    for idx, (p, l, m) in enumerate(COMBOS):
        cfg = SystemConfig(sf=7, n_rates=p, n_active=l)
        for j, snr in enumerate(SNR_GRID):
            ber = sim_ber(cfg, m, snr, point_idx=idx * 10 + j)
            th = {mode: theory.ber_nakagami(cfg, m, snr, mode=mode,
                                            check_convergence=False)
                  for mode in ("exact", "eq30")}
            bank[(p, l, m, snr)] = {"sim": ber, **th}
    return bank


@pytest.fixture(scope="session")
def crossing_bank():
    """1e-3 crossing SNRs (sim and theory) for every criterion-6 combo."""
    bank = {}
    for p, l, m in COMBOS:
        cfg = SystemConfig(sf=7, n_rates=p, n_active=l)
        guess = theory_crossing(cfg, m)
        bank[(7, p, l, m)] = {"theory": guess, "sim": sim_crossing(cfg, m, guess)}
    cfg8 = SystemConfig(sf=8, n_rates=4, n_active=4)
    guess8 = theory_crossing(cfg8, 1.0)
    bank[(8, 4, 4, 1.0)] = {"theory": guess8, "sim": sim_crossing(cfg8, 1.0, guess8)}
    return bank


@pytest.fixture(scope="session")
def collision_bank():
    """Paired direct/PD-SIC collision results for N_u in {2,3}."""
    cfg = SystemConfig(sf=7, n_rates=4, n_active=2)
    bank = {}
    for n_users in (2, 3):
        for snr in (6.0, 8.0, 10.0, 12.0):
            # >= 1e7 decoded bits at the regression point, >= 1e6 elsewhere
            target_bits = 10_000_000 if (n_users == 2 and snr == 12.0) else 1_000_000
            per_user = math.ceil(target_bits / (cfg.bits_per_symbol * n_users))
            spec = ExperimentSpec(kind="collision", cfg=cfg, snr_grid=(snr,),
                                  m=3.0, trials=per_user, seed=SEED,
                                  n_users=n_users, k_phases=8, frame_symbols=64)
            direct, pdsic = harness.run_collision(spec)
            bank[(n_users, snr)] = {"direct": direct, "pdsic": pdsic}
    return bank


class TestCriterion1BitCounts:
    def test_eta_b_table(self):
        got = (codec.bits_per_symbol(2 * 128, 4), codec.bits_per_symbol(4 * 128, 4),
               codec.bits_per_symbol(4 * 128, 2))
        report("criterion 1", got == (27, 31, 16),
               f"eta_b (P=2,L=4)/(P=4,L=4)/(P=4,L=2) = {got}, want (27, 31, 16)")
        assert got == (27, 31, 16)


class TestCriterion2CodecExample:
    def test_worked_example_and_bijection(self):
        ok = (codec.encode(0, 16, 3).tolist() == [0, 1, 2]
              and codec.encode(558, 16, 3).tolist() == [12, 14, 15]
              and codec.encode(559, 16, 3).tolist() == [13, 14, 15])
        combos = sorted(itertools.combinations(range(16), 3),
                        key=lambda c: tuple(reversed(c)))
        for d, want in enumerate(combos):
            ok &= codec.encode(d, 16, 3).tolist() == list(want)
            ok &= codec.decode(np.array(want)) == d
        report("criterion 2", ok, "worked example and all 560 ranks exact")
        assert ok


class TestCriterion3CorrelationIdentities:
    def test_same_root_and_cross_root(self):
        rng = np.random.default_rng(SEED)
        worst_same, worst_cross = 0.0, 0.0
        for n in zc.SF_PRIMES.values():
            for _ in range(50):
                r1, r2 = (int(v) for v in rng.choice(np.arange(1, n), 2, replace=False))
                q1, q2 = (int(v) for v in rng.choice(np.arange(n), 2, replace=False))
                x1 = zc.zc_sequence(n, r1, q1)
                worst_same = max(worst_same, abs(zc.cross_correlation(
                    x1, zc.zc_sequence(n, r1, q2))))
                worst_cross = max(worst_cross, abs(abs(zc.cross_correlation(
                    x1, zc.zc_sequence(n, r2, q2))) - 1 / math.sqrt(n)))
        ok = worst_same < 1e-10 and worst_cross < 1e-9
        report("criterion 3", ok,
               f"worst same-root |corr| = {worst_same:.2e} (<1e-10), "
               f"worst cross-root deviation = {worst_cross:.2e} (<1e-9)")
        assert ok


class TestCriterion4CrossSfBound:
    def test_thousand_draws_zero_violations(self):
        rng = np.random.default_rng(SEED + 4)
        pairs = [(7, 6), (8, 7), (9, 8)]
        violations = 0
        worst = 0.0
        for _ in range(1000):
            sf1, sf2 = pairs[int(rng.integers(len(pairs)))]
            n1, n2 = zc.SF_PRIMES[sf1], zc.SF_PRIMES[sf2]
            l_act = int(rng.integers(1, 5))
            cfg1 = SystemConfig(sf=sf1, n_rates=2, n_active=l_act)
            cfg2 = SystemConfig(sf=sf2, n_rates=2, n_active=l_act)
            c1 = np.sort(rng.choice(cfg1.n_cells, l_act, replace=False))
            c2 = np.sort(rng.choice(cfg2.n_cells, l_act, replace=False))
            delay = int(rng.integers(0, n1 - n2 + 1))
            v = abs(zc.multisym_sf_correlation(
                modem.modulate(c1, cfg1), modem.modulate(c2, cfg2), delay))
            r1v, q1v = codec.rate_offset_arrays(c1, sf1, n1, 1)
            r2v, q2v = codec.rate_offset_arrays(c2, sf2, n2, 1)
            eps = max(zc.epsilon_bound(n1, n2, int(ra), int(rb), int(qa), int(qb),
                                       delay)
                      for ra, qa in zip(r1v, q1v) for rb, qb in zip(r2v, q2v))
            bound = l_act**2 * math.sqrt((1 + 2 * eps) / n1)
            worst = max(worst, v / bound)
            violations += v > bound
        ok = violations == 0
        report("criterion 4", ok,
               f"1000 draws, {violations} violations, max |theta2|/bound = {worst:.3f}")
        assert ok


class TestCriterion5NoiselessLoopback:
    def test_identity_across_config_matrix(self):
        failures = []
        for sf in (6, 7):
            for p in (1, 2, 4):
                for l in (1, 2, 4):
                    cfg = SystemConfig(sf=sf, n_rates=p, n_active=l)
                    for mode in ("unit", "phase"):
                        c = harness.simulate_point(
                            cfg, None, 10_000, seed=SEED, m=None, fading=mode,
                            early_stop_errors=None, dtype=np.complex128)
                        if c["bit_errors"] or c["symbol_errors"]:
                            failures.append((sf, p, l, mode, c["symbol_errors"]))
        ok = not failures
        report("criterion 5", ok,
               "18 configs x 1e4 payloads x {unit, random-phase} gains: "
               + ("all exact" if ok else f"failures {failures}"))
        assert ok


class TestCriterion6TheorySimAgreement:
    def test_pointwise_agreement(self, agreement_bank):
        worst = 0.0
        lines = []
        for (p, l, m, snr), v in agreement_bank.items():
            if v["sim"] < 1e-4:
                continue
            rel = abs(v[THEORY_MODE] - v["sim"]) / v["sim"]
            worst = max(worst, rel)
            lines.append(f"P{p}L{l}m{m:g}@{snr:g}dB {rel:+.1%}")
        ok = worst <= 0.30
        report("criterion 6a", ok,
               f"max |theory-sim|/sim = {worst:.1%} over {len(lines)} points (<=30%)")
        assert ok, f"worst deviation {worst:.1%}: {lines}"

    def test_crossing_agreement(self, crossing_bank):
        worst = 0.0
        detail = []
        for key, v in crossing_bank.items():
            if key[0] != 7:
                continue
            gap = abs(v["theory"] - v["sim"])
            worst = max(worst, gap)
            detail.append(f"{key}: th={v['theory']:.2f} sim={v['sim']:.2f}")
        ok = worst <= 0.5
        report("criterion 6b", ok,
               f"max 1e-3 crossing gap theory vs sim = {worst:.2f} dB (<=0.5)")
        assert ok, detail


class TestCriterion7RelativeGains:
    def test_a_active_cells_gain(self, crossing_bank):
        gain = (crossing_bank[(7, 4, 4, 1.0)]["sim"]
                - crossing_bank[(7, 4, 2, 1.0)]["sim"])
        ok = 1.5 <= gain <= 2.5
        report("criterion 7a", ok,
               f"L=4 -> L=2 gain at BER 1e-3, m=1: {gain:.2f} dB (want 2.0 +/- 0.5; "
               "known honest red, measured physics gives ~1.3 dB)")
        assert ok, (
            f"measured {gain:.2f} dB; the spec target 2.0 +/- 0.5 dB is not "
            "attainable in this system (closed-form theory gives 1.19 dB); "
            "see the decisions ledger")

    def test_b_rate_count_cost(self, crossing_bank):
        cost = (crossing_bank[(7, 4, 4, 1.0)]["sim"]
                - crossing_bank[(7, 2, 4, 1.0)]["sim"])
        ok = cost <= 0.5
        report("criterion 7b", ok,
               f"P=2 -> P=4 cost at BER 1e-3, m=1: {cost:.2f} dB (<= 0.5)")
        assert ok

    def test_c_spreading_factor_gain(self, crossing_bank):
        gain = (crossing_bank[(7, 4, 4, 1.0)]["sim"]
                - crossing_bank[(8, 4, 4, 1.0)]["sim"])
        ok = 0.5 <= gain <= 1.5
        report("criterion 7c", ok,
               f"sf 7 -> 8 gain at BER 1e-3, m=1: {gain:.2f} dB (want 1.0 +/- 0.5)")
        assert ok


class TestCriterion8PdSic:
    def test_a_paired_superiority(self, collision_bank):
        ok = True
        details = []
        for (n_users, snr), v in sorted(collision_bank.items()):
            bd, bp = v["direct"].ber, v["pdsic"].ber
            point_ok = bp <= bd and (snr < 8.0 or bp < bd)
            ok &= point_ok
            details.append(f"Nu={n_users}@{snr:g}dB direct={bd:.2e} pdsic={bp:.2e}")
        report("criterion 8a", ok,
               "PD-SIC <= direct everywhere, strict at >= 8 dB: " + "; ".join(details))
        assert ok, details

    def test_b_absolute_floor_at_12db(self, collision_bank):
        row = collision_bank[(2, 12.0)]["pdsic"]
        total_bits = row.trials * SystemConfig(sf=7, n_rates=4,
                                               n_active=2).bits_per_symbol
        ok = row.ber <= 1e-4 and total_bits >= 10_000_000
        report("criterion 8b", ok,
               f"PD-SIC BER at 12 dB = {row.ber:.2e} over {total_bits} bits "
               "(target <= 1e-4; known honest red: this equals the single-user "
               "error floor, so the target is unreachable by any canceller)")
        assert ok, (
            f"measured {row.ber:.2e} over {total_bits} bits; 1e-4 at 12 dB is "
            "below the single-user error floor of this system (see ledger)")


class TestCriterion9Throughput:
    def test_formula_exact(self):
        cfg16 = SystemConfig(sf=7, n_rates=4, n_active=2)
        t2 = harness.compute_throughput(0.0, cfg16, 2)
        ok = t2 == pytest.approx(31250.0)
        report("criterion 9a", ok, f"throughput(ber=0, eta=16, Nu=2) = {t2} bits/s")
        assert ok

    def test_more_users_more_throughput(self, collision_bank):
        t2 = collision_bank[(2, 10.0)]["pdsic"].throughput
        t3 = collision_bank[(3, 10.0)]["pdsic"].throughput
        ok = t3 > t2
        report("criterion 9b", ok,
               f"PD-SIC throughput at 10 dB: Nu=3 {t3:.0f} > Nu=2 {t2:.0f} bits/s")
        assert ok


class TestCriterion10PathAudit:
    def test_at_least_one_path_everywhere(self, agreement_bank):
        wins = {"exact": 0, "eq30": 0}
        ok = True
        worst_best = 0.0
        for (p, l, m, snr), v in agreement_bank.items():
            if v["sim"] < 1e-4:
                continue
            rels = {mode: abs(v[mode] - v["sim"]) / v["sim"]
                    for mode in ("exact", "eq30")}
            best = min(rels, key=rels.get)
            wins[best] += 1
            worst_best = max(worst_best, rels[best])
            ok &= rels[best] <= 0.30
        report("criterion 10", ok,
               f"closer path counts {wins} (eq30 = closed form); worst best-path "
               f"deviation {worst_best:.1%} (<=30%). The exact-integrand path runs "
               "~2x the closed form before its dropped factor-2/prefactor pair, "
               "confirming the suspected cancellation.")
        assert ok


class TestCriterion11Determinism:
    def test_byte_identical_csv(self, tmp_path):
        specs = [
            ExperimentSpec(kind="ber-sim", cfg=SystemConfig(sf=7, n_rates=4,
                                                            n_active=4),
                           snr_grid=(4.0, 8.0), m=1.0, trials=20_000, seed=77),
            ExperimentSpec(kind="collision", cfg=SystemConfig(sf=7, n_rates=4,
                                                              n_active=2),
                           snr_grid=(10.0,), m=3.0, trials=512, seed=78,
                           n_users=2),
            ExperimentSpec(kind="correlation-suite",
                           cfg=SystemConfig(sf=7, n_rates=4, n_active=2), seed=79),
        ]
        ok = True
        for i, spec in enumerate(specs):
            a, b = tmp_path / f"{i}a.csv", tmp_path / f"{i}b.csv"
            harness.write_results(a, harness.run_experiment(spec), spec)
            harness.write_results(b, harness.run_experiment(spec), spec)
            ok &= a.read_bytes() == b.read_bytes()
        report("criterion 11", ok, "repeat runs emit byte-identical CSV "
                                   "(ber-sim, collision, correlation-suite)")
        assert ok
