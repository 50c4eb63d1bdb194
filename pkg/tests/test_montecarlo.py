import json
import math

import pytest

from hexperc.montecarlo import (
    BLOCK_SAMPLES,
    RunConfig,
    Tally,
    csv_header,
    csv_row,
    estimate,
    merge,
    run,
)

P2 = 63 / 64  # exact one-fluid probability at s=2
B2 = (0.0, 1 / 32, 31 / 32)  # exact exactly-k law at s=2, n=2


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(s=1, n=2, samples=10)
    with pytest.raises(ValueError):
        RunConfig(s=2, n=1, samples=10)
    with pytest.raises(ValueError):
        RunConfig(s=2, n=2, samples=0)
    with pytest.raises(ValueError):
        RunConfig(s=2, n=2, samples=10, seed=-1)
    with pytest.raises(ValueError):
        RunConfig(s=2, n=2, samples=10, workers=0)


def test_run_rejects_mismatched_lattice(lat3):
    with pytest.raises(ValueError):
        run(lat3, RunConfig(s=2, n=2, samples=10))


def test_run_is_deterministic(lat2):
    cfg = RunConfig(s=2, n=3, samples=5000, seed=42)
    assert run(lat2, cfg).payload() == run(lat2, cfg).payload()


@pytest.mark.parametrize("samples", [1, 100, BLOCK_SAMPLES, BLOCK_SAMPLES + 1])
def test_worker_count_is_invisible(lat2, samples):
    base = run(lat2, RunConfig(s=2, n=2, samples=samples, seed=7, workers=1))
    more = run(lat2, RunConfig(s=2, n=2, samples=samples, seed=7, workers=4))
    assert base.payload() == more.payload()


def test_block_boundary_prefix(lat2):
    """One extra sample past a block boundary only adds that sample."""
    a = run(lat2, RunConfig(s=2, n=2, samples=BLOCK_SAMPLES, seed=3))
    b = run(lat2, RunConfig(s=2, n=2, samples=BLOCK_SAMPLES + 1, seed=3))
    assert b.samples - a.samples == 1
    diff_pf = [y - x for x, y in zip(a.per_fluid, b.per_fluid)]
    diff_ek = [y - x for x, y in zip(a.exact_k, b.exact_k)]
    assert all(d in (0, 1) for d in diff_pf)
    assert sum(diff_ek) == 1 and all(d in (0, 1) for d in diff_ek)


def test_seed_changes_output(lat2):
    a = run(lat2, RunConfig(s=2, n=2, samples=20000, seed=0))
    b = run(lat2, RunConfig(s=2, n=2, samples=20000, seed=1))
    assert a.payload() != b.payload()


def test_merge_pools_counts(lat2):
    a = run(lat2, RunConfig(s=2, n=2, samples=3000, seed=1))
    b = run(lat2, RunConfig(s=2, n=2, samples=2000, seed=2))
    c = merge(a, b)
    c.validate()
    assert c.samples == 5000
    assert c.seed is None
    assert c.per_fluid == [x + y for x, y in zip(a.per_fluid, b.per_fluid)]
    assert c.exact_k == [x + y for x, y in zip(a.exact_k, b.exact_k)]
    assert c.first_k == [x + y for x, y in zip(a.first_k, b.first_k)]
    assert c.all_n == a.all_n + b.all_n
    same = merge(a, a)
    assert same.seed == 1

    d = run(lat2, RunConfig(s=2, n=3, samples=100, seed=1))
    with pytest.raises(ValueError):
        merge(a, d)


def test_merge_is_associative(lat2):
    parts = [run(lat2, RunConfig(s=2, n=2, samples=500, seed=k)) for k in range(3)]
    left = merge(merge(parts[0], parts[1]), parts[2])
    right = merge(parts[0], merge(parts[1], parts[2]))
    assert left.payload() == right.payload()


def test_validate_catches_tampering(lat2):
    t = run(lat2, RunConfig(s=2, n=2, samples=1000, seed=0))
    broken = Tally(**{**t.payload()})
    broken.exact_k = list(broken.exact_k)
    broken.exact_k[0] += 1
    with pytest.raises(ValueError):
        broken.validate()
    broken2 = Tally(**{**t.payload()})
    broken2.all_n += 1
    with pytest.raises(ValueError):
        broken2.validate()


def test_json_roundtrip(lat2):
    t = run(lat2, RunConfig(s=2, n=3, samples=2500, seed=9))
    back = Tally.from_json(t.to_json())
    assert back.payload() == t.payload()
    tampered = json.loads(t.to_json())
    tampered["all_n"] += 1
    with pytest.raises(ValueError):
        Tally.from_json(json.dumps(tampered))


def test_frequencies_match_exact_law(lat2):
    size = 200_000
    t = run(lat2, RunConfig(s=2, n=2, samples=size, seed=0))
    p_hat = sum(t.per_fluid) / (2 * size)
    # pooled estimator has variance var(k/n)/N <= p(1-p)/N
    sd = math.sqrt(P2 * (1 - P2) / size)
    assert abs(p_hat - P2) < 5 * sd
    for k, b in enumerate(B2):
        sd_b = math.sqrt(max(b * (1 - b), 1 / size) / size)
        assert abs(t.exact_k[k] / size - b) < 5 * sd_b


def test_first_fluids_are_binomial(lat2):
    # The free planes are independent uniform masks, so the number of
    # percolating fluids among the first n - 1 is Binomial(n - 1, p).
    size = 200_000
    t = run(lat2, RunConfig(s=2, n=3, samples=size, seed=4))
    probs = [(1 - P2) ** 2, 2 * P2 * (1 - P2), P2**2]
    for j, prob in enumerate(probs):
        sd = math.sqrt(max(prob * (1 - prob), 1 / size) / size)
        assert abs(t.first_k[j] / size - prob) < 5 * sd


def test_estimate_recovers_exact_values(lat2):
    size = 200_000
    t = run(lat2, RunConfig(s=2, n=2, samples=size, seed=0))
    est = estimate(t, z=5.0)
    assert est.p_lo <= P2 <= est.p_hi
    for k, b in enumerate(B2):
        assert est.b_lo[k] <= b <= est.b_hi[k]
    true_ratio = (31 / 32) / P2**2  # equals 3968/3969
    assert est.ratio_lo <= true_ratio <= est.ratio_hi
    assert est.ratio == pytest.approx(true_ratio, abs=0.002)
    # the interval must reflect the q/p**n noise cancellation: far narrower
    # than the naive width from independent q and p errors
    naive = 5.0 * math.sqrt((31 / 32) * (1 / 32) / size) / P2**2
    assert est.ratio_hi - est.ratio_lo < naive / 2


def test_estimate_degenerate_cases():
    t = Tally(s=2, n=2, samples=100, seed=0,
              per_fluid=[0, 0], exact_k=[100, 0, 0], first_k=[100, 0], all_n=0)
    est = estimate(t)
    assert est.p_hat == 0.0 and est.ratio is None and "degenerate" in est.note
    t = Tally(s=2, n=2, samples=100, seed=0,
              per_fluid=[100, 100], exact_k=[0, 0, 100], first_k=[0, 100], all_n=100)
    est = estimate(t)
    assert est.p_hat == 1.0 and est.ratio is None
    empty = Tally.empty(2, 2, 0)
    with pytest.raises(ValueError):
        estimate(empty)


def test_csv_shapes(lat2):
    t = run(lat2, RunConfig(s=2, n=3, samples=1000, seed=0))
    est = estimate(t)
    header = csv_header(3)
    row = csv_row(t, est)
    assert len(header) == len(row)
    assert header[:4] == ["s", "n", "samples", "seed"]
    assert row[:4] == [2, 3, 1000, 0]
    assert "b3" in header and "b4" not in header
