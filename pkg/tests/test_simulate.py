import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from clonal_recur import BASE_PARAMS, FIG1_PARAMS, TrajectoryOutcome, mutation_intensity
from clonal_recur import analytics as A
from clonal_recur.simulate import (
    EarlyRecurrence,
    StopRule,
    clones_born_before,
    diversity_summary,
    read_runs_csv,
    run_ensemble,
    simpson_index,
    simulate_clone,
    simulate_one,
    write_clones_csv,
    write_runs_csv,
    yule_size_at,
    yule_sizes,
)
from clonal_recur.simulate import kernel

needs_cython = pytest.mark.skipif("cython" not in kernel.KERNELS, reason="extension not built")


def _same_outcome(a: TrajectoryOutcome, b: TrajectoryOutcome) -> None:
    assert a.recurrence_time == b.recurrence_time
    assert a.stop_time == b.stop_time
    assert a.z0_final == b.z0_final
    assert np.array_equal(a.birth_times, b.birth_times)
    assert np.array_equal(a.sizes, b.sizes)
    assert a.counters == b.counters


# ---------------------------------------------------------------- backends


@needs_cython
@pytest.mark.parametrize("params", [FIG1_PARAMS, BASE_PARAMS, FIG1_PARAMS.replace(sensitive_mode="deterministic")],
                         ids=["fig1-stochastic", "base", "fig1-deterministic"])
@pytest.mark.parametrize("stop", [StopRule.recurrence(), StopRule.fixed(12.0)], ids=["recurrence", "fixed"])
def test_backends_agree_seed_for_seed(monkeypatch, params, stop):
    for idx in range(4):
        monkeypatch.setattr(kernel, "run_kernel", kernel.KERNELS["python"])
        ref = simulate_one(params, stop, (7, idx))
        monkeypatch.setattr(kernel, "run_kernel", kernel.KERNELS["cython"])
        fast = simulate_one(params, stop, (7, idx))
        _same_outcome(ref, fast)


@needs_cython
def test_backends_agree_on_single_clone(monkeypatch):
    sizes = {}
    for name in ("python", "cython"):
        monkeypatch.setattr(kernel, "run_kernel", kernel.KERNELS[name])
        sizes[name] = [simulate_clone(1.0, 0.8, 6.0, (3, i)) for i in range(50)]
    assert sizes["python"] == sizes["cython"]


# ---------------------------------------------------------------- single runs


@pytest.mark.parametrize("params", [FIG1_PARAMS, BASE_PARAMS])
def test_rerun_is_bit_identical(params):
    _same_outcome(simulate_one(params, StopRule.recurrence(), (1, 5)),
                  simulate_one(params, StopRule.recurrence(), (1, 5)))


@pytest.mark.parametrize("params", [FIG1_PARAMS, BASE_PARAMS])
def test_recurrence_stops_on_crossing_event(params):
    for i in range(20):
        out = simulate_one(params, StopRule.recurrence(), (2, i))
        if out.censored:
            continue
        # resistant count moves by one per event, so it stops exactly one above a*n
        assert out.z1_final == math.floor(params.threshold) + 1
        assert out.stop_time == out.recurrence_time
        assert out.birth_times.max() <= out.recurrence_time


def test_pure_birth_clones_never_shrink():
    out = simulate_one(BASE_PARAMS, StopRule.fixed(15.0), (4, 0))
    assert (out.sizes >= 1).all()
    assert out.z1_final >= out.num_clones
    assert np.all(np.diff(out.birth_times) >= 0)


def test_fixed_stop_records_recurrence_en_route():
    t = A.zeta(BASE_PARAMS) + 5.0
    out = simulate_one(BASE_PARAMS, StopRule.fixed(t), (5, 1))
    assert out.stop_time == t
    assert out.recurrence_time is not None and out.recurrence_time < t
    assert out.z1_final > BASE_PARAMS.threshold


def test_stop_rule_validation():
    with pytest.raises(ValueError):
        StopRule("sometime")
    with pytest.raises(ValueError):
        StopRule.fixed(-1.0)
    with pytest.raises(ValueError):
        StopRule("horizon")


# ---------------------------------------------------------------- distributional oracles


def test_mutation_count_is_poisson():
    p, t, reps = BASE_PARAMS, 2.0, 100_000
    ens = run_ensemble(p, StopRule.fixed(t), reps, 21)
    m = np.array([o.counters["mutations"] for o in ens], dtype=float)
    cap = p.mu_eff * p.n * -math.expm1(p.lambda0 * t) / -p.lambda0
    ratio = m.var(ddof=1) / m.mean()
    assert 0.95 <= ratio <= 1.05
    assert abs(m.mean() - cap) < 3 * math.sqrt(cap / reps)


def test_mutation_epochs_follow_intensity():
    p, t = BASE_PARAMS, 10.0
    births = np.concatenate([o.birth_times for o in run_ensemble(p, StopRule.fixed(t), 400, 22)])
    cdf = lambda s: np.expm1(p.lambda0 * s) / math.expm1(p.lambda0 * t)
    assert stats.kstest(births, cdf).pvalue > 0.01
    # same law from the intensity function directly
    assert mutation_intensity(p, 0.0) / mutation_intensity(p, t) == pytest.approx(math.exp(-p.lambda0 * t))


def test_event_driven_yule_matches_geometric_law():
    n, t = 100_000, 5.0
    event = np.array([simulate_clone(0.2, 0.0, t, (31, i)) for i in range(n)])
    direct = yule_sizes(0.2, t, n, seed=(32, 0))
    assert stats.ks_2samp(event, direct).pvalue > 0.01


def test_clone_sizes_in_full_runs_are_geometric():
    # randomized PIT: size k of a clone founded at b is Geometric(exp(-lambda1*(T-b)))
    p, T = BASE_PARAMS, 12.0
    rng = np.random.default_rng(0)
    u = []
    for o in run_ensemble(p, StopRule.fixed(T), 300, 23):
        q = np.exp(-p.lambda1 * (T - o.birth_times))
        lower = 1 - (1 - q) ** (o.sizes - 1)
        upper = 1 - (1 - q) ** o.sizes
        u.append(lower + rng.random(len(q)) * (upper - lower))
    assert stats.kstest(np.concatenate(u), "uniform").pvalue > 0.01


def test_birth_death_clone_extinction_and_mean():
    r1, d1, t, reps = 1.0, 0.8, 5.0, 20_000
    z = np.array([simulate_clone(r1, d1, t, (41, i)) for i in range(reps)], dtype=float)
    lam = r1 - d1
    em = math.exp(-lam * t)
    p0 = d1 * (1 - em) / (r1 - d1 * em)
    se0 = math.sqrt(p0 * (1 - p0) / reps)
    assert abs((z == 0).mean() - p0) < 3 * se0
    assert abs(z.mean() - math.exp(lam * t)) < 3 * z.std(ddof=1) / math.sqrt(reps)


def test_stochastic_sensitive_pool_mean():
    p, t, reps = FIG1_PARAMS.replace(n=200), 3.0, 4000
    z0 = np.array([o.z0_final for o in run_ensemble(p, StopRule.fixed(t), reps, 51)])
    expect = p.n * math.exp(p.lambda0 * t)
    assert abs(z0.mean() - expect) < 3 * z0.std(ddof=1) / math.sqrt(reps)


def test_yule_size_at_is_geometric():
    assert yule_size_at(0.2, 0.0, (1, 0)) == 1
    with pytest.raises(ValueError):
        yule_size_at(0.2, -1.0, (1, 0))
    x = yule_sizes(0.2, 3.0, 50_000, seed=(9, 0))
    assert x.min() >= 1
    assert x.mean() == pytest.approx(math.exp(0.6), rel=0.02)


# ---------------------------------------------------------------- ensembles


def test_empty_ensemble():
    ens = run_ensemble(FIG1_PARAMS, StopRule.recurrence(), 0, 1)
    assert len(ens) == 0 and ens.attempted == 0


def test_conditioning_is_thread_invariant():
    cond = EarlyRecurrence(1.0)
    one = run_ensemble(FIG1_PARAMS, StopRule.recurrence(), 30, 8, cond, threads=1)
    three = run_ensemble(FIG1_PARAMS, StopRule.recurrence(), 30, 8, cond, threads=3)
    assert one.run_ids == three.run_ids and one.attempted == three.attempted
    for a, b in zip(one, three):
        _same_outcome(a, b)
    deadline = A.zeta(FIG1_PARAMS) - 1.0
    assert all(o.recurrence_time < deadline for o in one)
    assert 0 < one.acceptance_rate < 1


def test_attempt_budget_exhaustion_is_flagged(caplog):
    ens = run_ensemble(FIG1_PARAMS, StopRule.recurrence(), 1000, 8, EarlyRecurrence(1.0), max_attempts=50)
    assert ens.exhausted and ens.attempted == 50 and len(ens) < 1000
    assert "exhausted" in caplog.text


def test_conditioning_rejects_bad_y():
    with pytest.raises(ValueError):
        run_ensemble(FIG1_PARAMS, StopRule.recurrence(), 1, 1, EarlyRecurrence(100.0))


# ---------------------------------------------------------------- diversity


def test_simpson_index_values():
    assert simpson_index([5]) == 1.0
    assert simpson_index([1, 1]) == 0.5
    assert simpson_index([3, 1]) == pytest.approx(10 / 16)
    assert simpson_index([]) == 0.0
    assert simpson_index([0, 0]) == 0.0


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=50))
@settings(max_examples=200, deadline=None)
def test_simpson_index_bounds(sizes):
    r = simpson_index(sizes)
    alive = sum(1 for s in sizes if s > 0)
    if alive == 0:
        assert r == 0.0
    else:
        assert 1 / alive - 1e-12 <= r <= 1 + 1e-12


def test_diversity_summary_windows():
    out = simulate_one(BASE_PARAMS, StopRule.fixed(20.0), (6, 0))
    s = diversity_summary(out, [(0.0, 2.0), (2.0, 20.0)])
    assert s.num_clones_generated == out.num_clones
    assert sum(s.window_counts.values()) == out.num_clones
    assert sum(s.window_mass.values()) == out.z1_final
    assert clones_born_before(out, 2.0) == s.window_counts[(0.0, 2.0)]
    with pytest.raises(ValueError):
        diversity_summary(out, [(3.0, 1.0)])
    with pytest.raises(ValueError):
        diversity_summary(out, [(0.0, 25.0)])


# ---------------------------------------------------------------- CSV


def test_runs_csv_is_deterministic_and_round_trips(tmp_path):
    p = FIG1_PARAMS.replace(d1=0.9)
    ens = run_ensemble(p, StopRule.recurrence(horizon=15.0), 40, 3)
    assert ens.censored > 0
    write_runs_csv(ens, tmp_path / "a.csv")
    write_runs_csv(run_ensemble(p, StopRule.recurrence(horizon=15.0), 40, 3, threads=2), tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    rows = read_runs_csv(tmp_path / "a.csv")
    assert [r["gamma"] for r in rows] == [o.recurrence_time for o in ens]
    assert [r["censored"] for r in rows] == [o.censored for o in ens]
    assert [r["simpson"] for r in rows] == [simpson_index(o.sizes) for o in ens]
    header = (tmp_path / "a.csv").read_text().splitlines()[0]
    assert header == "run_id,seed,gamma,censored,z1_final,num_clones_generated,num_clones_alive,simpson"
    write_clones_csv(ens, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "run_id,clone_id,birth_time,size"
    assert len(lines) - 1 == sum(o.num_clones for o in ens)
