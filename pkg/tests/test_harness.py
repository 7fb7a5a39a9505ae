import numpy as np
import pytest

from nonxcrc.core import InputError, LambdaGrid, RiskSpec
from nonxcrc.data import SyntheticConfig, generate_elec_like, generate_qa_fixture, generate_synthetic
from nonxcrc.harness import (IntervalTask, MethodConfig, MultilabelTask, RollingProtocol,
                             WeightScheme, parity_split, qa_grid, read_trace_csv, rolling_average,
                             run_qa_trials, run_rolling, run_trials, summarize, trial_seed,
                             write_trace_csv)
from nonxcrc.core import TracePoint

SPEC = RiskSpec(0.2)
GRID = LambdaGrid.linspace()


def _synth(n, seed=0, setting="iid"):
    return generate_synthetic(SyntheticConfig(n_points=n, setting=setting,
                                              changepoint_steps=(), seed=seed))


def _protocol(*methods, warmup=200):
    return RollingProtocol(methods or (MethodConfig("crc"),), warmup=warmup)


def test_weight_scheme_parse():
    assert WeightScheme.parse("uniform").kind == "uniform"
    assert WeightScheme.parse("decay:0.9").rho == 0.9
    m = WeightScheme.parse("maxent:2:0.05")
    assert (m.beta, m.eps) == (2.0, 0.05)
    for bad in ("decay", "decay:2", "maxent:-1", "foo", "decay:x", "uniform:1"):
        with pytest.raises(InputError):
            WeightScheme.parse(bad)


def test_parity_split_covers_once():
    for n in (1, 2, 7, 200):
        odd, even = parity_split(n)
        assert sorted(np.concatenate([odd, even]).tolist()) == list(range(1, n + 1))
        assert np.all(odd % 2 == 1) and np.all(even % 2 == 0)


def test_rolling_step_count():
    X, Y = _synth(202)
    assert len(run_rolling(X, Y, _protocol(), SPEC, GRID, MultilabelTask())) == 2
    with pytest.raises(InputError):
        run_rolling(X[:201], Y[:201], _protocol(), SPEC, GRID, MultilabelTask())


def test_crc_and_uniform_nonx_traces_identical():
    X, Y = _synth(260, seed=3)
    tr = run_rolling(X, Y, _protocol(MethodConfig("crc"), MethodConfig("nonx_crc")), SPEC, GRID,
                     MultilabelTask())
    crc = [(t.timestep, t.lambda_hat, t.test_loss) for t in tr if t.method == "crc"]
    nonx = [(t.timestep, t.lambda_hat, t.test_loss) for t in tr if t.method == "nonx_crc"]
    assert crc == nonx and len(crc) == 60


def test_lambda_hat_on_grid():
    X, Y = _synth(240, seed=1)
    proto = _protocol(MethodConfig("crc"), MethodConfig("nonx_crc", WeightScheme("decay", 0.95)))
    for t in run_rolling(X, Y, proto, SPEC, GRID, MultilabelTask()):
        assert np.any(np.isclose(GRID.values, t.lambda_hat, rtol=0, atol=0))
        assert 0 <= t.test_loss <= 1


def test_top_k_rolling_uses_integer_grid():
    X, Y = _synth(230)
    grid = LambdaGrid.integers(10)
    tr = run_rolling(X, Y, _protocol(), SPEC, grid, MultilabelTask("top_k"))
    assert all(float(t.lambda_hat).is_integer() and t.set_size == t.lambda_hat for t in tr)


def test_interval_task_wls():
    data = generate_elec_like(260, seed=2)
    proto = _protocol(MethodConfig("crc"),
                      MethodConfig("nonx_crc_wls", WeightScheme("decay", 0.99), weighted_model=True))
    tr = run_rolling(data.features, data.target, proto, RiskSpec(0.05), GRID, IntervalTask())
    assert len(tr) == 120
    assert all(t.set_size == pytest.approx(2 * t.lambda_hat) for t in tr)


def test_trials_deterministic_and_order_independent(tmp_path):
    X, Y = _synth(215, seed=0)

    def trial(t, seed):
        Xs, Ys = _synth(215, seed=seed)
        return run_rolling(Xs, Ys, _protocol(MethodConfig("crc"), MethodConfig("nonx_crc")), SPEC,
                           GRID, MultilabelTask(), trial=t)

    a = run_trials(trial, 2, master_seed=9)
    b = run_trials(trial, 2, master_seed=9)
    write_trace_csv(tmp_path / "a.csv", a)
    write_trace_csv(tmp_path / "b.csv", list(reversed(b)))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert read_trace_csv(tmp_path / "a.csv") == a
    assert trial_seed(9, 0) != trial_seed(9, 1)


def test_rolling_average():
    assert rolling_average([3, 1, 4], 1).tolist() == [3, 1, 4]
    np.testing.assert_allclose(rolling_average([0, 1, 2, 3], 2), [0, 0.5, 1.5, 2.5])
    assert rolling_average([2.0] * 5, 3).tolist() == [2.0] * 5
    with pytest.raises(InputError):
        rolling_average([1.0], 0)


def test_summarize():
    s = summarize([TracePoint(0, 1, "crc", 0.1, 0.1), TracePoint(0, 2, "crc", 0.3, 0.3)])
    st = s.per_method["crc"]
    assert (st.mean_loss, st.median_loss, st.mean_lambda) == pytest.approx((0.2, 0.2, 0.2))
    assert st.mean_set_size is None
    s = summarize([TracePoint(0, i, "crc", 0.0, v, 2.0) for i, v in enumerate([0, 0, 1])])
    assert s.per_method["crc"].mean_loss == pytest.approx(1 / 3)
    assert s.per_method["crc"].median_loss == 0
    with pytest.raises(InputError):
        summarize([])


def test_qa_trials():
    recs = generate_qa_fixture(60, seed=1)
    spec = RiskSpec(0.3)
    tr = run_qa_trials(recs, 58, 1, spec, "uniform", seed=5)
    assert len(tr) == 2 and len({t.lambda_hat for t in tr}) == 1
    tr = run_qa_trials(recs, 40, 3, spec, "uniform", seed=5)
    for trial in range(3):
        assert len({t.lambda_hat for t in tr if t.trial == trial}) == 1
    sim = run_qa_trials(recs, 40, 3, spec, "similarity", seed=5)
    assert {t.method for t in sim} == {"nonx_crc"} and len(sim) == 60
    assert run_qa_trials(recs, 40, 3, spec, "similarity", seed=5) == sim
    with pytest.raises(InputError):
        run_qa_trials(recs, 60, 1, spec, "uniform")
    with pytest.raises(InputError):
        run_qa_trials(recs, 10, 1, spec, "other")


def test_qa_grid_starts_empty():
    recs = generate_qa_fixture(5, seed=0)
    from nonxcrc.harness import qa_profiles
    grid = qa_grid(recs)
    losses, sizes = qa_profiles(recs, grid)
    assert np.all(sizes[:, 0] == 0) and np.all(losses[:, 0] == 1.0)
    assert np.all(sizes[:, -1] == 40)
