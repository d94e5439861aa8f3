import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from batman import errors
from batman.reputation import EventRecord, MlmState, ReputationContract

NODE = bytes(32)


def feed(outcomes, s=150, n_e=150, ticks=None):
    contract = ReputationContract(NODE, s=s, n_e=n_e)
    ticks = ticks or range(1, len(outcomes) + 1)
    for t, x in zip(ticks, outcomes):
        contract.record_event(EventRecord(NODE, t, x))
    return contract


def test_first_event_seeds_running_mean():
    c = feed([1])
    assert c.mlm.mean == 1.0 and c.mlm.count == 1
    assert c.estimate_mlm() == 1.0


def test_two_events_average():
    assert feed([1, 0]).estimate_mlm() == 0.5


def test_all_failures():
    assert feed([0, 0, 0]).estimate_mlm() == 0.0


def test_ml_arithmetic():
    assert feed([1, 1, 0, 1]).estimate_ml() == 0.75


@pytest.mark.parametrize("method", ["estimate_ml", "estimate_mle", "estimate_mlm"])
def test_no_data(method):
    with pytest.raises(errors.NoData):
        getattr(ReputationContract(NODE), method)()


def test_mlt_window_mean():
    c = feed([1, 0, 1, 1], s=10)
    assert c.estimate_mlt(4) == 0.75


def test_mlt_empty_window_after_eviction():
    c = feed([1, 0, 1], s=10)
    with pytest.raises(errors.EmptyWindow):
        c.estimate_mlt(13)
    assert c.estimate_mlt(12) == 1.0  # only tick 3 lies in (2, 12]


def test_mlt_query_does_not_mutate():
    c = feed([1, 0, 1], s=10)
    with pytest.raises(errors.EmptyWindow):
        c.estimate_mlt(100)
    assert c.estimate_mlt(3) == pytest.approx(2 / 3)


def test_mlt_ignores_events_after_now():
    c = feed([1, 0, 0], s=10, ticks=[1, 5, 9])
    assert c.estimate_mlt(4) == 1.0


def test_mle_last_window():
    assert feed([1, 0, 1], n_e=2).estimate_mle() == 0.5


def test_mle_warm_up_uses_all_events():
    assert feed([1, 0, 1], n_e=10).estimate_mle() == pytest.approx(2 / 3)


def test_node_mismatch():
    c = ReputationContract(NODE)
    with pytest.raises(errors.NodeMismatch):
        c.record_event(EventRecord(b"\x01" * 32, 1, 1))


def test_non_monotone_tick():
    c = feed([1], ticks=[5])
    with pytest.raises(errors.NonMonotoneTick):
        c.record_event(EventRecord(NODE, 5, 0))
    assert c.total == 1


def test_outcome_must_be_binary():
    with pytest.raises(ValueError):
        EventRecord(NODE, 1, 2)


def test_500_random_events_running_mean_matches_ratio():
    rng = np.random.default_rng(11)
    outcomes = rng.integers(0, 2, 500).tolist()
    c = feed(outcomes)
    assert abs(c.estimate_mlm() - sum(outcomes) / len(outcomes)) <= 1e-9


def test_mlt_matches_brute_force_last_150():
    rng = np.random.default_rng(5)
    outcomes = rng.integers(0, 2, 1000).tolist()
    c = ReputationContract(NODE, s=150, n_e=150)
    for t, x in enumerate(outcomes, 1):
        c.record_event(EventRecord(NODE, t, x))
        window = outcomes[max(0, t - 150):t]
        assert c.estimate_mlt(t) == sum(window) / len(window)


def test_mle_matches_brute_force_final_150():
    rng = np.random.default_rng(6)
    outcomes = rng.integers(0, 2, 5000).tolist()
    c = feed(outcomes, n_e=150)
    assert c.estimate_mle() == sum(outcomes[-150:]) / 150


def test_permutation_sensitivity_witness():
    a = feed([1, 1, 0, 0], s=2, n_e=2)
    b = feed([0, 0, 1, 1], s=2, n_e=2)
    assert a.estimate_ml() == b.estimate_ml()
    assert a.estimate_mlm() == b.estimate_mlm()
    assert a.estimate_mle() != b.estimate_mle()
    assert a.estimate_mlt(4) != b.estimate_mlt(4)


def test_mlm_state_is_two_scalars():
    assert MlmState.__slots__ == ("count", "mean")


def test_estimate_dispatch_and_sample_counts():
    c = feed([1, 0, 1, 1, 0], s=3, n_e=2)
    assert c.estimate("ml") == 0.6
    assert c.estimate("mlt") == c.estimate_mlt(5)
    assert c.sample_count("ml") == 5
    assert c.sample_count("mle") == 2
    assert c.sample_count("mlt") == 3
    with pytest.raises(ValueError):
        c.estimate("median")


event_streams = st.lists(st.integers(0, 1), min_size=1, max_size=2000)


@settings(max_examples=200, deadline=None)
@given(event_streams, st.integers(1, 60))
def test_estimator_properties(outcomes, window):
    c = ReputationContract(NODE, s=window, n_e=window)
    for t, x in enumerate(outcomes, 1):
        c.record_event(EventRecord(NODE, t, x))
        assert len(c.event_window) <= window
        assert all(tt > t - window for tt, _ in c.time_window.buffer)
    ml, mlm, mle, mlt = c.estimate_ml(), c.estimate_mlm(), c.estimate_mle(), c.estimate_mlt(len(outcomes))
    for value in (ml, mlm, mle, mlt):
        assert 0.0 <= value <= 1.0
    assert abs(mlm - ml) <= 1e-9
    assert ml == sum(outcomes) / len(outcomes)
    # One event per tick and s == N_e: both windows hold the same events.
    assert mlt == mle


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 5), st.integers(0, 1)), min_size=1, max_size=300),
       st.integers(1, 40), st.integers(1, 40))
def test_sparse_arrivals_match_brute_force(gaps_outcomes, s, n_e):
    c = ReputationContract(NODE, s=s, n_e=n_e)
    log = []
    t = 0
    for gap, x in gaps_outcomes:
        t += gap
        c.record_event(EventRecord(NODE, t, x))
        log.append((t, x))
    for now in (t, t + 1, t + s // 2):
        in_window = [x for tt, x in log if now - s < tt <= now]
        if in_window:
            assert c.estimate_mlt(now) == sum(in_window) / len(in_window)
        else:
            with pytest.raises(errors.EmptyWindow):
                c.estimate_mlt(now)
    last = [x for _, x in log[-n_e:]]
    assert c.estimate_mle() == sum(last) / len(last)
