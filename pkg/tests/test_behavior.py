import numpy as np
import pytest
from hypothesis import given, strategies as st

from dnsarsa import behavior as bh
from dnsarsa.dnf import DT
from dnsarsa.environment import RingWorld, WorldParams, hue_rows, render_percept
from dnsarsa.errors import WTAViolation

K = 4
HIGH, LOW = 1e9, -1e9


def eb_with(d_int=None, d_cos=None, d_val=None):
    eb = bh.EBSet.at_rest(K)
    if d_int is not None:
        eb.d_int = np.asarray(d_int, dtype=float)
    if d_cos is not None:
        eb.d_cos = np.asarray(d_cos, dtype=float)
    if d_val is not None:
        eb.d_val = np.asarray(d_val, dtype=float)
    return eb


def run_intentions(eb, seconds, cos_input=None):
    for _ in range(int(round(seconds / DT))):
        ni = bh.step_intention_nodes(eb)
        if cos_input is not None:
            nc = bh.step_cos_nodes(eb, cos_input)
            ni.d_cos = nc.d_cos
        eb = ni
    return eb


# intention nodes

def test_no_selection_without_drive():
    eb = run_intentions(eb_with(d_val=np.full(K, 0.05)), 5.0)
    assert (eb.int_out() < 0.5).all()


def test_value_drive_selects_one():
    eb = eb_with(d_val=[0, 0, 1, 0])
    t_cross = None
    for k in range(int(3 / DT)):
        eb = bh.step_intention_nodes(eb)
        if t_cross is None and eb.int_out()[2] > 0.5:
            t_cross = (k + 1) * DT
    assert t_cross is not None and t_cross < 1.0
    f = eb.int_out()
    assert f[2] > 0.5 and (np.delete(f, 2) < 0.5).all()


def test_own_cos_shuts_winner_down():
    eb = run_intentions(eb_with(d_val=[0, 1, 0, 0]), 2.0)
    assert eb.int_out()[1] > 0.5
    eb.d_cos = np.array([LOW, HIGH, LOW, LOW])
    for k in range(int(1 / DT)):
        eb = bh.step_intention_nodes(eb)
    assert eb.int_out()[1] < 0.1


def test_exact_tie_goes_to_lowest_index():
    eb = run_intentions(eb_with(d_val=[0, 0.5, 0.5, 0]), 3.0)
    assert eb.active_intention() == 1
    assert (eb.int_out() > 0.5).sum() == 1


@given(st.lists(st.floats(0, 1), min_size=K, max_size=K))
def test_at_most_one_winner_for_any_values(vals):
    v = np.asarray(vals)
    if v.sum() > 0:
        v = v / v.sum()
    eb = run_intentions(eb_with(d_val=v), 3.0)
    assert (eb.int_out() > 0.5).sum() <= 1


# CoS nodes

def test_cos_rest_without_input():
    eb = eb_with()
    for _ in range(int(5 / DT)):
        eb = bh.step_cos_nodes(eb, np.zeros(K))
    nxt = bh.step_cos_nodes(eb, np.zeros(K))
    # steady, sub-threshold and close to h (the soft ramp leaks a little inhibition)
    assert np.allclose(nxt.d_cos, eb.d_cos, atol=1e-9)
    assert np.allclose(eb.d_cos, -5.0, atol=1.0) and (eb.cos_out() < 0.05).all()


def test_cos_crosses_with_input_and_own_intention():
    eb = eb_with(d_int=[LOW, LOW, HIGH, LOW])
    for _ in range(int(2 / DT)):
        eb = bh.step_cos_nodes(eb, np.array([0, 0, 2.0, 0]))
    assert eb.cos_out()[2] > 0.5


def _cos_crossing_time(d_int, inp):
    eb = eb_with(d_int=d_int)
    for k in range(int(5 / DT)):
        eb = bh.step_cos_nodes(eb, inp)
        if eb.cos_out()[2] > 0.5:
            return (k + 1) * DT
    return np.inf


def test_competing_intention_delays_cos():
    inp = np.array([0, 0, 1.5, 0])
    own = _cos_crossing_time([LOW, LOW, HIGH, LOW], inp)
    other = _cos_crossing_time([HIGH, LOW, LOW, LOW], inp)
    assert own < other


# value nodes

def test_value_uniform_at_cold_start():
    eb = eb_with()
    assert np.allclose(bh.read_value_nodes(eb, np.zeros((K, K))), 0.25)


def test_value_one_hot_column():
    eb = eb_with(d_cos=[LOW, HIGH, LOW, LOW])
    W = np.zeros((K, K))
    W[:, 1] = [0.2, 0.8, 0, 0]
    assert np.allclose(bh.read_value_nodes(eb, W), [0.2, 0.8, 0, 0], atol=1e-9)


@given(st.lists(st.floats(0, 1), min_size=K * K, max_size=K * K), st.floats(0, 2))
def test_equal_noise_keeps_argmax(ws, c):
    eb = eb_with(d_cos=[HIGH, LOW, LOW, LOW])
    W = np.reshape(ws, (K, K))
    a = bh.read_value_nodes(eb, W)
    b = bh.read_value_nodes(eb, W, np.full(K, c))
    if np.sort(a)[-1] - np.sort(a)[-2] > 1e-9:
        assert np.argmax(a) == np.argmax(b)


def test_value_sums_to_one():
    eb = eb_with(d_cos=[HIGH, LOW, LOW, LOW])
    W = np.random.default_rng(0).random((K, K))
    assert bh.read_value_nodes(eb, W).sum() == pytest.approx(1.0, abs=1e-12)


# fields and motor

def _settle(percept_input, eb, seconds=1.0, pp=bh.PerceptionParams()):
    perc = bh.Perception(pp)
    for _ in range(int(seconds / DT)):
        perc = bh.step_percept_and_cos_fields(percept_input, eb, perc)
    return perc


def _world(angle, color):
    return RingWorld(WorldParams(), 0.0, np.array([angle]), np.array([color]))


def test_fields_quiet_without_blocks_or_intention():
    pp = bh.PerceptionParams()
    perc = _settle(np.zeros((pp.n_hue, pp.n_pos)), eb_with())
    assert perc.percept.u.max() < 0 and perc.cos.u.max() < 0


def test_centered_target_lights_cos_field():
    pp = bh.PerceptionParams()
    eb = eb_with(d_int=[LOW, HIGH, LOW, LOW])
    inp = render_percept(_world(0.0, 1), pp.n_hue, pp.n_pos)
    perc = bh.Perception(pp)
    t = None
    for k in range(int(1 / DT)):
        perc = bh.step_percept_and_cos_fields(inp, eb, perc)
        if t is None and perc.cos.u.max() > 0:
            t = (k + 1) * DT
    assert t is not None and t <= 0.5
    assert bh.cos_field_input(perc)[1] > 0


def test_peripheral_target_only_in_percept_field():
    pp = bh.PerceptionParams()
    eb = eb_with(d_int=[LOW, HIGH, LOW, LOW])
    inp = render_percept(_world(np.deg2rad(40), 1), pp.n_hue, pp.n_pos)
    perc = _settle(inp, eb)
    assert perc.percept.u[hue_rows(4, 16)[1]].max() > 0
    assert perc.cos.u.max() < 0


def test_peak_bearing_decoded():
    pp = bh.PerceptionParams()
    eb = eb_with(d_int=[LOW, HIGH, LOW, LOW])
    inp = render_percept(_world(np.deg2rad(-20), 1), pp.n_hue, pp.n_pos)
    perc = _settle(inp, eb)
    (b,) = bh.peak_bearings(perc, 1)
    assert b == pytest.approx(np.deg2rad(-20), abs=np.deg2rad(3))


def test_motor_centered_peak_is_still():
    pp = bh.PerceptionParams()
    eb = eb_with(d_int=[LOW, HIGH, LOW, LOW])
    perc = _settle(render_percept(_world(0.0, 1), pp.n_hue, pp.n_pos), eb)
    assert abs(bh.motor_command(perc, eb, bh.MotorParams(3.0, np.pi / 2))) < 0.02


def test_motor_saturates():
    pp = bh.PerceptionParams()
    eb = eb_with(d_int=[LOW, HIGH, LOW, LOW])
    perc = _settle(render_percept(_world(np.deg2rad(30), 1), pp.n_hue, pp.n_pos), eb)
    om = bh.motor_command(perc, eb, bh.MotorParams(k_p=3.0, omega_max=np.pi / 2))
    assert om == pytest.approx(np.pi / 2)


def test_motor_scans_without_peak():
    pp = bh.PerceptionParams()
    eb = eb_with(d_int=[LOW, HIGH, LOW, LOW])
    perc = _settle(np.zeros((pp.n_hue, pp.n_pos)), eb)
    mp = bh.MotorParams(omega_search=0.7)
    assert bh.motor_command(perc, eb, mp) == 0.7


def test_motor_idle_without_intention():
    pp = bh.PerceptionParams()
    perc = _settle(render_percept(_world(0.3, 1), pp.n_hue, pp.n_pos), eb_with())
    assert bh.motor_command(perc, eb_with()) == 0.0


# events

def test_extract_events_basic():
    n = 100
    fi, fc = np.zeros((n, 2)), np.zeros((n, 2))
    fi[10:30, 0] = 1
    fc[28:60, 0] = 1
    fi[40:70, 1] = 1
    fc[65:, 1] = 1
    ev = bh.extract_events(fi, fc, dt=0.1)
    assert [e.behavior for e in ev] == [0, 1]
    assert ev[0].t_on == pytest.approx(1.0) and ev[0].t_off == pytest.approx(3.0)
    assert ev[0].cos_time == pytest.approx(2.8)
    assert ev[1].cos_time == pytest.approx(6.5)


def test_extract_events_open_and_incomplete():
    fi, fc = np.zeros((50, 2)), np.zeros((50, 2))
    fi[5:15, 0] = 1
    fi[20:, 1] = 1
    ev = bh.extract_events(fi, fc, dt=1.0)
    assert ev[0].cos_time is None and ev[0].t_off == 15.0
    assert ev[1].t_off is None


def test_extract_events_rejects_overlap():
    fi = np.zeros((10, 2))
    fi[2:6, 0] = 1
    fi[5:8, 1] = 1
    with pytest.raises(WTAViolation):
        bh.extract_events(fi, np.zeros((10, 2)))


def test_extract_events_empty():
    assert bh.extract_events(np.zeros((0, 3)), np.zeros((0, 3))) == []
