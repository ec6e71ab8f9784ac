import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavitycnot.pulses import (
    CAVITY_STIRAP,
    LAMBDA_STIRAP,
    FlatTopShape,
    PulseShape,
    PulseTable,
    active_couplings,
    build_cnot_protocol,
    gaussian_value,
    merge_adjacent_pulses,
)
from cavitycnot.statespace import AtomLevel

G0, GA, G1, E, U = AtomLevel.G0, AtomLevel.GA, AtomLevel.G1, AtomLevel.E, AtomLevel.U


def test_gaussian_value_examples():
    p = PulseShape(10.0)
    assert gaussian_value(p, 0.0) == 10
    assert gaussian_value(p, 1.0) == pytest.approx(10 * math.exp(-1))
    assert gaussian_value(PulseShape(10.0, phase=math.pi), 0.0) == pytest.approx(-10)


@given(
    st.floats(0, 100),
    st.floats(0.1, 10),
    st.floats(-10, 10),
    st.floats(-math.pi, math.pi),
    st.floats(-20, 20),
)
def test_gaussian_value_formula(amp, width, center, phase, t):
    got = gaussian_value(PulseShape(amp, width, center, phase), t)
    want = amp * math.exp(-(((t - center) / width) ** 2)) * complex(math.cos(phase), math.sin(phase))
    assert got == pytest.approx(want, abs=1e-12)


def test_shape_validation():
    with pytest.raises(ValueError):
        PulseShape(-1.0)
    with pytest.raises(ValueError):
        PulseShape(1.0, width=0.0)
    with pytest.raises(ValueError):
        FlatTopShape(1.0, center=2.0, end=1.0)


def test_flat_top_envelope():
    p = FlatTopShape(5.0, 1.0, center=0.0, end=3.0)
    assert p.envelope(1.7) == 5.0
    assert p.envelope(-1.0) == pytest.approx(5 * math.exp(-1))
    assert p.envelope(4.0) == pytest.approx(5 * math.exp(-1))


def test_default_protocol(protocol):
    assert len(protocol.steps) == 6
    assert len(protocol.pulses) == 12
    for step in protocol.steps:
        assert step.second.shape.center - step.first.shape.center == pytest.approx(1.2)
    kinds = [s.kind for s in protocol.steps]
    assert kinds == [LAMBDA_STIRAP] + [CAVITY_STIRAP] * 4 + [LAMBDA_STIRAP]


def test_pulse_orderings(protocol):
    def pair(step):
        return [(p.atom, p.lower) for p in step.pulses]

    assert pair(protocol.step(1)) == [(2, GA), (2, G1)]
    assert pair(protocol.step(2)) == [(1, GA), (2, G0)]
    assert pair(protocol.step(3)) == [(1, G0), (2, GA)]
    assert pair(protocol.step(4)) == [(2, GA), (1, GA)]
    assert pair(protocol.step(5)) == [(2, G0), (1, G0)]
    assert pair(protocol.step(6)) == [(2, G1), (2, GA)]
    assert all(p.upper is U for s in (protocol.step(1), protocol.step(6)) for p in s.pulses)
    assert protocol.step(2).first.name == "Omega_a^(1)"
    assert protocol.step(1).first.name == "Omega_a(sti)^(2)"


def test_step_phases():
    phases = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)
    s = build_cnot_protocol(phases=phases)
    assert s.step(1).relative_phase == pytest.approx(math.pi + 0.1)
    assert s.step(6).relative_phase == pytest.approx(math.pi + 0.6)
    for n in (2, 3, 4, 5):
        assert s.step(n).relative_phase == pytest.approx(phases[n - 1])
    # the shared Omega_a^(2) of steps 3 and 4 carries one phase
    assert s.step(4).first.shape.phase == s.step(3).second.shape.phase
    assert build_cnot_protocol().step(6).relative_phase == pytest.approx(math.pi)


def test_build_rejects_bad_input():
    with pytest.raises(ValueError):
        build_cnot_protocol(0.0)
    with pytest.raises(ValueError):
        build_cnot_protocol(phases=(0.0,) * 5)
    with pytest.raises(ValueError):
        build_cnot_protocol(delay=0.0)


def test_counterintuitive_ratio(protocol):
    for step in protocol.steps:
        lo, hi = step.window
        first, second = step.first.shape, step.second.shape
        assert second.envelope(lo) / first.envelope(lo) < 1e-3
        assert first.envelope(hi) / second.envelope(hi) < 1e-3


@pytest.mark.parametrize("merged", [False, True])
def test_windows_disjoint_at_floor(protocol, merged):
    s = merge_adjacent_pulses(protocol) if merged else protocol
    for a, b in zip(s.steps, s.steps[1:]):
        assert a.window[1] < b.window[0]
        if merged and a.index == 3:
            continue
        end_a = max(p.shape.support()[1] for p in a.pulses)
        start_b = min(p.shape.support()[0] for p in b.pulses)
        assert end_a < start_b
    assert s.t_start == 0.0
    assert s.t_end == pytest.approx(6 * 9.2 + 5 * 2)


def test_merge(protocol):
    m = merge_adjacent_pulses(protocol)
    assert len(m.pulses) == 11
    assert m.merged
    assert m.step(3).second is m.step(4).first
    for n in (1, 2, 5, 6):
        assert m.step(n) == protocol.step(n)
    assert merge_adjacent_pulses(m) is m
    bridge = m.step(3).second.shape
    t3, t4 = protocol.step(3).second.shape, protocol.step(4).first.shape
    for t in np.linspace(m.step(3).window[0], m.step(4).window[1], 301):
        expected = max(t3.envelope(t), t4.envelope(t))
        if t3.center <= t <= t4.center:
            expected = t3.amplitude
        assert bridge.envelope(t) == pytest.approx(expected, abs=1e-12)


def test_merge_rejects_incompatible_phase(protocol):
    step4 = protocol.step(4)
    shifted = dataclasses.replace(
        step4.first, shape=dataclasses.replace(step4.first.shape, phase=0.3)
    )
    steps = list(protocol.steps)
    steps[3] = dataclasses.replace(step4, pulses=(shifted, step4.second))
    with pytest.raises(ValueError, match="phases differ"):
        merge_adjacent_pulses(dataclasses.replace(protocol, steps=tuple(steps)))


def test_active_couplings(protocol):
    s2 = protocol.step(2)
    gap = 0.5 * (protocol.step(1).window[1] + s2.window[0])
    assert active_couplings(protocol, gap) == []
    peak = active_couplings(protocol, s2.first.shape.center)
    c = next(c for c in peak if c.atom == 1)
    assert (c.upper, c.lower) == (E, GA)
    assert c.amplitude == pytest.approx(10.0)
    mid = active_couplings(protocol, s2.first.shape.center + 0.6)
    assert len(mid) == 2
    assert abs(mid[0].amplitude) == pytest.approx(abs(mid[1].amplitude))
    with pytest.raises(ValueError):
        active_couplings(protocol, -1.0)


def test_pulse_table_matches_shapes(protocol):
    table = PulseTable(protocol.pulses)
    for t in np.linspace(0, protocol.t_end, 97):
        vals = table(t)
        for p, v in zip(protocol.pulses, vals):
            exact = p.shape.value(t)
            assert v == (exact if abs(exact) > 1e-8 * p.shape.amplitude else 0)


def test_schedule_json(protocol):
    data = json.loads(merge_adjacent_pulses(protocol).to_json())
    assert len(data["pulses"]) == 11
    assert {"atom", "transition", "omega_max", "t_p", "t0", "phi"} <= set(data["pulses"][0])
    assert sum("t1" in p for p in data["pulses"]) == 1
    assert data["steps"][2]["pulses"][1] == data["steps"][3]["pulses"][0]
