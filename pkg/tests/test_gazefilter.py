import json
import math

import numpy as np
import pytest

from gazearm.gazefilter import (FixationStream, GazeSample, InvalidTimestamps,
                                ParseError, TooFewSamples, angular_velocity,
                                classify_fixations, detect_winks, raw_angular_velocity,
                                read_trace, write_trace)
from gazearm.geometry import ETG_CAMERA

HZ = 60.0


def stationary(n, u=640.0, v=480.0, t0=0.0, **kw):
    return [GazeSample(t0 + i / HZ, u, v, **kw) for i in range(n)]


def test_velocity_zero_when_stationary():
    assert np.allclose(angular_velocity(stationary(10)), 0.0)


def test_velocity_closed_form_for_pixel_jump():
    # one 100 px horizontal jump from the principal point at 60 Hz:
    # angle = atan(100/fx), speed = angle * 60
    s = stationary(5) + [GazeSample(5 / HZ + i / HZ, 740.0, 480.0) for i in range(5)]
    expected = math.degrees(math.atan(100.0 / ETG_CAMERA.fx)) * HZ
    raw = raw_angular_velocity(s)
    assert raw[5] == pytest.approx(expected, rel=1e-9)
    assert expected > 300  # comfortably a saccade


def test_small_drift_stays_below_threshold():
    # 1 px/frame drift -> about 3.5 deg/s, well under 36 deg/s
    s = [GazeSample(i / HZ, 640.0 + i, 480.0) for i in range(20)]
    v = angular_velocity(s)
    assert v.max() < 36.0
    # the very first step leaves the principal point, where the closed form
    # is exactly atan(1 px / fx) per frame
    assert raw_angular_velocity(s)[1] == pytest.approx(
        math.degrees(math.atan(1.0 / ETG_CAMERA.fx)) * HZ, rel=1e-9)


def test_median_filter_suppresses_single_sample_spike():
    s = stationary(20)
    s[10] = GazeSample(10 / HZ, 740.0, 480.0)  # one-frame glitch
    assert raw_angular_velocity(s).max() > 36.0
    assert angular_velocity(s).max() < 36.0


def test_velocity_input_validation():
    with pytest.raises(TooFewSamples):
        angular_velocity(stationary(2))
    bad = stationary(5)
    bad[3] = GazeSample(bad[2].t, 640.0, 480.0)
    with pytest.raises(InvalidTimestamps):
        angular_velocity(bad)


def test_fixation_requires_full_dwell():
    # 121 samples span exactly 2.0 s; 120 span only 1.983 s
    assert len(classify_fixations(stationary(121))) == 1
    assert classify_fixations(stationary(120)) == []
    fix = classify_fixations(stationary(150))[0]
    assert fix.start_t == 0.0
    assert fix.duration == pytest.approx(149 / HZ)
    assert fix.centroid == (640.0, 480.0)
    assert fix.span == (0, 149)


def test_saccade_splits_two_fixations():
    a = stationary(130)
    # three-frame ballistic jump (survives the 5-wide median filter)
    jump = [GazeSample((130 + i) / HZ, 640.0 + 120.0 * (i + 1), 480.0) for i in range(3)]
    b = [GazeSample((133 + i) / HZ, 1000.0, 480.0) for i in range(130)]
    fixes = classify_fixations(a + jump + b)
    assert len(fixes) == 2
    assert fixes[0].centroid[0] == pytest.approx(640.0)
    assert fixes[1].centroid[0] == pytest.approx(1000.0)


def test_invalid_samples_break_fixations():
    s = stationary(130) + [GazeSample(130 / HZ, 640.0, 480.0, valid=False)] \
        + stationary(130, t0=131 / HZ)
    fixes = classify_fixations(s)
    # both halves are long enough on their own, but neither bridges the gap
    assert len(fixes) == 2
    assert all(f.duration < 130 / HZ * 2 for f in fixes)
    short = stationary(60) + [GazeSample(60 / HZ, 640.0, 480.0, valid=False)] \
        + stationary(60, t0=61 / HZ)
    assert classify_fixations(short) == []


def test_chunking_invariance():
    rng = np.random.default_rng(8)
    samples = []
    u, v = 640.0, 480.0
    for i in range(400):
        if i == 140:
            u += 300.0  # saccade out
        elif i == 280:
            u -= 300.0  # and back
        u += rng.normal(0, 0.3)
        v += rng.normal(0, 0.3)
        samples.append(GazeSample(i / HZ, u, v))
    whole = classify_fixations(samples)
    for chunk in (1, 7, 150):
        stream = FixationStream()
        for k in range(0, len(samples), chunk):
            stream.extend(samples[k:k + chunk])
        assert stream.finish() == whole
    assert whole  # the trace must actually contain fixations


# --- winks --------------------------------------------------------------------

def wink_trace(eye, n_closed, lead=5, tail=5):
    out = stationary(lead)
    t0 = lead / HZ
    kw = {"left_open": eye != "left", "right_open": eye != "right"}
    out += stationary(n_closed, t0=t0, **kw)
    out += stationary(tail, t0=t0 + n_closed / HZ)
    return out


def test_wink_detection_duration_threshold():
    # 31 closed samples span exactly 0.5 s
    events = detect_winks(wink_trace("left", 31))
    assert len(events) == 1
    assert events[0].eye == "left"
    assert events[0].duration == pytest.approx(0.5)
    assert detect_winks(wink_trace("left", 30)) == []
    assert detect_winks(wink_trace("right", 40))[0].eye == "right"


def test_blink_is_not_a_wink():
    out = stationary(5)
    out += stationary(40, t0=5 / HZ, left_open=False, right_open=False)
    out += stationary(5, t0=45 / HZ)
    assert detect_winks(out) == []


def test_wink_overlapping_blink_is_discarded():
    out = stationary(5)
    out += stationary(20, t0=5 / HZ, left_open=False)
    out += stationary(20, t0=25 / HZ, left_open=False, right_open=False)
    out += stationary(5, t0=45 / HZ)
    assert detect_winks(out) == []


# --- trace files --------------------------------------------------------------

def test_trace_roundtrip(tmp_path):
    samples = stationary(5) + [GazeSample(1.0, 100.5, 200.25, left_open=False,
                                          right_open=True, valid=False)]
    p = tmp_path / "trace.jsonl"
    write_trace(p, samples)
    assert read_trace(p) == samples


def test_trace_parse_error_reports_line(tmp_path):
    p = tmp_path / "bad.jsonl"
    lines = [GazeSample(i / HZ, 640, 480).to_json() for i in range(6)]
    lines.append("{not json")
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as exc:
        read_trace(p)
    assert exc.value.line == 7


def test_trace_skips_blank_lines(tmp_path):
    p = tmp_path / "gaps.jsonl"
    p.write_text(GazeSample(0, 640, 480).to_json() + "\n\n"
                 + GazeSample(1, 640, 480).to_json() + "\n")
    assert len(read_trace(p)) == 2


def test_sample_json_defaults():
    s = GazeSample.from_json(json.dumps({"t": 0.5, "u": 10, "v": 20}))
    assert s.left_open and s.right_open and s.valid
