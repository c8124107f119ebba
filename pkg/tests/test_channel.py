import math

import numpy as np
import pytest

import lorafp


@pytest.fixture
def room() -> lorafp.channel.ScenarioSpec:
    return lorafp.channel.ScenarioSpec.from_preset(
        "d1", day=1, location="room", plan_seed=3
    )


def test_from_preset() -> None:
    office = lorafp.channel.ScenarioSpec.from_preset(
        "o", location="office", config_id=4, snr_db=5.0
    )
    assert office.num_taps == 5
    assert office.delay_spread_s == pytest.approx(300e-9)
    assert office.snr_db == 5.0
    assert office.spreading_factor == 12


def test_days_share_statistics(room: lorafp.channel.ScenarioSpec) -> None:
    day2 = lorafp.channel.ScenarioSpec.from_preset(
        "d2", day=2, location="room", plan_seed=3
    )
    assert (day2.num_taps, day2.delay_spread_s, day2.snr_db) == (
        room.num_taps,
        room.delay_spread_s,
        room.snr_db,
    )
    assert day2.rng_seed != room.rng_seed


def test_locations_differ() -> None:
    presets = lorafp.channel.LOCATION_PRESETS
    for a in lorafp.channel.LOCATIONS:
        for b in lorafp.channel.LOCATIONS:
            if a != b:
                assert (presets[a].delay_spread_s, presets[a].snr_db) != (
                    presets[b].delay_spread_s,
                    presets[b].snr_db,
                )


@pytest.mark.parametrize(
    "kwargs",
    [
        {"location": "basement"},
        {"config_id": 5},
        {"snr_db": math.inf},
        {"num_taps": 0},
        {"delay_spread_s": -1.0},
    ],
)
def test_scenario_invalid(kwargs: dict[str, object]) -> None:
    with pytest.raises(ValueError):
        lorafp.channel.ScenarioSpec("bad", **kwargs)  # type: ignore[arg-type]


def test_realize_channel(room: lorafp.channel.ScenarioSpec) -> None:
    a = lorafp.channel.realize_channel(room, 11)
    b = lorafp.channel.realize_channel(room, 11)
    np.testing.assert_array_equal(a.taps, b.taps)
    assert a.noise_seed == b.noise_seed
    assert a.delays[0] == 0
    assert np.sum(np.abs(a.taps) ** 2) == pytest.approx(1.0, abs=1e-12)
    c = lorafp.channel.realize_channel(room, 12)
    assert not np.array_equal(a.taps, c.taps)


def test_realize_channel_degenerate() -> None:
    spec = lorafp.channel.ScenarioSpec("flat", num_taps=1, delay_spread_s=0.0)
    channel = lorafp.channel.realize_channel(spec, 0)
    assert len(channel.taps) == 1
    assert abs(channel.taps[0]) == pytest.approx(1.0)
    x = lorafp.testing.tone(1e3, 100)
    noiseless = lorafp.channel.ChannelRealization(channel.taps, channel.delays)
    out = lorafp.channel.apply_channel(x, noiseless)
    np.testing.assert_allclose(out.samples, x.samples * channel.taps[0])


def test_identity_channel() -> None:
    x = lorafp.testing.tone(2e3, 1000)
    out = lorafp.channel.apply_channel(x, lorafp.channel.ChannelRealization.identity())
    np.testing.assert_array_equal(out.samples, x.samples)


def test_snr_calibration() -> None:
    x = lorafp.testing.tone(5e3, 200_000)
    for snr in (0.0, 10.0):
        channel = lorafp.channel.ChannelRealization(
            np.array([1.0 + 0j]), np.array([0]), snr_db=snr, noise_seed=4
        )
        out = lorafp.channel.apply_channel(x, channel)
        noise_power = np.mean(np.abs(out.samples - x.samples) ** 2)
        measured = 10 * np.log10(1.0 / noise_power)
        assert measured == pytest.approx(snr, abs=0.2)


def test_snr_ignores_gaps() -> None:
    samples = np.concatenate([np.ones(100_000), np.zeros(100_000)]).astype(complex)
    x = lorafp.waveform.ComplexSampleBuffer(samples)
    channel = lorafp.channel.ChannelRealization(
        np.array([1.0 + 0j]), np.array([0]), snr_db=10.0, noise_seed=1
    )
    out = lorafp.channel.apply_channel(x, channel)
    noise_power = np.mean(np.abs(out.samples[100_000:]) ** 2)
    assert 10 * np.log10(1.0 / noise_power) == pytest.approx(10.0, abs=0.3)


def test_two_tap_frequency_response() -> None:
    channel = lorafp.channel.ChannelRealization(
        np.array([0.8 + 0j, 0.3j]), np.array([0, 3])
    )
    f = 20e3
    x = lorafp.testing.tone(f, 10_000)
    out = lorafp.channel.apply_channel(x, channel)
    expected = abs(channel.frequency_response(f, 1e6)[0])
    np.testing.assert_allclose(np.abs(out.samples[10:]), expected, rtol=0.01)


def test_apply_channel_too_short() -> None:
    channel = lorafp.channel.ChannelRealization(
        np.array([1.0 + 0j, 0.5 + 0j]), np.array([0, 4])
    )
    with pytest.raises(ValueError):
        lorafp.channel.apply_channel(lorafp.testing.tone(0.0, 4), channel)


def test_silent_buffer_gets_no_noise() -> None:
    x = lorafp.waveform.ComplexSampleBuffer(np.zeros(100, dtype=complex))
    channel = lorafp.channel.ChannelRealization(
        np.array([1.0 + 0j]), np.array([0]), snr_db=0.0
    )
    out = lorafp.channel.apply_channel(x, channel)
    assert not np.any(out.samples)
