import numpy as np
import pytest

import lorafp


def band_power(x: np.ndarray) -> float:
    return float(np.mean(np.abs(x) ** 2))


@pytest.fixture
def sf7() -> lorafp.waveform.ComplexSampleBuffer:
    config = lorafp.waveform.LoRaConfig()
    payload = lorafp.waveform.SymbolStream.random(7, 16, seed=0)
    return lorafp.waveform.synthesize_transmission(config, payload, 1e6, 0.2)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"window_len": 1000},
        {"stride": -1},
        {"capture_bandwidth_hz": 2e6},
        {"band_mode": "wideband"},
        {"representation": "spectrogram"},
        {"normalization": "peak"},
    ],
)
def test_capture_config_invalid(kwargs: dict[str, object]) -> None:
    with pytest.raises(ValueError):
        lorafp.capture.CaptureConfig(**kwargs)  # type: ignore[arg-type]


def test_band_select_pass_through(sf7: lorafp.waveform.ComplexSampleBuffer) -> None:
    out = lorafp.capture.band_select(sf7, "in_band_plus_oob", 125e3)
    np.testing.assert_array_equal(out.samples, sf7.samples)


def test_band_select_stopband() -> None:
    x = lorafp.testing.tone(200e3, 2**15)
    out = lorafp.capture.band_select(x, "in_band_only", 125e3)
    assert len(out) == len(x)
    # Skip the filter's edge transients.
    edge = 1000
    ratio = band_power(out.samples[edge:-edge]) / band_power(x.samples)
    assert 10 * np.log10(ratio) <= -60


@pytest.mark.parametrize("frequency_hz", [10e3, 60e3])
def test_band_select_passband(frequency_hz: float) -> None:
    x = lorafp.testing.tone(frequency_hz, 2**15)
    out = lorafp.capture.band_select(x, "in_band_only", 125e3)
    edge = 1000
    ratio = band_power(out.samples[edge:-edge]) / band_power(x.samples)
    assert abs(10 * np.log10(ratio)) < 0.1
    # Group delay is compensated, so the tone stays in phase.
    mid = len(x) // 2
    assert abs(np.angle(out.samples[mid] * np.conj(x.samples[mid]))) < 0.01


def test_band_select_invalid() -> None:
    x = lorafp.testing.tone(0.0, 16)
    with pytest.raises(ValueError):
        lorafp.capture.band_select(x, "in_band_only", 2e6)
    with pytest.raises(ValueError):
        lorafp.capture.band_select(x, "in_band_only", -125e3)
    with pytest.raises(ValueError):
        lorafp.capture.band_select(x, "in_band_only", 990e3)
    with pytest.raises(ValueError):
        lorafp.capture.band_select(x, "bogus", 125e3)


def test_in_band_only_removes_oob(sf7: lorafp.waveform.ComplexSampleBuffer) -> None:
    profile = lorafp.impairments.DeviceProfile(
        device_id=0, phase_noise_magnitude=0.4, rng_seed=1
    )
    impaired = lorafp.impairments.apply_device(sf7, profile)
    filtered = lorafp.capture.band_select(impaired, "in_band_only", 125e3)
    # Measured past the transition band, where the stopband starts.
    stop_bw = 125e3 + 2 * lorafp.capture.TRANSITION_WIDTH_HZ
    before = lorafp.capture.measure_oob_power(impaired, stop_bw)
    after = lorafp.capture.measure_oob_power(filtered, stop_bw)
    assert after <= before - 40


def test_slice_frames_counts() -> None:
    config = lorafp.capture.CaptureConfig(window_len=1024)
    x = lorafp.testing.tone(5e3, 3 * 1024)
    assert len(lorafp.capture.slice_frames(x, config)) == 3
    short = lorafp.testing.tone(5e3, 1023)
    assert lorafp.capture.slice_frames(short, config) == []


def test_slice_frames_drops_gaps() -> None:
    config = lorafp.capture.CaptureConfig(window_len=1024, representation="IQ")
    samples = np.concatenate(
        [np.ones(2048), np.zeros(1024), np.ones(1024), 1e-3 * np.ones(1024)]
    ).astype(complex)
    x = lorafp.waveform.ComplexSampleBuffer(samples)
    frames = lorafp.capture.slice_frames(
        x, config, label=4, scenario_id="d1", transmission=2
    )
    assert [f.provenance.window for f in frames] == [0, 1, 3]
    assert all(f.label == 4 for f in frames)
    assert frames[0].provenance == lorafp.capture.Provenance("d1", 2, 0)


def test_representation_toggle_keeps_frames(
    sf7: lorafp.waveform.ComplexSampleBuffer,
) -> None:
    iq = lorafp.capture.CaptureConfig(window_len=4096, representation="IQ")
    fft = lorafp.capture.CaptureConfig(window_len=4096, representation="FFT")
    a = lorafp.capture.slice_frames(sf7, iq, label=1)
    b = lorafp.capture.slice_frames(sf7, fft, label=1)
    assert len(a) == len(b) > 0
    assert [f.provenance for f in a] == [f.provenance for f in b]
    assert not np.allclose(a[0].data, b[0].data)
    for f in a + b:
        assert np.sqrt(np.mean(f.data**2)) == pytest.approx(1.0, abs=1e-9)


def test_to_iq_frame() -> None:
    rng = np.random.default_rng(0)
    window = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    raw = lorafp.capture.to_iq_frame(window, normalize=False)
    np.testing.assert_array_equal(raw.data[0] + 1j * raw.data[1], window)
    a = lorafp.capture.to_iq_frame(window)
    b = lorafp.capture.to_iq_frame(np.conj(window))
    np.testing.assert_array_equal(b.data[1], -a.data[1])
    ones = lorafp.capture.to_iq_frame(np.ones(8, dtype=complex))
    assert np.all(ones.data[0] == ones.data[0][0])
    assert not np.any(ones.data[1])


def test_to_fft_frame_single_bin() -> None:
    n, k = 256, 17
    window = np.exp(2j * np.pi * k * np.arange(n) / n)
    frame = lorafp.capture.to_fft_frame(window, normalize=False)
    magnitude = np.hypot(frame.data[0], frame.data[1])
    assert np.argmax(magnitude) == k
    others = np.delete(magnitude, k)
    assert np.max(others) < 1e-9 * magnitude[k]


def test_to_fft_frame_parseval() -> None:
    rng = np.random.default_rng(1)
    window = rng.standard_normal(512) + 1j * rng.standard_normal(512)
    frame = lorafp.capture.to_fft_frame(window, normalize=False)
    time_energy = np.sum(np.abs(window) ** 2)
    freq_energy = np.sum(frame.data**2) / len(window)
    assert freq_energy == pytest.approx(time_energy, rel=1e-10)


def test_to_fft_frame_zero() -> None:
    frame = lorafp.capture.to_fft_frame(np.zeros(32, dtype=complex))
    assert frame.representation == "FFT"
    assert not np.any(frame.data)


def test_frame_set() -> None:
    frames = [
        lorafp.capture.to_iq_frame(
            np.ones(8, dtype=complex),
            label=i % 2,
            provenance=lorafp.capture.Provenance("s", 0, i),
        )
        for i in range(4)
    ]
    fs = lorafp.capture.FrameSet.from_frames(frames)
    assert fs.data.shape == (4, 2, 8)
    assert fs.data.dtype == np.float32
    assert list(fs.labels) == [0, 1, 0, 1]
    assert list(fs.provenance["window"]) == [0, 1, 2, 3]
    sub = fs.subset(np.array([1, 3]))
    assert list(sub.provenance["window"]) == [1, 3]
    both = lorafp.capture.FrameSet.concat([fs, sub])
    assert len(both) == 6
    empty = lorafp.capture.FrameSet.from_frames([], window_len=8)
    assert empty.window_len == 8 and len(empty) == 0


def test_measure_oob_power_white_noise() -> None:
    rng = np.random.default_rng(2)
    noise = rng.standard_normal(2**19) + 1j * rng.standard_normal(2**19)
    ratio = lorafp.capture.measure_oob_power(
        lorafp.waveform.ComplexSampleBuffer(noise), 125e3
    )
    assert ratio == pytest.approx(10 * np.log10(875 / 125), abs=0.3)


def test_measure_oob_power_ideal_chirps(
    sf7: lorafp.waveform.ComplexSampleBuffer,
) -> None:
    assert lorafp.capture.measure_oob_power(sf7, 125e3) < -20


def test_measure_oob_power_invalid() -> None:
    with pytest.raises(ValueError):
        lorafp.capture.measure_oob_power(lorafp.testing.tone(0.0, 100), 125e3)
    zeros = lorafp.waveform.ComplexSampleBuffer(np.zeros(8192, dtype=complex))
    with pytest.raises(ValueError):
        lorafp.capture.measure_oob_power(zeros, 125e3)


def test_normalized_spectrum(sf7: lorafp.waveform.ComplexSampleBuffer) -> None:
    df = lorafp.capture.normalized_spectrum(sf7)
    assert list(df.columns) == ["frequency_hz", "normalized_power_db"]
    assert df["frequency_hz"].is_monotonic_increasing
    assert np.all(np.isfinite(df["normalized_power_db"]))
    assert df["normalized_power_db"].max() == pytest.approx(0.0)
    assert df["normalized_power_db"].min() >= -300
