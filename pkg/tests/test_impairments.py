import pathlib

import numpy as np
import pytest

import lorafp


@pytest.fixture
def chirps() -> lorafp.waveform.ComplexSampleBuffer:
    config = lorafp.waveform.LoRaConfig()
    payload = lorafp.waveform.SymbolStream.random(7, 8, seed=0)
    return lorafp.waveform.synthesize_transmission(config, payload, 1e6, 0.05)


def test_generate_population_deterministic() -> None:
    a = lorafp.impairments.generate_population(25, 7)
    b = lorafp.impairments.generate_population(25, 7)
    assert a == b
    assert [d.device_id for d in a] == list(range(25))
    assert a != lorafp.impairments.generate_population(25, 8)


def test_generate_population_spans_phase_noise() -> None:
    devices = lorafp.impairments.generate_population(10, 1)
    magnitudes = [d.phase_noise_magnitude for d in devices]
    assert min(magnitudes) == pytest.approx(0.05)
    assert max(magnitudes) == pytest.approx(0.4)
    params = {
        (d.phase_noise_magnitude, d.cfo_hz, d.iq_gain_imbalance_db) for d in devices
    }
    assert len(params) == len(devices)


def test_generate_population_zero_spread() -> None:
    devices = lorafp.impairments.generate_population(
        4, 3, lorafp.impairments.PopulationSpread.zero()
    )
    for d in devices:
        assert d.phase_noise_magnitude == 0
        assert d.cfo_hz == 0
        assert d.dc_offset == 0


def test_generate_population_too_small() -> None:
    with pytest.raises(ValueError):
        lorafp.impairments.generate_population(1, 0)


def test_generate_receivers() -> None:
    receivers = lorafp.impairments.generate_receivers(3, 5)
    assert [r.receiver_id for r in receivers] == [1, 2, 3]
    assert receivers == lorafp.impairments.generate_receivers(3, 5)
    assert all(-3 <= r.gain_db <= 3 for r in receivers)


def test_phase_noise_zero_sigma_is_identity(
    chirps: lorafp.waveform.ComplexSampleBuffer,
) -> None:
    process = lorafp.impairments.PhaseNoiseProcess(0.0, seed=1)
    out = lorafp.impairments.apply_phase_noise(chirps, process)
    np.testing.assert_array_equal(out.samples, chirps.samples)


def test_phase_noise_preserves_magnitude(
    chirps: lorafp.waveform.ComplexSampleBuffer,
) -> None:
    process = lorafp.impairments.PhaseNoiseProcess.from_magnitude(
        0.4, chirps.sample_rate_hz, seed=2
    )
    out = lorafp.impairments.apply_phase_noise(chirps, process)
    assert np.max(np.abs(np.abs(out.samples) - np.abs(chirps.samples))) < 1e-12
    assert not np.allclose(out.samples, chirps.samples)


def test_phase_noise_process_continues() -> None:
    whole = lorafp.impairments.PhaseNoiseProcess(0.1, seed=3).generate(100)
    process = lorafp.impairments.PhaseNoiseProcess(0.1, seed=3)
    first = process.generate(40)
    assert process.state == first[-1]
    np.testing.assert_allclose(np.concatenate([first, process.generate(60)]), whole)


def test_phase_noise_magnitude_mapping() -> None:
    process = lorafp.impairments.PhaseNoiseProcess.from_magnitude(0.2, 1e6, seed=0)
    assert process.sigma_per_sample == pytest.approx(0.2 * np.sqrt(0.125))


def test_apply_cfo_moves_tone() -> None:
    n = 2**16
    dc = lorafp.testing.tone(0.0, n)
    shifted = lorafp.impairments.apply_cfo(dc, 1000.0)
    f = np.fft.fftfreq(n, 1 / 1e6)
    peak = f[np.argmax(np.abs(np.fft.fft(shifted.samples)))]
    assert abs(peak - 1000.0) <= 1e6 / n


def test_apply_cfo_inverse(chirps: lorafp.waveform.ComplexSampleBuffer) -> None:
    out = lorafp.impairments.apply_cfo(
        lorafp.impairments.apply_cfo(chirps, 1234.5), -1234.5
    )
    assert np.max(np.abs(out.samples - chirps.samples)) < 1e-10
    same = lorafp.impairments.apply_cfo(chirps, 0.0)
    np.testing.assert_array_equal(same.samples, chirps.samples)


def test_apply_cfo_aliasing(chirps: lorafp.waveform.ComplexSampleBuffer) -> None:
    with pytest.raises(ValueError):
        lorafp.impairments.apply_cfo(chirps, 5e5)


def test_iq_imbalance_image_ratio() -> None:
    n = 2**16
    f0 = 1e6 * 1000 / n
    x = lorafp.testing.tone(f0, n)
    gain_db, phase = 1.0, 0.1
    out = lorafp.impairments.apply_iq_imbalance(x, gain_db, phase)
    spectrum = np.abs(np.fft.fft(out.samples)) ** 2
    measured = 10 * np.log10(spectrum[n - 1000] / spectrum[1000])
    alpha, beta = lorafp.impairments.iq_imbalance_coefficients(gain_db, phase)
    expected = 10 * np.log10(abs(beta) ** 2 / abs(alpha) ** 2)
    assert measured == pytest.approx(expected, abs=0.5)


def test_iq_imbalance_image_grows() -> None:
    n = 2**12
    x = lorafp.testing.tone(1e6 * 100 / n, n)
    ratios = []
    for scale in (0.25, 0.5, 1.0, 2.0, 4.0):
        out = lorafp.impairments.apply_iq_imbalance(x, 0.5 * scale, 0.02 * scale)
        spectrum = np.abs(np.fft.fft(out.samples)) ** 2
        ratios.append(spectrum[n - 100] / spectrum[100])
    assert all(a < b for a, b in zip(ratios, ratios[1:]))


def test_iq_imbalance_identity(chirps: lorafp.waveform.ComplexSampleBuffer) -> None:
    out = lorafp.impairments.apply_iq_imbalance(chirps, 0.0, 0.0)
    np.testing.assert_array_equal(out.samples, chirps.samples)


def test_apply_device_zero_profile_is_identity(
    chirps: lorafp.waveform.ComplexSampleBuffer,
) -> None:
    profile = lorafp.impairments.DeviceProfile(device_id=0, rng_seed=9)
    out = lorafp.impairments.apply_device(chirps, profile)
    np.testing.assert_array_equal(out.samples, chirps.samples)


def test_apply_device_distinct_and_deterministic(
    chirps: lorafp.waveform.ComplexSampleBuffer,
) -> None:
    a, b = lorafp.impairments.generate_population(2, 4)
    out_a = lorafp.impairments.apply_device(chirps, a, key=1)
    out_b = lorafp.impairments.apply_device(chirps, b, key=1)
    assert np.max(np.abs(out_a.samples - out_b.samples)) > 1e-6
    again = lorafp.impairments.apply_device(chirps, a, key=1)
    np.testing.assert_array_equal(out_a.samples, again.samples)


def test_apply_receiver(chirps: lorafp.waveform.ComplexSampleBuffer) -> None:
    identity = lorafp.impairments.ReceiverProfile(receiver_id=1)
    out = lorafp.impairments.apply_receiver(chirps, identity)
    np.testing.assert_array_equal(out.samples, chirps.samples)
    r1, r2 = lorafp.impairments.generate_receivers(2, 0)
    out1 = lorafp.impairments.apply_receiver(chirps, r1, key=3)
    out2 = lorafp.impairments.apply_receiver(chirps, r2, key=3)
    assert np.max(np.abs(out1.samples - out2.samples)) > 1e-6
    again = lorafp.impairments.apply_receiver(chirps, r1, key=3)
    np.testing.assert_array_equal(out1.samples, again.samples)


def test_pa_nonlinearity_compresses() -> None:
    x = lorafp.waveform.ComplexSampleBuffer(np.array([0.01, 1.0, 10.0]) + 0j)
    out = np.abs(lorafp.impairments.apply_pa_nonlinearity(x, 2.0).samples)
    assert out[0] == pytest.approx(0.01, rel=1e-6)
    assert out[1] < 1.0
    assert out[2] < 1.0


def test_phase_noise_regrowth_monotone() -> None:
    config = lorafp.waveform.LoRaConfig()
    ideal = lorafp.waveform.synthesize_transmission(
        config, lorafp.waveform.SymbolStream.random(7, 16, seed=0), 1e6, 0.05
    )
    means = []
    for m in (0.0, 0.1, 0.2, 0.4):
        ratios = []
        for seed in range(20):
            process = lorafp.impairments.PhaseNoiseProcess.from_magnitude(
                m, 1e6, seed=seed
            )
            noisy = lorafp.impairments.apply_phase_noise(ideal, process)
            ratios.append(lorafp.capture.measure_oob_power(noisy, 125e3))
        means.append(np.mean(ratios))
    assert all(a < b for a, b in zip(means, means[1:]))


def test_population_file_round_trip(tmp_path: pathlib.Path) -> None:
    devices = lorafp.impairments.generate_population(5, 2)
    receivers = lorafp.impairments.generate_receivers(2, 3)
    path = lorafp.impairments.write_population(
        tmp_path / "population.json", devices, receivers
    )
    assert lorafp.impairments.read_population(path) == (devices, receivers)


def test_population_file_duplicate_ids(tmp_path: pathlib.Path) -> None:
    d = lorafp.impairments.DeviceProfile(device_id=1)
    path = lorafp.impairments.write_population(tmp_path / "population.json", [d, d])
    with pytest.raises(ValueError):
        lorafp.impairments.read_population(path)
