import numpy as np
import pytest

import lorafp


@pytest.mark.parametrize(
    "sf,expected",
    [(7, 5470), (8, 3125), (11, 537), (12, 293)],
)
def test_bit_rate(sf: int, expected: int) -> None:
    config = lorafp.waveform.LoRaConfig(spreading_factor=sf)
    assert round(lorafp.waveform.bit_rate(config)) == expected


def test_bit_rate_exact() -> None:
    config = lorafp.waveform.LoRaConfig(spreading_factor=12)
    assert lorafp.waveform.bit_rate(config) == pytest.approx(292.96875, abs=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"spreading_factor": 6},
        {"spreading_factor": 13},
        {"bandwidth_hz": 0.0},
        {"coding_rate": "4/9"},
        {"preamble_symbols": -1},
    ],
)
def test_lora_config_invalid(kwargs: dict[str, object]) -> None:
    with pytest.raises(ValueError):
        lorafp.waveform.LoRaConfig(**kwargs)  # type: ignore[arg-type]


def test_synthesize_chirp_shape() -> None:
    config = lorafp.waveform.LoRaConfig()
    chirp = lorafp.waveform.synthesize_chirp(config, 0, 1e6)
    assert len(chirp) == 1024
    assert chirp.samples[0] == pytest.approx(1.0 + 0j)
    assert np.max(np.abs(np.abs(chirp.samples) - 1)) < 1e-12


def test_synthesize_chirp_wraps_halfway() -> None:
    config = lorafp.waveform.LoRaConfig()
    fs = 1e6
    chirp = lorafp.waveform.synthesize_chirp(config, 64, fs)
    freq = np.angle(chirp.samples[1:] * np.conj(chirp.samples[:-1])) * fs / (2 * np.pi)
    jumps = np.flatnonzero(np.diff(freq) < -config.bandwidth_hz / 2)
    assert len(jumps) == 1
    assert abs(int(jumps[0]) - 512) <= 1
    assert freq[0] == pytest.approx(0.0, abs=500.0)


def test_synthesize_chirp_matches_phase_accumulation() -> None:
    config = lorafp.waveform.LoRaConfig()
    fs = 1e6
    symbol = 37
    chirp = lorafp.waveform.synthesize_chirp(config, symbol, fs)
    bw, m = config.bandwidth_hz, config.num_chips
    n = len(chirp)
    freq = np.empty(n)
    for i in range(n):
        # Midpoint of each sample interval; the wrap lands on a sample boundary.
        f = -bw / 2 + symbol * bw / m + bw**2 / m * (i + 0.5) / fs
        freq[i] = f - bw if f >= bw / 2 else f
    phase = 2 * np.pi * np.concatenate([[0.0], np.cumsum(freq[:-1])]) / fs
    reference = np.exp(1j * phase)
    assert np.max(np.abs(np.angle(chirp.samples * np.conj(reference)))) < 1e-6


@pytest.mark.parametrize("symbol,fs", [(-1, 1e6), (128, 1e6), (0, 1e5)])
def test_synthesize_chirp_invalid(symbol: int, fs: float) -> None:
    with pytest.raises(ValueError):
        lorafp.waveform.synthesize_chirp(lorafp.waveform.LoRaConfig(), symbol, fs)


def test_synthesize_transmission_length_and_preamble() -> None:
    config = lorafp.waveform.LoRaConfig()
    payload = lorafp.waveform.SymbolStream.random(7, 8, seed=3)
    tx = lorafp.waveform.synthesize_transmission(config, payload, 1e6, 0.1)
    assert len(tx) == 100_000
    base = lorafp.waveform.synthesize_chirp(config, 0, 1e6).samples
    np.testing.assert_array_equal(tx.samples[: 8 * 1024], np.tile(base, 8))


def test_synthesize_transmission_constant_envelope() -> None:
    config = lorafp.waveform.LoRaConfig()
    energies = []
    for seed in range(10):
        payload = lorafp.waveform.SymbolStream.random(7, 16, seed=seed)
        tx = lorafp.waveform.synthesize_transmission(config, payload, 1e6, 0.2)
        active = np.abs(tx.samples) > 0
        assert np.max(np.abs(np.abs(tx.samples[active]) - 1)) < 1e-12
        energies.append(np.sum(np.abs(tx.samples) ** 2) / tx.duration_s)
    assert np.ptp(energies) / np.mean(energies) < 0.01


def test_synthesize_transmission_deterministic() -> None:
    config = lorafp.waveform.LoRaConfig(spreading_factor=8)
    payload = lorafp.waveform.SymbolStream.random(8, 8, seed=11)
    a = lorafp.waveform.synthesize_transmission(config, payload, 1e6, 0.05)
    b = lorafp.waveform.synthesize_transmission(config, payload, 1e6, 0.05)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_synthesize_transmission_occupied_bandwidth() -> None:
    config = lorafp.waveform.LoRaConfig()
    payload = lorafp.waveform.SymbolStream.random(7, 16, seed=0)
    tx = lorafp.waveform.synthesize_transmission(config, payload, 1e6, 0.5)
    f, psd = lorafp.capture.power_spectrum(tx)
    edge = config.bandwidth_hz / 2 + config.bandwidth_hz / 8
    assert psd[np.abs(f) <= edge].sum() / psd.sum() >= 0.99


def test_synthesize_transmission_nothing_to_send() -> None:
    config = lorafp.waveform.LoRaConfig(preamble_symbols=0)
    with pytest.raises(ValueError):
        lorafp.waveform.synthesize_transmission(
            config, lorafp.waveform.SymbolStream(), 1e6, 0.1
        )
    with pytest.raises(ValueError):
        lorafp.waveform.synthesize_transmission(
            lorafp.waveform.LoRaConfig(), lorafp.waveform.SymbolStream(), 1e6, 0.0
        )


def test_synthesize_transmission_shorter_than_a_sample() -> None:
    payload = lorafp.waveform.SymbolStream.random(7, 8, seed=0)
    with pytest.raises(ValueError, match="zero samples"):
        lorafp.waveform.synthesize_transmission(
            lorafp.waveform.LoRaConfig(), payload, 1e6, 4e-7
        )
    out = lorafp.waveform.synthesize_transmission(
        lorafp.waveform.LoRaConfig(), payload, 1e6, 6e-7
    )
    assert len(out) == 1


def test_symbol_stream_validate() -> None:
    stream = lorafp.waveform.SymbolStream((0, 127, 128))
    stream.validate(8)
    with pytest.raises(ValueError):
        stream.validate(7)
