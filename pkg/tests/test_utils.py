import hashlib
import pathlib

import pytest

import lorafp


def test_capture_datetime() -> None:
    assert lorafp.utils.capture_datetime(1) == "2021-06-01T09:00:00Z"
    assert lorafp.utils.capture_datetime(3, transmission=61) == "2021-06-03T10:01:00Z"


def test_derive_seed() -> None:
    seed = lorafp.utils.derive_seed(7, 1, 2)
    assert seed == lorafp.utils.derive_seed(7, 1, 2)
    assert 0 <= seed < 2**64
    seeds = {lorafp.utils.derive_seed(7, i) for i in range(100)}
    assert len(seeds) == 100
    assert lorafp.utils.derive_seed(1, 2) != lorafp.utils.derive_seed(2, 1)


def test_expand_csv(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "scenarios.csv"
    path.write_text("d3, d1\nd2\n")
    assert lorafp.utils.expand_csv([f"d4,{path}", "d1"]) == ["d1", "d2", "d3", "d4"]
    assert lorafp.utils.expand_csv("b, a,,") == ["a", "b"]


@pytest.mark.parametrize(
    "s,expected",
    [
        ("seed=3", (["seed"], 3)),
        ("transmission.duration_s=0.5", (["transmission", "duration_s"], 0.5)),
        ("representations=[\"IQ\"]", (["representations"], ["IQ"])),
        ("capture.band_mode=in_band_only", (["capture", "band_mode"], "in_band_only")),
        ("name=a=b", (["name"], "a=b")),
    ],
)
def test_parse_override(s: str, expected: tuple[list[str], object]) -> None:
    assert lorafp.utils.parse_override(s) == expected


def test_parse_override_invalid() -> None:
    with pytest.raises(ValueError):
        lorafp.utils.parse_override("seed")


def test_sha256_file(tmp_path: pathlib.Path) -> None:
    path = tmp_path / "blob"
    data = bytes(range(256)) * 5000
    path.write_bytes(data)
    assert lorafp.utils.sha256_file(path) == hashlib.sha256(data).hexdigest()


def test_setenv(tmp_path: pathlib.Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("LORAFP_TEST_VAR", raising=False)
    dotenv = lorafp.utils.setenv("LORAFP_TEST_VAR", "1")
    assert "LORAFP_TEST_VAR" in dotenv.read_text()
    with pytest.raises(RuntimeError):
        lorafp.utils.setenv("LORAFP_TEST_VAR", "2")
    lorafp.utils.setenv("LORAFP_TEST_VAR", "2", exist_ok=True)
