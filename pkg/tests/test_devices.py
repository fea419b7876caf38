import pytest
from hypothesis import given, strategies as st

from mtsim.devices import (GB, TB, DeviceCatalog, DeviceSpec, TierKind, block_transfer_time,
                           device_cost, format_catalog, load_catalog, parse_catalog, parse_size)
from mtsim.errors import ConfigError

CAT = DeviceCatalog()


def test_table_defaults():
    dram, nvm, ssd, hdd = (CAT.get(n) for n in ("dram", "nvm", "ssd", "hdd"))
    assert (dram.read_latency, dram.write_latency, dram.bandwidth, dram.cost_per_gb) == (50, 50, 60e9, 10)
    assert (nvm.read_latency, nvm.write_latency, nvm.bandwidth, nvm.cost_per_gb) == (50, 200, 10e9, 1)
    assert (ssd.read_latency, ssd.write_latency, ssd.bandwidth, ssd.cost_per_gb) == (25_000, 300_000, 1e9, 0.2)
    assert (hdd.read_latency, hdd.write_latency, hdd.bandwidth, hdd.cost_per_gb) == (1e7, 1e7, 0.1e9, 0.02)


def test_tier_order():
    assert TierKind.DRAM < TierKind.NVM < TierKind.SSD < TierKind.HDD


def test_transfer_time_examples():
    assert block_transfer_time(CAT.get("dram"), "read", 4096) == 118
    assert block_transfer_time(CAT.get("dram"), "read", 1) == 50
    assert block_transfer_time(CAT.get("ssd"), "write", 4096) == 304_096


def test_transfer_time_rejects_bad_input():
    with pytest.raises(ValueError):
        block_transfer_time(CAT.get("dram"), "read", 0)
    with pytest.raises(ValueError):
        block_transfer_time(CAT.get("dram"), "sideways", 4096)


@given(st.integers(1, 1 << 20), st.integers(1, 1 << 20))
def test_transfer_time_monotone_in_size(a, b):
    spec = DeviceSpec(TierKind.SSD, 100, 100, 1.0, 0.0)  # 1 B/s: every byte is a second
    lo, hi = sorted((a, b))
    if lo < hi:
        assert block_transfer_time(spec, "read", lo) < block_transfer_time(spec, "read", hi)


def test_transfer_time_monotone_in_latency():
    slow = DeviceSpec(TierKind.NVM, 400, 400, 10e9, 1)
    fast = DeviceSpec(TierKind.NVM, 100, 100, 10e9, 1)
    assert block_transfer_time(fast, "write", 4096) < block_transfer_time(slow, "write", 4096)


def test_device_cost_examples():
    assert device_cost(CAT.device("dram", 16 * GB)) == 160.0
    assert device_cost(CAT.device("dram", 0)) == 0.0
    assert device_cost(CAT.device("ssd", 2 * TB)) == pytest.approx(409.60)


@given(st.integers(0, 1 << 45))
def test_device_cost_linear(cap):
    nvm = CAT.get("nvm")
    assert device_cost(nvm.with_capacity(2 * cap)) == pytest.approx(2 * device_cost(nvm.with_capacity(cap)))


@pytest.mark.parametrize("field,value", [("read_latency", 0), ("write_latency", -1),
                                         ("bandwidth", 0), ("cost_per_gb", -0.1), ("capacity", -4096)])
def test_spec_invariants(field, value):
    kw = dict(kind=TierKind.DRAM, read_latency=50, write_latency=50, bandwidth=1e9,
              cost_per_gb=1.0, capacity=0)
    kw[field] = value
    with pytest.raises(ConfigError):
        DeviceSpec(**kw)


def test_capacity_must_be_block_multiple():
    with pytest.raises(ConfigError):
        CAT.device("dram", 5000).slots(4096)
    assert CAT.device("dram", 8192).slots(4096) == 2


def test_multiplier_overrides():
    m2 = CAT.with_multiplier(2).get("nvm")
    assert m2.read_latency == m2.write_latency == 100
    direct = CAT.with_multiplier(8).get("nvm")
    chained = CAT.with_multiplier(2).with_multiplier(8).get("nvm")
    assert chained == direct
    assert direct.read_latency == 400
    assert CAT.with_multiplier(None).get("nvm").write_latency == 200


def test_catalog_file_roundtrip(tmp_path, monkeypatch):
    text = "# comment\ndram dram 60 60 5e10 8 0\n\nnvm nvm 300 900 8e9 2 0\nssd ssd 20000 200000 2e9 0.1 0\n"
    cat = parse_catalog(text)
    assert cat.get("nvm").write_latency == 900
    assert cat.get("ssd").cost_per_gb == 0.1
    assert parse_catalog(format_catalog(cat)).profiles == cat.profiles
    path = tmp_path / "cat.txt"
    path.write_text(text)
    monkeypatch.setenv("MTSIM_CATALOG", str(path))
    assert load_catalog().get("dram").read_latency == 60
    monkeypatch.delenv("MTSIM_CATALOG")
    assert load_catalog().get("dram").read_latency == 50


@pytest.mark.parametrize("line", ["dram dram 50 50 6e10 10", "dram tape 1 1 1 1 0", "dram dram x 1 1 1 0"])
def test_catalog_parse_errors(line):
    with pytest.raises(ConfigError, match="line 1"):
        parse_catalog(line)


def test_parse_size():
    assert parse_size("16GB") == 16 * GB
    assert parse_size("1TB") == TB
    assert parse_size("0") == 0
    assert parse_size("4096") == 4096
    for bad in ("GB", "1.5B", "12XB", "-1GB"):
        with pytest.raises(ConfigError):
            parse_size(bad)
