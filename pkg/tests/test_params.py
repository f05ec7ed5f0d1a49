import pytest

from confine_sim.params import (
    ConfigurationError,
    ModelParams,
    dump_config,
    from_mapping,
    load_config,
    resolve_key,
)


def test_defaults_match_table():
    p = ModelParams()
    assert (p.cortex.dp_c, p.cortex.k_c, p.cortex.A_c, p.cortex.mu_c, p.cortex.r_pol) == (2.56, 0.3, 1.8, 50.0, 10.0)
    assert (p.nucleus.dp_n, p.nucleus.A_n, p.nucleus.k_cont, p.nucleus.xi_cont) == (1.0, 0.7, 5.0, 10.0)
    assert p.nucleus.k_b == pytest.approx(3.16e-3)
    assert (p.channel.f_width, p.channel.f_beta, p.channel.f_omega0, p.channel.xi) == (0.4, 0.2, 8.0, 20.0)
    assert (p.numerics.N_c, p.numerics.N_n, p.numerics.dt) == (250, 200, 2e-4)
    assert p.centrosome.k_e == 1e-3 and p.cortex.k_tau == 1e-4


def test_resolve_key():
    assert resolve_key("nucleus.k_b") == ("nucleus", "k_b")
    assert resolve_key("k_b") == ("nucleus", "k_b")
    assert resolve_key("f_width") == ("channel", "f_width")
    with pytest.raises(ConfigurationError):
        resolve_key("nucleus.nope")
    with pytest.raises(ConfigurationError):
        resolve_key("bogus.k_b")


def test_with_value_and_validation():
    p = ModelParams().with_value("nucleus.mu_n", 70)
    assert p.nucleus.mu_n == 70.0 and isinstance(p.nucleus.mu_n, float)
    assert ModelParams().with_value("numerics.N_c", 100.0).numerics.N_c == 100
    with pytest.raises(ConfigurationError, match="f_beta"):
        ModelParams().with_value("channel.f_beta", 0.5)
    with pytest.raises(ConfigurationError):
        ModelParams().with_value("numerics.N_c", 2.5)
    with pytest.raises(ConfigurationError):
        ModelParams().with_value("nucleus.k_b", -1.0)


def test_round_trip_yaml(tmp_path):
    p = ModelParams().with_value("nucleus.k_b", 10**-2.5)
    path = tmp_path / "c.yaml"
    path.write_text(dump_config(p))
    assert load_config(path) == p
    assert load_config("defaults") == ModelParams()


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="unknown parameter 'nucleus.kb'"):
        from_mapping({"nucleus": {"kb": 1}})
    with pytest.raises(ConfigurationError):
        from_mapping({"cell": {}})
    bad = tmp_path / "bad.yaml"
    bad.write_text("nucleus: [1, 2\n")
    with pytest.raises(ConfigurationError):
        load_config(bad)
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.yaml")


def test_partial_mapping_keeps_defaults():
    p = from_mapping({"channel": {"f_width": 0.8}})
    assert p.channel.f_width == 0.8 and p.channel.f_beta == 0.2 and p.cortex == ModelParams().cortex
