import pytest

from crdrl.config import (
    ConfigInvalid, InvariantViolation, ParseError, Protocol, ScenarioConfig, UnknownKey,
    VehicleClass, apply_overrides, parse_config, parse_config_text, validate,
)


def test_defaults_match_reference_scenario():
    cfg = ScenarioConfig()
    assert (cfg.node_count, cfg.sim_duration_s, cfg.tick_s) == (50, 3600.0, 0.1)
    assert (cfg.area_width_m, cfg.area_height_m) == (4000.0, 3500.0)
    assert cfg.mobility_mix == (0.5, 0.3, 0.2)
    assert cfg.vehicle_classes == (VehicleClass(0.8, 8, 15), VehicleClass(0.2, 4, 8))
    assert cfg.initial_energy == 4800 and cfg.recharge_interval_s == 2800
    assert cfg.lambda_ == 0.85 and cfg.delta_scale == 1.5
    assert cfg.link_rate_Bps == 10e6
    validate(cfg)


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    assert parse_config(p) == ScenarioConfig()


def test_comments_and_blank_lines(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# header\n\nscenario.node_count = 12   # trailing\nscenario.protocol = scf\n")
    cfg = parse_config(p)
    assert cfg.node_count == 12 and cfg.protocol is Protocol.SCF_EPIDEMIC


def test_mix_parses_to_triple():
    assert parse_config_text("mobility.mix = 0.5,0.3,0.2").mobility_mix == (0.5, 0.3, 0.2)


def test_vehicle_classes_syntax():
    cfg = parse_config_text("mobility.vehicle_classes = 0.6:5:10; 0.4:1:2")
    assert cfg.vehicle_classes == (VehicleClass(0.6, 5, 10), VehicleClass(0.4, 1, 2))


def test_gamma_out_of_range_is_invariant_violation():
    with pytest.raises(InvariantViolation) as exc:
        parse_config_text("learning.gamma = 1.5")
    assert exc.value.field == "gamma"


def test_unknown_key_reports_line():
    with pytest.raises(UnknownKey) as exc:
        parse_config_text("\nscenario.nodes = 3\n")
    assert exc.value.line_no == 2


def test_malformed_line_is_parse_error():
    with pytest.raises(ParseError):
        parse_config_text("scenario.node_count 3")
    with pytest.raises(ParseError):
        parse_config_text("traffic.interval_s = 5")


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        parse_config("/nonexistent/x.cfg")


@pytest.mark.parametrize("change, field", [
    (dict(node_count=0), "node_count"),
    (dict(tick_s=0.0), "tick_s"),
    (dict(sim_duration_s=10.05), "sim_duration_s"),
    (dict(mobility_mix=(0.5, 0.5, 0.1)), "mobility_mix"),
    (dict(vehicle_classes=(VehicleClass(0.5, 1, 2),)), "vehicle_classes"),
    (dict(failure_fraction=1.2), "failure_fraction"),
    (dict(msg_interval_s=(40.0, 5.0)), "msg_interval_s"),
    (dict(alpha_actor=0.0), "alpha_actor"),
    (dict(delta_scale=-1.0), "delta_scale"),
    (dict(gamma=0.0), "gamma"),
])
def test_invariants(change, field):
    with pytest.raises(ConfigInvalid) as exc:
        validate(ScenarioConfig().replace(**change))
    assert exc.value.field == field


def test_overrides_validate():
    cfg = apply_overrides(ScenarioConfig(), {"clustering.delta": "0.5", "scenario.seed": "9"})
    assert cfg.delta_scale == 0.5 and cfg.seed == 9
    with pytest.raises(UnknownKey):
        apply_overrides(ScenarioConfig(), {"nope": "1"})
    with pytest.raises(ConfigInvalid):
        apply_overrides(ScenarioConfig(), {"scenario.node_count": "two"})
