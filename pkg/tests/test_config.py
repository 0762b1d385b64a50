import pytest

from config import OUTPUT_DIR_ENV, PipelineConfig, apply_overrides, parse_config_file, parse_config_text, parse_tolerance_flags
from errors import ConfigError


def test_parse_keys_comments_and_tolerances():
    config = parse_config_text(
        "# Blaschke gamma_{3,2}\n"
        "energy = extended_blaschke\n"
        "lambda = 0.5   # index\n"
        "\n"
        "m = 3\n"
        "n = 2\n"
        "stages = profile, close\n"
        "strict = yes\n"
        "tol.el_residual = 1e-4\n"
    )
    assert config.lam == 0.5
    assert (config.m, config.n) == (3, 2)
    assert config.stages == ('profile', 'close')
    assert config.strict is True
    assert config.tolerances == {'el_residual': 1e-4}
    assert config.target == 'closure'
    assert config.validate() is config


def test_defaults():
    config = PipelineConfig()
    assert (config.energy, config.lam, config.rho) == ('extended_blaschke', 0.0, 4.0)
    assert (config.n_samples, config.n_t, config.a, config.b) == (1024, 64, 1.0, 2.0)
    assert config.output_dir == 'output'
    assert config.workers == 1


def test_base_values_survive():
    base = parse_config_text("d = 2")
    config = parse_config_text("rho = 9", base=base)
    assert (config.d, config.rho) == (2.0, 9.0)
    assert base.rho == 4.0


@pytest.mark.parametrize("text, line, column", [
    ("rho 4", 1, 5),
    ("d = 2\nfoo = 1", 2, 7),
    ("n_samples = 100", 1, 13),
    ("d =", 1, 4),
    ("energy = willmore", 1, 10),
    ("tol.speed = -1", 1, 13),
])
def test_errors_carry_location(text, line, column):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text)
    assert (info.value.line, info.value.column) == (line, column)
    assert str(info.value).startswith(f"Line {line}, Column {column}: ")


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as info:
        parse_config_text("lam = 1")
    assert info.value.key == 'lam'


@pytest.mark.parametrize("text, key", [
    ("d = 2\nm = 3\nn = 2", 'd'),
    ("rho = 4", 'd'),
    ("m = 3", 'n'),
    ("d = 2\nrho = -1", 'rho'),
    ("d = 2\nenergy = q_elastic\nlambda = 0.5", 'energy'),
])
def test_validate(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text).validate()
    assert info.value.key == key


def test_overrides_skip_missing_flags():
    config = apply_overrides(parse_config_text("d = 2\nrho = 9"), {'rho': None, 'lambda': '0.25', 'n_t': '32'})
    assert (config.rho, config.lam, config.n_t) == (9.0, 0.25, 32)


def test_output_dir_from_environment(monkeypatch):
    config = PipelineConfig(output_dir='here')
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert config.resolved_output_dir() == 'here'
    monkeypatch.setenv(OUTPUT_DIR_ENV, '/tmp/elsewhere')
    assert config.resolved_output_dir() == '/tmp/elsewhere'


def test_tolerance_flags():
    assert parse_tolerance_flags(['el_residual=1e-4', ' speed = 2e-8']) == {
        'tol.el_residual': '1e-4', 'tol.speed': '2e-8'}
    assert parse_tolerance_flags(None) == {}
    with pytest.raises(ConfigError):
        parse_tolerance_flags(['el_residual'])


def test_text_round_trip(monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    config = parse_config_text("d = 2.25\nlambda = -0.5\nstages = profile,evolve\ntol.speed = 1e-7")
    assert parse_config_text(config.to_text()) == config


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("d = 2\nn_t = 16\n")
    assert parse_config_file(str(path)).n_t == 16
    with pytest.raises(ConfigError):
        parse_config_file(str(tmp_path / "missing.cfg"))
