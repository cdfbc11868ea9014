import pytest

from qbattery.config import (
    ConfigError,
    dump_params,
    params_from_mapping,
    parse_text,
    split_config,
)
from qbattery.model import ModelParams


def test_parse_with_comments_and_complex():
    text = "# header\nepsilon = 0.07  # drive\np_a = 0.6+0.8j\nnonreciprocal = false\nxi = none\n"
    p = params_from_mapping(parse_text(text))
    assert p.epsilon == 0.07
    assert p.p_a == complex(0.6, 0.8)
    assert p.nonreciprocal is False
    assert p.xi is None


def test_duplicate_and_malformed_lines():
    with pytest.raises(ConfigError):
        parse_text("epsilon = 1\nepsilon = 2\n")
    with pytest.raises(ConfigError):
        parse_text("epsilon 1\n")
    with pytest.raises(ConfigError):
        params_from_mapping({"epsilon": "abc"})


def test_kappa_shorthand_and_explicit_override():
    p = params_from_mapping({"kappa": "0.1", "kappa_b": "0.2"})
    assert p.kappa_a == 0.1 and p.kappa_b == 0.2


def test_extra_keys_split_off():
    params, extra = split_config({"epsilon": "0.01", "sweep": "kappa"})
    assert params.epsilon == 0.01
    assert extra == {"sweep": "kappa"}


def test_dump_round_trip():
    p = ModelParams(epsilon=0.1 / 3, p_a=complex(0.6, 0.8), p_b=complex(0.6, -0.8), xi=1.5, theta=1.0)
    assert params_from_mapping(parse_text(dump_params(p))) == p
