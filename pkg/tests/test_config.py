import pytest

from ergobound.config import ConfigError, load_config, parse_polynomial
from ergobound.polyalg import Polynomial


class TestExpressionParser:
    VARS = ("x", "y", "z")
    PARAMS = {"sigma": 10.0, "beta": 8.0 / 3.0, "r": 28.0}

    def parse(self, text):
        return parse_polynomial(text, self.VARS, self.PARAMS)

    def test_monomial_power(self):
        assert self.parse("z^4").terms == {(0, 0, 4): 1.0}

    def test_double_star_power(self):
        assert self.parse("z**4").terms == {(0, 0, 4): 1.0}

    def test_lorenz_components(self):
        assert self.parse("sigma*(y - x)").terms == {(0, 1, 0): 10.0, (1, 0, 0): -10.0}
        assert self.parse("x*(r - z) - y").terms == {(1, 0, 0): 28.0, (1, 0, 1): -1.0,
                                                     (0, 1, 0): -1.0}
        assert self.parse("x*y - beta*z").terms == {(1, 1, 0): 1.0, (0, 0, 1): -8.0 / 3.0}

    def test_leading_minus_and_numbers(self):
        assert self.parse("-2.5*x^2 + 1e-3").terms == {(2, 0, 0): -2.5, (0, 0, 0): 1e-3}

    def test_nested_parentheses(self):
        p = self.parse("(x + y)*(x - y)")
        assert p.terms == {(2, 0, 0): 1.0, (0, 2, 0): -1.0}

    def test_unknown_name(self):
        with pytest.raises(ConfigError, match="unknown name"):
            self.parse("w + 1")

    def test_bad_exponent(self):
        with pytest.raises(ConfigError, match="exponent"):
            self.parse("x^y")

    def test_trailing_garbage(self):
        with pytest.raises(ConfigError):
            self.parse("x + ")


def write_config(tmp_path, body):
    path = tmp_path / "exp.toml"
    path.write_text(body)
    return path


BASE = """
out_dir = "out"

[system]
builtin = "lorenz"

[phi]
expression = "z^4"

[bound]
degrees = [4]
"""


class TestLoadConfig:
    def test_minimal(self, tmp_path):
        config = load_config(write_config(tmp_path, BASE))
        assert config.system.parameters["r"] == 28.0
        assert config.phi.terms == {(0, 0, 4): 1.0}
        assert config.degrees == [4]
        assert config.section.offset == 27.0
        assert config.section.direction == -1

    def test_parameter_override(self, tmp_path):
        body = BASE.replace('builtin = "lorenz"', 'builtin = "lorenz"\nr = 30.0')
        config = load_config(write_config(tmp_path, body))
        assert config.system.parameters["r"] == 30.0
        assert config.section.offset == 29.0

    def test_inline_system(self, tmp_path):
        body = """
[system]
variables = ["x", "v"]
components = ["v", "-omega*x"]
[system.parameters]
omega = 4.0

[phi]
expression = "x^2"
"""
        config = load_config(write_config(tmp_path, body))
        assert config.system.dimension == 2
        assert config.system.components[1].terms == {(1, 0): -4.0}

    def test_unknown_builtin(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown builtin"):
            load_config(write_config(tmp_path, BASE.replace("lorenz", "rossler")))

    def test_odd_degree_rejected(self, tmp_path):
        with pytest.raises(ConfigError, match="even"):
            load_config(write_config(tmp_path, BASE.replace("[4]", "[3]")))

    def test_bad_orbit_symbols(self, tmp_path):
        body = BASE + '\n[[orbit]]\nsymbols = "AXB"\n'
        with pytest.raises(ConfigError, match="A/B"):
            load_config(write_config(tmp_path, body))

    def test_negative_region_threshold(self, tmp_path):
        body = BASE + """
[[region]]
certificate = "c.json"
box = [[-1.0, 1.0], [-1.0, 1.0], [0.0, 2.0]]
resolution = 5
M = [-3.0]
"""
        with pytest.raises(ConfigError, match="positive"):
            load_config(write_config(tmp_path, body))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(tmp_path / "absent.toml")

    def test_requests_parsed(self, tmp_path):
        body = BASE + """
[[orbit]]
symbols = "AB"
run_length = 250.0

[[region]]
certificate = "certificate_deg4.json"
box = [[-25.0, 25.0], [-25.0, 25.0], [0.0, 60.0]]
resolution = [9, 9, 9]
M = [1500.0, 3000.0]

[[trace]]
orbit = "orbit_AB.json"
certificate = "certificate_deg4.json"
M = 3000.0
"""
        config = load_config(write_config(tmp_path, body))
        assert config.orbits[0].symbols == "AB"
        assert config.orbits[0].run_length == 250.0
        assert config.regions[0].thresholds == [1500.0, 3000.0]
        assert config.regions[0].resolution == (9, 9, 9)
        assert config.traces[0].threshold == 3000.0
