"""Flat key = value experiment configuration.

Unknown keys are rejected and every value is range-checked at parse time;
'#' starts a comment.  The resolved mapping is embedded verbatim in every
report so runs are reproducible from their outputs alone.
"""

from dataclasses import dataclass, field, asdict

from gwlab.errors import ConfigurationError
from gwlab.grid import Grid


def _positive(x):
    if x <= 0:
        raise ValueError("must be positive")
    return x


def _power_of_two(x):
    x = int(x)
    if x < 2 or x & (x - 1):
        raise ValueError("must be a power of two >= 2")
    return x


_SCHEMA = {
    "n": (int, lambda v: v if 2 <= v <= 5 else (_ for _ in ()).throw(ValueError("n in 2..5"))),
    "N": (int, _power_of_two),
    "L": (float, _positive),
    "M": (int, lambda v: v if v >= 1 else (_ for _ in ()).throw(ValueError("M >= 1"))),
    "T": (float, _positive),
    "seed": (int, lambda v: v),
    "count": (int, lambda v: v if v >= 1 else (_ for _ in ()).throw(ValueError("count >= 1"))),
    "amplitude": (float, _positive),
    "tol": (float, _positive),
    "max_iter": (int, lambda v: v if v >= 1 else (_ for _ in ()).throw(ValueError("max_iter >= 1"))),
    "shells": (str, lambda v: v),
    "preset": (str, lambda v: v),
    "estimate": (str, lambda v: v),
    "out": (str, lambda v: v),
    "flatness_gate": (float, _positive),
    "cfl_fraction": (float, _positive),
    "delta": (float, _positive),
}

_DEFAULTS = {
    "n": 4, "N": 16, "L": 1.0, "M": 16, "T": 1.0,
    "seed": 0, "count": 20, "amplitude": 1e-2,
    "tol": 1e-9, "max_iter": 30, "shells": "2,3",
    "preset": "mwm_phi", "estimate": "forcing", "out": "out",
    "flatness_gate": 1e-3, "cfl_fraction": 0.5, "delta": 1e-3,
}


@dataclass
class Config:
    values: dict = field(default_factory=lambda: dict(_DEFAULTS))

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError as exc:
            raise AttributeError(key) from exc

    def grid(self) -> Grid:
        return Grid(self.n, self.N, self.L, self.M, self.T)

    def shell_tuple(self):
        try:
            return tuple(int(s) for s in str(self.shells).split(",") if s.strip())
        except ValueError as exc:
            raise ConfigurationError(f"bad shells list {self.shells!r}") from exc

    def as_dict(self):
        return dict(self.values)

    def override(self, **kw) -> "Config":
        out = Config(dict(self.values))
        for k, v in kw.items():
            if v is None:
                continue
            out.values[k] = _check(k, str(v))
        return out


def _check(key, raw):
    if key not in _SCHEMA:
        raise ConfigurationError(f"unknown configuration key {key!r}")
    typ, validate = _SCHEMA[key]
    try:
        value = typ(raw)
        return validate(value)
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"bad value for {key!r}: {raw!r} ({exc})") from exc


def parse_config(text: str) -> Config:
    values = dict(_DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        values[key] = _check(key, raw)
    return Config(values)


def load_config(path) -> Config:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
