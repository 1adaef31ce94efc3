"""Flat ``key = value`` run configuration.

Keys are dotted (``co.pop_size``).  Lines starting with ``#`` are comments.
Unknown keys, bad types and violated invariants raise :class:`UsageError`
with the offending line number.  :meth:`RunConfig.manifest` renders the
fully-resolved configuration in the same syntax, so it parses back to an
identical :class:`RunConfig`.
"""

import math
from dataclasses import dataclass, field

from .cuttlefish import DEFAULT_GROUP_FRACTIONS
from .exceptions import UsageError
from .preprocess import MODES


def _int(text):
    return int(text)


def _float(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _floats(text):
    return tuple(_float(part) for part in text.split(","))


def _str(text):
    return text


def _bool(text):
    lowered = text.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ValueError(text)


def _at_least(n):
    return (lambda v: v >= n), f"must be >= {n}"


def _positive():
    return (lambda v: v > 0), "must be > 0"


def _odd():
    return (lambda v: v >= 1 and v % 2 == 1), "must be an odd integer >= 1"


def _fractions():
    return ((lambda v: len(v) == 4 and min(v) >= 0 and abs(sum(v) - 1.0) <= 1e-12),
            "must be four non-negative fractions summing to 1")


def _ratio():
    return (lambda v: 0.0 < v < 1.0), "must lie in (0, 1)"


def _choice(options):
    return (lambda v: v in options), f"must be one of {', '.join(options)}"


# key -> (parser, default, check or None)
SCHEMA = {
    "seed": (_int, 0, ((lambda v: 0 <= v < 2 ** 64), "must be a 64-bit unsigned integer")),
    "generate.classes": (_int, 4, ((lambda v: 2 <= v <= 8), "must lie in [2, 8]")),
    "generate.per_class": (_int, 50, _at_least(1)),
    "generate.height": (_int, 16, _at_least(4)),
    "generate.width": (_int, 16, _at_least(4)),
    "generate.noise": (_float, 0.1, _at_least(0.0)),
    "preprocess.mode": (_str, "minmax", _choice(MODES)),
    "preprocess.denoise_window": (_int, 1, _odd()),
    "pca.k": (_int, 4, _at_least(1)),
    "optimize.function": (_str, "sphere", _choice(("sphere", "rosenbrock", "rastrigin"))),
    "optimize.dim": (_int, 10, _at_least(1)),
    "optimize.budget": (_int, 50000, _at_least(4)),
    "optimize.pop_size": (_int, 40, _at_least(4)),
    "co.pop_size": (_int, 10, _at_least(4)),
    "co.budget": (_int, 60, _at_least(4)),
    "co.group_fractions": (_floats, DEFAULT_GROUP_FRACTIONS, _fractions()),
    "co.q1": (_float, 1.0, None),
    "co.q2": (_float, -0.5, None),
    "co.u1": (_float, 1.0, None),
    "co.u2": (_float, -0.5, None),
    "brnn.search_epochs": (_int, 30, _at_least(1)),
    "brnn.epochs": (_int, 40, _at_least(1)),
    "brnn.batch": (_int, 10, _at_least(1)),
    "brnn.grad_clip": (_float, 5.0, _positive()),
    "brnn.init_scale": (_float, 1.0, _positive()),
    "train.val_ratio": (_float, 0.3, _ratio()),
    "split.ratio": (_float, 0.5, _ratio()),
    "split.stratified": (_bool, True, None),
    "paths.train": (_str, "", None),
    "paths.test": (_str, "", None),
    "paths.model": (_str, "", None),
    "paths.report": (_str, "", None),
}

# keys that must be non-empty after flags are merged in
REQUIRED = {
    "train": ("paths.train", "paths.model"),
    "evaluate": ("paths.model", "paths.test", "paths.report"),
}


def render_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def check_value(key, value, line=None):
    _, _, check = SCHEMA[key]
    if check is not None and not check[0](value):
        where = f"line {line}: " if line is not None else ""
        raise UsageError(f"{where}{key} = {render_value(value)} {check[1]}")
    return value


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: spec[1] for k, spec in SCHEMA.items()})

    def __getitem__(self, key):
        return self.values[key]

    def set(self, key, value):
        if key not in SCHEMA:
            raise UsageError(f"unknown configuration key {key!r}")
        self.values[key] = check_value(key, value)

    def require(self, subcommand):
        missing = [k for k in REQUIRED.get(subcommand, ()) if self.values[k] in ("", None)]
        if missing:
            raise UsageError(f"{subcommand} requires {', '.join(missing)}")

    def manifest(self, keys=None):
        keys = list(SCHEMA) if keys is None else keys
        return "\n".join(f"{k} = {render_value(self.values[k])}" for k in keys) + "\n"

    def prefixed(self, *prefixes):
        """Keys belonging to ``seed`` and the given sections, in schema order."""
        return [k for k in SCHEMA if k == "seed" or k.split(".")[0] in prefixes]


def parse_config(text, subcommand=None):
    cfg = RunConfig()
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"line {lineno}: expected 'key = value'")
        if key not in SCHEMA:
            raise UsageError(f"line {lineno}: unknown configuration key {key!r}")
        if key in seen:
            raise UsageError(f"line {lineno}: {key} already set on line {seen[key]}")
        seen[key] = lineno
        parser = SCHEMA[key][0]
        try:
            parsed = parser(value)
        except ValueError:
            raise UsageError(f"line {lineno}: {key} expects {parser.__name__.lstrip('_')}, "
                             f"got {value!r}") from None
        cfg.values[key] = check_value(key, parsed, lineno)
    if subcommand is not None:
        cfg.require(subcommand)
    return cfg
