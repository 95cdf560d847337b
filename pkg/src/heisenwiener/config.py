"""Run configurations: a flat ``key = value`` text format with typed values.

One assignment per line; ``#`` starts a comment.  Value types:

=========  ==========================================  ==================
type       written as                                  example
=========  ==========================================  ==================
int        decimal integer                             ``n_paths = 100000``
float      Python float literal, ``inf`` allowed       ``t = 0.5``
floats     comma-separated floats                      ``times = 0.4, 1``
intervals  comma-separated ``lo:hi`` pairs             ``box_1 = -1:1, -inf:inf, 0:2``
str        bare text                                   ``V = quadratic_radial``
=========  ==========================================  ==================

Each subcommand has a schema (:data:`SCHEMAS`); unknown keys and malformed
values raise :class:`ConfigError`.  Cylinder files may hold any number of
``box_<j>`` keys, one per time, numbered from 1.
"""

from dataclasses import dataclass, field
import json
import re

import numpy as np


class ConfigError(ValueError):
    """A configuration file or flag is missing, malformed or inconsistent."""


def _float(text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError("expected a number, got %r" % text) from None


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError("expected an integer, got %r" % text) from None


def _floats(text):
    return [_float(x) for x in text.split(",") if x.strip()]


def _intervals(text):
    out = []
    for item in text.split(","):
        lo, sep, hi = item.partition(":")
        if not sep:
            raise ConfigError("interval %r must be written lo:hi" % item.strip())
        out.append([_float(lo), _float(hi)])
    return out


PARSERS = {"int": _int, "float": _float, "floats": _floats, "intervals": _intervals,
           "str": str.strip}

DEFAULT_SEED = 20240611

_COMMON = {"seed": ("int", DEFAULT_SEED), "workers": ("int", 1), "out": ("str", "-")}

SCHEMAS = {
    "kernel": dict(_COMMON, n=("int", 1), t=("floats", [1.0]), z=("floats", None),
                   u=("floats", [0.0]), method=("str", "nodes")),
    "sample": dict(_COMMON, n=("int", 1), t=("float", 1.0), intervals=("int", 8),
                   substeps=("int", 16), n_paths=("int", 4), scheme=("str", "midpoint"),
                   summary=("str", "")),
    "cylinder": dict(_COMMON, n=("int", 1), times=("floats", None), method=("str", "both"),
                     n_paths=("int", 100000), substeps=("int", 64), nodes_z=("int", 12),
                     nodes_u=("int", 16)),
    "fk": dict(_COMMON, n=("int", 1), t=("float", 1.0), base=("floats", None),
               f=("str", "constant"), f_c=("float", 1.0), f_center=("floats", None),
               f_width=("float", 1.0), f_amplitude=("float", 1.0), f_box=("intervals", None),
               V=("str", "constant"), V_c=("float", 0.0), V_alpha=("float", 0.0),
               V_beta=("float", 0.0), n_paths=("int", 100000), substeps=("int", 64),
               scheme=("str", "compensated"), density_r_edges=("floats", None),
               density_u_edges=("floats", None), density_out=("str", "")),
    "validate": dict(_COMMON, suite=("str", "all"), scale=("float", 1.0)),
}

_BOX_KEY = re.compile(r"^box_(\d+)$")


@dataclass
class RunConfig:
    """A fully typed parameter record for one subcommand."""

    command: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def as_dict(self):
        return {"command": self.command, **_jsonable(self.values)}

    def dumps(self):
        """Canonical one-line JSON form, echoed into every output."""
        return json.dumps(self.as_dict(), sort_keys=True)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _schema_type(command, key):
    schema = SCHEMAS[command]
    if key in schema:
        return schema[key][0]
    if command == "cylinder" and _BOX_KEY.match(key):
        return "intervals"
    raise ConfigError("unknown key %r for %s" % (key, command))


def parse_text(command, text):
    """Parse config text into a dict of typed values (no defaults applied)."""
    if command not in SCHEMAS:
        raise ConfigError("no configuration schema for %r" % command)
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError("line %d: expected key = value" % lineno)
        if key in out:
            raise ConfigError("line %d: duplicate key %r" % (lineno, key))
        try:
            out[key] = PARSERS[_schema_type(command, key)](value.strip())
        except ConfigError as exc:
            raise ConfigError("line %d: %s" % (lineno, exc)) from None
    return out


def load(command, path=None, overrides=None):
    """Defaults, then the file at ``path``, then ``overrides`` (already typed)."""
    if command not in SCHEMAS:
        raise ConfigError("no configuration schema for %r" % command)
    values = {k: v for k, (_, v) in SCHEMAS[command].items()}
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError("cannot read config %s: %s" % (path, exc.strerror)) from None
        values.update(parse_text(command, text))
    for key, value in (overrides or {}).items():
        if value is not None:
            _schema_type(command, key)
            values[key] = value
    return RunConfig(command, values)


def cylinder_boxes(cfg):
    """Boxes ``(m, 2n + 1, 2)`` from ``box_1 .. box_m``; missing ones are unconstrained."""
    times = cfg["times"]
    if not times:
        raise ConfigError("cylinder config needs times")
    n = cfg["n"]
    keys = {int(_BOX_KEY.match(k).group(1)): k for k in cfg.values if _BOX_KEY.match(k)}
    if keys and (min(keys) < 1 or max(keys) > len(times)):
        raise ConfigError("box numbers must run from 1 to the number of times")
    boxes = np.tile([-np.inf, np.inf], (len(times), 2 * n + 1, 1))
    for j, key in keys.items():
        box = np.asarray(cfg[key], dtype=float)
        if box.shape != (2 * n + 1, 2):
            raise ConfigError("%s needs %d intervals" % (key, 2 * n + 1))
        boxes[j - 1] = box
    return boxes
