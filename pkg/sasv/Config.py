# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Run configuration files.

A configuration file holds one "key = value" setting per line; "#" starts
a comment.  Keys are the fields of DatasetConfig and TrainConfig, and
values are coerced to the type of the field's default:

    # 8 training speakers, 20 epochs
    n_speakers = 8
    epochs = 20
    lambdas = 1.0, 0.1, 0.1, 0.2
    grl_ramp = yes

The SASV_SEED environment variable, when set, overrides "seed".
"""
import dataclasses
import logging
import os
import re
from typing import Any, Dict, Mapping, Optional

from sasv.Dataset import DatasetConfig
from sasv.Datatypes import ContractError
from sasv.Trainer import TrainConfig

# logger
_logger = logging.getLogger(__name__)


# Exceptions
class ConfigError(ContractError):
    """Exception raised for an unknown key or an unusable value."""

    pass


SEED_ENV = "SASV_SEED"

# regular expressions to decode configuration lines
SETTING_RE = re.compile(
    r"""^\s*(?P<key>[A-Za-z_][A-Za-z0-9_]*)\s*=
        \s*(?P<value>[^#]*?)\s*
        (\#.*)?$""",
    re.VERBOSE,
)
COMMENT_RE = re.compile(r"^\s*(#.*)?$")

TRUE_WORDS = ["true", "yes", "on", "1"]
FALSE_WORDS = ["false", "no", "off", "0"]


def _defaults(cls) -> Dict[str, Any]:
    values = {}
    for f in dataclasses.fields(cls):
        if f.default is not dataclasses.MISSING:
            values[f.name] = f.default
        else:
            values[f.name] = f.default_factory()
    return values


DATASET_KEYS = _defaults(DatasetConfig)
TRAIN_KEYS = _defaults(TrainConfig)
SCHEMA = dict(DATASET_KEYS, **TRAIN_KEYS)


def _coerce(key: str, text: str):
    default = SCHEMA[key]
    try:
        if isinstance(default, bool):
            word = text.lower()
            if word in TRUE_WORDS:
                return True
            if word in FALSE_WORDS:
                return False
            raise ValueError("not a boolean")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            values = tuple(float(v) for v in text.split(","))
            if len(values) != len(default):
                raise ValueError("expected %d comma-separated values" % len(default))
            return values
    except ValueError as err:
        raise ConfigError("bad value for '%s': '%s' (%s)" % (key, text, err))
    if not text:
        raise ConfigError("empty value for '%s'" % key)
    return text


class RunConfig(object):
    """Validated settings of one pipeline run."""

    def __init__(self, values: Optional[Mapping[str, Any]] = None, source: str = "<defaults>"):
        self.values = dict(values or {})
        self.source = source
        unknown = sorted(k for k in self.values if k not in SCHEMA)
        if unknown:
            raise ConfigError("%s: unknown key '%s'" % (source, unknown[0]))
        # build both configs now so every value is checked before any work starts
        try:
            self._dataset = self.dataset_config()
            self._train = self.train_config()
        except ContractError as err:
            raise ConfigError("%s: %s" % (source, err))

    def __repr__(self):
        return "RunConfig(%s)" % ", ".join("%s=%r" % kv for kv in sorted(self.values.items()))

    def get(self, key: str):
        return self.values.get(key, SCHEMA[key])

    def dataset_config(self) -> DatasetConfig:
        return DatasetConfig(**{k: v for k, v in self.values.items() if k in DATASET_KEYS})

    def train_config(self) -> TrainConfig:
        return TrainConfig(**{k: v for k, v in self.values.items() if k in TRAIN_KEYS})


def parse_config_text(
    text: str, source: str = "<string>", environ: Optional[Mapping[str, str]] = None
) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if COMMENT_RE.match(line):
            continue
        m = SETTING_RE.match(line)
        if not m:
            raise ConfigError("%s line %d: expected 'key = value': '%s'" % (source, lineno, line.strip()))
        key = m.group("key")
        if key not in SCHEMA:
            raise ConfigError("%s line %d: unknown key '%s'" % (source, lineno, key))
        if key in values:
            raise ConfigError("%s line %d: duplicate key '%s'" % (source, lineno, key))
        values[key] = _coerce(key, m.group("value"))
    environ = os.environ if environ is None else environ
    if environ.get(SEED_ENV):
        values["seed"] = _coerce("seed", environ[SEED_ENV].strip())
        _logger.info("seed %d taken from %s", values["seed"], SEED_ENV)
    return RunConfig(values, source)


def load_config(path: Optional[str], environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Read a configuration file; None gives the defaults (plus SASV_SEED)."""
    if path is None:
        return parse_config_text("", "<defaults>", environ)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError("cannot read configuration: %s" % err)
    return parse_config_text(text, path, environ)
