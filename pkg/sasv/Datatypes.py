# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Python classes to represent the small value types shared by the package.
"""
import enum
from typing import Optional, Union

import numpy as np

from sasv.Units import ureg


# exceptions
class ContractError(Exception):
    """Exception raised when a caller violates an operation's preconditions."""

    pass


class UnitsError(ContractError):
    """Exception raised when unrecognized units are used."""

    pass


# spoof source labels, as used by the ASVspoof 2019 LA protocols


class Family(enum.Enum):
    """Spoof generation family."""

    TTS = "TTS"
    VC = "VC"


class Source(enum.Enum):
    """Source of an utterance: bonafide speech or one spoofing system.

    A01-A06 are the training attacks.  A07 and A08 are eval-only
    generators that training never sees.
    """

    BONAFIDE = "bonafide"
    A01 = "A01"
    A02 = "A02"
    A03 = "A03"
    A04 = "A04"
    A05 = "A05"
    A06 = "A06"
    A07 = "A07"
    A08 = "A08"

    @classmethod
    def parse(cls, text: str) -> "Source":
        """Return the source for a protocol token ("bonafide", "-", "A01", ...)."""
        if text in ("-", "bonafide"):
            return cls.BONAFIDE
        try:
            return cls(text)
        except ValueError:
            raise ContractError("unrecognized spoof source: '" + text + "'")

    @property
    def is_bonafide(self) -> bool:
        return self is Source.BONAFIDE

    @property
    def family(self) -> Optional[Family]:
        """TTS for A01-A04 (and A07), VC for A05-A06 (and A08), None for bonafide."""
        return SOURCE_FAMILY.get(self)

    @property
    def system_id(self) -> str:
        """The protocol's system column: the attack id, or "-" for bonafide."""
        return "-" if self.is_bonafide else self.value


SOURCE_FAMILY = {
    Source.A01: Family.TTS,
    Source.A02: Family.TTS,
    Source.A03: Family.TTS,
    Source.A04: Family.TTS,
    Source.A05: Family.VC,
    Source.A06: Family.VC,
    Source.A07: Family.TTS,
    Source.A08: Family.VC,
}

# attacks seen in training, and the class order of the two aggregator heads
TRAIN_ATTACKS = [Source.A01, Source.A02, Source.A03, Source.A04, Source.A05, Source.A06]
TTS_HEAD_CLASSES = [Source.A01, Source.A02, Source.A03, Source.A04]
VC_HEAD_CLASSES = [Source.A05, Source.A06]
EVAL_ONLY_ATTACKS = [Source.A07, Source.A08]

TRIAL_LABELS = ["target", "nontarget", "spoof"]


def _add_units(instance):
    """Add units to a value, if not already present."""
    if not isinstance(instance._value, ureg.Quantity):
        instance._value = ureg.Quantity(instance._value, instance.unit_ureg_dict[instance._units])


class error_rate(object):
    """A class representing an error rate (EER, FAR, FRR)."""

    legal_units = ["FRACTION", "PERCENT"]
    unit_ureg_dict = {
        "FRACTION": ureg.error_fraction,
        "PERCENT": ureg.percent,
    }

    def __init__(self, value: Union[float, str], units: str = "FRACTION"):
        if not units.upper() in error_rate.legal_units:
            raise UnitsError("unrecognized error rate unit: '" + units + "'")
        self._units = units.upper()
        try:
            self._value = float(value)
        except ValueError:
            raise ValueError("error rate must be numeric: '" + str(value) + "'")
        if not np.isfinite(self._value):
            raise ValueError("error rate must be finite: '" + str(value) + "'")
        _add_units(self)
        if not 0.0 <= self.value("FRACTION") <= 1.0:
            raise ValueError("error rate must lie in [0, 1]: '" + str(value) + "'")

    def __str__(self):
        return self.string()

    def value(self, units: Optional[str] = None) -> float:
        """Return the error rate as a plain number in the given units."""
        if units is None:
            units = self._units
        elif units.upper() not in error_rate.legal_units:
            raise UnitsError("unrecognized error rate unit: '" + units + "'")
        return float(self._value.to(error_rate.unit_ureg_dict[units.upper()]).magnitude)

    def string(self, units: str = "PERCENT", precision: int = 2) -> str:
        """Return the error rate formatted with a fixed number of decimals."""
        return "%.*f" % (precision, self.value(units))


class Embedding(object):
    """A shared SASV embedding vector."""

    def __init__(self, vector):
        self.vector = np.asarray(vector, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.vector)):
            raise ContractError("embedding holds non-finite values")

    def __len__(self):
        return self.vector.shape[0]

    def __repr__(self):
        return "Embedding(dim=%d, norm=%.6f)" % (len(self), self.norm())

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def normalized(self) -> "Embedding":
        n = self.norm()
        if n == 0.0:
            raise ContractError("cannot normalize a zero-norm embedding")
        return Embedding(self.vector / n)
