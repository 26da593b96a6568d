"""Run configuration: JSON schema, validation, and provenance hashing.

Config files are plain JSON::

    {
      "L": 1.0,
      "epsilon": 0.1,
      "protocol": {"kind": "quadratic", "A": 1000.0, "alpha_max_in_E0": 400.0},
      "n_levels": 6,
      "tolerances": {"rtol": 1e-8, "atol": 1e-10}
    }

All numeric fields are in natural units (hbar = m = 1) except
``alpha_max_in_E0`` and table alphas, which are in units of E0*L.
"""

import hashlib
import json
from dataclasses import dataclass, field

from .errors import InvalidProtocolError
from .geometry import BarrierProtocol, BoxGeometry, UnitSystem, make_geometry

DEFAULT_ALPHA_MAX_IN_E0 = 400.0
DEFAULT_N_LEVELS = 6
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10


@dataclass(frozen=True)
class SimConfig:
    L: float = 1.0
    epsilon: float = 0.0
    protocol_kind: str = "quadratic"
    A: float = 1000.0                      # quadratic rate constant / linear slope, natural units
    alpha_max_in_E0: float = DEFAULT_ALPHA_MAX_IN_E0
    table_t: tuple = ()                    # table protocols only
    table_alpha_in_E0: tuple = ()
    n_levels: int = DEFAULT_N_LEVELS
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    # -- construction -------------------------------------------------------

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        proto = d.get("protocol", {})
        kind = proto.get("kind", "quadratic")
        kwargs = dict(
            L=float(d.get("L", 1.0)),
            epsilon=float(d.get("epsilon", 0.0)),
            protocol_kind=kind,
            alpha_max_in_E0=float(proto.get("alpha_max_in_E0", DEFAULT_ALPHA_MAX_IN_E0)),
            n_levels=int(d.get("n_levels", DEFAULT_N_LEVELS)),
        )
        if kind == "table":
            tbl = proto.get("table", {})
            kwargs["table_t"] = tuple(float(x) for x in tbl.get("t", ()))
            kwargs["table_alpha_in_E0"] = tuple(float(x) for x in tbl.get("alpha_in_E0", ()))
        else:
            kwargs["A"] = float(proto.get("A", 1000.0))
        tols = d.get("tolerances", {})
        kwargs["rtol"] = float(tols.get("rtol", DEFAULT_RTOL))
        kwargs["atol"] = float(tols.get("atol", DEFAULT_ATOL))
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        proto = {"kind": self.protocol_kind, "alpha_max_in_E0": self.alpha_max_in_E0}
        if self.protocol_kind == "table":
            proto["table"] = {"t": list(self.table_t),
                              "alpha_in_E0": list(self.table_alpha_in_E0)}
        else:
            proto["A"] = self.A
        return {
            "L": self.L,
            "epsilon": self.epsilon,
            "protocol": proto,
            "n_levels": self.n_levels,
            "tolerances": {"rtol": self.rtol, "atol": self.atol},
        }

    # -- derived objects ----------------------------------------------------

    def geometry(self) -> BoxGeometry:
        return make_geometry(self.L, self.epsilon)

    def units(self) -> UnitSystem:
        return UnitSystem.natural(self.L)

    def alpha_max(self) -> float:
        """Barrier strength at t = tau in natural units."""
        return self.alpha_max_in_E0 * self.units().alpha_unit(self.L)

    def protocol(self) -> BarrierProtocol:
        unit = self.units().alpha_unit(self.L)
        if self.protocol_kind == "quadratic":
            return BarrierProtocol.quadratic(self.A, self.alpha_max())
        if self.protocol_kind == "linear":
            return BarrierProtocol.linear(self.A, self.alpha_max())
        if self.protocol_kind == "table":
            alphas = [x * unit for x in self.table_alpha_in_E0]
            return BarrierProtocol.from_table(self.table_t, alphas)
        raise InvalidProtocolError(f"unknown protocol kind {self.protocol_kind!r}")

    def config_hash(self) -> str:
        """Short digest of the canonical config, embedded in every output file."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]
