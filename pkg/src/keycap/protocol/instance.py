"""JSON instance files for the finite-alphabet protocol.

Schema::

    {
      "p_x": [...],                      # input pmf
      "p_y_given_x": [[...], ...],       # one row per input symbol
      "p_z_given_x": [[...], ...],
      "p_yhat_given_y": [[...], ...] | "identity",
      "epsilon": 0.25,                   # typicality tolerance
      "rate_epsilon": 0.001,             # rate slack (defaults to epsilon)
      "blocklength": 4,
      "codebook_seed": 0                 # optional
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import ConfigError
from .info import DMWiretapChannel, QuantizerChannel

REQUIRED = ("p_x", "p_y_given_x", "p_z_given_x")


@dataclass(frozen=True, eq=False)
class ProtocolInstance:
    dmc: DMWiretapChannel
    quantizer: QuantizerChannel
    epsilon: float = 0.25
    rate_epsilon: float | None = None
    blocklength: int = 4
    codebook_seed: int = 0
    raw: dict | None = None

    @property
    def rate_slack(self) -> float:
        return self.epsilon if self.rate_epsilon is None else self.rate_epsilon


def parse_instance(d: dict) -> ProtocolInstance:
    missing = [k for k in REQUIRED if k not in d]
    if missing:
        raise ConfigError(f"instance missing fields: {missing}")
    dmc = DMWiretapChannel(d["p_x"], d["p_y_given_x"], d["p_z_given_x"])
    q = d.get("p_yhat_given_y", "identity")
    quant = QuantizerChannel.identity(dmc.sizes[1]) if q == "identity" else QuantizerChannel(q)
    rate_eps = d.get("rate_epsilon")
    return ProtocolInstance(
        dmc,
        quant,
        float(d.get("epsilon", 0.25)),
        None if rate_eps is None else float(rate_eps),
        int(d.get("blocklength", 4)),
        int(d.get("codebook_seed", 0)),
        dict(d),
    )


def load_instance(path) -> ProtocolInstance:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read instance {path}: {exc}") from None
    return parse_instance(d)


def bundled_instance(name: str = "micro_instance.json") -> ProtocolInstance:
    text = resources.files("keycap.data").joinpath(name).read_text()
    return parse_instance(json.loads(text))
