"""Finite-alphabet quantize-and-bin key agreement."""

from .codebook import Codebook, generate_codebook
from .info import (
    DMWiretapChannel,
    QuantizerChannel,
    RateQuadruple,
    build_rates,
    entropy,
    key_rate_formula,
    mutual_information,
)
from .instance import ProtocolInstance, bundled_instance, load_instance, parse_instance
from .leakage import LeakageReport, estimate_error_and_leakage
from .session import (
    ProtocolEngine,
    ProtocolSetup,
    SessionOutcome,
    run_session,
    s_indicator,
    s_probability,
)
from .typicality import is_jointly_typical

__all__ = [
    "Codebook", "generate_codebook", "DMWiretapChannel", "QuantizerChannel", "RateQuadruple",
    "build_rates", "entropy", "key_rate_formula", "mutual_information", "ProtocolInstance",
    "bundled_instance", "load_instance", "parse_instance", "LeakageReport",
    "estimate_error_and_leakage", "ProtocolEngine", "ProtocolSetup", "SessionOutcome",
    "run_session", "s_indicator", "s_probability", "is_jointly_typical",
]
