"""Peer-to-peer energy sharing in networked microgrids: billing, resilience
and forecasting toolkit."""
__version__ = "0.1.0"

from .errors import (ConfigError, DataError, GridshareError, InputError,  # noqa: E402
                     NumericError)
from .fleet import TariffSchedule, ingest_fleet, synthesize_fleet, SynthesisConfig  # noqa: E402
from .topology import load_topology, partition, scenario_set  # noqa: E402
from .billing import allocate, coalition_cost, settle  # noqa: E402
from .visibility import build_visibility, build_visibility_fast  # noqa: E402
from .percolation import percolation_curve  # noqa: E402
from .forecast import fit, forecast, select_order, score  # noqa: E402

__all__ = [
    "ConfigError", "DataError", "GridshareError", "InputError", "NumericError",
    "TariffSchedule", "SynthesisConfig", "ingest_fleet", "synthesize_fleet",
    "load_topology", "partition", "scenario_set", "allocate", "coalition_cost", "settle",
    "build_visibility", "build_visibility_fast", "percolation_curve",
    "fit", "forecast", "select_order", "score",
]
