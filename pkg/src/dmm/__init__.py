"""Dataflow matrix machines: sparse self-modifying generalized RNNs over linear streams."""
from importlib import resources

from .engine import HaltRecord, Network, RunResult
from .network import (
    SELF,
    ColumnMask,
    NetworkMatrix,
    NeuronInstance,
    NeuronType,
    PortRef,
    RowMask,
    Signature,
)
from .streams import EOS, CVector, StreamKind, lin_comb

__version__ = "0.1.0"


def program_text(name: str) -> str:
    """Source of a bundled program, e.g. ``program_text("detector")``."""
    return resources.files(__package__).joinpath("programs", f"{name}.dmm").read_text("utf-8")


__all__ = [
    "EOS", "SELF", "CVector", "ColumnMask", "HaltRecord", "Network", "NetworkMatrix",
    "NeuronInstance", "NeuronType", "PortRef", "RowMask", "RunResult", "Signature",
    "StreamKind", "lin_comb", "program_text",
]
