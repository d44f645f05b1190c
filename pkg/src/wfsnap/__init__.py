"""Wait-free single- and λ-scanner snapshot objects with a schedule explorer
and a linearizability checker."""

from .lsnap import LambdaSnap
from .shmem import BOTTOM, InstrumentedMemory, NativeMemory, SimulatedMemory, UsageFault
from .snap1 import OneSnap

__all__ = [
    "BOTTOM",
    "InstrumentedMemory",
    "LambdaSnap",
    "NativeMemory",
    "OneSnap",
    "SimulatedMemory",
    "UsageFault",
]
