"""Per-phase FIFO data slots for warm-start statistics.

A data slot keeps, for every phase p of the cycle, the K most recent
signal snapshots attributed to that phase, newest first. Cycle zero is
the training partition; afterwards each new estimate pushes out the
oldest column of its phase. Slot means and slot-estimated PSDs are the
evolving statistics the cooperative filter feeds on.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError

__all__ = ["DataSlot", "update_data_slot"]


@dataclass(frozen=True)
class DataSlot:
    """Warm-start buffer: one (n, K) matrix per phase, newest column first.

    ``cycles[p]`` counts the insertions made into phase p; zero means the
    phase still holds its training partition untouched.
    """

    data: tuple
    cycles: tuple

    def __post_init__(self):
        if len(self.data) != len(self.cycles):
            raise ContractError("one cycle counter per phase is required")
        n, k = self.data[0].shape
        for X in self.data:
            if X.shape != (n, k):
                raise ContractError("all phase matrices must share one (n, K) shape")

    @classmethod
    def from_training(cls, train, period, phase_offset=0):
        """Partition a training stream into per-phase slots.

        Column ``j`` of ``train`` is assigned phase ``(j + phase_offset)
        mod period``; a harness whose stream starts at time 1 passes
        ``phase_offset=1``. Within a phase, columns are stored newest
        first so the FIFO drop removes the oldest; when a phase has more
        than ``T // period`` columns, only the newest K are kept.
        """
        X = np.asarray(train, dtype=float)
        if X.ndim != 2:
            raise ContractError("training stream must be (n, T)")
        n, T = X.shape
        if T < period:
            raise ContractError("training stream shorter than one cycle")
        k = T // period
        data = []
        for p in range(period):
            first = (p - phase_offset) % period
            cols = np.arange(first, T, period)[-k:]
            data.append(X[:, cols[::-1]].copy())
        return cls(data=tuple(data), cycles=tuple([0] * period))

    @property
    def period(self):
        return len(self.data)

    @property
    def n(self):
        return self.data[0].shape[0]

    @property
    def k(self):
        return self.data[0].shape[1]

    def mean(self, phase):
        """Mean vector of the phase's current slot."""
        return self.data[phase % self.period].mean(axis=1)

    def matrix(self, phase):
        """The (n, K) slot matrix of a phase, newest column first."""
        return self.data[phase % self.period]


def update_data_slot(slot, phase, new_estimate):
    """Insert an estimate into a phase slot, dropping its oldest column.

    Returns a new :class:`DataSlot`; the input is not modified.
    """
    phase = phase % slot.period
    x = np.asarray(new_estimate, dtype=float)
    if x.shape != (slot.n,):
        raise ContractError(f"estimate length {x.shape} does not match slot nodes {slot.n}")
    data = list(slot.data)
    old = data[phase]
    data[phase] = np.column_stack([x, old[:, : slot.k - 1]])
    cycles = list(slot.cycles)
    cycles[phase] += 1
    return DataSlot(data=tuple(data), cycles=tuple(cycles))
