"""
Precomputed Hamming-ball neighbor table for 16-bit subcodes.

Local mirror of the `nbs-d<d>` lookup index: entry v lists every subcode within
distance d of v, ascending, v included. Tables up to DENSE_MAX_RADIUS are held as a
dense (65536, ball size) uint16 array; wider radii compute each entry from the mask set
on lookup.
"""

import numpy as np

from src.logger import logging
from src.components.codes import SUBCODE_SPACE, check_radius, hamming_ball_masks


DENSE_MAX_RADIUS = 3


class NeighborTable:
    def __init__(self, d: int) -> None:
        self.radius = check_radius(d)
        self.masks = np.array(hamming_ball_masks(self.radius), dtype=np.uint16)
        self._entries = None
        if self.radius <= DENSE_MAX_RADIUS:
            values = np.arange(SUBCODE_SPACE, dtype=np.uint16)[:, None]
            self._entries = np.sort(values ^ self.masks[None, :], axis=1)

    @property
    def entry_length(self) -> int:
        return len(self.masks)

    @property
    def is_dense(self) -> bool:
        return self._entries is not None

    def __len__(self) -> int:
        return SUBCODE_SPACE

    def __getitem__(self, value: int) -> np.ndarray:
        value = int(value)
        if not 0 <= value < SUBCODE_SPACE:
            raise KeyError(value)
        if self._entries is not None:
            return self._entries[value]
        return np.sort(np.uint16(value) ^ self.masks)

    def __iter__(self):
        for value in range(SUBCODE_SPACE):
            yield self[value]


def build_neighbor_table(d: int) -> NeighborTable:
    table = NeighborTable(d)
    logging.info(
        f"Neighbor table built: d={table.radius}, {len(table)} entries x {table.entry_length} neighbors "
        f"({'dense' if table.is_dense else 'computed per lookup'})"
    )
    return table
