from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Mesh1D:
    """Uniform mesh on ``[x_min, x_max]``.

    ``bc`` is ``"periodic"`` or ``"dirichlet"``; Dirichlet ghosts hold the
    constant conserved states ``left_state`` / ``right_state``.
    """

    x_min: float
    x_max: float
    n_cells: int
    bc: str = "periodic"
    left_state: Optional[tuple] = None
    right_state: Optional[tuple] = None

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be positive, got {self.n_cells}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.bc not in ("periodic", "dirichlet"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if self.bc == "dirichlet" and (self.left_state is None or self.right_state is None):
            raise ValueError("dirichlet boundaries need left_state and right_state")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + self.h * (np.arange(self.n_cells) + 0.5)

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    def pad(self, data: np.ndarray, n_left: int, n_right: int) -> np.ndarray:
        """Add ghost cells to per-cell modal data ``(n_cells, n_modes, Q)``.

        Dirichlet ghosts are constant: the prescribed state in mode 0, zeros elsewhere.
        """
        if n_left == 0 and n_right == 0:
            return data
        if self.periodic:
            idx = np.arange(-n_left, self.n_cells + n_right) % self.n_cells
            return data[idx]
        shape = (data.shape[1], data.shape[2])
        left = np.zeros(shape)
        left[0] = self.left_state
        right = np.zeros(shape)
        right[0] = self.right_state
        return np.concatenate(
            [np.broadcast_to(left, (n_left,) + shape), data, np.broadcast_to(right, (n_right,) + shape)]
        )
