"""The evolving simulation state."""

from dataclasses import dataclass

from .grid import ScalarField, VectorField


@dataclass
class SimState:
    n: ScalarField
    c: ScalarField
    u: VectorField
    p: ScalarField
    t: float = 0.0
    step: int = 0

    def copy(self):
        return SimState(self.n.copy(), self.c.copy(), self.u.copy(), self.p.copy(), self.t, self.step)
