from dataclasses import dataclass
from typing import List, Optional, Tuple

from skipfree.models.settings_definition import SettingsConstants



class RootVariant:
    """ Rule used to pick the action at the distinguished (root) state """
    FIRST_RETURN = SettingsConstants.VARIANT__FIRST_RETURN
    OPTIMALITY_EQ = SettingsConstants.VARIANT__OPTIMALITY
    MEAN_IMPROVEMENT = SettingsConstants.VARIANT__MEAN_IMPROVEMENT

    ALL_VARIANTS = [v for v, _ in SettingsConstants.ALL_VARIANTS]

    @classmethod
    def display_name(cls, variant: str) -> str:
        return dict(SettingsConstants.ALL_VARIANTS)[variant]


    @classmethod
    def check(cls, variant: str) -> str:
        if variant not in cls.ALL_VARIANTS:
            raise ValueError(f"Unknown root-update variant {variant!r}; expected one of {cls.ALL_VARIANTS}")
        return variant



@dataclass
class SweepState:
    """
        Result of one backward sweep at average-cost estimate `x`.

        `action`, `y` and `t` are indexed by state; entries for the root (and, in a
        restricted sweep, for states outside the swept region) stay at their
        placeholders until `root_update()` fills `a0`, `u0` and `t0`.
    """
    x: float
    action: List[int]
    y: List[float]
    t: List[float]
    a0: Optional[int] = None
    u0: Optional[float] = None
    t0: Optional[float] = None

    @property
    def policy(self) -> Tuple[int]:
        return tuple([self.a0] + self.action[1:])



@dataclass
class PolicyStats:
    """ Renewal-reward summary of a fixed policy with the root as the renewal state """
    g: float
    tau: float
    C: float

    def H_at(self, x: float) -> float:
        """ Expected x-revised cost until first return to the root """
        return self.C - x * self.tau



@dataclass(frozen=True)
class TraceRow:
    iteration: int
    g_n: float
    u0: float



@dataclass
class SolveReport:
    """
        Output of the skip-free solvers.

        * trace: row 0 holds g_0 = g(d_0); row n holds the estimate g_n produced by
            improvement iteration n and the root improvement u0 that produced it.
        * distinguished: K, the root of the sub-problem that attained g* (always 0 for
            recurrent models).
        * rate: uniformization rate when the report has been mapped back to continuous
            time, else None.
    """
    g_star: float
    h_star: List[float]
    policy: Tuple[int]
    trace: List[TraceRow]
    iterations: int
    variant: str
    distinguished: int = 0
    rate: Optional[float] = None
    values: Optional[List[float]] = None
    discount: Optional[float] = None

    @property
    def g_trace(self) -> List[float]:
        return [row.g_n for row in self.trace]



@dataclass
class OracleReport:
    """ Output of the reference solvers. `h` holds relative costs, or v for DVI. """
    g_star: Optional[float]
    h: Optional[List[float]]
    policy: Tuple[int]
    method: str
    iterations: int = 0
    solves: int = 0
    skipped: int = 0
