import logging
import time

from dataclasses import dataclass
from typing import List, Sequence, Tuple

from skipfree.helpers.model_library import default_queue_spec, make_multiclass_queue
from skipfree.helpers.reference import rvi_sweep
from skipfree.helpers.skip_free import backward_sweep, root_update, solve_average
from skipfree.helpers.transforms import uniformize
from skipfree.models.mdp import SkipFreeMdp


logger = logging.getLogger(__name__)


CSV_HEADER = "K,M,states,skip_free_s,rvi_s,ratio"



@dataclass
class BenchmarkRow:
    K: int
    M: int
    states: int
    skip_free_s: float
    rvi_s: float

    @property
    def ratio(self) -> float:
        return self.skip_free_s / self.rvi_s


    def to_csv(self) -> str:
        return f"{self.K},{self.M},{self.states},{self.skip_free_s:.6e},{self.rvi_s:.6e},{self.ratio:.4f}"



def time_per_iteration(mdp: SkipFreeMdp, repeats: int = 5) -> Tuple[float, float]:
    """
        Best-of-`repeats` wall time of one skip-free improvement iteration (sweep plus
        root update) and of one relative value iteration sweep, both at a realistic
        operating point (the optimal g and h).
    """
    report = solve_average(mdp)
    x = report.g_star
    v = list(report.h_star)

    skip_free_s = rvi_s = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        root_update(mdp, backward_sweep(mdp, x))
        skip_free_s = min(skip_free_s, time.perf_counter() - start)

        start = time.perf_counter()
        rvi_sweep(mdp, v)
        rvi_s = min(rvi_s, time.perf_counter() - start)
    return skip_free_s, rvi_s



def benchmark_queue(K: int = 2, M_values: Sequence[int] = range(3, 9), repeats: int = 5) -> List[BenchmarkRow]:
    rows = []
    for M in M_values:
        mdp, _ = uniformize(make_multiclass_queue(default_queue_spec(K, M)))
        skip_free_s, rvi_s = time_per_iteration(mdp, repeats=repeats)
        row = BenchmarkRow(K=K, M=M, states=mdp.num_states, skip_free_s=skip_free_s, rvi_s=rvi_s)
        logger.info(f"K={K} M={M}: {row.states} states, ratio {row.ratio:.2f}")
        rows.append(row)
    return rows
