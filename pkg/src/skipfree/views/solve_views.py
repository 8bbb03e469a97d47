import logging
import time

from dataclasses import dataclass
from typing import Callable, List, Optional

from skipfree.helpers.communicating import solve_communicating
from skipfree.helpers.reference import (METHOD__ENUMERATION, METHOD__POLICY_ITERATION, METHOD__RELATIVE_VALUE_ITERATION,
    TooManyPoliciesException, enumerate_policies, policy_iteration_average, relative_value_iteration)
from skipfree.helpers.skip_free import MaxIterExceededException, SolverException, solve_average
from skipfree.helpers.transforms import solve_discounted, to_continuous, uniformize
from skipfree.models.mdp import CtMdp, InvalidModelException, SkipFreeMdp, classify
from skipfree.models.model_format import load_model
from skipfree.models.reports import RootVariant, SolveReport
from skipfree.models.settings_definition import SettingsConstants
from skipfree.views.formatters import format_compare, format_solve_report, format_trace_csv
from skipfree.views.view import EXIT__DISAGREEMENT, EXIT__OK, View


logger = logging.getLogger(__name__)



class SolverView(View):
    """ Shared input handling for the commands that run solvers """
    def __init__(self, model_path: str):
        super().__init__()
        self.model_path = model_path


    @property
    def variant(self) -> str:
        return self.settings.get_value(SettingsConstants.SETTING__VARIANT)


    @property
    def tol(self) -> float:
        tol = self.settings.get_value(SettingsConstants.SETTING__TOL)
        if tol <= 0:
            raise ValueError("tol must be positive")
        return tol


    @property
    def max_iter(self) -> int:
        return self.settings.get_value(SettingsConstants.SETTING__MAX_ITER)


    def load_discrete(self):
        """ Returns (model as loaded, discrete model, uniformization rate or None) """
        model = load_model(self.model_path)
        if isinstance(model, CtMdp):
            mdp, rate = uniformize(model)
            logger.info(f"Uniformized {self.model_path} at rate {rate}")
            return model, mdp, rate
        return model, model, None


    def solve(self, mdp: SkipFreeMdp, variant: str = None) -> SolveReport:
        variant = variant or self.variant
        if self.settings.communicating:
            return solve_communicating(mdp, variant=variant, tol=self.tol, max_iter=self.max_iter,
                repair_tol=self.settings.get_value(SettingsConstants.SETTING__REPAIR_TOL))
        return solve_average(mdp, variant=variant, tol=self.tol, max_iter=self.max_iter)



class SolveView(SolverView):
    def run(self) -> int:
        model, mdp, rate = self.load_discrete()
        discount = self.settings.get_value(SettingsConstants.SETTING__DISCOUNT)
        if discount is None and isinstance(model, SkipFreeMdp):
            discount = model.discount

        display_model = mdp
        try:
            if discount is not None:
                if rate is not None:
                    raise InvalidModelException("Discounting is only supported for dtmdp models")
                report, augmented = solve_discounted(mdp, discount, variant=self.variant, tol=self.tol, max_iter=self.max_iter)
                display_model = augmented.mdp
            else:
                report = self.solve(mdp)
        except MaxIterExceededException as e:
            # Partial trace on stdout; the Controller reports the error and exit code
            self.write(format_trace_csv(e.trace))
            raise

        if rate is not None:
            report = to_continuous(report, rate)

        self.write(format_solve_report(report, display_model, self.output_format))
        return EXIT__OK



@dataclass
class CompareRow:
    method: str
    g_star: Optional[float]
    iterations: int
    seconds: float
    status: str



class CompareView(SolverView):
    """
        Runs the three skip-free variants and the reference solvers on one model and
        checks that every g* agrees within the agreement tolerance. Rows always print
        in the same order.
    """
    def run_method(self, method: str, solver: Callable) -> CompareRow:
        start = time.perf_counter()
        try:
            report = solver()
        except TooManyPoliciesException:
            return CompareRow(method, None, 0, time.perf_counter() - start, "skipped")
        except (SolverException, InvalidModelException) as e:
            logger.warning(f"{method} failed: {e}")
            return CompareRow(method, None, 0, time.perf_counter() - start, f"failed ({type(e).__name__})")
        seconds = time.perf_counter() - start
        iterations = report.iterations or getattr(report, "solves", 0)
        return CompareRow(method, report.g_star, iterations, seconds, "ok")


    def run(self) -> int:
        _, mdp, _ = self.load_discrete()
        recurrent = classify(mdp).is_recurrent
        max_policies = self.settings.get_value(SettingsConstants.SETTING__MAX_POLICIES)

        rows: List[CompareRow] = []
        for variant in RootVariant.ALL_VARIANTS:
            if recurrent:
                solver = lambda variant=variant: solve_average(mdp, variant=variant, tol=self.tol, max_iter=self.max_iter)
            else:
                solver = lambda variant=variant: solve_communicating(mdp, variant=variant, tol=self.tol, max_iter=self.max_iter)
            rows.append(self.run_method(f"skip-free/{variant}", solver))

        rows.append(self.run_method(METHOD__POLICY_ITERATION, lambda: policy_iteration_average(mdp)))
        rows.append(self.run_method(METHOD__RELATIVE_VALUE_ITERATION, lambda: relative_value_iteration(mdp, tol=self.tol)))
        rows.append(self.run_method(METHOD__ENUMERATION, lambda: enumerate_policies(mdp, max_policies=max_policies)))

        values = [row.g_star for row in rows if row.g_star is not None]
        agreement_tol = self.settings.get_value(SettingsConstants.SETTING__AGREEMENT_TOL)
        agreed = bool(values) and max(values) - min(values) <= agreement_tol * (1.0 + max(abs(g) for g in values))

        self.write(format_compare(rows, self.output_format, agreed))
        if not agreed:
            logger.warning("Methods disagree on g*")
            return EXIT__DISAGREEMENT
        return EXIT__OK
