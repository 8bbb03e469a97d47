import logging

from typing import List

from skipfree.helpers.model_library import (QueueSpec, communicating_example, default_queue_spec, make_multiclass_queue,
    mm1_service_control, random_skip_free, two_policy_chain)
from skipfree.helpers.transforms import discount_to_average, uniformize
from skipfree.models.mdp import ChainClass, CtMdp, InvalidModelException, classify
from skipfree.models.model_format import emit_model, load_model
from skipfree.models.settings_definition import SettingsConstants
from skipfree.views.formatters import format_classification
from skipfree.views.view import EXIT__OK, View


logger = logging.getLogger(__name__)



class ValidateView(View):
    """ Parses and validates a model, then prints its chain class """
    def __init__(self, model_path: str):
        super().__init__()
        self.model_path = model_path


    def run(self) -> int:
        model = load_model(self.model_path)
        mdp = uniformize(model)[0] if isinstance(model, CtMdp) else model
        chain_class = classify(mdp)
        logger.info(f"{self.model_path}: {chain_class}")
        self.write(format_classification(chain_class, mdp.num_states, self.output_format))
        return EXIT__OK



class TransformView(View):
    """
        Emits the uniformized model (`--uniformize`, ctmdp input), the discounted
        model's average-cost augmentation (`--discount`), or both in that order.
    """
    def __init__(self, model_path: str, uniformize: bool = False, output_path: str = None):
        super().__init__()
        self.model_path = model_path
        self.uniformize = uniformize
        self.output_path = output_path


    def run(self) -> int:
        model = load_model(self.model_path)
        discount = self.settings.get_value(SettingsConstants.SETTING__DISCOUNT)
        if not self.uniformize and discount is None:
            raise ValueError("Nothing to do: pass --uniformize and/or --discount")

        if self.uniformize:
            if not isinstance(model, CtMdp):
                raise InvalidModelException("--uniformize needs a ctmdp model")
            model, rate = uniformize(model)
            self.controller.err.write(f"uniformization rate: {rate!r}\n")
        elif isinstance(model, CtMdp):
            raise InvalidModelException("Uniformize a ctmdp model before discounting it")

        if discount is not None:
            model = discount_to_average(model, discount).mdp

        self.write_output(emit_model(model), self.output_path)
        return EXIT__OK



class GenView(View):
    """
        Emits a generated model: a multi-class queue (`--queue K=.. M=..`), a seeded
        random instance (`--random`) or one of the named examples (`--example`).
    """
    EXAMPLES = {
        "two-policy": two_policy_chain,
        "communicating": communicating_example,
        "mm1": mm1_service_control,
    }

    CLASS_OPTIONS = {
        "recurrent": ChainClass.RECURRENT,
        "communicating": ChainClass.COMMUNICATING_ONLY,
    }

    def __init__(self,
                 queue: List[str] = None,
                 random: bool = False,
                 example: str = None,
                 depth: int = 2,
                 branching: int = 2,
                 actions: int = 2,
                 chain_class: str = "recurrent",
                 max_states: int = 10,
                 output_path: str = None):
        super().__init__()
        self.queue = queue
        self.random = random
        self.example = example
        self.depth = depth
        self.branching = branching
        self.actions = actions
        self.chain_class = chain_class
        self.max_states = max_states
        self.output_path = output_path


    @staticmethod
    def parse_queue(pairs: List[str]) -> QueueSpec:
        """ "K=2" "M=3" ["lambda=0.3"] """
        values = {}
        for pair in pairs:
            key, sep, value = pair.partition("=")
            if not sep or key not in ("K", "M", "lambda"):
                raise ValueError(f"Queue parameters look like K=2 M=3 lambda=0.3, not {pair!r}")
            values[key] = value
        if "K" not in values or "M" not in values:
            raise ValueError("Queue needs both K= and M=")
        return default_queue_spec(int(values["K"]), int(values["M"]), arrival_rate=float(values.get("lambda", 0.3)))


    def run(self) -> int:
        if self.queue:
            model = make_multiclass_queue(self.parse_queue(self.queue))
        elif self.random:
            seed = self.settings.get_value(SettingsConstants.SETTING__SEED)
            model = random_skip_free(
                seed,
                depth=self.depth,
                branching=self.branching,
                actions_per_state=self.actions,
                chain_class=self.CLASS_OPTIONS[self.chain_class],
                max_states=self.max_states,
            )
        elif self.example:
            model = self.EXAMPLES[self.example]()
        else:
            raise ValueError("Pick one of --queue, --random or --example")

        self.write_output(emit_model(model), self.output_path)
        return EXIT__OK
