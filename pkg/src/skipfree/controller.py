import argparse
import logging
import sys

from typing import List, TextIO

from skipfree.helpers.reference import NoConvergenceException
from skipfree.helpers.skip_free import MaxIterExceededException, SolverException
from skipfree.models.mdp import InvalidModelException
from skipfree.models.settings import Settings
from skipfree.models.settings_definition import SettingsConstants, SettingsDefinition
from skipfree.models.singleton import Singleton
from skipfree.models.tree import InvalidTreeException
from skipfree.views.view import EXIT__INVALID_INPUT, EXIT__NO_CONVERGENCE, Destination, ErrorView


logger = logging.getLogger(__name__)


COMMAND__VALIDATE = "validate"
COMMAND__SOLVE = "solve"
COMMAND__COMPARE = "compare"
COMMAND__TRANSFORM = "transform"
COMMAND__GEN = "gen"



class ArgumentParser(argparse.ArgumentParser):
    """ Usage errors raise instead of exiting so they map onto the invalid-input code """
    def error(self, message):
        raise ValueError(message)



class Controller(Singleton):
    """
        The Controller is a globally available singleton that owns the run-time
        Settings and routes one command line invocation to its View.

        It only makes sense to ever have a single Controller instance per process so it
        is implemented here as a singleton. `configure_instance()` lets the test suite
        swap the report and diagnostic streams:
        ```
        from skipfree.controller import Controller
        controller = Controller.get_instance()
        exit_code = controller.start(["solve", "model.json"])
        ```
    """

    VERSION = "0.1.0"

    # Declare class member vars with type hints to enable richer IDE support
    settings: Settings = None
    out: TextIO = None
    err: TextIO = None


    @classmethod
    def get_instance(cls):
        # This is the only way to access the one and only instance
        if cls._instance:
            return cls._instance
        else:
            # Instantiate the one and only Controller instance
            return cls.configure_instance()


    @classmethod
    def configure_instance(cls, out: TextIO = None, err: TextIO = None):
        """
            `out` receives reports and emitted models; `err` receives diagnostics and
            log output. Both default to the process streams.
        """
        # Must be called before the first get_instance() call
        if cls._instance:
            raise Exception("Instance already configured")

        controller = cls.__new__(cls)
        cls._instance = controller

        controller.settings = Settings.get_instance()
        controller.out = out or sys.stdout
        controller.err = err or sys.stderr

        return cls._instance


    FLAG_GROUPS = [
        (SettingsConstants.VISIBILITY__GENERAL, None),
        (SettingsConstants.VISIBILITY__ADVANCED, "advanced options"),
        (SettingsConstants.VISIBILITY__DEVELOPER, "developer options"),
    ]


    @classmethod
    def flag_entries(cls):
        return [entry for visibility, _ in cls.FLAG_GROUPS
                for entry in SettingsDefinition.get_settings_entries(visibility)]


    @staticmethod
    def add_flag(group, entry):
        if entry.type == SettingsConstants.TYPE__ENABLED_DISABLED:
            group.add_argument(entry.flag_name, dest=entry.attr_name, action="store_const",
                const=SettingsConstants.OPTION__ENABLED, default=None, help=entry.help_text or entry.display_name)
        elif entry.type == SettingsConstants.TYPE__SELECT_1:
            group.add_argument(entry.flag_name, dest=entry.attr_name, choices=entry.selection_option_values,
                default=None, help=entry.help_text or entry.display_name)
        else:
            group.add_argument(entry.flag_name, dest=entry.attr_name, type=entry.value_type,
                default=None, help=entry.help_text or entry.display_name)


    def build_parser(self) -> ArgumentParser:
        # Flags shared by every command come straight from the settings definitions
        common = ArgumentParser(add_help=False)
        common.add_argument("--settings", metavar="PATH", help="JSON settings file applied before the flags")
        for visibility, title in self.FLAG_GROUPS:
            group = common.add_argument_group(title) if title else common
            for entry in SettingsDefinition.get_settings_entries(visibility):
                self.add_flag(group, entry)

        parser = ArgumentParser(prog="skipfree", description="Skip-free MDP solver on trees")
        parser.add_argument("--version", action="version", version=f"%(prog)s {self.VERSION}")
        subparsers = parser.add_subparsers(dest="command", required=True)

        validate = subparsers.add_parser(COMMAND__VALIDATE, parents=[common], help="validate a model and print its chain class")
        validate.add_argument("model")

        solve = subparsers.add_parser(COMMAND__SOLVE, parents=[common], help="solve the average-cost (or discounted) problem")
        solve.add_argument("model")

        compare = subparsers.add_parser(COMMAND__COMPARE, parents=[common], help="cross-check all solvers on one model")
        compare.add_argument("model")

        transform = subparsers.add_parser(COMMAND__TRANSFORM, parents=[common], help="uniformize and/or augment a model")
        transform.add_argument("model")
        transform.add_argument("--uniformize", action="store_true")
        transform.add_argument("--output", metavar="PATH")

        gen = subparsers.add_parser(COMMAND__GEN, parents=[common], help="generate a model")
        source = gen.add_mutually_exclusive_group(required=True)
        source.add_argument("--queue", nargs="+", metavar="KEY=VALUE")
        source.add_argument("--random", action="store_true")
        source.add_argument("--example", choices=["two-policy", "communicating", "mm1"])
        gen.add_argument("--depth", type=int, default=2)
        gen.add_argument("--branching", type=int, default=2)
        gen.add_argument("--actions", type=int, default=2)
        gen.add_argument("--class", dest="chain_class", choices=["recurrent", "communicating"], default="recurrent")
        gen.add_argument("--max-states", type=int, default=10)
        gen.add_argument("--output", metavar="PATH")

        return parser


    def parse_destination(self, argv: List[str] = None) -> Destination:
        from skipfree.views import CompareView, GenView, SolveView, TransformView, ValidateView

        args = self.build_parser().parse_args(argv)
        if args.settings:
            self.settings.load(args.settings)
        self.settings.update({entry.attr_name: getattr(args, entry.attr_name) for entry in self.flag_entries()})

        if args.command == COMMAND__VALIDATE:
            return Destination(ValidateView, view_args=dict(model_path=args.model))
        if args.command == COMMAND__SOLVE:
            return Destination(SolveView, view_args=dict(model_path=args.model))
        if args.command == COMMAND__COMPARE:
            return Destination(CompareView, view_args=dict(model_path=args.model))
        if args.command == COMMAND__TRANSFORM:
            return Destination(TransformView, view_args=dict(model_path=args.model, uniformize=args.uniformize, output_path=args.output))
        return Destination(GenView, view_args=dict(
            queue=args.queue,
            random=args.random,
            example=args.example,
            depth=args.depth,
            branching=args.branching,
            actions=args.actions,
            chain_class=args.chain_class,
            max_states=args.max_states,
            output_path=args.output,
        ))


    def configure_logging(self):
        logging.basicConfig(
            level=logging.DEBUG if self.settings.debug else logging.WARNING,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            stream=self.err,
            force=True,
        )


    def start(self, argv: List[str] = None) -> int:
        """ Runs one command and returns its exit code """
        try:
            destination = self.parse_destination(argv)
        except Exception as e:
            return self.handle_exception(e)

        self.configure_logging()
        logger.debug(f"Executing {destination}")
        try:
            return destination.run()
        except Exception as e:
            return self.handle_exception(e)


    def handle_exception(self, e: Exception) -> int:
        """
            Maps an exception onto the exit code contract and reports it on `err`:
            invalid input 1, non-convergence 2. Anything unexpected also gets a
            traceback in the log.
        """
        if isinstance(e, (MaxIterExceededException, NoConvergenceException)):
            exit_code = EXIT__NO_CONVERGENCE
        elif isinstance(e, (InvalidTreeException, InvalidModelException, SolverException, ValueError, OSError)):
            exit_code = EXIT__INVALID_INPUT
        else:
            logger.exception(e)
            exit_code = EXIT__INVALID_INPUT
        return Destination(ErrorView, view_args={"error": e, "exit_code": exit_code}).run()



def main():
    sys.exit(Controller.get_instance().start())
