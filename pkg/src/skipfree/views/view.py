import sys

from dataclasses import dataclass
from typing import TextIO

from skipfree.models.settings import Settings
from skipfree.models.settings_definition import SettingsConstants


# Stable exit codes for scripts and CI
EXIT__OK = 0
EXIT__INVALID_INPUT = 1
EXIT__NO_CONVERGENCE = 2
EXIT__DISAGREEMENT = 3


"""
    Views contain the logic for one CLI command each, in the same spirit as a Flask
    request/response function. A View loads its inputs, calls into `skipfree.helpers`
    and hands the results to `skipfree.views.formatters`; it never does numerical work
    itself and never formats text by hand.

    `run()` returns the process exit code. Exceptions are left to propagate to the
    Controller, which maps them to exit codes and diagnostics.
"""
class View:
    def __init__(self) -> None:
        # Import here to avoid circular imports
        from skipfree.controller import Controller

        self.controller: Controller = Controller.get_instance()
        self.settings: Settings = Settings.get_instance()
        self.out: TextIO = self.controller.out


    def run(self, **kwargs) -> int:
        raise Exception("Must implement in the child class")


    @property
    def output_format(self) -> str:
        return self.settings.get_value(SettingsConstants.SETTING__OUTPUT_FORMAT)


    def write(self, text: str):
        self.out.write(text)
        if not text.endswith("\n"):
            self.out.write("\n")


    def write_output(self, text: str, output_path: str = None):
        """ Writes to `output_path` when given, else to the report stream """
        if output_path:
            with open(output_path, "w") as output_file:
                output_file.write(text)
        else:
            self.write(text)



@dataclass
class Destination:
    """
        Basic struct to pass back to the Controller to tell it which View to run with
        which input args.
    """
    View_cls: type                  # The target View to route to
    view_args: dict = None          # The input args required to instantiate the target View


    def __repr__(self):
        if self.View_cls is None:
            out = "None"
        else:
            out = self.View_cls.__name__
        if self.view_args:
            out += f"({self.view_args})"
        else:
            out += "()"
        return out


    def run(self) -> int:
        if not self.view_args:
            # Can't unpack (**) None so we replace with an empty dict
            self.view_args = {}
        # Instantiate the `View_cls` and run() it with the `view_args` dict
        return self.View_cls(**self.view_args).run()


    def __eq__(self, obj):
        return (isinstance(obj, Destination) and
            obj.View_cls == self.View_cls and
            obj.view_args == self.view_args)



class ErrorView(View):
    """
        Reports a failure on stderr: the exception type and its message, which names
        the offending (state, action) for model errors.
    """
    def __init__(self, error: Exception, exit_code: int):
        super().__init__()
        self.error = error
        self.exit_code = exit_code


    def run(self) -> int:
        err = self.controller.err or sys.stderr
        err.write(f"error: {type(self.error).__name__}: {self.error}\n")
        return self.exit_code
