from dataclasses import dataclass
from typing import Any, Callable, List



class SettingsConstants:
    # Basic defaults
    OPTION__ENABLED = "E"
    OPTION__DISABLED = "D"
    OPTIONS__ENABLED_DISABLED = [
        (OPTION__ENABLED, "Enabled"),
        (OPTION__DISABLED, "Disabled"),
    ]

    # Root-update rules at the distinguished state
    VARIANT__FIRST_RETURN = "first-return"
    VARIANT__OPTIMALITY = "optimality"
    VARIANT__MEAN_IMPROVEMENT = "mean-improvement"
    ALL_VARIANTS = [
        (VARIANT__FIRST_RETURN, "First-return minimizer"),
        (VARIANT__OPTIMALITY, "Optimality-equation minimizer"),
        (VARIANT__MEAN_IMPROVEMENT, "Mean-improvement minimizer"),
    ]

    FORMAT__HUMAN = "human"
    FORMAT__CSV = "csv"
    FORMAT__KV = "kv"
    ALL_FORMATS = [
        (FORMAT__HUMAN, "Human-readable"),
        (FORMAT__CSV, "CSV trace"),
        (FORMAT__KV, "key=value"),
    ]

    # Individual SettingsEntry attr_names
    SETTING__VARIANT = "variant"
    SETTING__TOL = "tol"
    SETTING__MAX_ITER = "max_iter"
    SETTING__SEED = "seed"
    SETTING__OUTPUT_FORMAT = "output_format"
    SETTING__DISCOUNT = "discount"
    SETTING__COMMUNICATING = "communicating"
    SETTING__AGREEMENT_TOL = "agreement_tol"

    SETTING__DEBUG = "debug"

    # Hidden settings
    SETTING__REPAIR_TOL = "repair_tol"
    SETTING__MAX_POLICIES = "max_policies"


    CATEGORY__SOLVER = "solver"
    CATEGORY__OUTPUT = "output"
    CATEGORY__ORACLES = "oracles"
    CATEGORY__SYSTEM = "system"

    VISIBILITY__GENERAL = "general"
    VISIBILITY__ADVANCED = "advanced"
    VISIBILITY__DEVELOPER = "developer"
    VISIBILITY__HIDDEN = "hidden"   # Not exposed as a flag

    TYPE__ENABLED_DISABLED = "enabled_disabled"
    TYPE__SELECT_1 = "select_1"
    TYPE__FREE_ENTRY = "free_entry"



@dataclass
class SettingsEntry:
    """
        Defines all the parameters for a single settings entry.

        * selection_options: May be specified as a List(Any) or List(tuple(Any, str)).
            The tuple form provides a human-readable display_name.

        * value_type: Coerces FREE_ENTRY values read from a settings file or the
            command line (e.g. `float` for tolerances). `None` values are kept as-is
            so optional entries like `discount` can stay unset.

        * flag: Command line flag; defaults to `--attr-name`. Hidden entries get no flag.
    """
    category: str
    attr_name: str
    display_name: str
    visibility: str = SettingsConstants.VISIBILITY__GENERAL
    type: str = SettingsConstants.TYPE__ENABLED_DISABLED
    help_text: str = None
    selection_options: List[Any] = None
    default_value: Any = None
    value_type: Callable = None
    flag: str = None

    def __post_init__(self):
        if self.type == SettingsConstants.TYPE__ENABLED_DISABLED:
            self.selection_options = SettingsConstants.OPTIONS__ENABLED_DISABLED

        # Account for tuple format as default_value
        if type(self.default_value) == tuple:
            self.default_value = self.default_value[0]


    @property
    def flag_name(self) -> str:
        return self.flag or "--" + self.attr_name.replace("_", "-")


    @property
    def selection_option_values(self) -> List[Any]:
        if not self.selection_options:
            return []
        return [v[0] if type(v) == tuple else v for v in self.selection_options]


    def get_selection_option_display_name_by_value(self, value) -> str:
        for option in self.selection_options:
            if type(option) == tuple:
                option_value = option[0]
                display_name = option[1]
            else:
                option_value = option
                display_name = option
            if option_value == value:
                return display_name


    def clean(self, value):
        """
            Returns `value` coerced to this entry's type; raises ValueError if it isn't
            one of the `selection_options`.
        """
        if self.type == SettingsConstants.TYPE__FREE_ENTRY:
            if value is None or self.value_type is None:
                return value
            return self.value_type(value)

        if value not in self.selection_option_values:
            raise ValueError(f"{value!r} is not a valid option for {self.attr_name}: {self.selection_option_values}")
        return value


    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "attr_name": self.attr_name,
            "display_name": self.display_name,
            "visibility": self.visibility,
            "type": self.type,
            "help_text": self.help_text,
            "selection_options": self.selection_option_values or None,
            "default_value": self.default_value,
        }



class SettingsDefinition:
    """
        Master list of all settings, their possible options and their defaults.

        The command line flags are generated from this list and a `--settings` json
        file is read back and validated against it.
    """
    # Increment if there are any breaking changes to the settings file format.
    version: int = 1

    settings_entries: List[SettingsEntry] = [
        # Solver options
        SettingsEntry(category=SettingsConstants.CATEGORY__SOLVER,
                      attr_name=SettingsConstants.SETTING__VARIANT,
                      display_name="Root-update variant",
                      type=SettingsConstants.TYPE__SELECT_1,
                      selection_options=SettingsConstants.ALL_VARIANTS,
                      default_value=SettingsConstants.VARIANT__MEAN_IMPROVEMENT),

        SettingsEntry(category=SettingsConstants.CATEGORY__SOLVER,
                      attr_name=SettingsConstants.SETTING__TOL,
                      display_name="Termination tolerance",
                      type=SettingsConstants.TYPE__FREE_ENTRY,
                      help_text="Stop once the root improvement u0 >= -tol.",
                      default_value=1e-10,
                      value_type=float),

        SettingsEntry(category=SettingsConstants.CATEGORY__SOLVER,
                      attr_name=SettingsConstants.SETTING__MAX_ITER,
                      display_name="Iteration limit",
                      type=SettingsConstants.TYPE__FREE_ENTRY,
                      default_value=100_000,
                      value_type=int),

        SettingsEntry(category=SettingsConstants.CATEGORY__SOLVER,
                      attr_name=SettingsConstants.SETTING__DISCOUNT,
                      display_name="Discount factor",
                      type=SettingsConstants.TYPE__FREE_ENTRY,
                      help_text="Solve the discounted problem via the augmented average-cost model.",
                      default_value=None,
                      value_type=float),

        SettingsEntry(category=SettingsConstants.CATEGORY__SOLVER,
                      attr_name=SettingsConstants.SETTING__COMMUNICATING,
                      display_name="Communicating solver",
                      help_text="Allow models that are communicating but not recurrent.",
                      default_value=SettingsConstants.OPTION__DISABLED),

        SettingsEntry(category=SettingsConstants.CATEGORY__SYSTEM,
                      attr_name=SettingsConstants.SETTING__SEED,
                      display_name="Random seed",
                      type=SettingsConstants.TYPE__FREE_ENTRY,
                      default_value=0,
                      value_type=int),

        # Output options
        SettingsEntry(category=SettingsConstants.CATEGORY__OUTPUT,
                      attr_name=SettingsConstants.SETTING__OUTPUT_FORMAT,
                      display_name="Output format",
                      flag="--format",
                      type=SettingsConstants.TYPE__SELECT_1,
                      selection_options=SettingsConstants.ALL_FORMATS,
                      default_value=SettingsConstants.FORMAT__HUMAN),

        # Oracle options
        SettingsEntry(category=SettingsConstants.CATEGORY__ORACLES,
                      attr_name=SettingsConstants.SETTING__AGREEMENT_TOL,
                      display_name="Oracle agreement tolerance",
                      type=SettingsConstants.TYPE__FREE_ENTRY,
                      visibility=SettingsConstants.VISIBILITY__ADVANCED,
                      default_value=1e-7,
                      value_type=float),

        # Developer options
        SettingsEntry(category=SettingsConstants.CATEGORY__SYSTEM,
                      attr_name=SettingsConstants.SETTING__DEBUG,
                      display_name="Debug logging",
                      visibility=SettingsConstants.VISIBILITY__DEVELOPER,
                      default_value=SettingsConstants.OPTION__DISABLED),

        # "Hidden" settings with no flag
        SettingsEntry(category=SettingsConstants.CATEGORY__SOLVER,
                      attr_name=SettingsConstants.SETTING__REPAIR_TOL,
                      display_name="Transient repair tolerance",
                      type=SettingsConstants.TYPE__FREE_ENTRY,
                      visibility=SettingsConstants.VISIBILITY__HIDDEN,
                      default_value=1e-11,
                      value_type=float),

        SettingsEntry(category=SettingsConstants.CATEGORY__ORACLES,
                      attr_name=SettingsConstants.SETTING__MAX_POLICIES,
                      display_name="Policy enumeration limit",
                      type=SettingsConstants.TYPE__FREE_ENTRY,
                      visibility=SettingsConstants.VISIBILITY__HIDDEN,
                      default_value=1_000_000,
                      value_type=int),
    ]


    @classmethod
    def get_settings_entries(cls, visibility: str = SettingsConstants.VISIBILITY__GENERAL) -> List[SettingsEntry]:
        entries = []
        for entry in cls.settings_entries:
            if entry.visibility == visibility:
                entries.append(entry)
        return entries


    @classmethod
    def get_settings_entry(cls, attr_name) -> SettingsEntry:
        for entry in cls.settings_entries:
            if entry.attr_name == attr_name:
                return entry


    @classmethod
    def get_defaults(cls) -> dict:
        as_dict = {}
        for entry in SettingsDefinition.settings_entries:
            as_dict[entry.attr_name] = entry.default_value
        return as_dict


    @classmethod
    def to_dict(cls) -> dict:
        output = {
            "version": cls.version,
            "settings_entries": [],
        }
        for settings_entry in cls.settings_entries:
            output["settings_entries"].append(settings_entry.to_dict())

        return output
