import pytest

from io import StringIO

from skipfree.controller import Controller
from skipfree.models.settings import Settings
from skipfree.models.settings_definition import SettingsConstants
from skipfree.views import CompareView, Destination, GenView, SolveView, TransformView, ValidateView



@pytest.fixture()
def reset_controller():
    """fixture to setup, then yield to run test, then tear down"""

    # setup
    Controller.configure_instance(out=StringIO(), err=StringIO())

    # yield to run a single test
    yield

    # tear down
    Controller.reset_instance()
    Settings.reset_instance()



def test_singleton_init_fails(reset_controller):
    """ The Controller should not allow any code to instantiate it via Controller() """
    with pytest.raises(Exception):
        Controller()

    # ...nor may it be configured twice
    with pytest.raises(Exception):
        Controller.configure_instance()



def test_singleton_get_instance_preserves_state(reset_controller):
    """ Changes to the Controller singleton should be preserved across calls to get_instance() """
    controller = Controller.get_instance()
    controller.out.write("abc")

    controller = Controller.get_instance()
    assert controller.out.getvalue() == "abc"
    assert controller.settings is Settings.get_instance()



def test_missing_settings_get_defaults(reset_controller):
    """ Every setting starts at its definition's default """
    settings = Controller.get_instance().settings

    assert settings.get_value(SettingsConstants.SETTING__VARIANT) == SettingsConstants.VARIANT__MEAN_IMPROVEMENT
    assert settings.get_value(SettingsConstants.SETTING__TOL) == 1e-10
    assert settings.get_value(SettingsConstants.SETTING__MAX_ITER) == 100_000
    assert settings.get_value(SettingsConstants.SETTING__DISCOUNT) is None
    assert settings.get_value(SettingsConstants.SETTING__SEED) == 0
    assert settings.get_value(SettingsConstants.SETTING__OUTPUT_FORMAT) == SettingsConstants.FORMAT__HUMAN
    assert settings.get_value(SettingsConstants.SETTING__AGREEMENT_TOL) == 1e-7
    assert not settings.communicating
    assert not settings.debug

    # Hidden Settings defaults
    assert settings.get_value(SettingsConstants.SETTING__REPAIR_TOL) == 1e-11
    assert settings.get_value(SettingsConstants.SETTING__MAX_POLICIES) == 1_000_000



def test_hidden_settings_have_no_flag(reset_controller):
    flags = [entry.attr_name for entry in Controller.flag_entries()]
    assert SettingsConstants.SETTING__VARIANT in flags
    assert SettingsConstants.SETTING__REPAIR_TOL not in flags
    assert SettingsConstants.SETTING__MAX_POLICIES not in flags



def test_flags_grouped_by_visibility(reset_controller, capsys):
    parser = Controller.get_instance().build_parser()
    with pytest.raises(SystemExit):
        parser.parse_args(["solve", "--help"])
    help_text = capsys.readouterr().out

    advanced = help_text.index("advanced options")
    developer = help_text.index("developer options")
    # rfind skips the usage line and lands on each flag's own help entry
    assert help_text.rfind("--variant") < advanced < help_text.rfind("--agreement-tol") < developer
    assert help_text.rfind("--debug") > developer
    assert "--repair-tol" not in help_text



@pytest.mark.parametrize("argv, expected", [
    (["validate", "m.json"], Destination(ValidateView, view_args=dict(model_path="m.json"))),
    (["solve", "m.json"], Destination(SolveView, view_args=dict(model_path="m.json"))),
    (["compare", "m.json"], Destination(CompareView, view_args=dict(model_path="m.json"))),
    (["transform", "m.json", "--uniformize"],
        Destination(TransformView, view_args=dict(model_path="m.json", uniformize=True, output_path=None))),
])
def test_routing(reset_controller, argv, expected):
    assert Controller.get_instance().parse_destination(argv) == expected



def test_gen_routing(reset_controller):
    destination = Controller.get_instance().parse_destination(["gen", "--queue", "K=2", "M=3", "--output", "q.json"])
    assert destination.View_cls == GenView
    assert destination.view_args["queue"] == ["K=2", "M=3"]
    assert destination.view_args["output_path"] == "q.json"
    assert destination.view_args["chain_class"] == "recurrent"



def test_flags_update_settings(reset_controller):
    controller = Controller.get_instance()
    controller.parse_destination([
        "solve", "m.json",
        "--variant", "optimality",
        "--tol", "1e-6",
        "--max-iter", "50",
        "--discount", "0.9",
        "--format", "kv",
        "--communicating",
        "--debug",
    ])
    settings = controller.settings
    assert settings.get_value(SettingsConstants.SETTING__VARIANT) == SettingsConstants.VARIANT__OPTIMALITY
    assert settings.get_value(SettingsConstants.SETTING__TOL) == 1e-6
    assert settings.get_value(SettingsConstants.SETTING__MAX_ITER) == 50
    assert settings.get_value(SettingsConstants.SETTING__DISCOUNT) == 0.9
    assert settings.get_value(SettingsConstants.SETTING__OUTPUT_FORMAT) == SettingsConstants.FORMAT__KV
    assert settings.communicating
    assert settings.debug



def test_flags_override_settings_file(reset_controller, tmp_path):
    path = tmp_path / "settings.json"
    path.write_text('{"variant": "first-return", "output_format": "csv", "seed": 4}')

    controller = Controller.get_instance()
    controller.parse_destination(["solve", "m.json", "--settings", str(path), "--format", "kv"])
    settings = controller.settings
    assert settings.get_value(SettingsConstants.SETTING__VARIANT) == SettingsConstants.VARIANT__FIRST_RETURN
    assert settings.get_value(SettingsConstants.SETTING__OUTPUT_FORMAT) == SettingsConstants.FORMAT__KV
    assert settings.get_value(SettingsConstants.SETTING__SEED) == 4



@pytest.mark.parametrize("argv", [
    [],
    ["solve"],
    ["frobnicate", "m.json"],
    ["solve", "m.json", "--variant", "fastest"],
    ["solve", "m.json", "--tol", "small"],
    ["gen", "--random", "--example", "mm1"],
])
def test_usage_errors(reset_controller, argv):
    controller = Controller.get_instance()
    assert controller.start(argv) == 1
    assert "error: ValueError" in controller.err.getvalue()



def test_missing_model_file(reset_controller, tmp_path):
    controller = Controller.get_instance()
    assert controller.start(["solve", str(tmp_path / "missing.json")]) == 1
    assert "FileNotFoundError" in controller.err.getvalue()
