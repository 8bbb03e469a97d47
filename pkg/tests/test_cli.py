import json

import pytest

from io import StringIO
from unittest.mock import MagicMock, patch

from skipfree.controller import Controller
from skipfree.helpers.model_library import communicating_example, mm1_service_control, two_policy_chain
from skipfree.models.mdp import CtMdp, SkipFreeMdp
from skipfree.models.model_format import model_to_dict, parse_model, save_model
from skipfree.models.settings import Settings
from skipfree.views.formatters import CSV_COMPARE_HEADER, CSV_TRACE_HEADER



@pytest.fixture()
def controller():
    yield Controller.configure_instance(out=StringIO(), err=StringIO())
    Controller.reset_instance()
    Settings.reset_instance()



@pytest.fixture()
def two_policy_path(tmp_path):
    path = str(tmp_path / "two_policy.json")
    save_model(two_policy_chain(), path)
    return path



@pytest.fixture()
def communicating_path(tmp_path):
    path = str(tmp_path / "communicating.json")
    save_model(communicating_example(), path)
    return path



def kv_lines(text: str) -> dict:
    return dict(line.split("=", 1) for line in text.strip().splitlines())



def test_solve_kv(controller, two_policy_path):
    assert controller.start(["solve", two_policy_path, "--format", "kv"]) == 0
    values = kv_lines(controller.out.getvalue())
    assert float(values["g_star"]) == pytest.approx(0.8)
    assert values["iterations"] == "2"
    assert values["variant"] == "mean-improvement"
    assert float(values["h_star.1"]) == pytest.approx(1.6)
    assert values["policy.1"] == "b"
    assert controller.err.getvalue() == ""



def test_solve_human(controller, two_policy_path):
    assert controller.start(["solve", two_policy_path]) == 0
    out = controller.out.getvalue()
    assert float(out.splitlines()[0].split(" = ")[1]) == pytest.approx(0.8)
    assert "trace:" in out



def test_solve_csv_trace(controller, two_policy_path):
    assert controller.start(["solve", two_policy_path, "--format", "csv"]) == 0
    lines = controller.out.getvalue().strip().splitlines()
    assert lines[0] == CSV_TRACE_HEADER
    g_trace = [float(line.split(",")[1]) for line in lines[1:]]
    assert g_trace == pytest.approx([1.0, 0.8, 0.8])
    assert all(later <= earlier + 1e-12 for earlier, later in zip(g_trace, g_trace[1:]))



def test_solve_variant(controller, two_policy_path):
    assert controller.start(["solve", two_policy_path, "--format", "kv", "--variant", "optimality"]) == 0
    values = kv_lines(controller.out.getvalue())
    assert values["variant"] == "optimality"
    assert float(values["g_star"]) == pytest.approx(0.8)



def test_solve_iteration_limit(controller, two_policy_path):
    """ The partial trace goes to stdout; the failure goes to stderr with exit code 2 """
    assert controller.start(["solve", two_policy_path, "--max-iter", "1"]) == 2
    lines = controller.out.getvalue().strip().splitlines()
    assert lines[0] == CSV_TRACE_HEADER
    assert len(lines) == 3
    assert "MaxIterExceededException" in controller.err.getvalue()



def test_solve_invalid_model(controller, tmp_path):
    document = model_to_dict(two_policy_chain())
    for record in document["transitions"]:
        if record["state"] == 1 and record["action"] == "b":
            record["prob"] = 0.9
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(document))

    assert controller.start(["solve", str(path)]) == 1
    err = controller.err.getvalue()
    assert "RowSumException" in err
    assert "State 1 action 'b'" in err
    assert controller.out.getvalue() == ""



def test_solve_rejects_non_recurrent(controller, communicating_path):
    assert controller.start(["solve", communicating_path]) == 1
    assert "NotRecurrentException" in controller.err.getvalue()



def test_solve_communicating(controller, communicating_path):
    assert controller.start(["solve", communicating_path, "--communicating", "--format", "kv"]) == 0
    values = kv_lines(controller.out.getvalue())
    assert float(values["g_star"]) == pytest.approx(0.5)
    assert values["distinguished"] == "1"
    assert float(values["h_star.0"]) == 0.0



def test_solve_discounted(controller, two_policy_path):
    assert controller.start(["solve", two_policy_path, "--discount", "0.5", "--format", "kv"]) == 0
    values = kv_lines(controller.out.getvalue())
    assert values["discount"] == "0.5"
    assert "value.0" in values and "value.1" in values
    assert "value.2" not in values



def test_solve_continuous(controller, tmp_path):
    path = str(tmp_path / "mm1.json")
    save_model(mm1_service_control(), path)
    assert controller.start(["solve", path, "--format", "kv"]) == 0
    values = kv_lines(controller.out.getvalue())
    assert float(values["rate"]) == pytest.approx(4.0)



def test_validate(controller, communicating_path):
    assert controller.start(["validate", communicating_path]) == 0
    assert controller.out.getvalue() == "communicating (not recurrent)\n"



def test_validate_kv(controller, two_policy_path):
    assert controller.start(["validate", two_policy_path, "--format", "kv"]) == 0
    assert kv_lines(controller.out.getvalue()) == {"class": "recurrent", "states": "2"}



def test_compare(controller, two_policy_path):
    assert controller.start(["compare", two_policy_path, "--format", "csv"]) == 0
    lines = controller.out.getvalue().strip().splitlines()
    assert lines[0] == CSV_COMPARE_HEADER
    methods = [line.split(",")[0] for line in lines[1:]]
    assert methods == [
        "skip-free/first-return",
        "skip-free/optimality",
        "skip-free/mean-improvement",
        "policy-iteration",
        "relative-value-iteration",
        "enumeration",
    ]
    for line in lines[1:]:
        assert float(line.split(",")[1]) == pytest.approx(0.8)



def test_compare_disagreement(controller, two_policy_path):
    wrong = MagicMock(g_star=5.0, iterations=1)
    with patch("skipfree.views.solve_views.solve_average", return_value=wrong):
        assert controller.start(["compare", two_policy_path, "--format", "kv"]) == 3
    assert kv_lines(controller.out.getvalue())["agree"] == "no"



def test_gen_queue(controller):
    assert controller.start(["gen", "--queue", "K=2", "M=3"]) == 0
    model = parse_model(controller.out.getvalue())
    assert isinstance(model, CtMdp)
    assert model.num_states == 15



def test_gen_bad_queue(controller):
    assert controller.start(["gen", "--queue", "K=2"]) == 1
    assert controller.start(["gen", "--queue", "K=2", "N=3"]) == 1



def test_gen_random(controller, tmp_path):
    path = tmp_path / "random.json"
    argv = ["gen", "--random", "--seed", "3", "--depth", "2", "--branching", "2", "--output", str(path)]
    assert controller.start(argv) == 0
    first = path.read_text()
    assert isinstance(parse_model(first), SkipFreeMdp)

    # Same seed, same model
    assert controller.start(argv) == 0
    assert path.read_text() == first
    assert controller.out.getvalue() == ""



def test_gen_example(controller):
    assert controller.start(["gen", "--example", "two-policy"]) == 0
    assert parse_model(controller.out.getvalue()) == two_policy_chain()



def test_transform_discount(controller, two_policy_path):
    assert controller.start(["transform", two_policy_path, "--discount", "0.9"]) == 0
    model = parse_model(controller.out.getvalue())
    assert model.num_states == 3
    assert model.tree.parent(2) == 1



def test_transform_uniformize(controller, tmp_path):
    path = str(tmp_path / "mm1.json")
    save_model(mm1_service_control(), path)
    assert controller.start(["transform", path, "--uniformize"]) == 0
    assert isinstance(parse_model(controller.out.getvalue()), SkipFreeMdp)
    assert "uniformization rate: 4.0" in controller.err.getvalue()



def test_transform_needs_an_operation(controller, two_policy_path):
    assert controller.start(["transform", two_policy_path]) == 1
    assert controller.start(["transform", two_policy_path, "--uniformize"]) == 1



def test_debug_logging(controller, two_policy_path):
    assert controller.start(["solve", two_policy_path, "--debug"]) == 0
    assert "Executing SolveView" in controller.err.getvalue()
