import json

import pytest

from skipfree.helpers.model_library import (communicating_example, default_queue_spec, make_multiclass_queue,
    mm1_service_control, random_skip_free, two_policy_chain)
from skipfree.helpers.transforms import discount_to_average, uniformize
from skipfree.models.mdp import CtMdp, RowSumException, SkipFreeMdp, SkipFreeViolationException
from skipfree.models.model_format import (ModelFormatException, emit_model, load_model, model_from_dict, model_to_dict,
    parse_model, save_model)
from skipfree.models.tree import CycleDetectedException


TWO_POLICY_TEXT = """
{
    "kind": "dtmdp",
    "parents": [0],
    "actions": [["a"], ["a", "b"]],
    "transitions": [
        {"state": 0, "action": "a", "dest": 0, "prob": 0.5},
        {"state": 0, "action": "a", "dest": 1, "prob": 0.5},
        {"state": 1, "action": "a", "dest": 0, "prob": 0.5},
        {"state": 1, "action": "a", "dest": 1, "prob": 0.5},
        {"state": 1, "action": "b", "dest": 0, "prob": 1.0}
    ],
    "costs": [
        {"state": 0, "action": "a", "value": 0},
        {"state": 1, "action": "a", "value": 2},
        {"state": 1, "action": "b", "value": 2.4}
    ]
}
"""



def two_policy_document() -> dict:
    return json.loads(TWO_POLICY_TEXT)



def test_parse_two_policy():
    mdp = parse_model(TWO_POLICY_TEXT)
    assert isinstance(mdp, SkipFreeMdp)
    assert mdp == two_policy_chain()
    assert mdp.discount is None



def test_discount_field():
    document = two_policy_document()
    document["discount"] = 0.9
    mdp = model_from_dict(document)
    assert mdp.discount == 0.9
    assert model_to_dict(mdp)["discount"] == 0.9



def test_ctmdp_rates():
    document = two_policy_document()
    document["kind"] = "ctmdp"
    for record in document["transitions"]:
        record["rate"] = 2 * record.pop("prob")
    ct = model_from_dict(document)
    assert isinstance(ct, CtMdp)
    assert ct.total_rate(0, 0) == 2.0

    document["discount"] = 0.5
    with pytest.raises(ModelFormatException):
        model_from_dict(document)



def test_validation_errors_surface():
    document = two_policy_document()
    document["transitions"][4]["prob"] = 0.9
    with pytest.raises(RowSumException):
        model_from_dict(document)

    # Skipped when asked
    model_from_dict(document, validate=False)

    document = two_policy_document()
    document["parents"] = [0, 1]
    document["actions"].append(["a"])
    document["transitions"].append({"state": 2, "action": "a", "dest": 0, "prob": 1.0})
    document["costs"].append({"state": 2, "action": "a", "value": 1})
    with pytest.raises(SkipFreeViolationException):
        model_from_dict(document)



@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("kind"),
    lambda d: d.update(kind="mdp"),
    lambda d: d.pop("costs"),
    lambda d: d["costs"].pop(),
    lambda d: d["costs"].append({"state": 1, "action": "b", "value": 1.0}),
    lambda d: d["transitions"].append({"state": 1, "action": "c", "dest": 0, "prob": 1.0}),
    lambda d: d["transitions"].append({"state": 5, "action": "a", "dest": 0, "prob": 1.0}),
    lambda d: d["transitions"].append({"state": 1, "action": "a", "dest": 7, "prob": 1.0}),
    lambda d: d.update(actions=[["a"]]),
])
def test_malformed_documents(mutate):
    document = two_policy_document()
    mutate(document)
    with pytest.raises(ModelFormatException):
        model_from_dict(document)



def test_cyclic_parents():
    document = two_policy_document()
    document["parents"] = [2, 1]
    with pytest.raises(CycleDetectedException):
        model_from_dict(document)



def test_not_json():
    with pytest.raises(ModelFormatException):
        parse_model("{kind: dtmdp")
    with pytest.raises(ModelFormatException):
        parse_model("[1, 2]")



@pytest.mark.parametrize("build", [
    two_policy_chain,
    communicating_example,
    mm1_service_control,
    lambda: make_multiclass_queue(default_queue_spec(2, 3)),
    lambda: uniformize(make_multiclass_queue(default_queue_spec(3, 2)))[0],
    lambda: discount_to_average(two_policy_chain(), 0.9).mdp,
    lambda: random_skip_free(11, depth=3, branching=3, actions_per_state=3, max_states=10),
])
def test_round_trip(build):
    """ parse(emit(m)) == m for generated models """
    model = build()
    assert parse_model(emit_model(model)) == model



def test_save_and_load(tmp_path):
    mdp = two_policy_chain()
    path = tmp_path / "two_policy.json"
    save_model(mdp, str(path))
    assert load_model(str(path)) == mdp
    assert path.read_text().endswith("\n")
