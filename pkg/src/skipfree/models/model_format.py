"""
    Reader and writer for the model text format, a single JSON document:

        {
            "kind": "dtmdp" | "ctmdp",
            "parents": [ρ(1), ..., ρ(N)],
            "actions": [[labels of state 0], ..., [labels of state N]],
            "transitions": [{"state": i, "action": label, "dest": j, "prob": p}, ...],
            "costs": [{"state": i, "action": label, "value": c}, ...],
            "discount": β,            (optional, dtmdp only)
            "labels": [...]           (optional display labels, one per state)
        }

    ctmdp documents use "rate" instead of "prob" and their costs are cost rates.
    See docs/model_format.md.
"""
import json
import logging

from typing import Union

from skipfree.models.mdp import CtMdp, InvalidModelException, SkipFreeMdp, validate_ctmdp, validate_skip_free
from skipfree.models.tree import build_tree


logger = logging.getLogger(__name__)


KIND__DTMDP = SkipFreeMdp.KIND
KIND__CTMDP = CtMdp.KIND
ALL_KINDS = [KIND__DTMDP, KIND__CTMDP]



class ModelFormatException(InvalidModelException):
    pass



def _require(document: dict, key: str):
    if key not in document:
        raise ModelFormatException(f"Model is missing the {key!r} field")
    return document[key]



def _state(record: dict, num_states: int) -> int:
    state = _require(record, "state")
    if not isinstance(state, int) or isinstance(state, bool) or not 0 <= state < num_states:
        raise ModelFormatException(f"Record {record} names an unknown state")
    return state



def model_from_dict(document: dict, validate: bool = True) -> Union[SkipFreeMdp, CtMdp]:
    if not isinstance(document, dict):
        raise ModelFormatException("Model document must be a JSON object")

    kind = _require(document, "kind")
    if kind not in ALL_KINDS:
        raise ModelFormatException(f"Unknown model kind {kind!r}; expected one of {ALL_KINDS}")
    value_key = "prob" if kind == KIND__DTMDP else "rate"

    tree = build_tree(list(_require(document, "parents")))
    n = tree.num_nodes

    actions = _require(document, "actions")
    if not isinstance(actions, list) or len(actions) != n:
        raise ModelFormatException(f"'actions' must list the action labels of all {n} states")
    actions = [[str(label) for label in state_actions] for state_actions in actions]
    indexes = [{label: a for a, label in enumerate(state_actions)} for state_actions in actions]

    def action_of(record: dict, state: int) -> int:
        label = str(_require(record, "action"))
        if label not in indexes[state]:
            raise ModelFormatException(f"State {state} has no action {label!r}")
        return indexes[state][label]

    rows = [[[] for _ in state_actions] for state_actions in actions]
    for record in _require(document, "transitions"):
        state = _state(record, n)
        dest = _require(record, "dest")
        if not isinstance(dest, int) or isinstance(dest, bool) or not 0 <= dest < n:
            raise ModelFormatException(f"Transition {record} has an unknown destination")
        rows[state][action_of(record, state)].append((dest, float(_require(record, value_key))))

    costs = [[None for _ in state_actions] for state_actions in actions]
    for record in _require(document, "costs"):
        state = _state(record, n)
        action = action_of(record, state)
        if costs[state][action] is not None:
            raise ModelFormatException(f"State {state} action {actions[state][action]!r} has more than one cost")
        costs[state][action] = float(_require(record, "value"))
    for state, state_costs in enumerate(costs):
        for action, cost in enumerate(state_costs):
            if cost is None:
                raise ModelFormatException(f"State {state} action {actions[state][action]!r} has no cost")

    labels = document.get("labels")
    if kind == KIND__DTMDP:
        model = SkipFreeMdp(tree, actions, rows, costs, labels=labels, discount=document.get("discount"))
        if validate:
            validate_skip_free(model)
    else:
        if document.get("discount") is not None:
            raise ModelFormatException("A ctmdp model cannot carry a discount factor")
        model = CtMdp(tree, actions, rows, costs, labels=labels)
        if validate:
            validate_ctmdp(model)

    logger.debug(f"Parsed {model}")
    return model



def parse_model(text: str, validate: bool = True) -> Union[SkipFreeMdp, CtMdp]:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatException(f"Model is not valid JSON: {e}")
    return model_from_dict(document, validate=validate)



def load_model(filename: str, validate: bool = True) -> Union[SkipFreeMdp, CtMdp]:
    with open(filename) as model_file:
        return parse_model(model_file.read(), validate=validate)



def model_to_dict(model: Union[SkipFreeMdp, CtMdp]) -> dict:
    value_key = "prob" if model.KIND == KIND__DTMDP else "rate"
    document = {
        "kind": model.KIND,
        "parents": list(model.tree.parents[1:]),
        "actions": [list(state_actions) for state_actions in model.actions],
        "transitions": [],
        "costs": [],
    }
    for i, state_rows in enumerate(model.raw_rows):
        for a, row in enumerate(state_rows):
            label = model.action_label(i, a)
            for j, value in row:
                document["transitions"].append({"state": i, "action": label, "dest": j, value_key: value})
            document["costs"].append({"state": i, "action": label, "value": model.costs[i][a]})

    if model.KIND == KIND__DTMDP and model.discount is not None:
        document["discount"] = model.discount
    if model.labels is not None:
        document["labels"] = list(model.labels)
    return document



def emit_model(model: Union[SkipFreeMdp, CtMdp]) -> str:
    """ Serializes `model`; `parse_model(emit_model(m)) == m` for every model """
    return json.dumps(model_to_dict(model), indent=1) + "\n"



def save_model(model: Union[SkipFreeMdp, CtMdp], filename: str):
    with open(filename, "w") as model_file:
        model_file.write(emit_model(model))
