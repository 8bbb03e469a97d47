"""
    Presentation layer: turns reports into text for each output format. Floats are
    written with `repr()` so that values survive a round trip through the text.
"""
from typing import List, Sequence

from skipfree.models.mdp import ChainClass
from skipfree.models.reports import RootVariant, SolveReport, TraceRow
from skipfree.models.settings_definition import SettingsConstants


CSV_TRACE_HEADER = "iter,g_n,u0"
CSV_COMPARE_HEADER = "method,g_star,iterations,seconds,status"



def format_trace_csv(trace: Sequence[TraceRow]) -> str:
    lines = [CSV_TRACE_HEADER]
    for row in trace:
        lines.append(f"{row.iteration},{row.g_n!r},{row.u0!r}")
    return "\n".join(lines) + "\n"



def _table(header: List[str], rows: List[List[str]]) -> str:
    widths = [max(len(str(cell)) for cell in column) for column in zip(header, *rows)]
    lines = []
    for row in [header] + rows:
        lines.append("  ".join(str(cell).ljust(width) for cell, width in zip(row, widths)).rstrip())
    return "\n".join(lines)



def format_solve_report(report: SolveReport, model, output_format: str) -> str:
    """ `model` supplies state and action labels for `report.policy` """
    if output_format == SettingsConstants.FORMAT__CSV:
        return format_trace_csv(report.trace)

    policy = model.policy_labels(report.policy)
    if output_format == SettingsConstants.FORMAT__KV:
        lines = [
            f"g_star={report.g_star!r}",
            f"iterations={report.iterations}",
            f"variant={report.variant}",
            f"distinguished={report.distinguished}",
        ]
        if report.rate is not None:
            lines.append(f"rate={report.rate!r}")
        if report.discount is not None:
            lines.append(f"discount={report.discount!r}")
        for i, h in enumerate(report.h_star):
            lines.append(f"h_star.{i}={h!r}")
        for i, label in enumerate(policy):
            lines.append(f"policy.{i}={label}")
        if report.values is not None:
            for i, v in enumerate(report.values):
                lines.append(f"value.{i}={v!r}")
        for row in report.trace:
            lines.append(f"trace.{row.iteration}={row.g_n!r},{row.u0!r}")
        return "\n".join(lines) + "\n"

    lines = [
        f"g* = {report.g_star!r}",
        f"variant: {RootVariant.display_name(report.variant)}",
        f"iterations: {report.iterations}",
    ]
    if report.distinguished:
        lines.append(f"optimal recurrent class rooted at state {report.distinguished}")
    if report.rate is not None:
        lines.append(f"uniformization rate: {report.rate!r}")
    if report.discount is not None:
        lines.append(f"discount: {report.discount!r}")
    lines.append("")

    header = ["state", "label", "action", "h*"]
    if report.values is not None:
        header.append("v")
    rows = []
    for i, h in enumerate(report.h_star):
        row = [str(i), model.state_label(i), policy[i], f"{h:.10g}"]
        if report.values is not None:
            row.append(f"{report.values[i]:.10g}" if i < len(report.values) else "")
        rows.append(row)
    lines.append(_table(header, rows))
    lines.append("")
    lines.append("trace:")
    lines.append(_table(["iter", "g_n", "u0"], [[str(r.iteration), f"{r.g_n:.12g}", f"{r.u0:.6g}"] for r in report.trace]))
    return "\n".join(lines) + "\n"



def format_classification(chain_class: ChainClass, num_states: int, output_format: str) -> str:
    if output_format == SettingsConstants.FORMAT__KV:
        lines = [f"class={chain_class.kind}", f"states={num_states}"]
        if not chain_class.is_communicating:
            lines.append("reachable=" + ",".join(str(i) for i in sorted(chain_class.witness)))
        return "\n".join(lines) + "\n"

    text = chain_class.display_name
    if not chain_class.is_communicating:
        text += f" (reachable from 0: {sorted(chain_class.witness)})"
    return text + "\n"



def format_compare(rows: list, output_format: str, agreed: bool) -> str:
    """ `rows` are CompareRow instances, printed in the given order """
    def g_text(row):
        return "" if row.g_star is None else repr(row.g_star)

    if output_format == SettingsConstants.FORMAT__CSV:
        lines = [CSV_COMPARE_HEADER]
        for row in rows:
            lines.append(f"{row.method},{g_text(row)},{row.iterations},{row.seconds:.6f},{row.status}")
        return "\n".join(lines) + "\n"

    if output_format == SettingsConstants.FORMAT__KV:
        lines = []
        for row in rows:
            lines.append(f"{row.method}.g_star={g_text(row)}")
            lines.append(f"{row.method}.iterations={row.iterations}")
            lines.append(f"{row.method}.seconds={row.seconds:.6f}")
            lines.append(f"{row.method}.status={row.status}")
        lines.append(f"agree={'yes' if agreed else 'no'}")
        return "\n".join(lines) + "\n"

    table = _table(
        ["method", "g*", "iterations", "seconds", "status"],
        [[row.method, "-" if row.g_star is None else f"{row.g_star:.12g}", str(row.iterations), f"{row.seconds:.4f}", row.status] for row in rows]
    )
    return table + "\n\n" + ("all methods agree" if agreed else "DISAGREEMENT between methods") + "\n"
