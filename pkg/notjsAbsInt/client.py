"""Error-reporting client over a finished analysis.

Reports the statements that may raise a TypeError or RangeError and the
call sites where the builtin ``eval`` may be called. Each statement is
checked by re-evaluating its expressions in every partition state reached at
it, so the report is as precise as the partition the sensitivity produced.
"""

import json
from collections import Counter
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from .absem import AState, aeval_exp
from .domains import AbsObject, obj_update, to_str
from .engine import AnalysisResult
from .ir import (AssignProp, BinOp, Call, Decl, DeleteProp, NewCall, Stmt, ToObj, iter_nodes,
                 stmt_expressions, subexpressions)

CALL_NON_FUNCTION = "TypeErrorCallNonFunction"
PROP_ON_NULL_UNDEF = "TypeErrorPropOnNullUndef"
ARRAY_LENGTH = "RangeErrorArrayLength"
ERROR_KINDS = (CALL_NON_FUNCTION, PROP_ON_NULL_UNDEF, ARRAY_LENGTH)
EVAL_WARNING = "evalWarning"


class IncompleteResult(RuntimeError):
    """The analysis was stopped by a limit, so its errors cannot be trusted."""


@dataclass(frozen=True)
class ErrorReport:
    """Possible runtime errors by statement.

    ``entries`` holds ``(nid, kind)`` pairs, ``eval_warnings`` the NodeIds of
    calls that may reach the builtin eval.
    """

    entries: FrozenSet[Tuple[int, str]] = frozenset()
    eval_warnings: FrozenSet[int] = frozenset()

    def sorted_entries(self) -> List[Tuple[int, str]]:
        return sorted(self.entries, key=lambda e: (e[0], ERROR_KINDS.index(e[1])))

    @property
    def counts(self) -> Dict[str, int]:
        """Entries per kind, plus ``total`` and the number of distinct ``sites``."""
        by_kind = Counter(kind for _, kind in self.entries)
        counts = {kind: by_kind.get(kind, 0) for kind in ERROR_KINDS}
        counts["total"] = len(self.entries)
        counts["sites"] = len({nid for nid, _ in self.entries})
        return counts

    def nodes(self, kind: Optional[str] = None) -> FrozenSet[int]:
        return frozenset(nid for nid, k in self.entries if kind is None or k == kind)


def _callee_errors(state: AState, f) -> bool:
    if f.has_non_addr():
        return True
    for a in f.addrs:
        o = state.store.entries.get(a)
        if not (isinstance(o, AbsObject) and o.is_function()):
            return True
    return False


def _nullish_base(state: AState, stmt: Stmt) -> bool:
    def ev(e):
        return aeval_exp(e, state.env, state.store)

    if isinstance(stmt, (AssignProp, DeleteProp)) and ev(stmt.obj).may_be_nullish():
        return True
    if isinstance(stmt, ToObj) and ev(stmt.exp).may_be_nullish():
        return True
    for e in stmt_expressions(stmt):
        for sub in subexpressions(e):
            if isinstance(sub, BinOp) and sub.op == "." and ev(sub.lhs).may_be_nullish():
                return True
    return False


def _range_error(state: AState, stmt: AssignProp) -> bool:
    def ev(e):
        return aeval_exp(e, state.env, state.store)

    o = ev(stmt.obj)
    if not o.addrs:
        return False
    _, flags = obj_update(state.store, o.addrs, to_str(ev(stmt.key)), ev(stmt.val))
    return "possibleRangeError" in flags


def _state_errors(state: AState) -> FrozenSet[str]:
    s = state.term
    kinds = set()
    if isinstance(s, Call) and _callee_errors(state, aeval_exp(s.fun, state.env, state.store)):
        kinds.add(CALL_NON_FUNCTION)
    if isinstance(s, NewCall) and _callee_errors(state, aeval_exp(s.ctor, state.env, state.store)):
        kinds.add(CALL_NON_FUNCTION)
    if _nullish_base(state, s):
        kinds.add(PROP_ON_NULL_UNDEF)
    if isinstance(s, AssignProp) and _range_error(state, s):
        kinds.add(ARRAY_LENGTH)
    return frozenset(kinds)


def report_errors(program: Decl, result: AnalysisResult) -> ErrorReport:
    """Static locations that may raise a runtime error under ``result``.

    Parameters
    ----------
    program : Decl
        The analysed program.
    result : AnalysisResult
        A complete fixpoint of ``program``.

    Returns
    -------
    ErrorReport

    Raises
    ------
    IncompleteResult
        If a limit stopped the analysis.
    """
    if not result.complete:
        raise IncompleteResult("the analysis was stopped early; its partition is not sound")
    nids = {node.nid for node in iter_nodes(program)}
    entries = set()
    for state in result.partition.values():
        if isinstance(state.term, Stmt):
            for kind in _state_errors(state):
                entries.add((state.term.nid, kind))
    assert all(nid in nids for nid, _ in entries), "report names a node outside the program"
    evals = frozenset(nid for kind, nid in result.warnings if kind == "eval")
    return ErrorReport(frozenset(entries), evals)


# ---------------------------------------------------------------------------
# Output formats
# ---------------------------------------------------------------------------


def report_dict(report: ErrorReport, program_name: str, result: AnalysisResult,
                timing: bool = True) -> dict:
    """The report as a JSON-ready dict; ``timing=False`` zeroes the wall time."""
    counts = report.counts
    counts[EVAL_WARNING] = len(report.eval_warnings)
    return {
        "program": program_name,
        "sensitivity": result.strategy.describe(),
        "entries": [{"node": nid, "kind": kind} for nid, kind in report.sorted_entries()],
        "evalWarnings": sorted(report.eval_warnings),
        "counts": counts,
        "stats": {
            "iterations": result.stats.iterations,
            "partitions": result.stats.partitions,
            "millis": result.stats.millis if timing else 0,
        },
    }


def format_json(report: ErrorReport, program_name: str, result: AnalysisResult,
                timing: bool = True) -> str:
    return json.dumps(report_dict(report, program_name, result, timing), indent=2)


def format_text(report: ErrorReport, program_name: str, result: AnalysisResult) -> str:
    """One ``node:<id> <kind>`` line per entry and eval warning, then a summary line."""
    lines = [f"node:{nid} {kind}" for nid, kind in report.sorted_entries()]
    lines += [f"node:{nid} {EVAL_WARNING}" for nid in sorted(report.eval_warnings)]
    counts = report.counts
    per_kind = ", ".join(f"{kind}={counts[kind]}" for kind in ERROR_KINDS)
    lines.append(
        f"{program_name}: {counts['total']} errors at {counts['sites']} sites ({per_kind}); "
        f"{len(report.eval_warnings)} eval warnings; {result.strategy.describe()}, "
        f"{result.stats.iterations} iterations, {result.stats.partitions} partitions, "
        f"{result.stats.millis} ms")
    return "\n".join(lines)
