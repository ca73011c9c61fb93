"""Worklist fixpoint over trace partitions, and the differential soundness harness.

The analysis keeps one abstract state per partition key. Each worklist step
takes the state of a key, computes its successors and joins every successor
into the entry of its own key, re-enqueueing the key only when the entry
grew. The soundness harness replays the concrete machine under the same
sensitivity and checks that every concrete state is covered by the partition.
"""

import json
import logging
import time
from collections import defaultdict, deque
from dataclasses import dataclass, fields, is_dataclass, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, TextIO, Tuple

from . import concrete
from .absem import BV, EV, JV, AbstractMachine, AddrK, AState, HaltK, aeval_exp
from .domains import (AbsAddr, AbsObject, AbsStore, BValue, FrozenMap, alpha, alpha_env,
                      alpha_obj, str_member)
from .generate import generate_program
from .ir import Call, Decl, NewCall, Node, Seq, iter_nodes, number_nodes, validate
from .sensitivity import Trace, parse_sensitivity

logger = logging.getLogger(__name__)

WORKLISTS = ("fifo", "lifo")


@dataclass(frozen=True)
class AnalysisLimits:
    """Resource limits and options of one fixpoint computation.

    Parameters
    ----------
    max_iterations : int
        Worklist pops before the analysis gives up.
    wall_clock : float, optional
        Seconds before the analysis gives up; ``None`` for no time limit.
    worklist : str
        ``fifo`` or ``lifo``; the final partition does not depend on it.
    debug : bool
        Assert after every join that partition entries only grow.
    """

    max_iterations: int = 200_000
    wall_clock: Optional[float] = None
    worklist: str = "fifo"
    debug: bool = False

    def __post_init__(self):
        assert self.max_iterations > 0, f"max_iterations must be positive, got {self.max_iterations}"
        assert self.wall_clock is None or self.wall_clock > 0, \
            f"wall_clock must be positive, got {self.wall_clock}"
        assert self.worklist in WORKLISTS, f"worklist must be one of {WORKLISTS}, got {self.worklist!r}"


@dataclass
class AnalysisStats:
    iterations: int = 0
    states: int = 0
    joins: int = 0
    millis: int = 0
    partitions: int = 0

    def as_dict(self) -> Dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class AnalysisResult:
    """Partition reached by :func:`analyze`.

    ``partition`` maps partition keys to abstract states. ``warnings`` holds
    ``("eval", nid)`` pairs for call sites where the builtin eval may be
    called. ``complete`` is False when a limit stopped the fixpoint, in which
    case the partition is not sound.
    """

    program: Decl
    strategy: Trace
    partition: Dict[tuple, AState]
    stats: AnalysisStats
    warnings: FrozenSet[Tuple[str, int]] = frozenset()
    complete: bool = True

    def states_at(self, nid: int) -> List[AState]:
        """Partition states whose term is the statement ``nid``, in key order."""
        return [s for _, s in sorted(self.partition.items(), key=lambda kv: repr(kv[0]))
                if isinstance(s.term, Node) and s.term.nid == nid]

    def final_states(self) -> List[AState]:
        return [s for s in self.partition.values() if s.is_final()]

    def points(self) -> FrozenSet[tuple]:
        return frozenset(point for point, _ in self.partition)


class LimitExceeded(RuntimeError):
    """The fixpoint was stopped by a limit; ``result`` holds the partial partition."""

    def __init__(self, message: str, result: AnalysisResult):
        super().__init__(message)
        self.result = result


# ---------------------------------------------------------------------------
# Fixpoint
# ---------------------------------------------------------------------------


def analyze(program: Decl, strategy="fs", limits: Optional[AnalysisLimits] = None) -> AnalysisResult:
    """Compute the abstract fixpoint of ``program`` under a sensitivity.

    Parameters
    ----------
    program : Decl
        A validated, numbered program.
    strategy : str or Trace
        Sensitivity, e.g. ``fs`` or ``stack:2.1``.
    limits : AnalysisLimits, optional
        Iteration and time limits, by default ``AnalysisLimits()``.

    Returns
    -------
    AnalysisResult

    Raises
    ------
    LimitExceeded
        When a limit stops the fixpoint; the exception carries the partial result.
    ParameterError
        On a malformed strategy.
    """
    assert isinstance(program, Decl), "program must be a Decl"
    limits = AnalysisLimits() if limits is None else limits
    trace = parse_sensitivity(strategy)
    machine = AbstractMachine(program)
    init = machine.initial_state(trace)
    key0 = init.trace.partition_key()
    partition: Dict[tuple, AState] = {key0: init}
    worklist = deque([key0])
    queued = {key0}
    stats = AnalysisStats()
    pop = worklist.popleft if limits.worklist == "fifo" else worklist.pop
    start = time.perf_counter()

    def result(complete: bool) -> AnalysisResult:
        stats.millis = int((time.perf_counter() - start) * 1000)
        stats.partitions = len(partition)
        return AnalysisResult(program, trace, partition, stats,
                              eval_warnings(partition) if complete else frozenset(), complete)

    while worklist:
        if stats.iterations >= limits.max_iterations:
            return _stop(result(False), f"iteration limit {limits.max_iterations} reached")
        if limits.wall_clock is not None and time.perf_counter() - start > limits.wall_clock:
            return _stop(result(False), f"time limit {limits.wall_clock}s reached")
        key = pop()
        queued.discard(key)
        stats.iterations += 1
        for succ in machine.next_states(partition[key]):
            stats.states += 1
            k = succ.trace.partition_key()
            old = partition.get(k)
            if old is not None:
                if succ.leq(old):
                    continue
                new = old.join(succ)
                stats.joins += 1
                if limits.debug:
                    assert old.leq(new) and succ.leq(new), f"join did not grow partition {k}"
            else:
                new = succ
            partition[k] = new
            if k not in queued:
                worklist.append(k)
                queued.add(k)
        if stats.iterations % 1000 == 0:
            logger.debug("iteration %d: %d partitions, %d queued",
                         stats.iterations, len(partition), len(worklist))

    out = result(True)
    logger.info("fixpoint under %s: %d iterations, %d partitions, %d ms",
                trace.describe(), stats.iterations, stats.partitions, stats.millis)
    return out


def _stop(result: AnalysisResult, message: str):
    logger.warning("analysis stopped early, result is unsound: %s", message)
    raise LimitExceeded(message, result)


def eval_warnings(partition: Dict[tuple, AState]) -> FrozenSet[Tuple[str, int]]:
    """Call sites where the builtin ``eval`` may reach the callee position."""
    out = set()
    for state in partition.values():
        s = state.term
        if isinstance(s, (Call, NewCall)):
            f = aeval_exp(s.fun if isinstance(s, Call) else s.ctor, state.env, state.store)
            for a in f.addrs:
                o = state.store.entries.get(a)
                if isinstance(o, AbsObject) and "eval" in o.closures:
                    out.add(("eval", s.nid))
    return frozenset(out)


def verify_fixpoint(result: AnalysisResult) -> List[Tuple[tuple, tuple]]:
    """Re-sweep every entry; return the (source key, successor key) pairs not covered."""
    machine = AbstractMachine(result.program)
    bad = []
    for key in sorted(result.partition, key=repr):
        for succ in machine.next_states(result.partition[key]):
            k = succ.trace.partition_key()
            if k not in result.partition or not succ.leq(result.partition[k]):
                bad.append((key, k))
    return bad


def _term_summary(term) -> str:
    if isinstance(term, JV):
        return f"jv:{term.label} {term.value!r}"
    if isinstance(term, (BV, EV)):
        return f"{type(term).__name__.lower()} {term.value!r}"
    return f"{type(term).__name__}#{term.nid}"


def dump_partition(result: AnalysisResult, fp: TextIO) -> int:
    """Write one JSON line per partition entry, sorted by key; returns the count."""
    n = 0
    for key in sorted(result.partition, key=repr):
        state = result.partition[key]
        point, context = key
        record = {
            "key": repr(key),
            "point": repr(point),
            "context": repr(context),
            "store_size": len(state.store.entries),
            "term": _term_summary(state.term),
        }
        fp.write(json.dumps(record, sort_keys=True) + "\n")
        n += 1
    return n


# ---------------------------------------------------------------------------
# Soundness harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    step: int
    point: tuple
    reason: str


@dataclass
class SoundnessReport:
    """Outcome of :func:`soundness_check`.

    ``checked`` counts the concrete states compared; ``violation`` is the
    first uncovered state, ``witness`` its minimized program if requested.
    """

    strategy: str
    outcome: concrete.Outcome
    checked: int = 0
    violation: Optional[Violation] = None
    witness: Optional[Decl] = None

    @property
    def ok(self) -> bool:
        return self.violation is None

    def describe(self) -> str:
        if self.ok:
            return f"{self.strategy}: {self.checked} states checked, 0 violations"
        v = self.violation
        return f"{self.strategy}: 1 violation at step {v.step} {v.point}: {v.reason}"


class _Cover:
    """Covering checks between abstracted concrete components and abstract ones."""

    def __init__(self, strategy: Trace):
        self.strategy = strategy
        self._alpha: Dict[int, object] = {}
        self._sites: Dict[int, dict] = {}

    def entry(self, centry):
        key = id(centry)
        if key not in self._alpha:
            self._alpha[key] = (alpha_obj(centry) if isinstance(centry, concrete.CObject)
                                else alpha(centry))
        return self._alpha[key]

    def addr(self, c: AbsAddr, candidates: Iterable[AbsAddr]) -> bool:
        return any(self.strategy.addr_covers(a, c) for a in candidates)

    def value(self, c: BValue, a: BValue) -> bool:
        return (c.without_addrs().leq(a.without_addrs())
                and all(self.addr(x, a.addrs) for x in c.addrs))

    def env(self, c: FrozenMap, a: FrozenMap) -> bool:
        return all(name in a and all(self.addr(x, a[name]) for x in cells)
                   for name, cells in c.items())

    def obj(self, c: AbsObject, a: AbsObject) -> bool:
        if c.tag != a.tag or not a.present <= c.present:
            return False
        if not (a.hidden & c.present) <= c.hidden:
            return False
        if not all(self.value(v, a.get(name)) for name, v in c.props.items()):
            return False
        if not (self.value(c.proto, a.proto) and self.value(c.primitive, a.primitive)):
            return False
        return all(key in a.closures and self.env(cenv, a.closures[key])
                   for key, cenv in c.closures.items())

    def term(self, cterm, aterm) -> bool:
        pairs = ((concrete.Value, BV), (concrete.Exc, EV), (concrete.Jump, JV))
        for ctype, atype in pairs:
            if isinstance(cterm, ctype):
                if not isinstance(aterm, atype):
                    return False
                if ctype is concrete.Jump and cterm.label != aterm.label:
                    return False
                return self.value(alpha(cterm.value), aterm.value)
        return isinstance(aterm, Node) and aterm.nid == cterm.nid

    def store(self, cstore: dict, astore: AbsStore) -> Optional[str]:
        by_site = self._sites.get(id(astore))
        if by_site is None:
            by_site = self._sites[id(astore)] = defaultdict(list)
            for a in astore.entries:
                by_site[(a.site, a.tag)].append(a)
        groups = defaultdict(int)
        for caddr, centry in cstore.items():
            tag = caddr.tag
            groups[tag] += 1
            candidates = [a for a in by_site[(tag.site, tag.tag)]
                          if self.strategy.addr_covers(a, tag)]
            if not candidates:
                return f"no abstract address covers {tag!r}"
            c = self.entry(centry)
            if not any(self._entry_covers(c, astore.entries[a]) for a in candidates):
                return f"contents of {tag!r} not covered"
        for tag, count in groups.items():
            if count > 1:
                candidates = [a for a in by_site[(tag.site, tag.tag)]
                              if self.strategy.addr_covers(a, tag)]
                if len(candidates) == 1 and astore.is_single(candidates[0]):
                    return f"{tag!r} allocated {count} times but not a summary"
        return None

    def _entry_covers(self, c, a) -> bool:
        if isinstance(c, AbsObject):
            return isinstance(a, AbsObject) and self.obj(c, a)
        return isinstance(a, BValue) and self.value(c, a)

    def kont(self, ck: tuple, ak, astore: AbsStore) -> bool:
        if not ck:
            return isinstance(ak, HaltK)
        frame, rest = ck[-1], ck[:-1]
        if isinstance(ak, AddrK):
            if not isinstance(frame, concrete.RetK):
                return False
            konts = astore.entries.get(ak.addr)
            if not isinstance(konts, FrozenMap):
                return False
            for (nid, caller), rk in konts.items():
                if (nid == frame.node.nid and rk.is_ctor == frame.is_ctor
                        and caller.covers(frame.caller)
                        and self.env(alpha_env(frame.env), rk.env)
                        and (frame.receiver is None
                             or self.value(alpha(frame.receiver), rk.receiver))
                        and self.kont(rest, rk.next, astore)):
                    return True
            return False
        if isinstance(ak, HaltK) or type(frame).__name__ != type(ak).__name__:
            return False
        if frame.node.nid != ak.node.nid:
            return False
        if isinstance(frame, concrete.SeqK) and frame.index != ak.index:
            return False
        if hasattr(frame, "env") and not self.env(alpha_env(frame.env), ak.env):
            return False
        if isinstance(frame, concrete.ForK):
            if not all(any(str_member(w, k) for w in ak.work) for k in frame.keys):
                return False
        if isinstance(frame, concrete.FinallyK) and not self._pending(frame.pending, ak.pending):
            return False
        return self.kont(rest, ak.next, astore)

    def _pending(self, term, pending) -> bool:
        if isinstance(term, concrete.Value):
            return self.value(alpha(term.value), pending.bv)
        if isinstance(term, concrete.Exc):
            return self.value(alpha(term.value), pending.ev)
        return term.label in pending.jv and self.value(alpha(term.value), pending.jv[term.label])

    def state(self, cs: concrete.ConcreteState, a: AState) -> Optional[str]:
        """Why ``a`` does not cover ``cs``, or None when it does."""
        if not self.term(cs.term, a.term):
            return "term not covered"
        if not self.env(alpha_env(cs.env), a.env):
            return "environment not covered"
        reason = self.store(cs.store, a.store)
        if reason is not None:
            return reason
        if not self.kont(cs.kont, a.kont, a.store):
            return "continuation not covered"
        return None


def soundness_check(program: Decl, strategy="fs", fuel: int = 10_000,
                    limits: Optional[AnalysisLimits] = None,
                    minimize: bool = False) -> SoundnessReport:
    """Check that the abstract fixpoint covers every state of a concrete run.

    The concrete run records traces under the same sensitivity, so each
    concrete allocation carries the abstract address it abstracts to. A run
    that exhausts ``fuel`` is checked on the prefix it executed.

    Parameters
    ----------
    program : Decl
        A validated, numbered program.
    strategy : str or Trace
        Sensitivity shared by both machines.
    fuel : int
        Concrete step budget.
    limits : AnalysisLimits, optional
        Limits of the abstract run.
    minimize : bool
        On a violation, shrink the program with :func:`minimize_witness`.

    Returns
    -------
    SoundnessReport
    """
    trace = parse_sensitivity(strategy)
    result = analyze(program, trace, limits)
    outcome = concrete.run(program, fuel=fuel, strategy=trace, record_states=True)
    by_point = defaultdict(list)
    for (point, _), state in sorted(result.partition.items(), key=lambda kv: repr(kv[0])):
        by_point[point].append(state)
    cover = _Cover(trace)
    report = SoundnessReport(trace.describe(), outcome)
    for i, cs in enumerate(outcome.states):
        report.checked += 1
        candidates = [a for a in by_point.get(cs.trace.point, ()) if a.trace.covers(cs.trace)]
        if not candidates:
            reason = "no partition covers the trace"
        else:
            reasons = [cover.state(cs, a) for a in candidates]
            reason = None if any(r is None for r in reasons) else reasons[0]
        if reason is not None:
            report.violation = Violation(i, cs.trace.point, reason)
            logger.warning("soundness violation under %s at step %d: %s",
                           trace.describe(), i, reason)
            break
    if report.violation is not None and minimize:
        report.witness = minimize_witness(program, trace, fuel, limits)
    return report


# ---------------------------------------------------------------------------
# Witness minimisation
# ---------------------------------------------------------------------------


def _drop_stmt(node, seq_nid: int, index: int):
    """Copy of ``node`` with statement ``index`` removed from the Seq numbered ``seq_nid``."""
    if isinstance(node, tuple):
        return tuple(_drop_stmt(x, seq_nid, index) for x in node)
    if not is_dataclass(node):
        return node
    if isinstance(node, Seq) and node.nid == seq_nid:
        return replace(node, stmts=node.stmts[:index] + node.stmts[index + 1:])
    changes = {}
    for f in fields(node):
        value = getattr(node, f.name)
        if isinstance(value, (tuple, Node)):
            changes[f.name] = _drop_stmt(value, seq_nid, index)
    return replace(node, **changes)


def minimize_witness(program: Decl, strategy="fs", fuel: int = 10_000,
                     limits: Optional[AnalysisLimits] = None) -> Decl:
    """Greedily delete statements while the soundness check keeps failing.

    Returns the smallest program found; ``program`` itself if it does not fail.
    """
    def fails(p: Decl) -> bool:
        if validate(p):
            return False
        try:
            return not soundness_check(p, strategy, fuel, limits).ok
        except LimitExceeded:
            return False

    if not fails(program):
        return program
    current = program
    shrunk = True
    while shrunk:
        shrunk = False
        slots = [(s.nid, i) for s in iter_nodes(current) if isinstance(s, Seq)
                 for i in range(len(s.stmts))]
        for seq_nid, index in reversed(slots):
            candidate = number_nodes(_drop_stmt(current, seq_nid, index))
            if fails(candidate):
                current = candidate
                shrunk = True
                break
    logger.info("witness minimized to %d nodes", sum(1 for _ in iter_nodes(current)))
    return current


__all__ = [
    "AnalysisLimits",
    "AnalysisResult",
    "AnalysisStats",
    "LimitExceeded",
    "SoundnessReport",
    "Violation",
    "analyze",
    "dump_partition",
    "eval_warnings",
    "generate_program",
    "minimize_witness",
    "soundness_check",
    "verify_fixpoint",
]
