"""Traces: the pluggable abstraction behind flow, context and heap sensitivity.

A trace is an immutable value carried by every machine state. The machines
only ever call :meth:`Trace.update` with one of three events and read
:meth:`Trace.heap_prefix` and :meth:`Trace.partition_key`; each strategy is a
``Trace`` subclass overriding :meth:`Trace.push`, so a new strategy needs no
change in the interpreters or the engine.
"""

import re
from dataclasses import dataclass, replace
from typing import ClassVar, Dict, Tuple, Type

from .builtin_objects import GLOBAL
from .domains import AbsAddr, BValue

# Argument positions recorded in a call signature, beyond self
MAX_SIG_ARGS = 4

# Context element marker for a receiver with primitive components
PRIM = "prim"


class ParameterError(ValueError):
    """Invalid sensitivity string or parameters."""


# ---------------------------------------------------------------------------
# Program points
# ---------------------------------------------------------------------------


def statement_point(nid: int) -> tuple:
    return ("s", nid)


def value_point(kind: str, label, frame_point: tuple) -> tuple:
    """Point of a value term returning into the frame described by ``frame_point``.

    ``kind`` is ``bv``, ``ev`` or ``jv``; ``label`` is the break label of a
    jump value and ``None`` otherwise.
    """
    return ("v", kind, label) + frame_point


HALT_FRAME = ("halt",)


def exit_frame(meth_nid: int) -> tuple:
    return ("exit", meth_nid)


# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepTo:
    point: tuple


@dataclass(frozen=True)
class CallEvent:
    """Entry into a closure.

    ``arg_values`` holds the first ``MAX_SIG_ARGS`` positional arguments read
    from the arguments object.
    """

    site: int
    callee: int
    self_value: BValue
    args_value: BValue
    arg_values: Tuple[BValue, ...]
    point: tuple


@dataclass(frozen=True)
class ReturnEvent:
    caller: "Trace"
    point: tuple


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    """Flow-sensitive, context-insensitive trace: the key is the program point."""

    point: tuple = ("start",)
    context: tuple = ()
    k: int = 0
    h: int = 0

    kind: ClassVar[str] = "fs"

    def update(self, event) -> "Trace":
        if isinstance(event, StepTo):
            return replace(self, point=event.point)
        if isinstance(event, CallEvent):
            return replace(self, point=event.point, context=self.push(event))
        if isinstance(event, ReturnEvent):
            return replace(event.caller, point=event.point)
        raise TypeError(f"unknown trace event {event!r}")

    def push(self, event: CallEvent) -> tuple:
        """Context of the callee entered by ``event``."""
        return self.context

    def heap_prefix(self) -> tuple:
        return self.context[:self.h]

    def partition_key(self) -> tuple:
        return (self.point, self.context)

    def describe(self) -> str:
        if self.kind == "fs":
            return "fs"
        return f"{self.kind}:{self.k}.{self.h}"

    # -- covering, used to relate concrete traces to abstract ones ----------

    def element_covers(self, abstract, concrete) -> bool:
        return abstract == concrete

    def context_covers(self, abstract: tuple, concrete: tuple) -> bool:
        return len(abstract) == len(concrete) and all(
            self.element_covers(a, c) for a, c in zip(abstract, concrete))

    def addr_covers(self, abstract: AbsAddr, concrete: AbsAddr) -> bool:
        return (abstract.site == concrete.site and abstract.tag == concrete.tag
                and self.context_covers(abstract.ctx, concrete.ctx))

    def covers(self, other: "Trace") -> bool:
        return self.point == other.point and self.context_covers(self.context, other.context)


FSTrace = Trace


@dataclass(frozen=True)
class StackCFATrace(Trace):
    """Context is the top ``k`` call sites."""

    kind: ClassVar[str] = "stack"

    def push(self, event: CallEvent) -> tuple:
        return ((event.site,) + self.context)[:self.k]


@dataclass(frozen=True)
class AcyclicCFATrace(Trace):
    """Full call-site stack with recursive cycles collapsed.

    Pushing a site already on the stack truncates back to its earlier
    occurrence. The heap prefix is taken after collapsing.
    """

    kind: ClassVar[str] = "acyclic"

    def push(self, event: CallEvent) -> tuple:
        if event.site in self.context:
            return self.context[self.context.index(event.site):]
        return (event.site,) + self.context

    def describe(self) -> str:
        return f"acyclic:{self.h}"


def _receiver_sites(self_value: BValue) -> frozenset:
    elems = {AbsAddr(a.site, (), a.tag) for a in self_value.addrs}
    if self_value.has_non_addr():
        elems.add(PRIM)
    return frozenset(elems)


@dataclass(frozen=True)
class ObjTrace(Trace):
    """Context is a ``k``-limited chain of receiver allocation sites.

    A receiver that may be one of several objects contributes the set of
    their sites as a single element.
    """

    kind: ClassVar[str] = "obj"

    def element(self, event: CallEvent) -> frozenset:
        return _receiver_sites(event.self_value)

    def push(self, event: CallEvent) -> tuple:
        return ((self.element(event),) + self.context)[:self.k]

    def element_covers(self, abstract, concrete) -> bool:
        return concrete <= abstract


@dataclass(frozen=True)
class MixedTrace(ObjTrace):
    """Object sensitivity, except the global receiver is replaced by the call site."""

    kind: ClassVar[str] = "mixed"

    def element(self, event: CallEvent) -> frozenset:
        elems = set(_receiver_sites(event.self_value))
        if any(a.site == GLOBAL for a in event.self_value.addrs):
            elems = {e for e in elems if not (isinstance(e, AbsAddr) and e.site == GLOBAL)}
            elems.add(("site", event.site))
        return frozenset(elems)


@dataclass(frozen=True)
class SigTrace(Trace):
    """Context is a ``k``-limited chain of (callee, receiver types, argument types)."""

    kind: ClassVar[str] = "sig"

    def push(self, event: CallEvent) -> tuple:
        types = tuple(v.typeset() for v in event.arg_values[:MAX_SIG_ARGS])
        elem = (event.callee, event.self_value.typeset()) + types
        return ((elem,) + self.context)[:self.k]

    def element_covers(self, abstract, concrete) -> bool:
        return (len(abstract) == len(concrete) and abstract[0] == concrete[0]
                and all(c <= a for a, c in zip(abstract[1:], concrete[1:])))


STRATEGIES: Dict[str, Type[Trace]] = {
    "fs": FSTrace,
    "stack": StackCFATrace,
    "acyclic": AcyclicCFATrace,
    "obj": ObjTrace,
    "sig": SigTrace,
    "mixed": MixedTrace,
}

_K_H = re.compile(r"(stack|obj|sig|mixed):([0-9]+)\.([0-9]+)")
_ACYCLIC = re.compile(r"acyclic:([0-9]+)")


def make_trace(kind: str, k: int = 0, h: int = 0) -> Trace:
    """Initial trace of a strategy, validating its parameters."""
    if kind not in STRATEGIES:
        raise ParameterError(f"unknown sensitivity {kind!r}")
    if kind == "fs":
        return FSTrace()
    if kind == "acyclic":
        if h < 0:
            raise ParameterError("h must be >= 0 per acyclic:H")
        return AcyclicCFATrace(h=h)
    if k < 1:
        raise ParameterError(f"k must be >= 1 per {kind}:K.H")
    if not 0 <= h < k:
        raise ParameterError(f"h must be < k per {kind}:K.H")
    return STRATEGIES[kind](k=k, h=h)


def parse_sensitivity(text) -> Trace:
    """Parse ``fs``, ``stack:K.H``, ``acyclic:H``, ``obj:K.H``, ``sig:K.H`` or ``mixed:K.H``.

    A ``Trace`` instance is passed through unchanged, so every public entry
    point accepts either form.

    Raises
    ------
    ParameterError
        On unknown syntax or ``h >= k``.
    """
    if isinstance(text, Trace):
        return text
    text = text.strip()
    if text == "fs":
        return make_trace("fs")
    m = _ACYCLIC.fullmatch(text)
    if m:
        return make_trace("acyclic", h=int(m.group(1)))
    m = _K_H.fullmatch(text)
    if m:
        return make_trace(m.group(1), int(m.group(2)), int(m.group(3)))
    raise ParameterError(
        f"bad sensitivity {text!r}; expected fs, stack:K.H, acyclic:H, obj:K.H, sig:K.H or mixed:K.H")
