"""Instantiation: a schematic module plus a structure gives a system.

The schematic module stays untouched; the system pairs it with a
resolved copy of its inner net, the structure, and the initial marking
obtained by evaluating every place's initial inscription (``elm`` terms
contribute one token per element, plain terms one token).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EvalError, ModelError
from .modules import Module
from .nets import (Marking, SchematicNet, enabled_bindings, fire,
                   resolve_net, successors)
from .signature import Structure, validate_structure
from .terms import Binding, EMPTY_BINDING, inscription_tokens, term_variables
from .values import Multiset


@dataclass(frozen=True)
class System:
    """An executable instantiation of a schematic module."""

    name: str
    module: Module
    structure: Structure
    initial: Marking
    # resolved copy of module.inner; behavior operations run on this
    net: SchematicNet = field(compare=False, repr=False)

    def enabled(self, marking: Marking, transition: str) -> list[Binding]:
        return enabled_bindings(self.net, marking, transition, self.structure)

    def fire(self, marking: Marking, transition: str, binding: Binding) -> Marking:
        return fire(self.net, marking, transition, binding, self.structure)

    def successors(self, marking: Marking | None = None):
        return successors(self.net, self.initial if marking is None else marking,
                          self.structure)


def instantiate(module: Module, structure: Structure,
                name: str | None = None) -> System:
    """Build the executable system for one instantiation.

    Raises :class:`ModelError` when the structure does not model the
    signature, the module does not resolve against it, or an initial
    inscription is not closed.
    """
    if not isinstance(module.inner, SchematicNet):
        raise ModelError(f"module {module.name!r} is a run, not a schematic module")
    sig = structure.signature
    if module.sig and module.sig != sig.name:
        raise ModelError(
            f"module {module.name!r} is over signature {module.sig!r}, "
            f"but structure {structure.name!r} interprets {sig.name!r}")
    problems = validate_structure(sig, structure)
    if problems:
        raise ModelError(
            f"structure {structure.name!r} does not model {sig.name!r}: "
            + "; ".join(str(v) for v in problems))
    net, violations = resolve_net(module.inner, sig)
    if violations:
        raise ModelError(
            f"module {module.name!r} does not resolve against {sig.name!r}: "
            + "; ".join(str(v) for v in violations))

    per_place: dict[str, Multiset] = {}
    for place in net.places:
        if not place.init:
            continue
        for term in place.init:
            for var in sorted(term_variables(term)):
                raise EvalError(
                    f"initial inscription of {place.name!r} is open: "
                    f"variable {var!r}", place.span)
        tokens = inscription_tokens(place.init, structure, EMPTY_BINDING)
        if tokens:
            per_place[place.name] = tokens
    initial = Marking(per_place)

    return System(name or f"{module.name}_{structure.name}",
                  module, structure, initial, net)


def reinstantiate(module: Module, s1: Structure,
                  s2: Structure) -> tuple[System, System]:
    """Two systems over the very same schematic module object."""
    return instantiate(module, s1), instantiate(module, s2)
