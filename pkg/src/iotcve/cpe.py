"""CPE name parsing, formatting, and vulnerable-configuration trees.

Supports the two bindings found in vulnerability feeds: the URI form
(``cpe:/h:moxa:edr-g903:-``) and the 2.3 formatted string
(``cpe:2.3:h:d-link:dap-1320:-:*:*:*:*:*:*:*``). Both bind onto the same
eleven-attribute name, so a name parsed from either binding compares
equal to its counterpart from the other.

Matching semantics (set-theoretic name comparison) are deliberately not
implemented; callers only read attribute values, and plain equality on
``CpeName`` is enough for that.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Union

from .errors import MalformedCpe

__all__ = [
    "Part",
    "Logical",
    "AttrValue",
    "CpeName",
    "Leaf",
    "LogicalTest",
    "Operator",
    "ConfigExpr",
    "parse_cpe_uri",
    "parse_cpe_formatted",
    "parse_cpe_any",
    "format_cpe_uri",
    "format_cpe_formatted",
    "collect_cpes",
]


class Part(Enum):
    """Product kind; the only taxonomy CPE itself provides."""

    APPLICATION = "a"
    HARDWARE = "h"
    OPERATING_SYSTEM = "o"


class Logical(Enum):
    """Non-literal attribute values: unspecified (ANY) or not applicable (NA)."""

    ANY = "*"
    NA = "-"


AttrValue = Union[str, Logical]

# Attribute names after `part`, in WFN order. URI bindings carry only the
# first six; the formatted string carries all ten.
_WFN_ATTRS = (
    "vendor",
    "product",
    "version",
    "update",
    "edition",
    "language",
    "sw_edition",
    "target_sw",
    "target_hw",
    "other",
)

_HEX = "0123456789abcdef"

# Characters that stay unescaped inside a component. Everything else is
# percent-encoded (URI) or backslash-escaped (formatted string).
_UNRESERVED = frozenset("abcdefghijklmnopqrstuvwxyz0123456789._~-")


def _check_literal(attr: str, value: str) -> None:
    if not value:
        raise MalformedCpe(f"{attr}: empty literal value")
    if value in ("*", "-"):
        raise MalformedCpe(f"{attr}: {value!r} must be Logical.ANY / Logical.NA")
    if value != value.lower():
        raise MalformedCpe(f"{attr}: literal values are lowercase, got {value!r}")


@dataclass(frozen=True)
class CpeName:
    """A Well-Formed CPE Name: part plus ten attribute values.

    Literal values are lowercase and percent-decoded; anything the source
    left out is ``Logical.ANY``, an explicit dash is ``Logical.NA``.
    """

    part: Part
    vendor: AttrValue = Logical.ANY
    product: AttrValue = Logical.ANY
    version: AttrValue = Logical.ANY
    update: AttrValue = Logical.ANY
    edition: AttrValue = Logical.ANY
    language: AttrValue = Logical.ANY
    sw_edition: AttrValue = Logical.ANY
    target_sw: AttrValue = Logical.ANY
    target_hw: AttrValue = Logical.ANY
    other: AttrValue = Logical.ANY

    def __post_init__(self) -> None:
        if not isinstance(self.part, Part):
            raise MalformedCpe(f"part must be a Part, got {self.part!r}")
        for attr in _WFN_ATTRS:
            value = getattr(self, attr)
            if not isinstance(value, Logical):
                _check_literal(attr, value)

    @property
    def is_hardware(self) -> bool:
        return self.part is Part.HARDWARE

    def attr_values(self) -> tuple[AttrValue, ...]:
        """The ten non-part attributes in WFN order."""
        return tuple(getattr(self, a) for a in _WFN_ATTRS)


class Operator(Enum):
    AND = "AND"
    OR = "OR"


@dataclass(frozen=True)
class Leaf:
    cpe: CpeName


@dataclass(frozen=True)
class LogicalTest:
    """A logical test node combining child expressions."""

    operator: Operator
    children: tuple["ConfigExpr", ...]
    negate: bool = False

    def __post_init__(self) -> None:
        if not self.children:
            raise MalformedCpe("logical test with no children")


ConfigExpr = Union[Leaf, LogicalTest]


def collect_cpes(expr: ConfigExpr) -> list[CpeName]:
    """All leaf names in document (preorder) order, duplicates preserved."""
    out: list[CpeName] = []
    stack: list[ConfigExpr] = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            out.append(node.cpe)
        else:
            stack.extend(reversed(node.children))
    return out


# --- URI binding (2.2) ---------------------------------------------------


def _decode_percent(attr: str, raw: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "%":
            hex_pair = raw[i + 1 : i + 3].lower()
            if len(hex_pair) != 2 or hex_pair[0] not in _HEX or hex_pair[1] not in _HEX:
                raise MalformedCpe(f"{attr}: invalid percent-escape in {raw!r}")
            out.append(chr(int(hex_pair, 16)))
            i += 3
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _parse_uri_component(attr: str, raw: str) -> AttrValue:
    if raw == "":
        return Logical.ANY
    if raw == "-":
        return Logical.NA
    return _decode_percent(attr, raw).lower()


def parse_cpe_uri(text: str) -> CpeName:
    """Parse the URI binding: ``cpe:/<part>:<vendor>:...:<language>``.

    Missing trailing components bind to ANY, ``-`` binds to NA, empty
    components bind to ANY, percent-escapes are decoded, and the result
    is lowercased. More than seven components is an error rather than a
    silent truncation.
    """
    if text[:5].lower() != "cpe:/":
        raise MalformedCpe(f"not a CPE URI: {text!r}")
    components = text[len("cpe:/") :].split(":")
    if len(components) > 7:
        raise MalformedCpe(f"CPE URI has {len(components)} components (max 7): {text!r}")
    part_raw = components[0].lower()
    try:
        part = Part(part_raw)
    except ValueError:
        raise MalformedCpe(f"invalid part {components[0]!r} in {text!r}") from None
    values = {
        attr: _parse_uri_component(attr, raw)
        for attr, raw in zip(_WFN_ATTRS, components[1:])
    }
    return CpeName(part=part, **values)


def _encode_percent(value: str) -> str:
    out: list[str] = []
    for c in value:
        if c in _UNRESERVED:
            out.append(c)
        elif ord(c) <= 0xFF:
            out.append(f"%{ord(c):02x}")
        else:
            raise MalformedCpe(f"character {c!r} not representable in the URI binding")
    return "".join(out)


def format_cpe_uri(name: CpeName) -> str:
    """Canonical URI binding; trailing ANY components are omitted.

    The URI binding carries only the first seven attributes, so names
    with bound extended attributes (sw_edition and beyond) are rejected.
    """
    for attr in _WFN_ATTRS[6:]:
        if getattr(name, attr) is not Logical.ANY:
            raise MalformedCpe(f"{attr} is not representable in the URI binding")
    components = [name.part.value]
    for attr in _WFN_ATTRS[:6]:
        value = getattr(name, attr)
        if value is Logical.ANY:
            components.append("")
        elif value is Logical.NA:
            components.append("-")
        else:
            components.append(_encode_percent(value))
    while len(components) > 1 and components[-1] == "":
        components.pop()
    return "cpe:/" + ":".join(components)


# --- formatted-string binding (2.3) ---------------------------------------


def _split_formatted(body: str) -> list[str]:
    """Split on colons, honoring backslash escapes."""
    parts: list[str] = []
    current: list[str] = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            if i + 1 >= len(body):
                raise MalformedCpe(f"dangling backslash in {body!r}")
            current.append(body[i : i + 2])
            i += 2
        elif c == ":":
            parts.append("".join(current))
            current = []
            i += 1
        else:
            current.append(c)
            i += 1
    parts.append("".join(current))
    return parts


def _unescape(raw: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(raw):
        if raw[i] == "\\":
            out.append(raw[i + 1])
            i += 2
        else:
            out.append(raw[i])
            i += 1
    return "".join(out)


def _parse_formatted_component(attr: str, raw: str) -> AttrValue:
    if raw == "*":
        return Logical.ANY
    if raw == "-":
        return Logical.NA
    if raw == "":
        raise MalformedCpe(f"{attr}: empty component in formatted string")
    return _unescape(raw).lower()


def parse_cpe_formatted(text: str) -> CpeName:
    """Parse the 2.3 formatted-string binding: exactly eleven components."""
    if text[:8].lower() != "cpe:2.3:":
        raise MalformedCpe(f"not a CPE 2.3 formatted string: {text!r}")
    components = _split_formatted(text[len("cpe:2.3:") :])
    if len(components) != 11:
        raise MalformedCpe(
            f"formatted string has {len(components)} components (need 11): {text!r}"
        )
    try:
        part = Part(components[0].lower())
    except ValueError:
        raise MalformedCpe(f"invalid part {components[0]!r} in {text!r}") from None
    values = {
        attr: _parse_formatted_component(attr, raw)
        for attr, raw in zip(_WFN_ATTRS, components[1:])
    }
    return CpeName(part=part, **values)


def _escape_formatted(value: str) -> str:
    return "".join(c if c in _UNRESERVED else "\\" + c for c in value)


def format_cpe_formatted(name: CpeName) -> str:
    """Canonical 2.3 formatted string; all eleven components always present."""
    components = [name.part.value]
    for value in name.attr_values():
        if value is Logical.ANY:
            components.append("*")
        elif value is Logical.NA:
            components.append("-")
        else:
            components.append(_escape_formatted(value))
    return "cpe:2.3:" + ":".join(components)


def parse_cpe_any(text: str) -> CpeName:
    """Dispatch on the binding prefix; feeds mix both forms."""
    if text[:8].lower() == "cpe:2.3:":
        return parse_cpe_formatted(text)
    if text[:5].lower() == "cpe:/":
        return parse_cpe_uri(text)
    raise MalformedCpe(f"unrecognized CPE binding: {text!r}")
