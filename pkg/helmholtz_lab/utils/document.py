"""
Reader for the plain-text scenario document.

Grammar:

```
# comment
[scenario]
dimension = 2
lambda = 2.0

[fields]
p_tilde = "-x1/(2*r)"
b = "-x2", "x1"
```

Sections are `[name]` headers, entries are `key = value` lines. Values are numbers, quoted strings, `true`/`false`
or comma lists of those.
"""

import ast
import configparser
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Mapping

from helmholtz_lab.errors import ConfigError

SECTIONS: FrozenSet[str] = frozenset({"scenario", "fields", "solver", "eikonal"})


@dataclass(frozen=True)
class DocumentEntry:
    """
    One decoded `key = value` line.

    Attributes:
        value: decoded value (number, string, bool or tuple of those)
        line: 1-based line number in the document
        value_column: 1-based column where the raw value starts
    """

    key: str
    value: Any
    line: int
    value_column: int


Document = Dict[str, Dict[str, DocumentEntry]]


def _decode_value(raw: str, line: int, column: int) -> Any:
    lowered = raw.strip().lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return ast.literal_eval(raw.strip())
    except (SyntaxError, ValueError) as err:
        offset = getattr(err, "offset", None) or 1
        raise ConfigError(
            f"invalid value {raw.strip()!r}: expected a number, a quoted string or a comma list",
            line=line,
            column=column + offset - 1,
        ) from err


def _locate_entries(text: str) -> Dict[str, Dict[str, tuple]]:
    """Map (section, key) to (line, value column) by scanning the raw text."""
    locations: Dict[str, Dict[str, tuple]] = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            section = stripped[1:-1].strip()
            locations.setdefault(section, {})
            continue
        if section is not None and "=" in raw_line:
            key, _, value = raw_line.partition("=")
            value_column = len(key) + 2 + (len(value) - len(value.lstrip()))
            locations[section][key.strip()] = (lineno, value_column)
    return locations


def read_document(text: str, sections: FrozenSet[str] = SECTIONS) -> Document:
    """
    Parse a scenario document into decoded entries per section.

    Raises:
        ConfigError: on structural errors (missing section header, duplicates, unknown sections) or undecodable
            values, with the line number of the offending entry
    """
    parser = configparser.ConfigParser(
        interpolation=None,
        inline_comment_prefixes=("#", ";"),
        delimiters=("=",),
        strict=True,
        default_section="__defaults__",
    )
    parser.optionxform = str  # type: ignore[assignment]

    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as err:
        raise ConfigError("document must start with a [section] header", line=err.lineno) from err
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as err:
        raise ConfigError(str(err.message).splitlines()[0], line=err.lineno) from err
    except configparser.ParsingError as err:
        lineno = err.errors[0][0] if err.errors else None
        raise ConfigError("malformed line, expected `key = value`", line=lineno) from err

    locations = _locate_entries(text)
    document: Document = {}
    for section in parser.sections():
        if section not in sections:
            raise ConfigError(f"unknown section [{section}]", line=_section_line(text, section))
        entries: Dict[str, DocumentEntry] = {}
        for key, raw in parser.items(section):
            line, column = locations.get(section, {}).get(key, (None, 1))
            value = _decode_value(raw, line, column)
            entries[key] = DocumentEntry(key=key, value=value, line=line, value_column=column)
        document[section] = entries
    return document


def _section_line(text: str, section: str) -> int:
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        if raw_line.strip() == f"[{section}]":
            return lineno
    return 1


def reject_unknown_keys(document: Mapping[str, Mapping[str, DocumentEntry]], section: str, known: FrozenSet[str]):
    """Raise `ConfigError` for the first key of `section` that is not in `known`."""
    for key, entry in document.get(section, {}).items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{section}]", line=entry.line)
