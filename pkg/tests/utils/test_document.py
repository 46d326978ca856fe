import pytest

from helmholtz_lab.errors import ConfigError
from helmholtz_lab.utils import read_document, reject_unknown_keys

TEXT = "\n".join(
    [
        "# comment",
        "[scenario]",
        "lambda = 2.0",
        "dimension = 3   # inline comment",
        "",
        "[fields]",
        'b = "-x2", "x1", "0"',
        'f = "gaussian"',
        "[solver]",
        "warm_start = TRUE",
    ]
)


def test_values():
    document = read_document(TEXT)
    assert document["scenario"]["lambda"].value == 2.0
    assert document["scenario"]["dimension"].value == 3
    assert document["fields"]["b"].value == ("-x2", "x1", "0")
    assert document["fields"]["f"].value == "gaussian"
    assert document["solver"]["warm_start"].value is True


def test_locations():
    document = read_document(TEXT)
    entry = document["scenario"]["lambda"]
    assert entry.line == 3
    assert entry.value_column == 10
    assert document["fields"]["f"].line == 8
    assert document["fields"]["f"].value_column == 5


def test_missing_header():
    with pytest.raises(ConfigError) as excinfo:
        read_document("lambda = 2.0\n")
    assert excinfo.value.line == 1


def test_unknown_section():
    with pytest.raises(ConfigError) as excinfo:
        read_document("[scenario]\nlambda = 1.0\n[plots]\nstyle = 1\n")
    assert excinfo.value.line == 3


def test_duplicate_key():
    with pytest.raises(ConfigError) as excinfo:
        read_document("[scenario]\nlambda = 1.0\nlambda = 2.0\n")
    assert excinfo.value.line == 3


def test_undecodable_value():
    with pytest.raises(ConfigError) as excinfo:
        read_document("[scenario]\nlambda = two\n")
    assert excinfo.value.line == 2
    assert excinfo.value.column >= 10


def test_reject_unknown_keys():
    document = read_document(TEXT)
    reject_unknown_keys(document, "scenario", frozenset({"lambda", "dimension"}))
    reject_unknown_keys(document, "eikonal", frozenset())
    with pytest.raises(ConfigError) as excinfo:
        reject_unknown_keys(document, "scenario", frozenset({"lambda"}))
    assert excinfo.value.line == 4
