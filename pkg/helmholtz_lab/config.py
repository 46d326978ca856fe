"""
Run configuration: a scenario plus solver and eikonal settings.

Two front ends build a `LabConfig`:

- plain-text scenario documents (`[scenario]`, `[fields]`, `[solver]`, `[eikonal]`), see `parse_lab_config`
- YAML files read with `configue`, whose `config` node instantiates `helmholtz_lab.config.LabConfig`:

```yaml
config:
  (): helmholtz_lab.config.LabConfig
  scenario:
    (): helmholtz_lab.model.scenario_from_preset
    name: saito
    lam: 2.0
  solver:
    (): helmholtz_lab.solver.SolverSettings
    tol: 1.0e-8
```
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Type, TypeVar, Union

import configue

from helmholtz_lab.errors import ConfigError
from helmholtz_lab.model.scenario import Scenario, scenario_from_document
from helmholtz_lab.solver.krylov import SolverSettings
from helmholtz_lab.utils.document import Document, read_document, reject_unknown_keys

logger = logging.getLogger(__name__)

YAML_SUFFIXES = (".yaml", ".yml")
INIT_CHOICES = ("default", "one")

SettingsT = TypeVar("SettingsT")


@dataclass
class EikonalSettings:
    """Settings of the eikonal march. Mirrors the `[eikonal]` section; r0 comes from the scenario."""

    r_max: float = 100.0
    rho: float = 1.1
    angles: int = 64
    polar_angles: Optional[int] = None
    init: str = "default"
    margin: float = 1e-6

    def __post_init__(self):
        if not self.rho > 1:
            raise ConfigError(f"rho must exceed 1, got {self.rho}")
        if not self.r_max > 0:
            raise ConfigError(f"r_max must be positive, got {self.r_max}")
        if self.angles < 32 or self.angles % 2:
            raise ConfigError(f"angles must be even and at least 32, got {self.angles}")
        if self.polar_angles is not None and self.polar_angles < 16:
            raise ConfigError(f"polar_angles must be at least 16, got {self.polar_angles}")
        if not self.margin > 0:
            raise ConfigError(f"margin must be positive, got {self.margin}")
        if not isinstance(self.init, str) or not self.init.strip():
            raise ConfigError("init must be 'default', 'one' or an angular expression")


@dataclass
class LabConfig:
    scenario: Scenario
    solver: SolverSettings = field(default_factory=SolverSettings)
    eikonal: EikonalSettings = field(default_factory=EikonalSettings)

    def __post_init__(self):
        if not isinstance(self.scenario, Scenario):
            raise ConfigError(f"scenario must be a Scenario, got {type(self.scenario).__name__}")

    def describe(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario.describe(),
            "solver": dataclasses.asdict(self.solver),
            "eikonal": dataclasses.asdict(self.eikonal),
        }


def _settings_from_section(document: Document, section: str, cls: Type[SettingsT]) -> SettingsT:
    names = frozenset(f.name for f in dataclasses.fields(cls))
    reject_unknown_keys(document, section, names)
    entries = document.get(section, {})
    kwargs = {key: entry.value for key, entry in entries.items()}
    try:
        return cls(**kwargs)
    except TypeError as err:
        # Comparisons inside __post_init__ fail on values of the wrong type.
        line = min((entry.line for entry in entries.values()), default=None)
        raise ConfigError(f"invalid value type in [{section}]: {err}", line=line) from err
    except ConfigError as err:
        if err.line is None:
            for key, entry in entries.items():
                if err.message.startswith(key):
                    raise ConfigError(err.message, line=entry.line) from err
        raise


def parse_lab_config(text: str) -> LabConfig:
    """
    Parse a scenario document with optional `[solver]` and `[eikonal]` sections.

    Raises:
        ConfigError: with the line (and column for expression errors) of the offending entry
    """
    document = read_document(text)
    return LabConfig(
        scenario=scenario_from_document(document),
        solver=_settings_from_section(document, "solver", SolverSettings),
        eikonal=_settings_from_section(document, "eikonal", EikonalSettings),
    )


def load_lab_config(path: Union[str, Path]) -> LabConfig:
    """
    Load a `.yaml`/`.yml` configue file or a plain-text scenario document.

    Raises:
        ConfigError: unreadable file, invalid content, or a YAML `config` node that is not a `LabConfig`
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")

    if path.suffix.lower() in YAML_SUFFIXES:
        try:
            config = configue.load(path, sub_path="config")
        except ConfigError:
            raise
        except Exception as err:
            raise ConfigError(f"could not load {path}: {err}") from err
        if not isinstance(config, LabConfig):
            raise ConfigError(f"the config node of {path} must build a LabConfig, got {type(config).__name__}")
        logger.info(f"Loaded YAML config {path}")
        return config

    config = parse_lab_config(path.read_text(encoding="utf-8"))
    logger.info(f"Loaded scenario document {path}")
    return config
