from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd


class FunctionalName(str, Enum):
    MC_NORM = "mc_norm"
    DUAL_NORM = "dual_norm"
    RADIATION_EIKONAL = "radiation_eikonal"
    RADIATION_EXPLICIT_N = "radiation_explicit_n"
    RADIATION_EXPLICIT_NINF = "radiation_explicit_ninf"
    RADIATION_ABSORPTION = "radiation_absorption"
    RADIATION_TANGENTIAL = "radiation_tangential"
    TANGENTIAL_ENERGY = "tangential_energy"
    CONCENTRATION = "concentration"
    APRIORI_RATIO = "apriori_ratio"
    BETA = "beta"
    GAMMA_EST = "gamma_est"
    GAMMA_RELAXED = "gamma_relaxed"
    BETA_TILDE = "beta_tilde"
    CSTAR_EST = "cstar_est"
    MU_DECAY = "mu_decay"
    P1_DECAY = "p1_decay"
    GAUGE_DIVERGENCE = "gauge_divergence"
    N_MIN = "n_min"
    LAP_RATIO = "lap_ratio"


class Verdict(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"
    UNKNOWN = "unknown"
    REPORTED = "reported"


CSV_COLUMNS = ["name", "value", "verdict", "delta", "R", "R0", "phase", "lambda", "epsilon", "N", "L"]


@dataclass
class FunctionalReport:
    """
    One evaluated norm, functional or hypothesis indicator.

    `parameters` holds the applicable settings among `delta`, `R`, `R0`, `phase`, `lambda`, `epsilon`, `N`, `L`;
    `details` carries extra diagnostics (per-shell profiles, fitted exponents, ...).
    """

    name: FunctionalName
    value: float
    verdict: Optional[Verdict] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    details: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.name = FunctionalName(self.name)
        if self.verdict is not None:
            self.verdict = Verdict(self.verdict)

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {column: None for column in CSV_COLUMNS}
        row.update({key: value for key, value in self.parameters.items() if key in row})
        row["name"] = self.name.value
        row["value"] = self.value
        row["verdict"] = self.verdict.value if self.verdict is not None else None
        return row


def reports_frame(reports: Iterable[FunctionalReport]) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = [report.to_row() for report in reports]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)
