"""
Named scenarios.

- `free`: n = lambda, no potentials.
- `saito`: p_tilde = -w1/lambda, whose eikonal phase is known in closed form.
- `angular-index`: n = 2 + 0.5*w1 (degree-0 homogeneous, concentrates energy along +-e1).
- `azimuthal-b`: d = 2, decaying azimuthal magnetic potential s(-x2, x1)/(1 + |x|^2).
- `coulomb-q`: Coulomb short-range potential Q = 0.5/|x| (decays too slowly for the short-range hypothesis).
"""

from typing import Any, Callable, Dict, Optional

from helmholtz_lab.errors import ConfigError
from helmholtz_lab.model.scenario import Scenario


def _build(defaults: Dict[str, Any], overrides: Dict[str, Any]) -> Scenario:
    return Scenario(**{**defaults, **overrides})


def free_scenario(dimension: int = 3, lam: float = 1.0, **overrides: Any) -> Scenario:
    defaults = dict(dimension=dimension, lam=lam, p_tilde="0", n_inf=repr(float(lam)), name="free")
    return _build(defaults, overrides)


def saito_scenario(dimension: int = 3, lam: float = 2.0, **overrides: Any) -> Scenario:
    if lam <= 1:
        raise ConfigError(f"lambda must exceed 1 for the saito preset, got {lam}")
    defaults = dict(dimension=dimension, lam=lam, p_tilde=f"-x1/({lam!r}*r)", n_inf=f"{lam!r} - w1", name="saito")
    return _build(defaults, overrides)


def angular_index_scenario(dimension: int = 2, lam: float = 2.0, **overrides: Any) -> Scenario:
    defaults = dict(dimension=dimension, lam=lam, n="2 + 0.5*w1", n_inf="2 + 0.5*w1", name="angular-index")
    return _build(defaults, overrides)


def azimuthal_b_scenario(dimension: int = 2, lam: float = 1.0, strength: float = 0.1, **overrides: Any) -> Scenario:
    if dimension != 2:
        raise ConfigError("the azimuthal-b preset is two-dimensional")
    defaults = dict(
        dimension=2,
        lam=lam,
        p_tilde="0",
        n_inf=repr(float(lam)),
        b=(f"-{strength!r}*x2/(1 + x1^2 + x2^2)", f"{strength!r}*x1/(1 + x1^2 + x2^2)"),
        name="azimuthal-b",
    )
    return _build(defaults, overrides)


def coulomb_q_scenario(dimension: int = 3, lam: float = 1.0, charge: float = 0.5, **overrides: Any) -> Scenario:
    defaults = dict(
        dimension=dimension, lam=lam, p_tilde="0", q_pot=f"{charge!r}/r", n_inf=repr(float(lam)), name="coulomb-q"
    )
    return _build(defaults, overrides)


PRESETS: Dict[str, Callable[..., Scenario]] = {
    "free": free_scenario,
    "saito": saito_scenario,
    "angular-index": angular_index_scenario,
    "azimuthal-b": azimuthal_b_scenario,
    "coulomb-q": coulomb_q_scenario,
}


def scenario_from_preset(
    name: str,
    lam: Optional[float] = None,
    dimension: Optional[int] = None,
    **overrides: Any,
) -> Scenario:
    """
    Build a preset scenario. `lam` and `dimension` fall back to the preset defaults; other keyword arguments are
    passed to `Scenario` (e.g. `epsilon`, `half_width`, or field overrides like `source_f`).
    """
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}, expected one of {sorted(PRESETS)}")

    kwargs: Dict[str, Any] = dict(overrides)
    if lam is not None:
        kwargs["lam"] = lam
    if dimension is not None:
        kwargs["dimension"] = dimension

    factory = PRESETS[name]
    if any(key in kwargs for key in ("n", "p_tilde")):
        # A user-supplied index replaces the preset one.
        base = factory(**{k: v for k, v in kwargs.items() if k in ("lam", "dimension")})
        fields = {"n": None, "p_tilde": None, "n_inf": base.n_inf}
        fields.update({k: v for k, v in kwargs.items() if k not in ("lam", "dimension")})
        return base.with_updates(**fields)
    return factory(**kwargs)
