"""Scenario parameters and unit conversion.

All quantities are SI (metres, hertz, watts).  dBm values are converted
once, at the configuration boundary, by :func:`dbm_to_watt`.
"""

from dataclasses import asdict, dataclass, fields, replace
import math

from .errors import InvalidConfigError

SPEED_OF_LIGHT = 299_792_458.0


def dbm_to_watt(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt):
    return 10.0 * math.log10(watt) + 30.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, RF and algorithm parameters of one PASS scenario.

    ``d``, ``Delta`` and ``L_m`` may be left as ``None``; they then resolve
    to ``D_y/(M-1)``, half a free-space wavelength and ``D_x`` respectively
    (see :attr:`spacing`, :attr:`min_spacing`, :attr:`guide_length`).
    Keeping them unresolved lets ``dataclasses.replace`` re-derive them when
    a sweep changes ``D_x``, ``M`` or ``f``.
    """

    D_x: float = 50.0
    D_y: float = 6.0
    M: int = 5
    N: int = 6
    K: int = 4
    a: float = 5.0
    d: float | None = None
    f: float = 28e9
    n_eff: float = 1.4
    kappa: float = 0.1
    sigma2: float = dbm_to_watt(-90.0)
    P_d: float = dbm_to_watt(0.0)
    P_u: float = dbm_to_watt(0.0)
    Delta: float | None = None
    L_m: float | None = None
    N_s: int = 10_000
    seed: int = 0
    max_sweeps: int = 50
    rel_tol: float = 1e-3

    def __post_init__(self):
        for name in ("D_x", "D_y", "a", "f", "sigma2", "P_d", "P_u"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidConfigError(name, f"must be a finite positive number, got {value!r}")
        for name, low in (("M", 1), ("N", 1), ("K", 1), ("N_s", 2), ("max_sweeps", 1)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < low:
                raise InvalidConfigError(name, f"must be an integer >= {low}, got {value!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        if not self.n_eff >= 1.0:
            raise InvalidConfigError("n_eff", f"must be >= 1, got {self.n_eff!r}")
        if not (self.kappa >= 0.0 and math.isfinite(self.kappa)):
            raise InvalidConfigError("kappa", f"must be finite and >= 0, got {self.kappa!r}")
        if not self.rel_tol >= 0.0:
            raise InvalidConfigError("rel_tol", f"must be >= 0, got {self.rel_tol!r}")
        for name in ("d", "Delta", "L_m"):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise InvalidConfigError(name, f"must be positive when given, got {value!r}")
        # one extra ulp of slack: Delta*(N-1) == L_m is the tight, legal case
        if self.min_spacing * (self.N - 1) > self.guide_length * (1.0 + 1e-12):
            raise InvalidConfigError(
                "Delta",
                f"N={self.N} antennas spaced by {self.min_spacing:g} m do not fit "
                f"on a waveguide of length {self.guide_length:g} m",
            )

    @property
    def wavelength(self):
        return SPEED_OF_LIGHT / self.f

    @property
    def spacing(self):
        """Waveguide spacing along y."""
        if self.d is not None:
            return self.d
        return self.D_y / (self.M - 1) if self.M > 1 else 0.0

    @property
    def min_spacing(self):
        return self.Delta if self.Delta is not None else self.wavelength / 2.0

    @property
    def guide_length(self):
        return self.L_m if self.L_m is not None else self.D_x

    @property
    def feed_point(self):
        """x-coordinate of every waveguide's feed (left edge of the region)."""
        return -self.D_x / 2.0

    @property
    def rho(self):
        """Downlink MMSE regulariser P/(K sigma^2)."""
        return self.P_d / (self.K * self.sigma2)

    def guide_y(self):
        """Centred y-coordinates of the M waveguides."""
        d = self.spacing
        return [m * d - (self.M - 1) * d / 2.0 for m in range(self.M)]

    def replace(self, **changes):
        return replace(self, **changes)

    def resolved(self):
        """Plain dict with every derived default expanded (for provenance)."""
        out = asdict(self)
        out["d"] = self.spacing
        out["Delta"] = self.min_spacing
        out["L_m"] = self.guide_length
        out["sigma2_dbm"] = watt_to_dbm(self.sigma2)
        out["P_d_dbm"] = watt_to_dbm(self.P_d)
        out["P_u_dbm"] = watt_to_dbm(self.P_u)
        return out


SCENARIO_FIELDS = tuple(f.name for f in fields(ScenarioConfig))
DBM_FIELDS = {"sigma2_dbm": "sigma2", "P_d_dbm": "P_d", "P_u_dbm": "P_u"}


def scenario_from_mapping(values):
    """Build a :class:`ScenarioConfig` from field-name keys.

    Powers may be given in watts (``sigma2``, ``P_d``, ``P_u``) or in dBm
    (``sigma2_dbm``, ...), but not both.
    """
    kwargs = {}
    for key, value in values.items():
        if key in DBM_FIELDS:
            target = DBM_FIELDS[key]
            if target in values:
                raise InvalidConfigError(key, f"conflicts with {target!r}; give one of them")
            try:
                kwargs[target] = dbm_to_watt(float(value))
            except (TypeError, ValueError):
                raise InvalidConfigError(key, f"not a number: {value!r}") from None
        elif key in SCENARIO_FIELDS:
            kwargs[key] = _coerce(key, value)
        else:
            raise InvalidConfigError(key, "unknown scenario field")
    return ScenarioConfig(**kwargs)


_INT_FIELDS = {"M", "N", "K", "N_s", "seed", "max_sweeps"}


def _coerce(key, value):
    if value is None:
        return None
    if key in _INT_FIELDS:
        if isinstance(value, str):
            # YAML 1.1 reads "1e4" as a string
            try:
                value = float(value)
            except ValueError:
                raise InvalidConfigError(key, f"must be an integer, got {value!r}") from None
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        raise InvalidConfigError(key, f"must be an integer, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InvalidConfigError(key, f"not a number: {value!r}") from None
