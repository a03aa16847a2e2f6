"""
Synthetic recidivism populations for desk-scale experiments.

A region profile fixes the base rate of each of the twelve labels, an age
risk curve, per-feature effects on the log odds and the group mix. Risk is

    logit P(general_two_year) = b0 + amplitude * bump(age; peak, width)
                                + sum_f effect_f * log1p(x_f)

with b0 solved so the sample's mean risk equals the configured base rate.
The other eleven labels are drawn conditionally on the general labels with
exact per-stratum counts, so every label rate tracks its target and six-month
labels always sit inside the matching two-year labels. Sensitive attributes
are drawn independently of risk.

Labels are never written directly: each person gets later charge events and
the labels are built from them, exactly as for loaded data.
"""

import logging
from pathlib import Path
from typing import Dict, List, Literal, Mapping, Optional, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.optimize import brentq
from scipy.special import expit

from src.core.errors import ConfigError
from src.core.labels import SIX_MONTH_DAYS, TWO_YEAR_DAYS, build_labels
from src.core.records import (
    AGE_FEATURE,
    BUILTIN_SCHEMAS,
    LABEL_NAMES,
    LABEL_TYPES,
    MAX_AGE,
    MIN_AGE,
    ChargeEvent,
    Record,
    RecordSet,
    derive_features,
)

logger = logging.getLogger(__name__)

Region = Literal["kentucky", "broward"]

KENTUCKY_RATES = {
    "general_two_year": 0.204,
    "general_six_month": 0.057,
    "violent_two_year": 0.034,
    "violent_six_month": 0.007,
    "drug_two_year": 0.087,
    "drug_six_month": 0.020,
    "property_two_year": 0.039,
    "property_six_month": 0.009,
    "felony_two_year": 0.096,
    "felony_six_month": 0.024,
    "misdemeanor_two_year": 0.156,
    "misdemeanor_six_month": 0.039,
}

BROWARD_RATES = {
    "general_two_year": 0.455,
    "general_six_month": 0.218,
    "violent_two_year": 0.210,
    "violent_six_month": 0.084,
    "drug_two_year": 0.093,
    "drug_six_month": 0.040,
    "property_two_year": 0.090,
    "property_six_month": 0.050,
    "felony_two_year": 0.176,
    "felony_six_month": 0.089,
    "misdemeanor_two_year": 0.272,
    "misdemeanor_six_month": 0.125,
}

_PROFILES: Dict[str, Dict[str, object]] = {
    "kentucky": {
        "base_rates": KENTUCKY_RATES,
        "age_peak": 33.0,
        "age_width": 10.0,
        "age_amplitude": 1.0,
        "count_effects": {
            "p_felony": 0.7,
            "p_fta_two_year": 0.6,
            "p_incarceration": 0.5,
            "p_probation": 0.4,
        },
        "race_mix": {"Caucasian": 0.8, "African-American": 0.175, "Other": 0.025},
        "sex_mix": {"Male": 0.75, "Female": 0.25},
        "history_rate": 2.0,
    },
    "broward": {
        "base_rates": BROWARD_RATES,
        "age_peak": 20.0,
        "age_width": 8.0,
        "age_amplitude": 1.5,
        "count_effects": {
            "p_misdemeanor": 0.8,
            "p_traffic": 0.5,
            "p_juv_fel_count": 0.5,
            "p_felony": -0.3,
        },
        "race_mix": {"African-American": 0.5, "Caucasian": 0.35, "Hispanic": 0.1, "Other": 0.05},
        "sex_mix": {"Male": 0.8, "Female": 0.2},
        "history_rate": 3.0,
    },
}

_MAPPING_FIELDS = ("count_effects", "race_mix", "sex_mix")


class LabelPlan(BaseModel):
    """
    Conditional label probabilities for one charge type.

    Attributes:
        recent: P(type two-year | general six-month)
        late: P(type two-year | general two-year but not six-month)
        six_month: P(type six-month | type two-year and general six-month)
    """

    recent: float
    late: float
    six_month: float


def plan_labels(rates: Mapping[str, float]) -> Dict[str, LabelPlan]:
    """
    Solve the conditional probabilities that reproduce every label rate.

    Raises:
        ValueError: The rates admit no nested assignment
    """
    g2, g6 = rates["general_two_year"], rates["general_six_month"]
    if not 0 < g6 < g2 < 1:
        raise ValueError("need 0 < general_six_month < general_two_year < 1")
    plans = {}
    for kind in LABEL_TYPES[1:]:
        t2, t6 = rates[f"{kind}_two_year"], rates[f"{kind}_six_month"]
        if t2 > g2 or t6 > g6 or t6 > t2:
            raise ValueError(f"{kind} rates must nest inside the general rates")
        recent = min(1.0, max(t2 / g2, t6 / g6))
        late = (t2 - g6 * recent) / (g2 - g6)
        if not 0.0 <= late <= 1.0:
            raise ValueError(f"{kind} rates cannot be reproduced with nested horizons")
        six_month = t6 / (g6 * recent) if recent > 0 else 0.0
        plans[kind] = LabelPlan(recent=recent, late=late, six_month=six_month)
    return plans


class SynthConfig(BaseModel):
    """
    Region profile for the generator.

    Attributes:
        region: Schema the records follow ('kentucky' or 'broward')
        base_rates: Target rate for each of the twelve labels
        age_peak / age_width / age_amplitude: Gaussian bump of risk over age
        count_effects: Feature -> effect on the log odds per log1p(count)
        race_mix / sex_mix: Group proportions, each summing to 1
        history_rate: Mean prior arrests at the youngest ages
        seed: Random seed
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    region: Region = "kentucky"
    base_rates: Dict[str, float] = Field(default_factory=lambda: dict(KENTUCKY_RATES))
    age_peak: float = Field(33.0, ge=MIN_AGE, le=MAX_AGE)
    age_width: float = Field(10.0, gt=0)
    age_amplitude: float = 1.0
    count_effects: Dict[str, float] = Field(
        default_factory=lambda: dict(_PROFILES["kentucky"]["count_effects"])
    )
    race_mix: Dict[str, float] = Field(
        default_factory=lambda: dict(_PROFILES["kentucky"]["race_mix"])
    )
    sex_mix: Dict[str, float] = Field(
        default_factory=lambda: dict(_PROFILES["kentucky"]["sex_mix"])
    )
    history_rate: float = Field(2.0, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def _consistent(self) -> "SynthConfig":
        missing = [name for name in LABEL_NAMES if name not in self.base_rates]
        if missing:
            raise ValueError(f"base rate missing for {missing[0]}")
        unknown = sorted(set(self.base_rates) - set(LABEL_NAMES))
        if unknown:
            raise ValueError(f"unknown label {unknown[0]}")
        for name, rate in self.base_rates.items():
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"base rate {name}={rate} outside [0, 1]")
        for name in ("race_mix", "sex_mix"):
            mix = getattr(self, name)
            if not mix or any(p < 0 for p in mix.values()) or abs(sum(mix.values()) - 1) > 1e-6:
                raise ValueError(f"{name} must be non-negative and sum to 1")
        features = set(BUILTIN_SCHEMAS[self.region].feature_names)
        stray = sorted(set(self.count_effects) - features)
        if stray:
            raise ValueError(f"count effect on unknown {self.region} feature '{stray[0]}'")
        plan_labels(self.base_rates)
        return self

    @classmethod
    def preset(cls, region: str = "kentucky", seed: int = 0) -> "SynthConfig":
        """The built-in profile for a region, with the published base rates."""
        if region not in _PROFILES:
            raise ConfigError(f"unknown region '{region}' (expected one of {', '.join(_PROFILES)})")
        profile = {k: (dict(v) if isinstance(v, dict) else v) for k, v in _PROFILES[region].items()}
        return cls(region=region, seed=seed, **profile)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Optional[str]]) -> "SynthConfig":
        """
        Overlay flat key=value settings on the region preset.

        Label names set single base rates; mapping fields take 'name:value'
        pairs separated by commas.
        """
        values = {k: v for k, v in values.items() if v is not None}
        region = str(values.pop("region", "kentucky"))
        settings = cls.preset(region).model_dump()
        for key, raw in values.items():
            if key in LABEL_NAMES:
                settings["base_rates"][key] = raw
            elif key in _MAPPING_FIELDS:
                settings[key] = _parse_pairs(key, raw)
            elif key in cls.model_fields and key != "base_rates":
                settings[key] = raw
            else:
                raise ConfigError(f"unknown synth config key '{key}'")
        try:
            return cls(**settings)
        except ValidationError as e:
            raise ConfigError(f"invalid synth config: {e.errors()[0]['msg']}")

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "SynthConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"synth config not found: {path}")
        return cls.from_mapping(dotenv_values(path))


def _parse_pairs(key: str, raw: str) -> Dict[str, float]:
    pairs = {}
    for item in str(raw).split(","):
        if not item.strip():
            continue
        name, sep, value = item.rpartition(":")
        if not sep:
            raise ConfigError(f"{key}: expected name:value, got '{item.strip()}'")
        try:
            pairs[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"{key}: '{value}' is not a number")
    return pairs


def _features(config: SynthConfig, n: int, rng: np.random.Generator) -> pd.DataFrame:
    """Criminal-history features driven by a shared latent activity level."""
    h = rng.gamma(2.0, 0.5, n)
    age = np.clip(MIN_AGE + np.floor(rng.gamma(2.0, 8.0, n)), MIN_AGE, MAX_AGE)
    exposure = h * (1.0 + (age - MIN_AGE) / 30.0)
    arrests = rng.poisson(config.history_rate * exposure)
    charges = arrests + rng.poisson(0.6 * exposure)
    felony = rng.binomial(charges, 0.3)
    violence = rng.binomial(charges, 0.2)
    prop = rng.binomial(charges, 0.2)
    fta = rng.poisson(0.3 * h)
    gap_days = rng.exponential(730.0 / np.maximum(h, 0.05), n)
    seen = arrests > 0
    cols = {
        AGE_FEATURE: age,
        "p_arrest": arrests,
        "p_charges": charges,
        "p_violence": violence,
        "p_felony": felony,
        "p_misdemeanor": charges - felony,
        "p_property": prop,
        "p_murder": rng.binomial(violence, 0.02),
        "p_sex_offenses": rng.binomial(violence, 0.05),
        "p_weapon": rng.binomial(charges, 0.05),
        "p_felprop_viol": rng.binomial(felony, 0.1),
        "p_felassault": rng.binomial(violence, 0.3),
        "p_misdeassault": rng.binomial(violence, 0.3),
        "p_traffic": rng.poisson(0.5 * h),
        "p_drug": rng.binomial(charges, 0.25),
        "p_dui": rng.poisson(0.2 * h),
        "p_stalking": rng.binomial(violence, 0.03),
        "p_voyeurism": rng.binomial(charges, 0.005),
        "p_fraud": rng.binomial(charges, 0.05),
        "p_stealing": rng.binomial(prop, 0.6),
        "p_trespass": rng.binomial(charges, 0.05),
        "p_fta_two_year": fta,
        "p_fta_two_year_plus": fta + rng.poisson(0.3 * h),
        "p_pending_charge": rng.poisson(0.2 * h),
        "p_probation": rng.poisson(0.4 * h),
        "p_incarceration": rng.random(n) < 1.0 - np.exp(-0.15 * felony),
        "six_month": seen & (gap_days <= 183),
        "one_year": seen & (gap_days <= 365),
        "three_year": seen & (gap_days <= 1095),
        "five_year": seen & (gap_days <= 1825),
        "current_violence": rng.random(n) < 0.2,
        "current_pending_charge": rng.random(n) < 0.15,
    }
    if config.region == "broward":
        cols["age_at_first_charge"] = np.maximum(age - np.floor(rng.uniform(0, age - 13)), 14)
        cols["p_juv_fel_count"] = rng.poisson(0.1 * h)
        cols["p_famviol"] = rng.binomial(violence, 0.1)
        cols["p_domestic"] = rng.binomial(violence, 0.2)
        cols["total_convictions"] = rng.binomial(charges, 0.5)
    else:
        cols["p_assault"] = cols["p_felassault"] + cols["p_misdeassault"]
        cols["ADE"] = rng.poisson(0.2 * h)
        cols["treatment"] = rng.poisson(0.1 * h)
    return pd.DataFrame({name: np.asarray(v, dtype=float) for name, v in cols.items()})


def risk_scores(config: SynthConfig, frame: pd.DataFrame) -> np.ndarray:
    """Per-person general two-year risk, calibrated to the configured base rate."""
    age = frame[AGE_FEATURE].to_numpy()
    logit = config.age_amplitude * np.exp(-0.5 * ((age - config.age_peak) / config.age_width) ** 2)
    for feature, effect in config.count_effects.items():
        logit = logit + effect * np.log1p(frame[feature].to_numpy())
    target = config.base_rates["general_two_year"]
    offset = brentq(lambda b: expit(logit + b).mean() - target, -50.0, 50.0, xtol=1e-12)
    return expit(logit + offset)


def _pick(rng: np.random.Generator, pool: np.ndarray, fraction: float) -> np.ndarray:
    k = int(round(fraction * len(pool)))
    return rng.choice(pool, size=min(k, len(pool)), replace=False) if k else pool[:0]


def _label_events(
    config: SynthConfig, risk: np.ndarray, rng: np.random.Generator
) -> List[List[ChargeEvent]]:
    n = len(risk)
    rates = config.base_rates
    plans = plan_labels(rates)
    g2 = np.flatnonzero(rng.random(n) < risk)
    g6 = _pick(rng, g2, rates["general_six_month"] / rates["general_two_year"])
    late = np.setdiff1d(g2, g6)

    def day(recent: bool) -> int:
        if recent:
            return int(rng.integers(0, SIX_MONTH_DAYS + 1))
        return int(rng.integers(SIX_MONTH_DAYS + 1, TWO_YEAR_DAYS + 1))

    events: List[List[ChargeEvent]] = [[] for _ in range(n)]
    for i in g6:
        events[i].append(ChargeEvent(offset_days=day(True), convicted=True))
    for i in late:
        events[i].append(ChargeEvent(offset_days=day(False), convicted=True))
    for kind, plan in plans.items():
        recent_type = _pick(rng, g6, plan.recent)
        six = set(_pick(rng, recent_type, plan.six_month).tolist())
        chosen = [(int(i), int(i) in six) for i in recent_type]
        chosen += [(int(i), False) for i in _pick(rng, late, plan.late)]
        for i, is_recent in chosen:
            if kind in ("felony", "misdemeanor"):
                event = ChargeEvent(offset_days=day(is_recent), level=kind, convicted=True)
            else:
                event = ChargeEvent(
                    offset_days=day(is_recent), tags=frozenset({kind}), convicted=True
                )
            events[i].append(event)
    # Charges after the two-year window leave every label unchanged.
    for i in np.flatnonzero(rng.random(n) < 0.3):
        offset = int(rng.integers(TWO_YEAR_DAYS + 1, 3 * 365))
        events[i].append(ChargeEvent(offset_days=offset, convicted=bool(rng.random() < 0.5)))
    for bucket in events:
        bucket.sort(key=lambda e: e.offset_days)
    return events


def _draw(mix: Mapping[str, float], n: int, rng: np.random.Generator) -> np.ndarray:
    names = list(mix)
    return rng.choice(names, size=n, p=np.array([mix[k] for k in names]) / sum(mix.values()))


def synthesize(
    config: SynthConfig = SynthConfig(), n: int = 1000, seed: Optional[int] = None
) -> RecordSet:
    """
    Generate a seeded synthetic population.

    Args:
        config: Region profile
        n: Number of records
        seed: Overrides config.seed

    Returns:
        RecordSet following the region's built-in schema, with labels built
        from generated events

    Raises:
        ConfigError: n is not positive

    Example:
        >>> records = synthesize(SynthConfig.preset("kentucky"), n=5000, seed=1)
        >>> len(records)
        5000
    """
    if n <= 0:
        raise ConfigError(f"n must be positive, got {n}")
    rng = np.random.default_rng(config.seed if seed is None else seed)
    frame = _features(config, n, rng)
    risk = risk_scores(config, frame)
    events = _label_events(config, risk, rng)
    races = _draw(config.race_mix, n, rng)
    sexes = _draw(config.sex_mix, n, rng)

    records = []
    for i, values in enumerate(frame.to_dict("records")):
        records.append(
            Record(
                person_id=f"{config.region[:2]}{i:06d}",
                sensitive={"sex": str(sexes[i]), "race": str(races[i])},
                features=derive_features(values),
                events=events[i],
                labels=build_labels(events[i]),
            )
        )
    logger.info("synthesized %d %s records", n, config.region)
    return RecordSet(records, BUILTIN_SCHEMAS[config.region])
