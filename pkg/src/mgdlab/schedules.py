"""Per-epoch learning-rate schedules and their summability diagnostics.

Kinds:
  constant             alpha_t = c
  polynomial           alpha_t = c * t**(-gamma), gamma > 0
  exponential          alpha_t = c * gamma**(t/b), 0 < gamma < 1 (decaying)
  stagewise            alpha_t piecewise constant on stages of length b,
                       stage(t) = ceil(t/b); rule "reciprocal" uses
                       c / stage(t), rule "geometric" uses c * gamma**stage(t)

The convergence predicate classifies the three diminishing-rate conditions
(sum alpha_t diverges, sum alpha_t^2 converges, alpha_1 below the curvature
ceiling) analytically per kind.
"""

import math
from dataclasses import dataclass

KINDS = ("constant", "polynomial", "exponential", "stagewise")
STAGE_RULES = ("reciprocal", "geometric")


@dataclass(frozen=True)
class Schedule:
    kind: str
    c_alpha: float
    gamma: float = 0.0
    b: int = 1
    stage_rule: str = "reciprocal"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not self.c_alpha > 0:
            raise ValueError("c_alpha must be positive")
        if self.kind == "polynomial" and not self.gamma > 0:
            raise ValueError("polynomial decay needs gamma > 0")
        if self.kind == "exponential" and not 0.0 < self.gamma < 1.0:
            raise ValueError("exponential decay needs 0 < gamma < 1")
        if self.kind in ("exponential", "stagewise") and self.b < 1:
            raise ValueError("decay step b must be >= 1")
        if self.kind == "stagewise":
            if self.stage_rule not in STAGE_RULES:
                raise ValueError(f"unknown stage rule {self.stage_rule!r}")
            if self.stage_rule == "geometric" and not 0.0 < self.gamma < 1.0:
                raise ValueError("geometric stagewise decay needs 0 < gamma < 1")


def constant(c: float) -> Schedule:
    return Schedule(kind="constant", c_alpha=c)


def polynomial(c: float, gamma: float) -> Schedule:
    return Schedule(kind="polynomial", c_alpha=c, gamma=gamma)


def rate_at(s: Schedule, t: int) -> float:
    """Learning rate for epoch t (1-based)."""
    if t < 1:
        raise ValueError("epoch index starts at 1")
    if s.kind == "constant":
        return s.c_alpha
    if s.kind == "polynomial":
        return s.c_alpha * t ** (-s.gamma)
    if s.kind == "exponential":
        return s.c_alpha * s.gamma ** (t / s.b)
    stage = math.ceil(t / s.b)
    if s.stage_rule == "reciprocal":
        return s.c_alpha / stage
    return s.c_alpha * s.gamma**stage


def rates(s: Schedule, T: int):
    return [rate_at(s, t) for t in range(1, T + 1)]


@dataclass(frozen=True)
class ConditionVerdict:
    verdict: str  # yes | no | boundary
    reason: str


_REL_EQ = 1e-9


def satisfies_convergence_conditions(s: Schedule, lambda_max: float) -> ConditionVerdict:
    """Classify whether the schedule meets the three diminishing-rate
    conditions given the curvature ceiling lambda_max.

    ``boundary`` is returned when the summability conditions hold but
    alpha_1 equals 1/lambda_max to relative tolerance 1e-9.
    """
    if not lambda_max > 0:
        raise ValueError("lambda_max must be positive")

    if s.kind == "constant":
        return ConditionVerdict("no", "sum of squared rates diverges (constant rate)")
    if s.kind == "exponential":
        return ConditionVerdict("no", "sum of rates is finite (exponential decay)")
    if s.kind == "stagewise" and s.stage_rule == "geometric":
        return ConditionVerdict("no", "sum of rates is finite (geometric stage decay)")
    if s.kind == "polynomial":
        if s.gamma > 1.0:
            return ConditionVerdict("no", "sum of rates is finite (gamma > 1)")
        if s.gamma <= 0.5:
            return ConditionVerdict("no", "sum of squared rates diverges (gamma <= 1/2)")
    # polynomial with 0.5 < gamma <= 1, or reciprocal stagewise: summability holds
    alpha1 = rate_at(s, 1)
    ceiling = 1.0 / lambda_max
    if abs(alpha1 - ceiling) <= _REL_EQ * ceiling:
        return ConditionVerdict("boundary", "alpha_1 equals 1/lambda_max to tolerance")
    if alpha1 >= ceiling:
        return ConditionVerdict("no", "alpha_1 is not below 1/lambda_max")
    return ConditionVerdict("yes", "diverging rate sum, finite squared sum, alpha_1 below ceiling")


def parse_schedule(text: str) -> Schedule:
    """Parse CLI schedule strings.

    Examples: "const:c=0.1", "poly:c=0.2,gamma=0.6",
    "exp:c=0.2,gamma=0.5,b=10", "stage:c=0.2,b=10,rule=reciprocal",
    "stage:c=0.2,gamma=0.5,b=10,rule=geometric".
    """
    head, _, body = text.partition(":")
    head = head.strip().lower()
    alias = {"const": "constant", "constant": "constant", "poly": "polynomial",
             "polynomial": "polynomial", "exp": "exponential",
             "exponential": "exponential", "stage": "stagewise",
             "stagewise": "stagewise"}
    if head not in alias:
        raise ValueError(f"unknown schedule kind {head!r}")
    kind = alias[head]
    kv = {}
    if body.strip():
        for item in body.split(","):
            key, _, val = item.partition("=")
            if not _:
                raise ValueError(f"malformed schedule parameter {item!r}")
            kv[key.strip().lower()] = val.strip()
    try:
        args = {"kind": kind, "c_alpha": float(kv.pop("c", kv.pop("c_alpha", "nan")))}
        if "gamma" in kv:
            args["gamma"] = float(kv.pop("gamma"))
        if "b" in kv:
            args["b"] = int(kv.pop("b"))
        if "rule" in kv:
            args["stage_rule"] = kv.pop("rule")
    except ValueError as exc:
        raise ValueError(f"malformed schedule string {text!r}") from exc
    if kv:
        raise ValueError(f"unknown schedule parameters {sorted(kv)}")
    if math.isnan(args["c_alpha"]):
        raise ValueError("schedule needs c=<rate>")
    return Schedule(**args)


def format_schedule(s: Schedule) -> str:
    if s.kind == "constant":
        return f"const:c={s.c_alpha:g}"
    if s.kind == "polynomial":
        return f"poly:c={s.c_alpha:g},gamma={s.gamma:g}"
    if s.kind == "exponential":
        return f"exp:c={s.c_alpha:g},gamma={s.gamma:g},b={s.b}"
    if s.stage_rule == "reciprocal":
        return f"stage:c={s.c_alpha:g},b={s.b},rule=reciprocal"
    return f"stage:c={s.c_alpha:g},gamma={s.gamma:g},b={s.b},rule=geometric"
