"""Executable learning theory: error estimators, the cooperation bound, and
its proof devices.

Everything here works on labeled samples of (x, object label, cooperation
label) triples. The central result being exercised: for a finite object
hypothesis pool O and a cooperation class C containing the symmetric
difference class of O, the empirical-risk-minimizing cooperation classifier
satisfies, on every sample and for every ordered pair (o, o'),

    cer(erm(C, s)) <= p_hat + oer(o) - gap(o')

deterministically, with a VC confidence term added for generalization. The
empirical core of that inequality is checked in exact rational arithmetic so
a verdict is never an artifact of float rounding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    PreconditionError,
    UndefinedConditionalError,
)
from .game import CoopLabel


@dataclass(frozen=True)
class LabeledSample:
    """A sequence of (x, object label, cooperation label) triples."""

    xs: tuple
    ys: tuple
    zs: tuple

    def __post_init__(self) -> None:
        if not (len(self.xs) == len(self.ys) == len(self.zs)):
            raise ConfigError("xs, ys, zs must have equal length")
        if len(self.xs) < 1:
            raise ConfigError("a sample needs at least one item")
        if any(not isinstance(z, CoopLabel) for z in self.zs):
            raise ConfigError("zs must be CoopLabel values")

    @property
    def m(self) -> int:
        return len(self.xs)

    def restrict(self, which: CoopLabel) -> "LabeledSample":
        idx = [i for i, z in enumerate(self.zs) if z is which]
        if not idx:
            raise UndefinedConditionalError(f"no items with label {which.value}")
        return LabeledSample(
            xs=tuple(self.xs[i] for i in idx),
            ys=tuple(self.ys[i] for i in idx),
            zs=tuple(self.zs[i] for i in idx),
        )


Hypothesis = Callable[[object], object]


def p_hat(sample: LabeledSample) -> float:
    """Fraction of non-cooperative items: the unbiased estimate of the
    non-cooperation probability."""
    return sum(1 for z in sample.zs if z is CoopLabel.NC) / sample.m


def oer(sample: LabeledSample, o: Hypothesis) -> float:
    """Empirical object-identification error of hypothesis ``o``."""
    return sum(1 for x, y in zip(sample.xs, sample.ys) if o(x) != y) / sample.m


def cer(sample: LabeledSample, c: Hypothesis) -> float:
    """Empirical cooperation-identification error of hypothesis ``c``."""
    return sum(1 for x, z in zip(sample.xs, sample.zs) if c(x) != z) / sample.m


def oer_conditional(sample: LabeledSample, o: Hypothesis, which: CoopLabel) -> float:
    """Object error restricted to the subsample with the given cooperation
    label; raises on an empty subset rather than inventing a zero."""
    return oer(sample.restrict(which), o)


def coop_gap(sample: LabeledSample, o: Hypothesis) -> float:
    """p_hat * oer(o | NC) - (1 - p_hat) * oer(o | CP); negative whenever the
    hypothesis does better against deception than against cooperation."""
    p = p_hat(sample)
    return p * oer_conditional(sample, o, CoopLabel.NC) - (1.0 - p) * oer_conditional(
        sample, o, CoopLabel.CP
    )


def vc_confidence_term(d: int, m: int, delta: float) -> float:
    """The confidence term (4 + sqrt(d ln(2em/d))) / (delta sqrt(2m)).

    Natural log throughout; strictly vanishes as m grows for fixed d and
    delta.
    """
    if d < 1:
        raise ConfigError(f"d must be >= 1, got {d}")
    if m < d:
        raise ConfigError(f"m must be >= d, got m={m}, d={d}")
    if not 0.0 < delta <= 1.0:
        raise ConfigError(f"delta must be in (0, 1], got {delta}")
    return (4.0 + math.sqrt(d * math.log(2.0 * math.e * m / d))) / (delta * math.sqrt(2.0 * m))


# --- finite hypothesis classes ------------------------------------------------


@dataclass(frozen=True)
class FiniteHypothesisClass:
    """A finite class given extensionally: each hypothesis is its full output
    table over an explicit finite domain."""

    domain: tuple
    tables: tuple[tuple, ...]
    output_space: str  # "Y" (objects) or "Z" (cooperation)

    def __post_init__(self) -> None:
        if self.output_space not in ("Y", "Z"):
            raise ConfigError(f"output_space must be 'Y' or 'Z', got {self.output_space!r}")
        if not self.tables:
            raise ConfigError("hypothesis class must be nonempty")
        for t in self.tables:
            if len(t) != len(self.domain):
                raise ConfigError("every hypothesis must be total on the domain")
        if len(set(self.tables)) != len(self.tables):
            raise ConfigError("duplicate hypotheses in class")

    def __len__(self) -> int:
        return len(self.tables)

    def point_index(self, x) -> int:
        try:
            return self.domain.index(x)
        except ValueError:
            raise DomainError(f"point {x!r} not in hypothesis-class domain") from None

    def predict(self, hypothesis_index: int, x) -> object:
        return self.tables[hypothesis_index][self.point_index(x)]

    def hypothesis(self, index: int) -> "IndexedHypothesis":
        return IndexedHypothesis(owner=self, index=index)


@dataclass(frozen=True)
class IndexedHypothesis:
    owner: FiniteHypothesisClass
    index: int

    def __call__(self, x) -> object:
        return self.owner.predict(self.index, x)

    @property
    def table(self) -> tuple:
        return self.owner.tables[self.index]


def sym_diff_class(O: FiniteHypothesisClass) -> FiniteHypothesisClass:
    """Disagreement detectors of O: for every ordered pair (o, o'), the
    Z-valued hypothesis that says NC exactly where o(x) != o'(x). Duplicates
    are removed; the constant-CP hypothesis (o paired with itself) is always
    present."""
    seen: list[tuple] = []
    for t1, t2 in product(O.tables, repeat=2):
        table = tuple(
            CoopLabel.NC if a != b else CoopLabel.CP for a, b in zip(t1, t2)
        )
        if table not in seen:
            seen.append(table)
    return FiniteHypothesisClass(domain=O.domain, tables=tuple(seen), output_space="Z")


def erm(
    C: FiniteHypothesisClass, sample: LabeledSample, debug: bool = False
) -> IndexedHypothesis:
    """Hypothesis with minimal empirical error; ties break to the lowest
    enumeration index. Uses cooperation labels for Z-valued classes and
    object labels otherwise.

    ``debug`` re-verifies minimality against every hypothesis in the class
    after selection.
    """
    labels = sample.zs if C.output_space == "Z" else sample.ys
    point_idx = [C.point_index(x) for x in sample.xs]
    best_index, best_errors = 0, None
    for h, table in enumerate(C.tables):
        errors = sum(1 for i, lab in zip(point_idx, labels) if table[i] != lab)
        if best_errors is None or errors < best_errors:
            best_index, best_errors = h, errors
    if debug:
        for table in C.tables:
            others = sum(1 for i, lab in zip(point_idx, labels) if table[i] != lab)
            assert best_errors <= others, "erm selected a beatable hypothesis"
    return C.hypothesis(best_index)


def vc_dimension_exact(C: FiniteHypothesisClass, max_check: int = 16) -> int:
    """VC dimension by exhaustive shattering search; only feasible on small
    explicit domains. Refuses domains larger than ``max_check`` (use the
    floor(log2 |C|) upper bound instead)."""
    if C.output_space != "Z":
        raise ConfigError("VC dimension is computed for binary (Z-valued) classes")
    n = len(C.domain)
    if n > max_check:
        raise InfeasibleError(f"domain of size {n} exceeds the max_check bound {max_check}")
    cap = min(n, int(math.floor(math.log2(len(C.tables)))) if len(C.tables) > 1 else 0)
    best = 0
    for k in range(1, cap + 1):
        shattered = False
        for subset in combinations(range(n), k):
            patterns = {tuple(t[i] for i in subset) for t in C.tables}
            if len(patterns) == 2**k:
                shattered = True
                break
        if not shattered:
            break
        best = k
    return best


# --- the main empirical bound ---------------------------------------------------


@dataclass(frozen=True)
class BoundReport:
    """All scalars of the cooperation bound for one (o, o') pair on one
    sample, plus the verdict on the C-free empirical inequality."""

    p_hat: float
    oer_o: float
    oer_o_nc: float
    oer_o_cp: float
    delta_oprime: float
    cer_chat: float
    C_term: float
    d: int
    delta_confidence: float
    m: int
    rhs: float
    empirical_rhs: float
    holds_empirical: bool

    def to_json(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "oer_o": self.oer_o,
            "oer_o_nc": self.oer_o_nc,
            "oer_o_cp": self.oer_o_cp,
            "delta_oprime": self.delta_oprime,
            "cer_chat": self.cer_chat,
            "C_term": self.C_term,
            "d": self.d,
            "delta_confidence": self.delta_confidence,
            "m": self.m,
            "rhs": self.rhs,
            "empirical_rhs": self.empirical_rhs,
            "holds_empirical": self.holds_empirical,
        }


def _frac_errors(table: tuple, point_idx: list[int], labels: Sequence) -> int:
    return sum(1 for i, lab in zip(point_idx, labels) if table[i] != lab)


def cooperation_bound_check(
    O: FiniteHypothesisClass,
    C: FiniteHypothesisClass,
    sample: LabeledSample,
    delta: float,
    max_vc_check: int = 16,
) -> list[BoundReport]:
    """Verify the deterministic core of the cooperation bound on one sample.

    For the ERM cooperation classifier over C and every ordered pair
    (o, o') from O, checks cer(c_hat) <= p_hat + oer(o) - gap(o') in exact
    rational arithmetic. The returned reports also carry the VC confidence
    term, which only matters for generalization, not for this inequality.
    """
    if O.domain != C.domain:
        raise PreconditionError("O and C must share a domain")
    symdiff_tables = set(sym_diff_class(O).tables)
    if not symdiff_tables.issubset(set(C.tables)):
        raise PreconditionError("C must contain the symmetric difference class of O")

    try:
        d = vc_dimension_exact(C, max_check=max_vc_check)
    except InfeasibleError:
        d = int(math.floor(math.log2(len(C.tables)))) if len(C.tables) > 1 else 0
    d_for_C = max(d, 1)
    C_term = vc_confidence_term(d_for_C, sample.m, delta) if sample.m >= d_for_C else float("inf")

    m = sample.m
    point_idx = [C.point_index(x) for x in sample.xs]
    nc_idx = [k for k, z in enumerate(sample.zs) if z is CoopLabel.NC]
    cp_idx = [k for k, z in enumerate(sample.zs) if z is CoopLabel.CP]
    if not nc_idx or not cp_idx:
        raise UndefinedConditionalError("sample must contain both CP and NC items")

    chat = erm(C, sample)
    cer_exact = Fraction(_frac_errors(chat.table, point_idx, sample.zs), m)
    p_exact = Fraction(len(nc_idx), m)

    reports = []
    for t_o in O.tables:
        wrong = [t_o[point_idx[k]] != sample.ys[k] for k in range(m)]
        oer_exact = Fraction(sum(wrong), m)
        oer_nc = Fraction(sum(wrong[k] for k in nc_idx), len(nc_idx))
        oer_cp = Fraction(sum(wrong[k] for k in cp_idx), len(cp_idx))
        for t_op in O.tables:
            wrong_p = [t_op[point_idx[k]] != sample.ys[k] for k in range(m)]
            op_nc = Fraction(sum(wrong_p[k] for k in nc_idx), len(nc_idx))
            op_cp = Fraction(sum(wrong_p[k] for k in cp_idx), len(cp_idx))
            gap = p_exact * op_nc - (1 - p_exact) * op_cp
            empirical_rhs = p_exact + oer_exact - gap
            reports.append(
                BoundReport(
                    p_hat=float(p_exact),
                    oer_o=float(oer_exact),
                    oer_o_nc=float(oer_nc),
                    oer_o_cp=float(oer_cp),
                    delta_oprime=float(gap),
                    cer_chat=float(cer_exact),
                    C_term=C_term,
                    d=d,
                    delta_confidence=delta,
                    m=m,
                    rhs=float(empirical_rhs) + C_term,
                    empirical_rhs=float(empirical_rhs),
                    holds_empirical=cer_exact <= empirical_rhs,
                )
            )
    return reports


def triangle_inequality_check(
    o: Hypothesis, o_prime: Hypothesis, points: Sequence[tuple]
) -> bool:
    """Pointwise triangle inequality for classification error:
    |err(o') - err(o)| <= disagreement(o, o') <= err(o) + err(o')."""
    for x, y in points:
        a, b = o(x), o_prime(x)
        err_o = int(a != y)
        err_op = int(b != y)
        dis = int(a != b)
        if not (err_op - err_o <= dis <= err_o + err_op):
            return False
    return True


def triangle_inequality_exhaustive(n_labels: int = 3) -> bool:
    """Check the triangle inequality over every (o(x), o'(x), y) triple of an
    n-label space."""
    labels = list(range(n_labels))
    for a, b, y in product(labels, repeat=3):
        err_o = int(a != y)
        err_op = int(b != y)
        dis = int(a != b)
        if not (err_op - err_o <= dis <= err_o + err_op):
            return False
    return True


def alpha_improvement(j_star_hat: float, j_hat: float) -> float:
    """Empirical improvement of one policy's mean object reward over
    another's; the caller interprets the sign."""
    return j_star_hat - j_hat


# --- concentration checks -------------------------------------------------------


@dataclass(frozen=True)
class ImprovementConcentrationReport:
    violation_freq: float
    bound: float
    mc_stderr: float
    trials: int
    alpha: float
    epsilon: float
    m: int

    @property
    def within_bound(self) -> bool:
        return self.violation_freq <= self.bound + 3.0 * self.mc_stderr


def improvement_concentration_check(
    alpha: float,
    epsilon: float,
    m: int,
    trials: int,
    rng: np.random.Generator,
    generator: Callable[[int, np.random.Generator], tuple[np.ndarray, np.ndarray]] | None = None,
) -> ImprovementConcentrationReport:
    """Monte-Carlo check of the improvement-concentration lemma.

    The statistic U is the mean of per-index reward differences between the
    baseline sample and the improved sample; with a true mean gap of at least
    ``alpha``, Pr(U >= -epsilon) <= exp(-m (alpha - epsilon)^2 / 2) because
    each difference lies in [-1, 1].
    """
    if alpha <= epsilon:
        raise PreconditionError(f"alpha ({alpha}) must exceed epsilon ({epsilon})")
    if generator is None:
        # Bernoulli rewards with a mean gap of exactly alpha; vectorized in
        # chunks so 1e5 trials stay fast.
        mu_s, mu_t = 0.5, 0.5 + alpha
        if mu_t > 1.0:
            raise ConfigError("default generator needs alpha <= 0.5")
        chunk = max(1, int(2e7 // max(m, 1)))
        violations = 0
        done = 0
        while done < trials:
            size = min(chunk, trials - done)
            u = (
                (rng.random((size, m)) < mu_s).mean(axis=1)
                - (rng.random((size, m)) < mu_t).mean(axis=1)
            )
            violations += int(np.count_nonzero(u >= -epsilon))
            done += size
    else:
        violations = 0
        for _ in range(trials):
            rewards_s, rewards_t = generator(m, rng)
            u = float(np.mean(rewards_s - rewards_t))
            if u >= -epsilon:
                violations += 1
    freq = violations / trials
    bound = math.exp(-m * (alpha - epsilon) ** 2 / 2.0)
    stderr = math.sqrt(max(freq * (1 - freq), 1.0 / trials) / trials)
    return ImprovementConcentrationReport(
        violation_freq=freq,
        bound=bound,
        mc_stderr=stderr,
        trials=trials,
        alpha=alpha,
        epsilon=epsilon,
        m=m,
    )


@dataclass(frozen=True)
class ConcentrationReport:
    violation_freq: float
    C: float
    bound: float
    mc_stderr: float
    trials: int
    m: int
    p_nc: float

    @property
    def within_bound(self) -> bool:
        return self.violation_freq <= self.bound + 3.0 * self.mc_stderr


def phat_concentration_check(
    p_nc: float,
    m: int,
    delta: float,
    trials: int,
    rng: np.random.Generator,
) -> ConcentrationReport:
    """Check that |p_hat - p_nc| >= C happens with frequency at most delta/3,
    where C = sqrt((ln 6 - ln delta) / (2m))."""
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must be in (0, 1), got {delta}")
    if not 0.0 < p_nc < 1.0:
        raise ConfigError(f"p_nc must be in (0, 1), got {p_nc}")
    C = math.sqrt((math.log(6.0) - math.log(delta)) / (2.0 * m))
    chunk = max(1, int(2e7 // max(m, 1)))
    violations = 0
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        draws = rng.random((size, m)) < p_nc
        phats = draws.mean(axis=1)
        violations += int(np.count_nonzero(np.abs(phats - p_nc) >= C))
        done += size
    freq = violations / trials
    stderr = math.sqrt(max(freq * (1 - freq), 1.0 / trials) / trials)
    return ConcentrationReport(
        violation_freq=freq,
        C=C,
        bound=delta / 3.0,
        mc_stderr=stderr,
        trials=trials,
        m=m,
        p_nc=p_nc,
    )


# --- the policy-improvement inequality -------------------------------------------


@dataclass(frozen=True)
class PolicyImprovementReport:
    lhs: float
    rhs: float
    slack: float
    C: float
    epsilon: float
    alpha_hat: float
    assumption_ok: bool
    holds: bool
    margin: float

    def to_json(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "C": self.C,
            "epsilon": self.epsilon,
            "alpha_hat": self.alpha_hat,
            "assumption_ok": self.assumption_ok,
            "holds": self.holds,
            "margin": self.margin,
        }


def policy_improvement_check(
    sample_s: LabeledSample,
    sample_t: LabeledSample,
    o: Hypothesis,
    o_prime: Hypothesis,
    delta: float,
    epsilon: float = 0.0,
) -> PolicyImprovementReport:
    """Compare the bound's three-term left side under an improved policy (T)
    against the baseline policy (S), with explicit slack 4C + epsilon where
    C = sqrt((ln 6 - ln delta) / (2m)).

    When T's object error is not actually better than S's by more than
    epsilon, the report flags the improvement assumption as failed instead of
    blaming the inequality.
    """
    if not 0.0 < delta < 1.0:
        raise ConfigError(f"delta must be in (0, 1), got {delta}")
    if sample_s.m != sample_t.m:
        raise ConfigError("samples must have equal size")
    m = sample_s.m
    C = math.sqrt((math.log(6.0) - math.log(delta)) / (2.0 * m))
    slack = 4.0 * C + epsilon
    lhs = p_hat(sample_t) + oer(sample_t, o) - coop_gap(sample_t, o_prime)
    rhs_core = p_hat(sample_s) + oer(sample_s, o) - coop_gap(sample_s, o_prime)
    rhs = rhs_core + slack
    alpha_hat = oer(sample_s, o) - oer(sample_t, o)
    return PolicyImprovementReport(
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        C=C,
        epsilon=epsilon,
        alpha_hat=alpha_hat,
        assumption_ok=alpha_hat > epsilon,
        holds=lhs <= rhs + 1e-12,
        margin=rhs - lhs,
    )


# --- random instances and batteries ----------------------------------------------


def random_bound_instance(
    rng: np.random.Generator,
    max_domain: int = 8,
    max_hypotheses: int = 6,
    max_m: int = 64,
    n_labels: int = 3,
    superset_prob: float = 0.3,
) -> tuple[FiniteHypothesisClass, FiniteHypothesisClass, LabeledSample]:
    """One random (O, C, sample) instance with both labels present; C is the
    symmetric difference class of O, occasionally padded into a strict
    superset."""
    n_points = int(rng.integers(2, max_domain + 1))
    domain = tuple(range(n_points))
    n_hyp = int(rng.integers(1, max_hypotheses + 1))
    tables: list[tuple] = []
    while len(tables) < n_hyp:
        t = tuple(int(v) for v in rng.integers(0, n_labels, size=n_points))
        if t not in tables:
            tables.append(t)
        elif len(tables) >= n_labels**n_points:
            break
    O = FiniteHypothesisClass(domain=domain, tables=tuple(tables), output_space="Y")
    C = sym_diff_class(O)
    if rng.random() < superset_prob:
        extra = list(C.tables)
        for _ in range(3):
            t = tuple(
                CoopLabel.NC if v else CoopLabel.CP
                for v in rng.integers(0, 2, size=n_points)
            )
            if t not in extra:
                extra.append(t)
        C = FiniteHypothesisClass(domain=domain, tables=tuple(extra), output_space="Z")
    m = int(rng.integers(2, max_m + 1))
    xs = tuple(int(v) for v in rng.integers(0, n_points, size=m))
    ys = tuple(int(v) for v in rng.integers(0, n_labels, size=m))
    zs = [CoopLabel.NC if v else CoopLabel.CP for v in rng.integers(0, 2, size=m)]
    zs[0] = CoopLabel.CP
    zs[m - 1] = CoopLabel.NC
    sample = LabeledSample(xs=xs, ys=ys, zs=tuple(zs))
    return O, C, sample


@dataclass
class BatteryResult:
    instances: int
    violations: int
    rows: list[dict] = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return self.violations == 0


def run_bound_battery(
    n_instances: int,
    rng: np.random.Generator,
    delta: float = 0.1,
    **instance_kwargs,
) -> BatteryResult:
    """Run the empirical bound check over many random instances; one summary
    row per instance records the worst (smallest-margin) pair."""
    result = BatteryResult(instances=n_instances, violations=0)
    for i in range(n_instances):
        O, C, sample = random_bound_instance(rng, **instance_kwargs)
        reports = cooperation_bound_check(O, C, sample, delta)
        worst = min(reports, key=lambda r: r.empirical_rhs - r.cer_chat)
        violated = any(not r.holds_empirical for r in reports)
        if violated:
            result.violations += 1
        result.rows.append(
            {
                "instance": i,
                "m": sample.m,
                "p_hat": worst.p_hat,
                "lhs": worst.cer_chat,
                "rhs": worst.empirical_rhs,
                "margin": worst.empirical_rhs - worst.cer_chat,
                "holds": not violated,
            }
        )
    return result


def write_battery_csv(result: BatteryResult, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["instance", "m", "p_hat", "lhs", "rhs", "margin", "holds"]
        )
        writer.writeheader()
        for row in result.rows:
            writer.writerow(row)


# --- effectiveness of an answer-player --------------------------------------------


@dataclass(frozen=True)
class EffectivenessReport:
    """Finite-sample evidence about an answer-player's policy-invariance: the
    largest cross-policy deviation of object error on NC-only games. This is
    evidence, not proof; the defining property is a limit statement."""

    epsilon_hat: float
    pair_deviations: tuple[tuple[int, int, float], ...]
    m: int
    trials: int

    def __post_init__(self) -> None:
        if self.epsilon_hat < 0:
            raise ConfigError("epsilon_hat must be nonnegative")

    def to_json(self) -> dict:
        return {
            "epsilon_hat": self.epsilon_hat,
            "pair_deviations": [list(p) for p in self.pair_deviations],
            "m": self.m,
            "trials": self.trials,
        }


def effectiveness_estimate(
    answerer,
    policies: Sequence,
    o,
    m: int,
    trials: int,
    rng: np.random.Generator,
    scene_config=None,
) -> EffectivenessReport:
    """Estimate the policy-stability of one non-cooperative answer-player.

    Rolls ``m`` NC-only episodes per policy per trial (common random numbers
    across policies, so identical policies measure a deviation of exactly
    zero) and reports the trial-averaged maximum pairwise deviation of the
    object error.
    """
    from .answerers import bind_episode
    from .game import generate_scene
    from .training import rollout_episode

    if len(policies) < 2:
        raise ConfigError("need at least two policies to compare")
    if m < 30:
        raise ConfigError("m must be >= 30 for a meaningful estimate")
    base_seed = int(rng.integers(2**32))
    n_pol = len(policies)
    pair_sums: dict[tuple[int, int], float] = {
        (i, j): 0.0 for i, j in combinations(range(n_pol), 2)
    }
    eps_sum = 0.0
    for t in range(trials):
        errors = []
        for agent in policies:
            worker = agent.with_params(guesser=o) if o is not None else agent
            g = np.random.default_rng(np.random.SeedSequence([base_seed, t]))
            wrong = 0
            for k in range(m):
                scene = generate_scene(
                    scene_config or agent.config.scene, g
                )
                bound = bind_episode(answerer, scene, g)
                record, _ = rollout_episode(worker, bound, scene, g, seed=k)
                wrong += int(record.object_guess != scene.goal)
            errors.append(wrong / m)
        trial_max = 0.0
        for i, j in pair_sums:
            dev = abs(errors[i] - errors[j])
            pair_sums[(i, j)] += dev
            trial_max = max(trial_max, dev)
        eps_sum += trial_max
    return EffectivenessReport(
        epsilon_hat=eps_sum / trials,
        pair_deviations=tuple(
            (i, j, s / trials) for (i, j), s in sorted(pair_sums.items())
        ),
        m=m,
        trials=trials,
    )
