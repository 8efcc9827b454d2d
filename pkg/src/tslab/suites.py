"""Named verification suites.  Each one returns a VerificationReport."""

from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from tslab.construction import (
    IndexStream,
    LayeredFamily,
    buildable,
    check_pure_form_bounds,
    coordinate_map,
    ell1_of,
    modified_lower_bound,
    random_l1pq_instance,
    repeated_average,
    check_repeated_average,
    toy_families,
    verify_lskipped,
    verify_l1pq,
)
from tslab.core import SparseVector
from tslab.norms import (
    brute_force_norm,
    norm_admissible,
    norm_allowable,
    prop5_report,
)
from tslab.report import NOT_APPLICABLE, VerificationReport
from tslab.schreier import Mode
from tslab.theta import (
    ParamSet,
    ThetaSpec,
    NotFound,
    big_theta,
    big_theta_bruteforce,
    check_ABC,
    check_ddag,
    check_regular,
    default_fform,
    delta_m,
    find_parameters,
    minimal_k,
    theta_ratio_table,
)
from tslab.trees import (
    ceil_to_multiple,
    flatten_to_s1,
    lift_s1_to_sN,
    random_antichain,
    random_tree,
    retarget_to_sN,
    validate_tree,
    verify_disjoint_family,
)


@dataclass
class SuiteConfig:
    spec: ThetaSpec = field(default_factory=lambda: ThetaSpec.geometric(Fraction(1, 2)))
    N: int = 2
    samples: int = 100
    seed: int = 0
    horizon: int = 60
    exact_cap: Optional[int] = None
    R_max: int = 8


def random_vector(rng: random.Random, max_support: int = 12, max_index: int = 24,
                  max_num: int = 9, max_den: int = 6) -> SparseVector:
    """Random nonzero rational vector with at most ``max_support`` entries."""
    size = rng.randint(1, max_support)
    support = rng.sample(range(1, max_index + 1), size)
    entries = {}
    for k in support:
        num = rng.randint(1, max_num) * rng.choice((1, -1))
        entries[k] = Fraction(num, rng.randint(1, max_den))
    return SparseVector(entries)


def _leaf_orders(tree) -> Counter:
    return Counter(tree.leaf_orders())


def _branch_levels(tree) -> set:
    return {node.level for _, node in tree.walk() if not node.is_leaf}


def _unit(level: int) -> Fraction:
    return Fraction(1)


def _tree_cases(cfg: SuiteConfig, name: str, transform: Callable) -> VerificationReport:
    """Random trees in both modes through ``transform(tree, rng)``.

    ``transform`` returns (new tree, expected branch level, order map).
    """
    rep = VerificationReport(name)
    rng = random.Random(cfg.seed)
    for i in range(cfg.samples):
        mode = (Mode.ADMISSIBLE, Mode.ALLOWABLE)[i % 2]
        tree = random_tree(rng, mode)
        new, level, order_map = transform(tree, rng)
        valid = validate_tree(new, mode, _unit)
        expected = Counter({(s, order_map(o)): n for (s, o), n in _leaf_orders(tree).items()})
        got = _leaf_orders(new)
        levels = _branch_levels(new)
        ok = valid.ok and got == expected and levels <= {level}
        rep.check(f"tree{i}:{mode.value}", ok,
                  {"tree": tree.to_json(), "valid": valid.ok, "error": valid.error,
                   "levels": sorted(levels)})
    return rep


def suite_lemma1(cfg: SuiteConfig) -> VerificationReport:
    """flatten_to_s1: valid S_1 tree, same leaves, same leaf orders."""
    return _tree_cases(cfg, "lemma1", lambda t, rng: (flatten_to_s1(t), 1, lambda o: o))


def suite_lemma3(cfg: SuiteConfig) -> VerificationReport:
    """lift_s1_to_sN on flattened trees: valid S_N tree, leaf orders N*ceil(o/N)."""
    def run(tree, rng):
        N = rng.randint(1, 4)
        return lift_s1_to_sN(flatten_to_s1(tree), N), N, lambda o: ceil_to_multiple(o, N)
    return _tree_cases(cfg, "lemma3", run)


def suite_prop4(cfg: SuiteConfig) -> VerificationReport:
    """retarget_to_sN: valid S_N tree, leaf orders N*ceil(o/N)."""
    def run(tree, rng):
        N = rng.randint(1, 4)
        return retarget_to_sN(tree, N), N, lambda o: ceil_to_multiple(o, N)
    return _tree_cases(cfg, "prop4", run)


def suite_lemma2(cfg: SuiteConfig) -> VerificationReport:
    """Disjoint nodes of order <= m form an S_m-admissible (allowable) family."""
    from tslab.trees import node_order

    rep = VerificationReport("lemma2")
    rng = random.Random(cfg.seed)
    for i in range(cfg.samples):
        mode = (Mode.ADMISSIBLE, Mode.ALLOWABLE)[i % 2]
        tree = random_tree(rng, mode)
        paths = random_antichain(rng, tree)
        m = max(node_order(tree, p) for p in paths) + rng.randint(0, 1)
        ok = verify_disjoint_family(tree, paths, m, mode)
        rep.check(f"family{i}:{mode.value}", ok,
                  {"tree": tree.to_json(), "paths": [list(p) for p in paths], "m": m})
    return rep


def suite_prop5(cfg: SuiteConfig) -> VerificationReport:
    """Two-sided comparison of the norms with T[S_1, theta] on random vectors."""
    rng = random.Random(cfg.seed)
    samples = [random_vector(rng) for _ in range(cfg.samples)]
    return prop5_report(cfg.spec, cfg.N, samples, cfg.exact_cap)


def random_lskipped(rng: random.Random):
    """(a, start, L, I, is_class) with a random nonincreasing sequence."""
    n = rng.randint(1, 30)
    start = rng.randint(1, 20)
    vals = sorted((Fraction(rng.randint(0, 40), rng.randint(1, 5)) for _ in range(n)), reverse=True)
    L = rng.randint(1, 6)
    J = list(range(start, start + n))
    if rng.random() < 0.5:
        r = rng.randint(0, L - 1)
        I = [j for j in J if (j - start) % L == r]
        return vals, start, L, I, True
    I, last = [], None
    for j in J:
        if (last is None or j - last >= L) and rng.random() < 0.5:
            I.append(j)
            last = j
    return vals, start, L, I, False


def suite_lskipped(cfg: SuiteConfig) -> VerificationReport:
    """Both inequalities on random data, and rejection of non-skipped sets."""
    from tslab.construction import NotSkipped

    rep = VerificationReport("lskipped")
    rng = random.Random(cfg.seed)
    for i in range(cfg.samples):
        a, start, L, I, is_class = random_lskipped(rng)
        rep.extend(verify_lskipped(a, start, L, I), prefix=f"x{i}:")
        if L >= 2 and len(a) >= 2:
            # a pair of adjacent indices is never L-skipped for L >= 2
            j = rng.randint(start, start + len(a) - 2)
            try:
                verify_lskipped(a, start, L, sorted(set(I) | {j, j + 1}))
                rejected = False
            except NotSkipped:
                rejected = True
            rep.check(f"x{i}:mutant", rejected, {"I": sorted(set(I) | {j, j + 1}), "L": L})
    return rep


def suite_l1pq(cfg: SuiteConfig) -> VerificationReport:
    """Both conclusions on generated instances, cycling over p + q <= 3."""
    rep = VerificationReport("l1pq")
    rng = random.Random(cfg.seed)
    pairs = [(p, q) for p in range(4) for q in range(4 - p)]
    for i in range(cfg.samples):
        p, q = pairs[i % len(pairs)]
        inst = random_l1pq_instance(rng, p, q)
        rep.extend(verify_l1pq(inst), prefix=f"x{i}(p={p},q={q}):")
    return rep


def suite_repavg(cfg: SuiteConfig) -> VerificationReport:
    """Repeated-average invariants on random streams, p <= 3."""
    rep = VerificationReport("repavg")
    rng = random.Random(cfg.seed)
    for i in range(cfg.samples):
        p = rng.randint(0, 3)
        start = rng.randint(2, 6) if p < 3 else 2
        gap = 1 if p == 3 else rng.randint(1, 3)
        # an order-3 average is only small from the stream 2, 3, 4, ...
        stream = IndexStream(itertools.count(start, gap), budget=None)
        rep.extend(check_repeated_average(repeated_average(p, stream)), prefix=f"x{i}(p={p}):")
    return rep


def suite_pureforms(cfg: SuiteConfig, budget: int = 5000) -> VerificationReport:
    """Pure-form sandwich, partition and coordinate identity on every buildable toy vector.

    Toy families: N in {2, 3}, p_i in {1, 2}, L_i = 2, V an interval starting
    at 1, 2 or 3, k <= 8.  Vectors whose build exceeds ``budget`` atoms are
    skipped and counted.
    """
    rep = VerificationReport("pureforms")
    skipped = 0
    for params, start in toy_families():
        k_min = minimal_k(cfg.spec, params)
        tag = f"N={params.N},p={''.join(map(str, params.p))},V={start}.."
        for level in range(2, params.N + 1):
            # a fresh family per level, so a failed build cannot hide higher levels
            fam = LayeredFamily(cfg.spec, params, IndexStream.from_start(start, budget=budget))
            for k in range(1, 9):
                if not buildable(fam, level, k):
                    skipped += 1
                    break
                M = level - 1
                for s in range(1, M + 1):
                    rep.extend(check_pure_form_bounds(fam, k, s, M, k_min), prefix=f"{tag}:")
                coords = coordinate_map(fam, fam.vector(level, k), M)
                want = 1 / cfg.spec.at(fam.order(level, k))
                rep.check(f"{tag}:coord-l1:k={k},level={level}", ell1_of(coords) == want,
                          {"ell1": ell1_of(coords), "expected": want})
    rep.add("coverage", NOT_APPLICABLE, margins={"unbuildable": skipped},
            note="vectors past the atom budget are not built")
    return rep


def suite_modnorm(cfg: SuiteConfig, budget: int = 5000) -> VerificationReport:
    """modified_lower_bound <= exact allowable norm wherever the exact engine applies."""
    from tslab.norms import default_exact_cap

    rep = VerificationReport("modnorm")
    cap = cfg.exact_cap or default_exact_cap()
    for N in (1, 2, 3):
        for p in itertools.product((1, 2), repeat=N):
            for start in (1, 2, 3):
                params = ParamSet(N, p, (2,) * N)
                fam = LayeredFamily(cfg.spec, params, IndexStream.from_start(start, budget=budget))
                tag = f"N={N},p={''.join(map(str, p))},V={start}.."
                for k in range(1, 9):
                    if not buildable(fam, N, k):
                        break
                    x = fam.vector(N, k)
                    bounds = modified_lower_bound(fam, k=k)
                    mono = all(bounds[M + 1] <= bounds[M] for M in range(len(bounds) - 1))
                    rep.check(f"{tag}:monotone:k={k}", mono, {"bounds": bounds})
                    if len(x.support) > cap:
                        rep.add(f"{tag}:k={k}", NOT_APPLICABLE,
                                margins={"support": len(x.support), "bound": bounds[0]},
                                note="support above the exact cap")
                        continue
                    value = norm_allowable(x, cfg.spec, cap).value
                    rep.check(f"{tag}:k={k}", bounds[0] <= value,
                              {"x": x.to_json(), "bound": bounds[0], "norm": value},
                              {"bound": bounds[0], "norm": value})
    return rep


def suite_regularity(cfg: SuiteConfig) -> VerificationReport:
    rep = VerificationReport("regularity")
    r = check_regular(cfg.spec, max(cfg.horizon, 2))
    rep.check("nonincreasing", r.nonincreasing_ok, r.to_json())
    rep.check("supermultiplicative", r.supermultiplicative_ok, r.to_json())
    return rep


def suite_ddag(cfg: SuiteConfig) -> VerificationReport:
    F = default_fform(cfg.spec)
    rep = check_ddag(cfg.spec, F, cfg.R_max, cfg.horizon)
    rep.suite = "ddag"
    return rep


def suite_abc(cfg: SuiteConfig) -> VerificationReport:
    """Search parameters for N and re-check conditions (A), (B), (C) on them."""
    F = default_fform(cfg.spec)
    found = find_parameters(cfg.spec, cfg.N, F, horizon=cfg.horizon)
    if isinstance(found, NotFound):
        rep = VerificationReport("abc")
        rep.add("search", NOT_APPLICABLE, margins=found.to_json(), note="no parameters within caps")
        return rep
    rep = check_ABC(cfg.spec, found, F, cfg.horizon)
    rep.suite = "abc"
    rep.add("params", "pass", margins={**found.to_json(), "minimal_k": minimal_k(cfg.spec, found)})
    return rep


def theta_ratio_target(spec: ThetaSpec, N: int) -> Optional[tuple[str, Fraction]]:
    """Known value or bound for sup_p Theta_p(N)/theta_p, when there is one."""
    if spec.kind == "phi_harmonic" and spec.theta == Fraction(1, 2):
        return "<=", Fraction(N, 2 ** (N - 1))
    if spec.kind == "constant_phi":
        return "==", spec.c ** (N - 1)
    return None


def suite_theta_ratio(cfg: SuiteConfig, p_max: int = 40, brute_max: int = 14) -> VerificationReport:
    """sup_p Theta_p(N)/theta_p against its target; Theta <= theta; DP against brute force."""
    rep = VerificationReport("theta-ratio")
    spec, N = cfg.spec, cfg.N
    best, arg = theta_ratio_table(spec, N, p_max)
    target = theta_ratio_target(spec, N)
    if target is None:
        rep.add("sup", NOT_APPLICABLE, margins={"sup": best, "at_p": arg}, note="no known target")
    else:
        rel, value = target
        ok = best <= value if rel == "<=" else best == value
        rep.check("sup", ok, {"sup": best, "at_p": arg, "target": value},
                  {"sup": best, "target": value, "relation": rel})
    regular = all(big_theta(spec, N, p)[0] <= spec.at(p) for p in range(N, p_max + 1))
    rep.check("Theta<=theta", regular, {"N": N, "p_max": p_max})
    for p in range(N, brute_max + 1):
        dp, brute = big_theta(spec, N, p)[0], big_theta_bruteforce(spec, N, p)
        rep.check(f"dp=brute:p={p}", dp == brute, {"dp": dp, "brute": brute})
    return rep


def suite_delta(cfg: SuiteConfig, m_max: int = 10, horizon: int = 200) -> VerificationReport:
    """Window estimates of limsup theta_{m+n}/theta_n stay below theta^m."""
    rep = VerificationReport("delta")
    theta = cfg.spec.theta
    for m in range(1, m_max + 1):
        d = delta_m(cfg.spec, m, horizon)
        rep.check(f"m={m}", d < theta ** m, {"delta": d, "theta^m": theta ** m},
                  {"delta": d, "theta^m": theta ** m})
    return rep


def suite_oracle(cfg: SuiteConfig, top: int = 8) -> VerificationReport:
    """Every nonempty 0/1 vector on {1..top}: both engines against brute force."""
    rep = VerificationReport("oracle")
    memo: dict = {}
    for mask in range(1, 1 << top):
        x = SparseVector.indicator(i + 1 for i in range(top) if mask >> i & 1)
        for mode, engine in ((Mode.ADMISSIBLE, norm_admissible), (Mode.ALLOWABLE, norm_allowable)):
            got = engine(x, cfg.spec).value
            want = brute_force_norm(x, mode, cfg.spec, _memo=memo)
            rep.check(f"{mask:0{top}b}:{mode.value}", got == want,
                      {"x": list(x.support), "engine": got, "oracle": want})
    return rep


def suite_chain(cfg: SuiteConfig) -> VerificationReport:
    """c0 <= admissible <= allowable <= l1 on random vectors."""
    from tslab.norms import norm

    rep = VerificationReport("chain")
    rng = random.Random(cfg.seed)
    for i in range(cfg.samples):
        x = random_vector(rng)
        adm = norm(x, cfg.spec, Mode.ADMISSIBLE).value
        allow = norm(x, cfg.spec, Mode.ALLOWABLE, cfg.exact_cap)
        ok = x.c0() <= adm <= allow.lower and allow.upper <= x.ell1()
        if allow.exact:
            ok = ok and adm <= allow.value
        rep.check(f"x{i}", ok, {"x": x.to_json(), "c0": x.c0(), "adm": adm,
                                "allow": allow.value, "l1": x.ell1()})
    return rep


SUITES: dict[str, Callable[[SuiteConfig], VerificationReport]] = {
    "lemma1": suite_lemma1,
    "lemma2": suite_lemma2,
    "lemma3": suite_lemma3,
    "prop4": suite_prop4,
    "prop5": suite_prop5,
    "lskipped": suite_lskipped,
    "l1pq": suite_l1pq,
    "pureforms": suite_pureforms,
    "modnorm": suite_modnorm,
    "repavg": suite_repavg,
    "regularity": suite_regularity,
    "ddag": suite_ddag,
    "abc": suite_abc,
    "theta-ratio": suite_theta_ratio,
    "delta": suite_delta,
    "oracle": suite_oracle,
    "chain": suite_chain,
}


def run_suite(name: str, cfg: SuiteConfig) -> VerificationReport:
    if name not in SUITES:
        raise KeyError(name)
    return SUITES[name](cfg)
