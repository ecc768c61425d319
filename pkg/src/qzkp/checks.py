"""End-to-end checks run by `qzkp demo` and `qzkp report`.

Each check row carries an id, the rule being tested as a formula string,
the claimed value, the measured value and pass/fail.
"""

import time
from dataclasses import asdict, dataclass

import numpy as np

from . import analysis, qip, qla, transforms, zk
from .circuits import H, UEPS, X, Circuit, swap_select, ueps_matrix
from .fixtures import m4_chain, unveil
from .qla import RegisterLayout


@dataclass
class Check:
    id: str
    name: str
    rule: str
    claimed: float
    measured: float
    passed: bool
    seconds: float = 0.0

    def as_dict(self):
        return asdict(self)


def _row(cid, name, rule, claimed, measured, passed):
    return Check(cid, name, rule, float(claimed), float(measured), bool(passed))


def rewinding(seed=0, n_dv=5, n_aux=20):
    ps, honest, sim = unveil()
    rng = np.random.default_rng(seed)
    probs, dists = [], []
    for _ in range(n_dv):
        dv = zk.DishonestVerifier.random(rng, n_aux=2)
        res = zk.rewind_run(ps, honest, sim, dv)
        probs += [res.success_for(qla.random_density(4, rng)) for _ in range(n_aux)]
        dists.append(qla.factor_trace_distance(res.output_choi.factor,
                                               res.interaction_choi.factor))
    err = max(abs(p - 0.5) for p in probs)
    return [
        _row("C1.success", "rewinding success probability", "p = 1/2 for every W and aux",
             0.5, float(np.mean(probs)), err <= 1e-10),
        _row("C1.choi", "rewound output channel", "||J_out - J_int||_1 <= 1e-8",
             0.0, max(dists), max(dists) <= 1e-8),
    ]


def parallelization(seed=0):
    ps, honest, sim = m4_chain(0.0)
    p3, h3, s3, rep = transforms.parallelize(ps, honest, sim, eps=0.0)
    acc = qip.run(p3, h3)[0]
    dist = max(zk.hv_check(p3, h3, s3, mode="statistical"))
    psn, hn, sn = m4_chain(no=True)
    delta = 1 - analysis.optimize_prover(psn, seed=seed, init=hn).best_p
    pn, hn3, _, repn = transforms.parallelize(psn, hn, sn, eps=0.0, delta=delta)
    bound = 1 - delta ** 2 / (32 * (ps.m + 1) ** 2)
    best = analysis.optimize_prover(pn, restarts=2, iters=100, width=1, seed=seed).best_p
    return [
        _row("C2.complete", "parallelized acceptance", "1 - eps/2", 1.0, acc, abs(acc - 1) <= 1e-9),
        _row("C2.zk", "parallelized view distance", "max_j ||sim_j - view_j||_1 = 0", 0.0, dist,
             dist <= 1e-9),
        _row("C2.sound", "parallelized cheat value", "1 - delta^2 / (32 (m+1)^2)", bound, best,
             best <= bound + 1e-6),
    ]


def public_coin(seed=0):
    ps, honest, sim = unveil()
    p3, h3, s3, rep = transforms.to_public_coin(ps, honest, sim, eps=0.0)
    acc = qip.run(p3, h3)[0]
    dist = max(zk.hv_check(p3, h3, s3, mode="statistical"))
    psn, hn, sn = unveil(no=True)
    delta = 1 - analysis.optimize_prover(psn, seed=seed, init=hn).best_p
    pn = transforms.public_coin_verifier(psn)
    bound = 0.5 + np.sqrt(1 - delta) / 2
    best = analysis.optimize_prover(pn, restarts=3, iters=200, width=2, seed=seed).best_p
    return [
        _row("C3.complete", "public-coin acceptance", "1 - eps/2", 1.0, acc, acc >= 1 - 1e-9),
        _row("C3.coin", "public-coin form", "verifier sends one fair coin", 1, qip.is_public_coin(p3),
             qip.is_public_coin(p3)),
        _row("C3.zk", "public-coin view distance", "max_j ||sim_j - view_j||_1 = 0", 0.0, dist,
             dist <= 1e-9),
        _row("C3.sound", "public-coin cheat value", "1/2 + sqrt(1 - delta)/2", bound, best,
             best <= bound + 1e-6),
    ]


def perfect_completeness(seed=0):
    rows = []
    for eps, base in ((0.04, 0.04), (0.1, 0.1), (0.1, 0.02)):
        tag = f"eps={eps:g},base={base:g}"
        ps, honest, sim = m4_chain(base)
        p2, h2, s2, rep = transforms.make_perfect_complete(ps, honest, sim, eps)
        acc = qip.run(p2, h2)[0]
        dist = max(zk.hv_check(p2, h2, s2, mode="statistical"))
        rows.append(_row(f"C4.complete[{tag}]", "perfect-complete acceptance", "1", 1.0, acc,
                         abs(acc - 1) <= 1e-9))
        rows.append(_row(f"C4.zk[{tag}]", "perfect-complete view distance", "2 sqrt(eps)",
                         2 * np.sqrt(eps), dist, dist <= 2 * np.sqrt(eps) + 1e-9))
        if base != eps:
            continue
        psn, hn, _ = m4_chain(eps, no=True)
        delta = 1 - analysis.optimize_prover(psn, seed=seed, init=hn).best_p
        pv = transforms.perfect_complete_verifier(psn, eps)
        bound = 1 - (delta - eps) ** 2
        best = analysis.optimize_prover(pv, restarts=3, iters=200, seed=seed).best_p
        rows.append(_row(f"C4.sound[{tag}]", "perfect-complete cheat value", "1 - (delta - eps)^2",
                         bound, best, best <= bound + 1e-6))
    return rows


def chain_converse(seed=0, n=200):
    rng = np.random.default_rng(seed)
    hits = bad = 0
    worst = np.inf
    for _ in range(n):
        k = int(rng.integers(2, 5))
        ci = analysis.random_chain_instance(rng, k, 1, int(rng.integers(1, 3)))
        b = analysis.fidelity_chain_bound(ci)
        _, achieved = analysis.build_prover_from_snapshots(ci)
        if b.lhs > b.rhs + 1e-6 and analysis.hypothesis_holds(ci):
            hits += 1
            bad += not achieved > 1 - ci.delta
        worst = min(worst, np.sqrt(achieved) - analysis.triangle_bound(ci))
    return [
        _row("C5.converse", "snapshot prover beats 1 - delta", "lhs > rhs => achieved > 1 - delta",
             hits, hits - bad, bad == 0 and hits > 0),
        _row("C5.triangle", "triangle chain", "sqrt(achieved) >= sqrt(acc_k) - sum sqrt(2 Delta_j)",
             0.0, worst, worst >= -1e-8),
    ]


def repetition(seed=0):
    ps, honest, sim = unveil(0.25)
    p2, h2, s2, _ = transforms.parallel_repeat(ps, honest, sim, 2)
    acc = qip.run(p2, h2)[0]
    dist = max(zk.hv_check(p2, h2, s2, mode="statistical"))
    ps, honest, sim = m4_chain(0.25)
    p3, h3, _, _ = transforms.sequential_repeat(ps, honest, sim, 3, 2)
    acc3 = qip.run(p3, h3)[0]
    return [
        _row("C6.parallel", "parallel repetition k=2", "c^k", 0.5625, acc, abs(acc - 0.5625) <= 1e-9),
        _row("C6.zk", "parallel repetition views", "product of simulated views", 0.0, dist,
             dist <= 1e-9),
        _row("C6.sequential", "sequential repetition k=3 t=2", "P[Bin(k, c) >= t]", 0.84375, acc3,
             abs(acc3 - 0.84375) <= 1e-9),
    ]


def fail_equivalence(seed=0):
    ps, honest, sim = m4_chain(1 / 3)
    p = 2.0 ** -8
    pw, hw, sw = zk.fail_wrap(ps, honest, zk.make_fail_simulator(sim, p))
    acc = qip.run(pw, hw)[0]
    claim = (2 / 3) * (1 - p) ** 2
    dist = max(zk.hv_check(pw, hw, sw, mode="statistical"))
    amp = zk.fail_amplify(zk.make_fail_simulator(sim, 0.5), 4)
    pf = max(zk.fail_probabilities(amp))
    return [
        _row("C7.complete", "FAIL-wrapped acceptance", "c (1 - p)^(m/2)", claim, acc,
             acc >= claim - 1e-9),
        _row("C7.zk", "FAIL-wrapped view distance", "max_j ||sim_j - view_j||_1 = 0", 0.0, dist,
             dist <= 1e-9),
        _row("C7.amplify", "FAIL amplification t=4", "p^t", 0.0625, pf, abs(pf - 0.0625) <= 1e-10),
    ]


def _variant(rng, lay):
    t = lay.wire("T")
    gates = []
    for _ in range(int(rng.integers(0, 4))):
        kind = rng.integers(3)
        gates.append(H(t) if kind == 0 else X(t) if kind == 1 else UEPS(float(rng.uniform()), t))
    return Circuit(lay, tuple(gates))


def swap_select_error(rng):
    """Max deviation of swap_select from applying the selected variant directly."""
    c = int(rng.integers(1, 3))
    nv = 1 << c
    regs = [("C", c), ("T", 1)] + [(f"A{r}", 1) for r in range(nv)]
    if c > 1:
        regs.append(("WK", c - 1))
    lay = RegisterLayout(tuple(regs))
    vs = [_variant(rng, lay) for _ in range(nv)]
    anc = [None if not v.gates and rng.uniform() < 0.5 else f"A{r}" for r, v in enumerate(vs)]
    circ = swap_select(vs, "C", anc, work="WK" if c > 1 else None)
    n = lay.total
    t = lay.wire("T")
    err = 0.0
    for r in range(nv):
        psi = qla.random_state(2, rng)
        regs_state = [qla.basis_state(c, r), psi] + [qla.basis_state(1)] * (n - c - 1)
        start = regs_state[0]
        for v in regs_state[1:]:
            start = np.kron(start, v)
        got = circ.apply(start)
        want = vs[r].apply(start)
        for s, v in enumerate(vs):
            if s != r and anc[s] is not None:
                a = lay.wire(anc[s])
                want = v.remap(lay, {w: (a if w == t else w) for w in range(n)}).apply(want)
        err = max(err, float(np.abs(got - want).max()))
    return err


def gates(seed=0):
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    ex = [np.abs(ueps_matrix(0.0) - np.array([[0, 1], [1, 0]])).max(),
          np.abs(ueps_matrix(1.0) - np.diag([1, -1])).max(),
          np.abs(ueps_matrix(0.5) - h).max()]
    rng = np.random.default_rng(seed)
    sel = max(swap_select_error(rng) for _ in range(50))
    return [
        _row("C8.ueps", "UEPS at 0, 1, 1/2", "X, Z, H", 0.0, max(ex), max(ex) <= 1e-12),
        _row("C8.select", "swap_select over 50 variant sets", "selected variant applied", 0.0, sel,
             sel <= 1e-12),
    ]


CRITERIA = (rewinding, parallelization, public_coin, perfect_completeness, chain_converse,
            repetition, fail_equivalence, gates)


def run_all(seed=0, only=None):
    rows = []
    for i, fn in enumerate(CRITERIA, 1):
        if only and i not in only:
            continue
        t0 = time.perf_counter()
        got = fn(seed)
        dt = time.perf_counter() - t0
        for r in got:
            r.seconds = dt
        rows += got
    return rows
