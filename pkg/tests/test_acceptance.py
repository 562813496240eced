"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""
import time

import numpy as np
import pytest

from cfx import models as M
from cfx.blackbox import blackbox_counterfactual
from cfx.engine import (
    CounterfactualQuery,
    build_constraints,
    compute_counterfactual,
    counterfactual_program,
    hyperplane_constraints,
    softmax_constraints,
)
from cfx.errors import NoCounterfactual, NotFound
from cfx.regularizers import WEIGHT_CAP, Regularizer, eval_regularizer, mad_weights, objective_pieces
from cfx.solvers import (
    CanonicalProgram,
    Constraint,
    Status,
    kkt_residuals,
    penalty_ccp,
    solve_convex_qcqp,
    solve_lp,
    solve_qp,
    solve_single_qcqp_dual,
)
from cfx.trees import ensemble_counterfactual_a, ensemble_counterfactual_b, tree_counterfactual
from fixtures import (
    EUCLID,
    FAMILIES,
    L1,
    L1_SKEW,
    adversarial_ensemble,
    grid_cases,
    random_model,
    random_regularizer,
    random_target,
    three_stumps,
)
from oracles import brute_force_tree, grid_min, line_min, random_tree


def query(x, y, reg=EUCLID, **kw):
    return CounterfactualQuery(x, y, reg, **kw)


# ----------------------------------------------------------------- 1

def _validity_instance(rng, family):
    d = int(rng.integers(1, 6))
    k = int(rng.integers(2, 5))
    x = rng.standard_normal(d)
    if family == "tree":
        m = random_tree(rng, d, int(rng.integers(1, 5)), regression=rng.random() < 0.3)
    elif family == "ensemble":
        regression = rng.random() < 0.3
        trees = [random_tree(rng, d, int(rng.integers(1, 4)), regression=regression)
                 for _ in range(int(rng.integers(1, 6)))]
        m = M.EnsembleModel(trees, "mean" if regression else "majority-vote")
    else:
        m = random_model(rng, family, d, k)
    if family in ("tree", "ensemble"):
        # a prediction the model actually makes somewhere
        y = m.predict(rng.uniform(-5, 5, d))
    else:
        y = random_target(rng, m, x)
    tol = 0.0 if m.is_classifier else float(rng.choice([0.0, 0.01]))
    return m, x, y, tol, random_regularizer(rng, d)


def test_c1_validity_suite(verdict):
    rng = np.random.default_rng(2024)
    n = 240
    solved = violations = 0
    start = time.perf_counter()
    for i in range(n):
        m, x, y, tol, reg = _validity_instance(rng, FAMILIES[i % len(FAMILIES)])
        try:
            r = compute_counterfactual(m, query(x, y, reg, tolerance=tol))
        except NoCounterfactual:
            continue
        solved += 1
        if not M.matches_target(m, r.x_cf, y, tol + 1e-9):
            violations += 1
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 30.0
    verdict("C1 validity", ok, f"{n} instances over {len(FAMILIES)} families, {solved} solved, "
                               f"{violations} violations, {elapsed:.1f}s (< 30s)")
    assert ok


# ----------------------------------------------------------------- 2

def test_c2_grid_optimality(verdict):
    worst = -np.inf
    engine_time = 0.0
    lines = []
    for name, model, x, y, tol in grid_cases():
        for reg_name, reg in (("l2", EUCLID), ("l1", L1_SKEW)):
            t0 = time.perf_counter()
            r = compute_counterfactual(model, query(x, y, reg, tolerance=tol))
            engine_time += time.perf_counter() - t0
            # scan everything that could undercut the engine by more than the slack
            best, _ = grid_min(model, y, x, reg, r.regularization + 0.02, tol=tol)
            gap = r.regularization - best
            worst = max(worst, gap)
            lines.append(f"{name}/{reg_name} {r.regularization:.6f} vs grid {best:.6f}")
    ok = worst <= 1e-2 and engine_time < 60.0
    verdict("C2 grid optimality", ok, f"{len(lines)} cases, max(engine - grid) = {worst:.2e} "
                                      f"(<= 1e-2), engine time {engine_time:.1f}s (< 60s)")
    assert ok, "\n".join(lines)


# ----------------------------------------------------------------- 3

def _gap(a, b):
    if isinstance(a, str) or isinstance(b, str):
        return 0.0 if a == b else np.inf
    return abs(a - b)


def test_c3_reductions(verdict):
    rng = np.random.default_rng(3)
    softmax_equal = lgmlvq_gap = qda_gap = lvq_gap = 0.0
    rows_equal = True
    for _ in range(20):
        d = int(rng.integers(1, 5))
        W = rng.standard_normal((2, d))
        b = rng.standard_normal(2)
        sm = M.SoftmaxModel(W, b, labels=(-1, 1))
        hp = M.HyperplaneModel(W[1] - W[0], b[1] - b[0])
        for y in (-1, 1):
            (a,) = softmax_constraints(sm, y).constraints
            (h,) = hyperplane_constraints(hp, y).constraints
            rows_equal &= bool(np.array_equal(a.q, h.q) and a.c == h.c)

        x = rng.standard_normal(d)
        regs = (EUCLID, Regularizer.manhattan(rng.uniform(0.5, 2, d)))
        protos = rng.standard_normal((4, d)) * 1.5
        labels = (0, 1, 0, 2)
        om = rng.standard_normal((d, d))
        om = om @ om.T + 0.2 * np.eye(d)
        g = M.LvqModel(protos, labels, ("global", om))
        loc = M.LvqModel(protos, labels, ("per_prototype", (om,) * 4))
        plain = M.LvqModel(protos, labels, "identity")
        eye = M.LvqModel(protos, labels, ("global", np.eye(d)))
        y = random_target(rng, g, x)
        y2 = random_target(rng, plain, x)

        L = rng.standard_normal((d, d))
        cov = L @ L.T + 0.3 * np.eye(d)
        mu = rng.standard_normal((3, d)) * 1.5
        pri = np.array([0.25, 0.35, 0.4])
        qda = M.QdaModel(mu, (cov,) * 3, pri)
        prec = np.linalg.inv(cov)
        lin = M.SoftmaxModel(mu @ prec,
                             -0.5 * np.einsum("ki,ij,kj->k", mu, prec, mu) + np.log(pri))
        yq = random_target(rng, qda, x)
        for reg in regs:
            def val(m, t):
                try:
                    return compute_counterfactual(m, query(x, t, reg)).regularization
                except NoCounterfactual as exc:
                    return exc.reason  # both sides must fail the same way
            lgmlvq_gap = max(lgmlvq_gap, _gap(val(g, y), val(loc, y)))
            lvq_gap = max(lvq_gap, _gap(val(plain, y2), val(eye, y2)))
            qda_gap = max(qda_gap, _gap(val(qda, yq), val(lin, yq)))
    ok = rows_equal and lgmlvq_gap <= 1e-6 and qda_gap <= 1e-6 and lvq_gap <= 1e-6
    verdict("C3 reductions", ok,
            f"softmax K=2 rows == hyperplane rows: {rows_equal}; LGMLVQ(shared) vs GMLVQ "
            f"{lgmlvq_gap:.1e}; QDA(shared) vs linear {qda_gap:.1e}; GMLVQ(I) vs LVQ "
            f"{lvq_gap:.1e} (all <= 1e-6)")
    assert ok


# ----------------------------------------------------------------- 4

def _lin(q, c):
    return Constraint(np.asarray(q, dtype=float), c)


def _disk(center, r2):
    center = np.asarray(center, dtype=float)
    return Constraint(-2 * center, center @ center - r2, 2 * np.eye(center.size))


def test_c4_solver_fixtures(verdict):
    fixtures = [
        ("lp x>=1", solve_lp, CanonicalProgram([1.0], [_lin([-1.0], 1.0)]), [1.0]),
        ("lp box", solve_lp,
         CanonicalProgram([1.0, 1.0], [_lin([-1, 0], 0.5), _lin([0, -1], 0.25)]), [0.5, 0.25]),
        ("qp half-space", solve_qp,
         CanonicalProgram([-2.0, 0.0], [_lin([1, 0], -1.0)], np.eye(2), 2.0), [1.0, 0.0]),
        ("qp free", solve_qp, CanonicalProgram([-1.0, -2.0], [], np.eye(2)), [1.0, 2.0]),
        ("qp sum", solve_qp, CanonicalProgram([0.0, 0.0], [_lin([-1, -1], 2.0)], np.eye(2)),
         [1.0, 1.0]),
        ("qcqp disk", solve_convex_qcqp,
         CanonicalProgram([0.0, 0.0], [_disk([2, 0], 1.0)], 2 * np.eye(2)), [1.0, 0.0]),
        ("qcqp interior", solve_convex_qcqp,
         CanonicalProgram([0.0, 0.0], [_disk([0, 0], 4.0)], 2 * np.eye(2)), [0.0, 0.0]),
        ("qcqp support", solve_convex_qcqp,
         CanonicalProgram([1.0, 0.0], [_disk([0, 0], 1.0)]), [-1.0, 0.0]),
    ]
    err = kkt = 0.0
    for _, solver, prog, want in fixtures:
        sol = solver(prog)
        err = max(err, float(np.max(np.abs(sol.x - want))))
        lam = sol.multipliers if sol.multipliers is not None else np.zeros(len(prog.constraints))
        stat, comp, dual = kkt_residuals(prog, sol.x, lam)
        kkt = max(kkt, stat, comp, dual, prog.violation(sol.x))

    duals = [([0.0, 0.0], np.diag([2.0, -2.0]), [0.0, 0.0], 1.0, [0.0, 1.0]),
             ([0.5, 0.0], 2 * np.eye(2), [0.0, 0.0], -1.0, [0.5, 0.0]),
             ([2.0, 0.0], 2 * np.eye(2), [0.0, 0.0], -1.0, [1.0, 0.0])]
    gap = 0.0
    for x, A, b, r, want in duals:
        sol = solve_single_qcqp_dual(x, A, b, r)
        err = max(err, float(np.max(np.abs(sol.x - want))))
        gap = max(gap, sol.info["duality_gap"])

    # indefinite fixture against a grid over [-3, 3]^2 at step 1e-3
    g = np.arange(-3.0, 3.0005, 1e-3)
    X, Y = np.meshgrid(g, g, indexing="ij")
    grid = np.min(np.where(X ** 2 - Y ** 2 + 1 <= 0, X ** 2 + Y ** 2, np.inf))
    hard = solve_single_qcqp_dual([0.0, 0.0], np.diag([2.0, -2.0]), [0.0, 0.0], 1.0)
    grid_err = abs(float(hard.x @ hard.x) - grid)

    ok = err <= 1e-6 and kkt <= 1e-6 and gap <= 1e-6 and grid_err <= 1e-3
    verdict("C4 solver correctness", ok,
            f"{len(fixtures) + len(duals)} fixtures, max |x - x*| {err:.1e}, max KKT residual "
            f"{kkt:.1e}, max duality gap {gap:.1e}, diag(2,-2) vs grid {grid_err:.1e}")
    assert ok


# ----------------------------------------------------------------- 5

def _random_dc_system(rng):
    d = int(rng.integers(2, 5))
    family = ("gnb", "qda", "lvq-local")[int(rng.integers(3))]
    m = random_model(rng, family, d, int(rng.integers(2, 4)))
    x = rng.standard_normal(d)
    if family == "lvq-local":
        target = random_target(rng, m, x)
        i = m.prototype_labels.index(target)
        cset = build_constraints(m, target, prototype=i)
        anchor = m.prototypes[i]
    else:
        target = random_target(rng, m, x)
        cset = build_constraints(m, target)
        anchor = m.means[m.label_index(target)]
    return x, cset, anchor


def test_c5_ccp_traces(verdict):
    rng = np.random.default_rng(5)
    runs = monotone = 0
    worst_viol = 0.0
    converged = 0
    while runs < 60:
        x, cset, anchor = _random_dc_system(rng)
        if cset.is_linear or not cset.constraints:
            continue
        cons = cset.relaxed(1e-4)
        reg = EUCLID if runs % 2 == 0 else Regularizer.manhattan(rng.uniform(0.5, 2, x.size))
        prog = counterfactual_program(reg, x, cons)
        for start in (x, anchor):
            z0 = start if reg.kind == "euclidean" else np.concatenate(
                [start, reg.weights * np.abs(start - x) + 1.0])
            sol = penalty_ccp(prog, z0)
            runs += 1
            monotone += sol.info["trace"].is_monotone(1e-9)
            if sol.status is Status.OPTIMAL:
                converged += 1
                worst_viol = max(worst_viol, prog.violation(sol.x))
    ok = monotone == runs and worst_viol <= 1e-6
    verdict("C5 CCP", ok, f"{runs} traces on random DC systems, {monotone} non-increasing, "
                          f"{converged} converged, max violation {worst_viol:.1e} (<= 1e-6)")
    assert ok


# ----------------------------------------------------------------- 6

def test_c6_tree_exactness(verdict):
    rng = np.random.default_rng(6)
    trees = mismatches = comparisons = 0
    while trees < 100:
        dim = int(rng.integers(1, 4))
        t = random_tree(rng, dim, int(rng.integers(1, 5)))
        trees += 1
        x = np.round(rng.uniform(-5, 5, dim) * 2) / 2
        reg = EUCLID if trees % 2 else Regularizer.manhattan(rng.uniform(0.5, 2, dim))
        for y in ("A", "B", "C"):
            want, _ = brute_force_tree(t, x, y, reg, 1e-6)
            try:
                got = tree_counterfactual(t, query(x, y, reg)).regularization
            except NoCounterfactual:
                got = np.inf
            comparisons += 1
            mismatches += got != want
    ok = mismatches == 0
    verdict("C6 tree exactness", ok,
            f"{trees} random trees, {comparisons} targets, {mismatches} differ from brute force")
    assert ok


# ----------------------------------------------------------------- 7

def test_c7_ensembles(verdict):
    ens = three_stumps()
    reg = Regularizer.uniform(1)
    best, _ = line_min(lambda v: ens.predict([v]) == "B", abs, -1.0, 4.0, 1e-4)
    errs = []
    for fn in (ensemble_counterfactual_a, ensemble_counterfactual_b):
        r = fn(ens, query([0.0], "B", reg))
        errs.append(abs(r.regularization - best) if r.prediction == "B" else np.inf)
    adv = adversarial_ensemble()
    try:
        ensemble_counterfactual_b(adv, query([0.0, 0.0], "B"))
        b_failed = False
    except NotFound:
        b_failed = True
    a = ensemble_counterfactual_a(adv, query([0.0, 0.0], "B"))
    a_ok = adv.predict(a.x_cf) == "B"
    ok = max(errs) <= 1e-3 and b_failed and a_ok
    verdict("C7 ensembles", ok, f"3-stump |A - grid| {errs[0]:.1e}, |B - grid| {errs[1]:.1e} "
                                f"(<= 1e-3); adversarial: B NotFound={b_failed}, A valid={a_ok}")
    assert ok


# ----------------------------------------------------------------- 8

def test_c8_dominance(verdict):
    worst = -np.inf
    count = 0
    for name, model, x, y, tol in grid_cases():
        for reg in (EUCLID, L1, L1_SKEW):
            # a tiny margin: the fallback only sees the prediction, not the margin
            q = query(x, y, reg, tolerance=tol, margin=1e-8)
            exact = compute_counterfactual(model, q).regularization
            bb = blackbox_counterfactual(model, q).regularization
            worst = max(worst, exact - bb)
            count += 1
    ok = worst <= 1e-6
    verdict("C8 dominance", ok, f"{count} fixture/regularizer pairs, max(specific - blackbox) "
                                f"= {worst:.1e} (<= 1e-6)")
    assert ok


# ----------------------------------------------------------------- 9

def test_c9_mad_and_epigraph(verdict):
    rng = np.random.default_rng(9)
    perm_ok = scale_ok = 0
    worst_lp = 0.0
    n = 100
    for _ in range(n):
        rows, d = int(rng.integers(1, 40)), int(rng.integers(1, 6))
        data = rng.standard_normal((rows, d)) * rng.uniform(0.1, 10, d)
        w = mad_weights(data)
        perm_ok += bool(np.array_equal(w, mad_weights(data[rng.permutation(rows)])))
        s = float(rng.uniform(0.01, 100))
        scaled = data * s
        ws = mad_weights(scaled)
        unclamped = (w < WEIGHT_CAP) & (ws < WEIGHT_CAP)
        scale_ok += bool(np.allclose(ws[unclamped], w[unclamped] / s, rtol=1e-9, atol=0))

        x = rng.standard_normal(d)
        reg = Regularizer.manhattan(rng.uniform(0.2, 3.0, d))
        G = rng.standard_normal((int(rng.integers(1, 2 * d + 2)), d))
        h = G @ (rng.standard_normal(d) * 2) + rng.uniform(0.1, 1.0, G.shape[0])
        p = objective_pieces(reg, x)
        cons = [Constraint(r, -b) for r, b in zip(p.rows, p.rhs)]
        cons += [Constraint(np.concatenate([g, np.zeros(d)]), -b) for g, b in zip(G, h)]
        sol = solve_lp(CanonicalProgram(p.cost, cons))
        worst_lp = max(worst_lp, abs(sol.value - eval_regularizer(reg, x, sol.x[:d])))
    ok = perm_ok == n and scale_ok == n and worst_lp <= 1e-7
    verdict("C9 MAD/epigraph", ok, f"permutation invariant {perm_ok}/{n}, scaling covariant "
                                   f"{scale_ok}/{n}, epigraph LP gap {worst_lp:.1e} (<= 1e-7)")
    assert ok
