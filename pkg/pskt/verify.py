# coding=utf-8
# Copyright (c) PolySketch Toolkit developers
"""Invariant suites run by ``psk verify``.

Every check is a function of a :class:`VerifyContext` that returns ``(passed, detail)``.
Checks are registered per suite with :func:`check`; an exception raised inside a check is a
failed check, not a crash. All inputs are generated from the context seed, so a report is
reproducible.
"""
import io
import logging
import os
import tempfile
import time
import warnings
from typing import NamedTuple

import numpy as np

from pskt import counters
from pskt.attention import (
    absorption_transform,
    exact_poly_attention,
    exact_poly_weights,
    naive_polysketch_attention,
    polysketch_attention,
    raw_polynomial_weights,
    softmax_attention,
)
from pskt.causal import (
    causal_exact_poly_attention,
    causal_polysketch_attention,
    causal_polysketch_terms,
    feature_prefix_states,
    hybrid_causal_oracle,
    lt_multiply_blocked,
    lt_multiply_naive,
    naive_causal_polysketch,
)
from pskt.exceptions import NegativeFeatureDotWarning
from pskt.learnable import DenseBlockParams, LearnableSketchParams, init_params, load_params, save_params
from pskt.matrix import lt_mask, relative_error
from pskt.rng import derive_seed, random_matrix
from pskt.sketch import amm_relative_error, clamped_feature_gram, sample_sketch
from pskt.utils import Precision

SUITE_NAMES = ("sketch", "attention", "causal", "learnable")

# Tolerances are stated for double precision; single precision runs use at least this.
F32_TOLERANCE = 1e-4

# Pairs for the unbiasedness check; the expected value is ⟨a, b⟩².
UNBIASEDNESS_PAIRS = (
    ((1.0, 0.0), (1.0, 0.0)),
    ((1.0, 0.0), (0.0, 1.0)),
    ((1.0, 2.0), (3.0, -1.0)),
    ((0.6, -0.8), (0.8, 0.6)),
    ((0.5, 0.5), (1.0, 1.0)),
)
UNBIASEDNESS_SEEDS = 10_000

AMM_SKETCH_SIZES = (4, 16, 64)
AMM_TRIALS = 30


class VerifyContext(NamedTuple):
    seed: int
    precision: Precision

    def matrix(self, rows, cols, *path, dist="gaussian"):
        return random_matrix(rows, cols, self.seed, dist=dist, path=path, precision=self.precision)

    def seed_for(self, *path):
        return derive_seed(self.seed, path)

    def tolerance(self, value):
        return value if self.precision is Precision.F64 else max(value, F32_TOLERANCE)


class CheckResult(NamedTuple):
    suite: str
    name: str
    passed: bool
    detail: str
    seconds: float


SUITES = {name: [] for name in SUITE_NAMES}


def check(suite):
    def decorator(function):
        SUITES[suite].append(function)
        return function

    return decorator


def _within(name, error, tolerance):
    return error <= tolerance, f"{name}: worst relative error {error:.3e} (tolerance {tolerance:.0e})"


# --- sketch ---------------------------------------------------------------------------


@check("sketch")
def degree_two_map_is_exact(ctx):
    tree = sample_sketch(8, 4, 2, ctx.seed)
    q, k = ctx.matrix(100, 8, 1, 0), ctx.matrix(100, 8, 1, 1)
    sketched = np.sum(np.asarray(tree.non_negative(q), dtype=np.float64) * tree.non_negative(k), axis=1)
    exact = np.sum(np.asarray(q, dtype=np.float64) * k, axis=1) ** 2
    error = relative_error(sketched[None], exact[None])
    return _within("⟨φ′(q), φ′(k)⟩ vs ⟨q, k⟩² over 100 pairs", error, ctx.tolerance(1e-10))


@check("sketch")
def sketched_weights_are_non_negative(ctx):
    worst = 0.0
    squares_ok = True
    for p in (4, 8):
        for trial in range(20):
            tree = sample_sketch(16, 16, p, ctx.seed_for(2, p, trial))
            q, k = ctx.matrix(64, 16, 2, p, trial, 0), ctx.matrix(64, 16, 2, p, trial, 1)
            left = np.asarray(tree.with_negativity(q), dtype=np.float64)
            right = np.asarray(tree.with_negativity(k), dtype=np.float64)
            squares_ok &= bool(np.all(np.square(left @ right.T) >= 0.0))
            phi_q = np.asarray(tree.non_negative(q), dtype=np.float64)
            phi_k = np.asarray(tree.non_negative(k), dtype=np.float64)
            gram = phi_q @ phi_k.T
            scale = np.outer(np.linalg.norm(phi_q, axis=1), np.linalg.norm(phi_k, axis=1))
            worst = max(worst, float(np.max(-gram / np.where(scale > 0, scale, 1.0), initial=0.0)))
    passed = squares_ok and worst <= 1e-6
    return passed, f"(LRᵀ)² ≥ 0: {squares_ok}; worst relative negative feature dot {worst:.3e} (tolerance 1e-06)"


@check("sketch")
def signed_sketch_is_unbiased(ctx):
    a = np.array([pair[0] for pair in UNBIASEDNESS_PAIRS])
    b = np.array([pair[1] for pair in UNBIASEDNESS_PAIRS])
    rows = np.vstack([a, b]).astype(ctx.precision.dtype)
    count = len(UNBIASEDNESS_PAIRS)

    samples = np.empty((UNBIASEDNESS_SEEDS, count))
    for trial in range(UNBIASEDNESS_SEEDS):
        sketched = np.asarray(sample_sketch(2, 4, 4, ctx.seed_for(3, trial)).with_negativity(rows), dtype=np.float64)
        samples[trial] = np.sum(sketched[:count] * sketched[count:], axis=1)

    expected = np.sum(a * b, axis=1) ** 2
    mean = samples.mean(axis=0)
    standard_error = samples.std(axis=0, ddof=1) / np.sqrt(UNBIASEDNESS_SEEDS)
    z_scores = np.abs(mean - expected) / standard_error
    detail = ", ".join(f"{m:.4f} vs {e:.4f}" for m, e in zip(mean, expected))
    return bool(np.all(z_scores <= 3.0)), f"Monte-Carlo means {detail}; worst |z| = {z_scores.max():.2f} (limit 3)"


@check("sketch")
def amm_error_decreases_with_sketch_size(ctx):
    medians = []
    for r in AMM_SKETCH_SIZES:
        errors = []
        for trial in range(AMM_TRIALS):
            q = ctx.matrix(32, 8, 4, trial, 0, dist="unit-rows")
            k = ctx.matrix(32, 8, 4, trial, 1, dist="unit-rows")
            errors.append(amm_relative_error(q, k, sample_sketch(8, r, 4, ctx.seed_for(4, r, trial)), 4))
        medians.append(float(np.median(errors)))
    monotone = all(later <= earlier for earlier, later in zip(medians, medians[1:]))
    passed = monotone and medians[-1] <= 0.6 * medians[0]
    listing = ", ".join(f"r={r}: {m:.4f}" for r, m in zip(AMM_SKETCH_SIZES, medians))
    return passed, f"median AMM error {listing}; monotone {monotone}"


@check("sketch")
def operation_counts_match_recursion(ctx):
    details = []
    passed = True
    for p in (4, 8):
        q = p // 2
        tree = sample_sketch(8, 4, p, ctx.seed)
        with counters.count_operations() as counts:
            tree.non_negative(ctx.matrix(3, 8, 5, p))
        observed = (
            counts[counters.MATMUL_H_R],
            counts[counters.MATMUL_R_R],
            counts[counters.HADAMARD],
            counts[counters.SELF_TENSOR],
        )
        passed &= observed == (q, q - 2, q - 1, 1)
        details.append(
            f"p={p}: h x r {observed[0]}, r x r {observed[1]}, hadamard {observed[2]}, self-tensor {observed[3]}"
        )
    return passed, "; ".join(details)


@check("sketch")
def sketches_are_deterministic(ctx):
    a = ctx.matrix(16, 8, 6)
    first, second = sample_sketch(8, 8, 8, ctx.seed), sample_sketch(8, 8, 8, ctx.seed)
    same_matrices = all(
        np.array_equal(g, h) for path in first.nodes for g, h in zip(first.nodes[path], second.nodes[path])
    )
    same_output = np.array_equal(first.non_negative(a), second.non_negative(a))
    return same_matrices and same_output, f"identical matrices {same_matrices}, identical features {same_output}"


@check("sketch")
def zero_rows_give_zero_features(ctx):
    a = ctx.matrix(4, 8, 7)
    a[2] = 0.0
    features = sample_sketch(8, 8, 4, ctx.seed).non_negative(a)
    zero = not np.any(features[2])
    amm = amm_relative_error(np.zeros((4, 8)), np.zeros((4, 8)), sample_sketch(8, 8, 4, ctx.seed), 4)
    return zero and amm == 0.0, f"zero row maps to zero features {zero}; AMM error of zero inputs {amm}"


# --- attention ------------------------------------------------------------------------


@check("attention")
def softmax_is_shift_invariant(ctx):
    worst = 0.0
    alpha = 5.0
    for trial in range(50):
        q, k, v = (ctx.matrix(16, 8, 10, trial, index) for index in range(3))
        # an extra column of sqrt(alpha) adds alpha to every logit
        column = np.full((16, 1), np.sqrt(alpha), dtype=q.dtype)
        shifted = softmax_attention(np.hstack([q, column]), np.hstack([k, column]), v, beta=np.sqrt(8))
        worst = max(worst, relative_error(shifted, softmax_attention(q, k, v)))
    return _within("softmax under a constant logit shift, 50 instances", worst, ctx.tolerance(1e-9))


@check("attention")
def polynomial_weights_are_scale_invariant(ctx):
    worst = 0.0
    for trial in range(50):
        q, k = ctx.matrix(16, 8, 11, trial, 0), ctx.matrix(16, 8, 11, trial, 1)
        scaled, unscaled = raw_polynomial_weights(q, k, 0.0, 7.0, 4), raw_polynomial_weights(q, k, 0.0, 1.0, 4)
        worst = max(worst, relative_error(scaled, unscaled))
    return _within("raw weights for beta = 1 and beta = 7, 50 instances", worst, ctx.tolerance(1e-9))


@check("attention")
def absorption_identity_holds(ctx):
    worst = 0.0
    for trial in range(50):
        # mean-zero to double precision; single precision rows only reach it up to rounding
        q = ctx.matrix(16, 8, 12, trial, 0).astype(np.float64)
        k = ctx.matrix(16, 8, 12, trial, 1).astype(np.float64)
        q -= q.mean(axis=1, keepdims=True)
        k -= k.mean(axis=1, keepdims=True)
        alpha, beta = 0.5 + trial / 10, np.sqrt(8)
        q_prime, k_prime = absorption_transform(q, k, alpha, beta)
        raw = raw_polynomial_weights(q, k, alpha, beta, 4)
        worst = max(worst, relative_error(exact_poly_weights(q_prime, k_prime, 4, guard=False), raw))
    return _within("raw weights vs unguarded weights of absorbed inputs, 50 instances", worst, ctx.tolerance(1e-9))


@check("attention")
def polynomial_weights_are_normalized(ctx):
    valid = True
    for trial in range(50):
        q, k = ctx.matrix(16, 8, 13, trial, 0), ctx.matrix(16, 8, 13, trial, 1)
        weights = np.asarray(exact_poly_weights(q, k, 4), dtype=np.float64)
        # denominator 1 + Σ ≥ 1 makes every row sum below one
        valid &= bool(np.all(weights >= 0.0) and np.all(weights.sum(axis=1) < 1.0))
    return valid, f"weights non-negative with row sums below one over 50 instances: {valid}"


@check("attention")
def polynomial_attention_hand_example(ctx):
    q = np.array([[1.0, 0.0]], dtype=ctx.precision.dtype)
    k = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=ctx.precision.dtype)
    v = np.array([[2.0, 4.0], [8.0, 16.0]], dtype=ctx.precision.dtype)
    out = exact_poly_attention(q, k, v, 4)
    expected = v[:1] / 2
    return bool(np.array_equal(out, expected)), f"row 1 = {out[0].tolist()}, expected v₁/2 = {expected[0].tolist()}"


@check("attention")
def large_alpha_flattens_weights(ctx):
    q, k = ctx.matrix(16, 8, 14, 0), ctx.matrix(16, 8, 14, 1)
    logits = np.asarray(q, dtype=np.float64) @ np.asarray(k, dtype=np.float64).T
    weights = raw_polynomial_weights(q, k, 1e6 * np.max(np.abs(logits)), np.sqrt(8), 4)
    worst = float(np.max(np.abs(np.asarray(weights, dtype=np.float64) - 1 / 16)))
    return worst <= 1e-3, f"largest deviation from 1/n is {worst:.3e} (tolerance 1e-03)"


@check("attention")
def sketched_attention_matches_oracles(ctx):
    q, k, v = (ctx.matrix(256, 8, 15, index) for index in range(3))
    degree_two = polysketch_attention(q, k, v, sample_sketch(8, 8, 2, ctx.seed))
    exact_error = relative_error(degree_two, exact_poly_attention(q, k, v, 2))
    tree = sample_sketch(8, 16, 4, ctx.seed)
    naive_error = relative_error(polysketch_attention(q, k, v, tree), naive_polysketch_attention(q, k, v, tree))
    tolerance = ctx.tolerance(1e-10)
    passed = exact_error <= tolerance and naive_error <= ctx.tolerance(1e-9)
    return passed, f"p=2 vs exact {exact_error:.3e}; p=4 linear vs materialized {naive_error:.3e}"


# --- causal ---------------------------------------------------------------------------


@check("causal")
def lt_hand_oracles(ctx):
    dtype = ctx.precision.dtype
    masked = lt_mask(np.array([[1.0, 2.0], [3.0, 4.0]], dtype=dtype))
    ones = np.ones((2, 1), dtype=dtype)
    c = np.array([[1.0], [2.0]], dtype=dtype)
    expected = np.array([[1.0], [3.0]])
    outputs = {
        "lt": np.array_equal(masked, [[1.0, 0.0], [3.0, 4.0]]),
        "naive": np.array_equal(lt_multiply_naive(ones, ones, c), expected),
        "blocked b=1": np.array_equal(lt_multiply_blocked(ones, ones, c, 1), expected),
        "blocked b=2": np.array_equal(lt_multiply_blocked(ones, ones, c, 2), expected),
    }
    return all(outputs.values()), ", ".join(f"{name} {ok}" for name, ok in outputs.items())


@check("causal")
def blocked_equals_naive(ctx):
    worst, cases = 0.0, 0
    for n in (1, 7, 64, 130):
        for b in sorted({min(b, n) for b in (1, 8, 64, n)}):
            for m in (1, 5, 17):
                for k in (1, 5, 17):
                    a, bb = ctx.matrix(n, m, 20, n, m, k, 0), ctx.matrix(n, m, 20, n, m, k, 1)
                    c = ctx.matrix(n, k, 20, n, m, k, 2)
                    worst = max(worst, relative_error(lt_multiply_blocked(a, bb, c, b), lt_multiply_naive(a, bb, c)))
                    cases += 1
    return _within(f"blocked vs naive lt-multiply over {cases} (n, b, m, k) cases", worst, ctx.tolerance(1e-10))


@check("causal")
def causal_sketch_exact_cases(ctx):
    q, k, v = (ctx.matrix(256, 8, 21, index) for index in range(3))
    oracle_p2 = causal_exact_poly_attention(q, k, v, 2)
    degree_two = relative_error(causal_polysketch_attention(q, k, v, sample_sketch(8, 8, 2, ctx.seed), 32), oracle_p2)
    single_block = relative_error(
        causal_polysketch_attention(q, k, v, sample_sketch(8, 64, 4, ctx.seed), 256, local_exact=True),
        causal_exact_poly_attention(q, k, v, 4),
    )
    worst = max(degree_two, single_block)
    detail = f"p=2 vs exact {degree_two:.3e}; b=n with exact local weights {single_block:.3e}"
    return worst <= ctx.tolerance(1e-10), detail


@check("causal")
def causal_sketch_matches_oracles(ctx):
    q, k, v = (ctx.matrix(256, 8, 22, index) for index in range(3))
    tree = sample_sketch(8, 64, 4, ctx.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("error", NegativeFeatureDotWarning)
        blocked = causal_polysketch_attention(q, k, v, tree, 32)
        sketched = relative_error(blocked, naive_causal_polysketch(q, k, v, tree))
        hybrid = relative_error(
            causal_polysketch_attention(q, k, v, tree, 32, local_exact=True), hybrid_causal_oracle(q, k, v, tree, 32)
        )
    worst = max(sketched, hybrid)
    detail = f"blocked vs materialized {sketched:.3e}; local exact vs hybrid oracle {hybrid:.3e}"
    return worst <= ctx.tolerance(1e-9), detail


@check("causal")
def outputs_are_causal(ctx):
    worst = 0.0
    generator = np.random.default_rng(ctx.seed)
    tree = sample_sketch(8, 16, 4, ctx.seed)
    for trial in range(20):
        q, k, v = (ctx.matrix(128, 8, 23, trial, index) for index in range(3))
        i = int(generator.integers(0, 127))
        k2, v2 = k.copy(), v.copy()
        k2[i + 1 :] = ctx.matrix(127 - i, 8, 23, trial, 3)
        v2[i + 1 :] = ctx.matrix(127 - i, 8, 23, trial, 4)
        runs = [lambda kk, vv: causal_exact_poly_attention(q, kk, vv, 4)]
        runs += [
            lambda kk, vv, flag=flag: causal_polysketch_attention(q, kk, vv, tree, 16, flag) for flag in (False, True)
        ]
        for run in runs:
            before, after = run(k, v)[: i + 1], run(k2, v2)[: i + 1]
            worst = max(worst, relative_error(after, before))
    return _within("rows j <= i after perturbing keys and values beyond i, 20 instances", worst, ctx.tolerance(1e-12))


@check("causal")
def prefix_states_match_naive_sums(ctx):
    k, v = ctx.matrix(100, 8, 24, 0), ctx.matrix(100, 8, 24, 1)
    tree = sample_sketch(8, 8, 4, ctx.seed)
    phi_k = np.asarray(tree.non_negative(k), dtype=np.float64)
    augmented = np.hstack([np.asarray(v, dtype=np.float64), np.ones((100, 1))])
    worst = 0.0
    for index, state in enumerate(feature_prefix_states(k, v, tree, 16)):
        stop = min((index + 1) * 16, 100)
        worst = max(worst, relative_error(state, phi_k[:stop].T @ augmented[:stop]))
    return _within("prefix state after each block vs direct sums", worst, ctx.tolerance(1e-10))


@check("causal")
def denominators_are_at_least_one(ctx):
    smallest = np.inf
    for p in (2, 4, 8):
        q, k, v = (ctx.matrix(96, 8, 25, p, index) for index in range(3))
        for local_exact in (False, True):
            _, denominator = causal_polysketch_terms(q, k, v, sample_sketch(8, 8, p, ctx.seed), 16, local_exact)
            smallest = min(smallest, float(denominator.min()))
    return smallest >= 1.0, f"smallest causal denominator {smallest:.6f}"


@check("causal")
def blocked_flops_are_linear(ctx):
    flops = []
    for n in (512, 1024):
        a, b, c = ctx.matrix(n, 5, 26, 0), ctx.matrix(n, 5, 26, 1), ctx.matrix(n, 3, 26, 2)
        with counters.count_operations() as counts:
            lt_multiply_blocked(a, b, c, 64)
        flops.append(counts[counters.FLOPS])
    ratio = flops[1] / flops[0]
    return abs(ratio - 2.0) <= 0.1, f"counted flops {flops[0]} -> {flops[1]} when doubling n (ratio {ratio:.3f})"


# --- learnable ------------------------------------------------------------------------


def zeroed(params):
    """Copy of ``params`` with every weight, bias and layer-norm parameter set to zero."""
    nodes = {
        path: tuple(DenseBlockParams(*(tuple(np.zeros_like(_) for _ in group) for group in block)) for block in pair)
        for path, pair in params.nodes.items()
    }
    return LearnableSketchParams(params.degree_q, params.input_dim, params.sketch_size, params.seed, nodes)


@check("learnable")
def parameter_counts(ctx):
    params = init_params(64, 32, 8, ctx.seed)
    leaf = params.nodes[(0,)][0].weight_count
    internal = params.nodes[()][0].weight_count
    total = init_params(64, 32, 4, ctx.seed).parameter_count
    passed = leaf == 8 * 64 * 32 + 24 * 32**2 and internal == 32 * 32**2 and total == 2 * (40960 + 576 + 640)
    return passed, f"leaf weights {leaf}, internal weights {internal}, p=4 parameter total {total}"


@check("learnable")
def signed_outputs_are_bounded(ctx):
    params = init_params(8, 8, 4, ctx.seed)
    worst = 0.0
    for trial in range(100):
        out = params.with_negativity(ctx.matrix(16, 8, 30, trial).astype(np.float64))
        worst = max(worst, float(np.max(np.abs(out))))
    return worst < np.sqrt(8), f"largest |entry| {worst:.6f} against sqrt(r) = {np.sqrt(8):.6f}"


@check("learnable")
def learnable_features_are_non_negative(ctx):
    params = init_params(8, 8, 4, ctx.seed)
    a, b = ctx.matrix(100, 8, 31, 0), ctx.matrix(100, 8, 31, 1)
    left = np.asarray(params.with_negativity(a), dtype=np.float64)
    right = np.asarray(params.with_negativity(b), dtype=np.float64)
    squares = bool(np.all(np.square(left @ right.T) >= 0.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error", NegativeFeatureDotWarning)
        gram = clamped_feature_gram(params.non_negative(a), params.non_negative(b))
    zero = not np.any(zeroed(params).non_negative(a))
    passed = squares and bool(np.all(gram >= 0.0)) and zero
    return passed, f"10^4 pairs non-negative {squares}; zero parameters give zero features {zero}"


@check("learnable")
def learnable_forward_is_deterministic(ctx):
    params = init_params(8, 8, 8, ctx.seed)
    a = ctx.matrix(16, 8, 32)
    same = np.array_equal(params.non_negative(a), init_params(8, 8, 8, ctx.seed).non_negative(a))
    return same, f"identical features from re-initialized parameters {same}"


@check("learnable")
def learnable_causal_run(ctx):
    params = init_params(8, 8, 4, ctx.seed)
    q, k, v = (ctx.matrix(64, 8, 33, index) for index in range(3))
    numerator, denominator = causal_polysketch_terms(q, k, v, params, 16)
    finite = bool(np.all(np.isfinite(numerator)))
    return finite and float(denominator.min()) >= 1.0, f"smallest denominator {denominator.min():.6f}, finite {finite}"


@check("learnable")
def parameters_round_trip(ctx):
    params = init_params(8, 4, 8, ctx.seed)
    with tempfile.TemporaryDirectory() as directory:
        first, second = os.path.join(directory, "a.pskc"), os.path.join(directory, "b.pskc")
        save_params(first, params)
        save_params(second, load_params(first))
        with open(first, "rb") as f1, open(second, "rb") as f2:
            identical = f1.read() == f2.read()
    return identical, f"save -> load -> save byte-identical {identical}"


# --- runner ---------------------------------------------------------------------------


def resolve_suites(names):
    """Expand ``all`` and reject unknown names."""
    resolved = []
    for name in names:
        if name == "all":
            resolved.extend(_ for _ in SUITE_NAMES if _ not in resolved)
        elif name in SUITE_NAMES:
            if name not in resolved:
                resolved.append(name)
        else:
            raise ValueError(f"Unknown suite {name!r}. Expected one of {SUITE_NAMES + ('all',)}.")
    return resolved


def run_suites(names, seed, precision=Precision.F64):
    """Run the checks of the named suites and return a JSON-serializable report."""
    ctx = VerifyContext(seed=seed, precision=Precision(precision))
    results = []
    for suite in resolve_suites(names):
        for function in SUITES[suite]:
            start = time.perf_counter()
            try:
                passed, detail = function(ctx)
            except Exception as e:
                passed, detail = False, f"raised {type(e).__name__}: {e}"
            result = CheckResult(suite, function.__name__, bool(passed), detail, time.perf_counter() - start)
            logging.info(f"{suite}/{result.name}: {'ok' if result.passed else 'FAILED'} ({result.seconds:.2f}s)")
            results.append(result)
    return {
        "seed": seed,
        "precision": ctx.precision.value,
        "passed": all(_.passed for _ in results),
        "checks": [_._asdict() for _ in results],
    }


def format_report(report):
    out = io.StringIO()
    out.write(f"pskt verify (seed {report['seed']}, precision {report['precision']})\n")
    for result in report["checks"]:
        status = "PASS" if result["passed"] else "FAIL"
        out.write(f"  [{status}] {result['suite']}/{result['name']}: {result['detail']}\n")
    failed = sum(not _["passed"] for _ in report["checks"])
    out.write(f"{len(report['checks']) - failed} passed, {failed} failed\n")
    return out.getvalue()
