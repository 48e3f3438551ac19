import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from netsynth.activations import ActivationSpec
from netsynth.constructor import ConstructionRequest
from netsynth.grids import Box, GridSpec
from netsynth.monomials import MultiPoly
from netsynth.verify import (TRIAL_COLUMNS, TrialSummary, certify, choose_resolution, density_trial,
                             random_feature_study, sup_error, write_trials_csv)

UNIT = Box((0.0,), (1.0,))


def test_sup_error_examples():
    g = GridSpec(UNIT, (101,))
    f = lambda x: x[:, 0] ** 2  # noqa: E731
    assert sup_error(f, f, g) == 0.0
    assert sup_error(f, lambda x: x[:, 0], g) == pytest.approx(0.25, abs=1e-15)
    two = lambda x: np.column_stack([x[:, 0], 3 * x[:, 0]])  # noqa: E731
    assert sup_error(two, lambda x: np.zeros((len(x), 2)), g) == pytest.approx(3.0)


def test_sup_error_reports_failure_point():
    def bad(x):
        out = x[:, 0].copy()
        out[x[:, 0] > 0.5] = np.nan
        return out

    with pytest.raises(FloatingPointError, match=r"non-finite value at \[0\.6"):
        sup_error(bad, lambda x: x[:, 0], GridSpec(UNIT, (11,)))


@given(st.integers(3, 60), st.floats(0.5, 20))
def test_sup_error_refinement_monotone(r, freq):
    box = Box((-1.0, 0.0), (1.0, 2.0))
    f = lambda x: np.sin(freq * x[:, 0]) * np.cos(x[:, 1])  # noqa: E731
    z = lambda x: np.zeros(len(x))  # noqa: E731
    g = GridSpec(box, (r, r))
    assert sup_error(f, z, g.refined()) >= sup_error(f, z, g)


def test_certify_is_above_dense_sup():
    f = lambda x: np.sin(7 * x[:, 0])  # noqa: E731
    g = lambda x: np.zeros(len(x))  # noqa: E731
    cert = certify(f, g, UNIT, 0.1)
    assert cert.certified_error[0] >= 1.0 - 1e-12
    assert cert.resolution[0] >= 33
    assert not cert.passes(0.5)
    point = certify(f, g, Box((0.3,), (0.3,)), 0.1)
    assert point.certified_error[0] == pytest.approx(abs(np.sin(2.1)))


def test_choose_resolution():
    assert choose_resolution(UNIT, 0.0, 0.1) == (33,)
    res = choose_resolution(UNIT, 100.0, 0.01)
    h = 1.0 / (res[0] - 1)
    assert 100.0 * h / 2 <= 0.01 / 6
    big = choose_resolution(Box((0.0,) * 3, (1.0,) * 3), 1e6, 1e-6)
    assert np.prod(big) <= 10_000_000


def test_density_trial_generic_and_degenerate():
    for n, d in ((1, 3), (2, 2), (3, 2)):
        assert density_trial(n, d, 1000, seed=11).fraction == 1.0

    def dup(rng, N, n):
        W = rng.standard_normal((N, n))
        W[-1] = W[0]
        return W

    s = density_trial(2, 2, 50, seed=0, sampler=dup)
    assert s.successes == 0 and s.singular == 50
    with pytest.raises(ValueError):
        density_trial(2, 2, 0, seed=0)


def test_density_trial_small_weights():
    s = density_trial(2, 2, 1000, seed=5, sampler=lambda rng, N, n: rng.uniform(-0.1, 0.1, (N, n)))
    assert s.fraction == 1.0


def test_trial_summary_merge():
    a = TrialSummary(2, 1, [0, 1], [0.1, 0.5], 0, [3, 3])
    b = TrialSummary(1, 1, [2], [0.01], 1, [4])
    m = a.merge(b)
    assert (m.trials, m.successes, m.singular, m.seeds) == (3, 2, 1, [0, 1, 2])
    assert TrialSummary().fraction == 0.0


def _template():
    return ConstructionRequest([MultiPoly.from_terms(1, {(2,): 1.0})], Box((-1.0,), (1.0,)),
                               ActivationSpec("tanh"), 0.05, frozen_random_first_layer=(1.0, 0))


def test_random_feature_study_needs_30_seeds():
    with pytest.raises(ValueError):
        random_feature_study(_template(), range(5))


def test_random_feature_study_failures_are_data(tmp_path):
    from dataclasses import replace
    hard = replace(_template(), eps=1e-9, frozen_random_first_layer=(1e4, 0), max_k=1)
    s = random_feature_study(hard, range(30))
    assert s.trials == 30 and s.successes < 30
    path = tmp_path / "t.csv"
    write_trials_csv(s, path, eps=1e-9, header_lines=["x=1"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# x=1" and lines[1] == ",".join(TRIAL_COLUMNS)
    assert len(list(csv.reader(lines[1:]))) == 31


def test_random_feature_study_deterministic():
    seeds = list(range(30)) + [7]
    s = random_feature_study(_template(), seeds)
    assert s.errors[7] == s.errors[-1] and s.units[7] == s.units[-1]
