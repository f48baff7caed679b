import random

import numpy as np
import pytest

from conftest import make_schema, random_table
from kgsynth.errors import InsufficientResamples, SchemaMismatch
from kgsynth.fidelity import energy_distance_sq, mae_v, mean_jsd
from kgsynth.resampling import METRICS, bootstrap_delta, metric_ci
from kgsynth.tabular import CategoricalTable, DisorderSchema

PLAIN = {"jsd": mean_jsd, "mae_v": lambda r, s: mae_v(r, s)[0], "ed2": energy_distance_sq}


def tables(seed, n=40, n_items=3):
    rng = random.Random(seed)
    s = make_schema(n_items)
    return random_table(rng, s, n), random_table(rng, s, n), random_table(rng, s, n)


@pytest.mark.parametrize("metric", METRICS)
def test_point_matches_plain_metrics(metric):
    real, a, b = tables(1)
    est = bootstrap_delta(real, a, b, metric, 100, seed=3)
    f = PLAIN[metric]
    assert est.point == pytest.approx(f(real, a) - f(real, b), abs=1e-12)
    assert est.ci_low <= est.ci_high
    assert (est.metric_name, est.n_resamples, est.seed) == (metric, 100, 3)


@pytest.mark.parametrize("metric", METRICS)
def test_identical_variants(metric):
    real, a, _ = tables(2)
    est = bootstrap_delta(real, a, a, metric, 300, seed=11)
    assert est.point == 0
    assert est.ci_low <= 0 <= est.ci_high


def test_strictly_better_variant_excludes_zero():
    s = DisorderSchema("toy", ("it1", "it2"), demographic_columns=())
    rng = random.Random(0)
    real = CategoricalTable(s, tuple((rng.choice("01234"), rng.choice("01234")) for _ in range(200)))
    far = CategoricalTable(s, tuple(("4", "4") for _ in range(200)))
    est = bootstrap_delta(real, far, real, "jsd", 500, seed=5)
    assert est.point == pytest.approx(mean_jsd(real, far), abs=1e-12)
    assert est.point > 0
    assert est.ci_low > 0


def test_deterministic():
    real, a, b = tables(3)
    assert bootstrap_delta(real, a, b, "mae_v", 150, seed=9) == bootstrap_delta(real, a, b, "mae_v", 150, seed=9)
    assert bootstrap_delta(real, a, b, "jsd", 150, seed=9) != bootstrap_delta(real, a, b, "jsd", 150, seed=10)


def test_point_antisymmetric():
    real, a, b = tables(4)
    for metric in METRICS:
        assert bootstrap_delta(real, a, b, metric, 100, 1).point == -bootstrap_delta(real, b, a, metric, 100, 1).point


def test_errors():
    real, a, b = tables(5)
    with pytest.raises(InsufficientResamples):
        bootstrap_delta(real, a, b, "jsd", 99)
    other = CategoricalTable(make_schema(2), ())
    with pytest.raises(SchemaMismatch):
        bootstrap_delta(real, a, other, "jsd", 100)
    with pytest.raises(ValueError):
        bootstrap_delta(real, a, b, "auc", 100)


class TestMetricCI:
    def test_self_is_degenerate(self):
        real, _, _ = tables(6)
        est = metric_ci(real, real, "jsd", 200, seed=1)
        assert est.point == 0 and est.ci_low == 0

    def test_deterministic(self):
        real, a, _ = tables(7)
        assert metric_ci(real, a, "ed2", 1000, 4) == metric_ci(real, a, "ed2", 1000, 4)

    def test_unequal_sizes(self):
        rng = random.Random(8)
        s = make_schema(2)
        est = metric_ci(random_table(rng, s, 30), random_table(rng, s, 17), "mae_v", 100, 0)
        assert est.ci_low <= est.ci_high

    def test_brackets_plugin_estimate(self):
        # Real and synthetic come from different PMFs; at zero divergence the
        # plug-in bias alone can push the whole interval above the estimate.
        s = DisorderSchema("toy", ("it1", "it2"), demographic_columns=())
        inside = 0
        for trial in range(40):
            rng = np.random.default_rng(trial)
            real = rng.choice(5, size=(60, 2), p=[0.3, 0.3, 0.2, 0.1, 0.1])
            syn = rng.choice(5, size=(60, 2), p=[0.1, 0.1, 0.2, 0.3, 0.3])
            est = metric_ci(
                CategoricalTable(s, tuple(tuple(map(str, r)) for r in real)),
                CategoricalTable(s, tuple(tuple(map(str, r)) for r in syn)),
                "jsd", 200, seed=trial,
            )
            inside += est.ci_low <= est.point <= est.ci_high
        assert inside / 40 >= 0.9
