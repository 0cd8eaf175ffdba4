import warnings

import numpy as np
import pytest

from cgpp import load_preset, sample_instance
from cgpp.generators import SpecError, n_regimes, preset_names, spec_from_dict, type_pmf
from cgpp.model import format_instance


def test_uniform_frequencies():
    spec = spec_from_dict({"kind": "uniform", "lo": 1, "hi": 99})
    inst = sample_instance(spec, 100, 20000, seed=1)
    counts = np.bincount(inst.item_sizes(), minlength=100)[1:]
    p = 1 / 99
    se = np.sqrt(20000 * p * (1 - p))
    within = np.abs(counts - 20000 * p) <= 3 * se
    assert within.mean() >= 0.95


def test_degenerate_categorical():
    spec = spec_from_dict({"kind": "categorical", "probs": {10: 1.0}})
    inst = sample_instance(spec, 100, 50, seed=3)
    assert set(inst.item_sizes().tolist()) == {10}


def test_same_seed_same_bytes():
    spec, B = load_preset("Normal-B")
    a = format_instance(sample_instance(spec, B, 3000, seed=9))
    b = format_instance(sample_instance(spec, B, 3000, seed=9))
    c = format_instance(sample_instance(spec, B, 3000, seed=10))
    assert a == b and a != c


def test_pmfs_are_normalised():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in preset_names():
            spec, B = load_preset(name)
            parts = spec.parts if spec.kind == "periodic" else (spec,)
            for part in parts:
                sizes, probs = part.pmf()
                assert probs.sum() == pytest.approx(1.0)
                assert np.all(probs >= 0) and sizes.min() >= 1 and sizes.max() < B


def test_periodic_regimes():
    spec, B = load_preset("Binomial-PS")
    assert spec.section_size == 2000
    inst = sample_instance(spec, B, 9000, seed=4)
    assert n_regimes(spec, 9000) == 5
    means = [inst.item_sizes()[k * 2000:(k + 1) * 2000].mean() for k in range(4)]
    expected = [1 + 98 * p.params["p"] for p in spec.parts]
    assert means == pytest.approx(expected, abs=1.0)
    assert np.all(np.diff(means) > 0)
    # the 5th regime cycles back to the first p
    assert inst.item_sizes()[8000:].mean() == pytest.approx(expected[0], abs=1.0)


def test_type_table_covers_support():
    spec, B = load_preset("Uniform-C")
    inst = sample_instance(spec, B, 100, seed=0)
    assert inst.sizes.tolist() == [90, 80, 70, 60, 50, 40, 30, 20, 10]
    assert type_pmf(spec, inst) == pytest.approx(np.full(9, 1 / 9))


def test_rounded_normal_pmf():
    from scipy import stats
    spec = spec_from_dict({"kind": "normal", "mu": 35, "sigma": 50 / 6, "lo": 10, "hi": 59})
    sizes, probs = spec.pmf()
    assert probs[sizes == 35][0] == pytest.approx(stats.norm.cdf(35.5, 35, 50 / 6) - stats.norm.cdf(34.5, 35, 50 / 6))
    assert probs[0] == pytest.approx(stats.norm.cdf(10.5, 35, 50 / 6))


@pytest.mark.parametrize("bad", [
    {"kind": "uniform", "lo": 0, "hi": 5},
    {"kind": "uniform", "lo": 5, "hi": 4},
    {"kind": "normal", "mu": 5, "sigma": 0, "lo": 1, "hi": 9},
    {"kind": "nope"},
    {"kind": "mixture", "parts": []},
])
def test_bad_specs(bad):
    with pytest.raises(SpecError):
        spec_from_dict(bad)


def test_sizes_must_fit():
    spec = spec_from_dict({"kind": "uniform", "lo": 1, "hi": 100})
    with pytest.raises(SpecError):
        sample_instance(spec, 100, 10, seed=0)


def test_placeholder_presets_warn():
    with pytest.warns(UserWarning):
        load_preset("Burke-4")
