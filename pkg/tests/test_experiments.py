"""Experiment registry contract."""

import pytest

from idlab import EXPERIMENTS, ExperimentResult, default_params, experiment_info, run_experiment


def test_registry_has_twelve_entries():
    assert len(EXPERIMENTS) == 12


def test_every_entry_documents_itself():
    for name in EXPERIMENTS:
        info = experiment_info(name)
        assert info["anchor"].strip()
        assert isinstance(info["defaults"], dict)
        assert info["columns"]


def test_default_params_returns_a_copy():
    a = default_params("kr-identity")
    a["n"] = -1
    assert default_params("kr-identity") != a


def test_unknown_name_raises_before_computing():
    with pytest.raises(KeyError):
        run_experiment("definitely-not-registered")


def test_param_override_merges_with_defaults():
    res = run_experiment("fa-rotation", {"mu1": [2.0, 0.0]}, seed=3)
    assert isinstance(res, ExperimentResult)
    assert res.passed


def test_same_seed_same_rows():
    a = run_experiment("task-shift", seed=5)
    b = run_experiment("task-shift", seed=5)
    assert a.to_dict() == b.to_dict()


def test_jobs_do_not_change_results():
    serial = run_experiment("strong-vae", {"n_seeds": 3, "min_passes": 3}, seed=9, jobs=1)
    threaded = run_experiment("strong-vae", {"n_seeds": 3, "min_passes": 3}, seed=9, jobs=3)
    assert serial.to_dict() == threaded.to_dict()
