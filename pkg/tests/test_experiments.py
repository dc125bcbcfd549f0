import numpy as np
import pytest

from raarlab.algorithms import RelaxationSchedule
from raarlab.grid import hermitian_flip, norm, read_pgm
from raarlab.projections import error_metric, to_db
from raarlab.experiments import (
    AlgorithmConfig,
    ExperimentSpec,
    NoiseConfig,
    TrialsResult,
    add_noise,
    aggregate_csv_text,
    noise_field,
    realized_snr_db,
    run_trials,
    snapshot,
    symmetric_magnitude,
    synthesize_data,
    synthetic_object,
)


def small_spec(**kw):
    base = dict(object_size=6, pad_dims=(24, 24), support_dims=(10, 10), trials=3,
                iterations=8, seed=5,
                configs=(AlgorithmConfig("raar", RelaxationSchedule.smooth(0.75)),
                         AlgorithmConfig("hio", RelaxationSchedule.static(0.87))))
    base.update(kw)
    return ExperimentSpec(**base)


def test_one_site_synthesis():
    spec = ExperimentSpec(object=np.array([[2.0]]), pad_dims=(1, 1), support_dims=(1, 1))
    data = synthesize_data(spec)
    np.testing.assert_allclose(data.magnitude, [[2.0]])
    assert norm(data.initial_guess) == pytest.approx(2.0)


def test_synthesis_layout():
    data = synthesize_data(ExperimentSpec())
    assert data.object.shape == (128, 128) and data.support.sum() == 64 * 64
    assert np.all(data.object[~data.support] == 0) and data.object.min() >= 0
    assert np.array_equal(data.magnitude, hermitian_flip(data.magnitude))
    np.testing.assert_array_equal(data.initial_guess > 0, data.support)
    assert norm(data.initial_guess) == pytest.approx(norm(data.magnitude))
    unit = synthesize_data(ExperimentSpec(init_norm="unit")).initial_guess
    assert norm(unit) == pytest.approx(1.0)


def test_synthetic_object_is_deterministic():
    np.testing.assert_array_equal(synthetic_object(38, 4), synthetic_object(38, 4))
    obj = synthetic_object(38, 4)
    assert obj.shape == (38, 38) and obj.min() == 0 and obj.max() == 1


def test_translated_object_same_data():
    obj = np.zeros((20, 20))
    obj[4:9, 6:10] = np.random.default_rng(0).random((5, 4))
    np.testing.assert_allclose(symmetric_magnitude(obj), symmetric_magnitude(np.roll(obj, (3, 2), (0, 1))),
                               atol=1e-13)


def test_object_outside_support_rejected():
    with pytest.raises(ValueError):
        synthesize_data(ExperimentSpec(object_size=70))


def test_noise_sigma_zero_and_symmetry():
    m = synthesize_data(small_spec()).magnitude
    assert np.array_equal(add_noise(m, NoiseConfig(0.0, 1)), m)
    noisy = add_noise(m, NoiseConfig.from_snr(m, 20.0, seed=3))
    assert np.array_equal(noisy, hermitian_flip(noisy)) and noisy.min() >= 0
    with pytest.raises(ValueError):
        NoiseConfig(-1.0)


@pytest.mark.parametrize("shape", [(128, 128), (15, 16)])
def test_noise_calibration(shape):
    m = np.random.default_rng(0).random(shape)
    m = 0.5 * (m + hermitian_flip(m))
    cfg = NoiseConfig.from_snr(m, 34.0)
    snrs = [realized_snr_db(m, noise_field(shape, NoiseConfig(cfg.sigma, [9, k]))) for k in range(1000)]
    assert abs(np.mean(snrs) - 34.0) <= 0.1


def test_error_metric_cases():
    # two-site example where P_M u = u = [2, -1]
    u = np.array([2.0, -1.0])
    m = np.abs(np.fft.fft(u, norm="ortho"))
    val = error_metric(u, m, np.array([True, False]))
    assert val == pytest.approx(0.2)
    assert to_db(val) == pytest.approx(-6.99, abs=0.01)
    nonneg = np.array([1.0, 0.5, 0.0, 0.0])
    D = np.array([True, True, False, False])
    mn = symmetric_magnitude(nonneg)
    assert error_metric(nonneg, mn, D) <= 1e-24
    assert error_metric(3 * u, 3 * m, np.array([True, False])) == pytest.approx(val)
    with pytest.raises(ValueError):
        error_metric(u, np.zeros(2), np.array([True, False]))


def test_single_trial_single_step_matches_run():
    from raarlab.algorithms import run
    from raarlab.experiments import trial_noise
    spec = small_spec(trials=1, iterations=1, smoothed=False,
                      configs=(AlgorithmConfig("raar", RelaxationSchedule.static(0.7)),))
    data = synthesize_data(spec)
    res = run_trials(spec, data=data)
    m = trial_noise(data, spec, 0)
    direct = run("raar", data.initial_guess, m, data.support, RelaxationSchedule.static(0.7), 1)
    assert res.mean("raar_b0.7")[0] == direct.metrics[0]


def test_trials_deterministic_and_order_independent():
    spec = small_spec()
    a = run_trials(spec)
    b = run_trials(spec, workers=2)
    assert aggregate_csv_text(a) == aggregate_csv_text(b)
    shuffled = TrialsResult({k: list(reversed(v)) for k, v in a.records.items()})
    for lab in a.labels:
        assert np.array_equal(shuffled.mean(lab), a.mean(lab))
        assert len(a.records[lab]) == spec.trials
        assert all(len(r.values) == spec.iterations for r in a.records[lab])


def test_noiseless_traces_identical_across_trials():
    spec = small_spec(snr_db=np.inf)
    res = run_trials(spec)
    for recs in res.records.values():
        for r in recs[1:]:
            np.testing.assert_array_equal(r.values, recs[0].values)
            assert np.all(np.isfinite(r.values))


def test_aggregate_csv_layout():
    text = aggregate_csv_text(run_trials(small_spec()), header=["a = 1"])
    lines = text.splitlines()
    assert lines[0] == "# a = 1"
    assert lines[1] == "iteration,raar_smooth_b0.75:mean_E,raar_smooth_b0.75:mean_E_db,hio_b0.87:mean_E,hio_b0.87:mean_E_db"
    assert len(lines) == 2 + 8


def test_snapshot(tmp_path):
    data = synthesize_data(small_spec())
    const = np.full((24, 24), 3.0)
    paths = snapshot(const, 35, data.magnitude, data.support, tmp_path, prefix="c", png=True)
    assert [p.rsplit("/", 1)[1] for p in paths] == ["c_it35.pgm", "c_it35.png", "c_it35_shadow.pgm",
                                                   "c_it35_shadow.png"]
    img = read_pgm(paths[0])
    assert np.all(img == img[0, 0])
    with pytest.raises(ValueError):
        snapshot(np.ones(5), 1, np.ones(5), np.ones(5, bool), tmp_path)


def test_object_pgm_round_trip(tmp_path):
    from raarlab.grid import write_pgm
    obj = np.rint(synthetic_object(38, 1) * 65535)
    write_pgm(tmp_path / "o.pgm", obj)
    np.testing.assert_array_equal(read_pgm(tmp_path / "o.pgm"), obj)
