import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from holopart import presets
from holopart.circle import AnalyticBoundaryFunction, evaluate_interior, outer_from_modulus
from holopart.engine import (
    DiscTable,
    EnsembleFailure,
    PathConfig,
    PathEnsemble,
    UnderfilledBins,
    batch_values,
    concat_results,
    crossing_ladder,
    eval_along,
    lift_M,
    map_ensemble,
    mc_expectation,
    project_N,
    sample_path,
    simulate_batch,
    with_start,
)
from holopart.persist import load_ensemble, save_ensemble, save_records
from holopart.rng import complex_normals, derive_key, uniforms

N = 4096


# -- keyed streams -----------------------------------------------------------------------


def test_uniforms_are_pure_and_open():
    a = uniforms(7, np.arange(1000), 3)
    b = uniforms(7, np.arange(1000), 3)
    assert np.array_equal(a, b)
    assert a.min() > 0 and a.max() < 1
    assert not np.array_equal(a, uniforms(7, np.arange(1000), 4))
    assert not np.array_equal(a, uniforms(8, np.arange(1000), 3))


def test_uniforms_pass_ks():
    u = uniforms(derive_key(1, "ks"), np.arange(50_000), 0)
    assert stats.kstest(u, "uniform").pvalue > 0.01


def test_complex_normals_moments():
    g = complex_normals(derive_key(2, "n"), np.arange(100_000), 0)
    assert abs(g.mean()) < 0.02
    assert np.mean(np.abs(g) ** 2) == pytest.approx(2.0, rel=0.02)
    assert abs(np.mean(g * g)) < 0.02  # circular symmetry


def test_derive_key_separates_tags():
    assert derive_key(1, "path") != derive_key(1, "exit")
    assert derive_key(1, "path") == derive_key(1, "path")


# -- paths -------------------------------------------------------------------------------


def test_path_config_validation():
    with pytest.raises(ValueError):
        PathConfig(exit_band=0.1)
    with pytest.raises(ValueError):
        PathConfig(max_steps=100)
    with pytest.raises(ValueError):
        PathConfig(h_min=0)
    with pytest.raises(ValueError):
        PathConfig(start=0.9999)


def test_sample_path_is_deterministic_and_ends_on_circle():
    cfg = PathConfig(seed=5)
    p1, p2 = sample_path(cfg, 17), sample_path(cfg, 17)
    assert np.array_equal(p1.points, p2.points)
    assert np.all(np.abs(p1.points[:-1]) < 1)
    assert abs(abs(p1.points[-1]) - 1) < 1e-12
    assert np.all(np.diff(p1.times) >= 0)
    assert 0 <= p1.exit_angle < 2 * np.pi


def test_path_depends_only_on_seed_and_index():
    cfg = PathConfig(seed=5)
    batch = simulate_batch(cfg, np.arange(10, 20))
    alone = sample_path(cfg, 14)
    assert np.array_equal(batch.path(4).points, alone.points)


def test_exit_angles_uniform_from_centre(small_ensemble):
    ang = np.concatenate([b.exit_angles for b in small_ensemble.batches()])
    assert stats.kstest(ang / (2 * np.pi), "uniform").pvalue > 0.01


def test_exit_angles_follow_poisson_kernel():
    ens = PathEnsemble(with_start(PathConfig(seed=3), 0.5), 8000)
    ang = np.concatenate([b.exit_angles for b in ens.batches()])
    bins = 24
    edges = np.linspace(0, 2 * np.pi, bins + 1)
    obs, _ = np.histogram(ang, edges)
    # integral of the Poisson kernel at r = 0.5 over each bin, via the harmonic-measure CDF
    r = 0.5
    cdf = lambda t: (t + 2 * np.arctan2(r * np.sin(t), 1 - r * np.cos(t))) / (2 * np.pi)  # noqa: E731
    expected = np.diff([cdf(e) for e in edges]) * ang.size
    assert stats.chisquare(obs, expected).pvalue > 0.01


# -- tables and martingales ------------------------------------------------------------------


def test_disc_table_matches_power_series():
    F = outer_from_modulus(presets.two_arc(N))
    table = DiscTable(F)
    r = np.random.default_rng(0)
    z = np.sqrt(r.uniform(0, 0.995**2, 500)) * np.exp(2j * np.pi * r.uniform(size=500))
    exact = evaluate_interior(F, z)
    assert np.max(np.abs(table(z) - exact)) / np.abs(F.values).max() < 1e-3


def test_eval_along_constant():
    path = sample_path(PathConfig(seed=1), 0)
    vals = eval_along(path, AnalyticBoundaryFunction.constant(2.5, 256))
    assert np.max(np.abs(vals - 2.5)) < 1e-12


def test_martingale_at_centre(small_ensemble):
    for fn, target in ((lambda z: z, 0.0), (np.exp, 1.0)):
        F = AnalyticBoundaryFunction.from_holomorphic(fn, N)
        table = DiscTable(F)
        vals = np.concatenate([table.boundary(b.exit_angles) for b in small_ensemble.batches()])
        assert mc_expectation(vals).within(target, 4.0)


def test_optional_stopping_on_ladder(small_ensemble):
    Psi = outer_from_modulus(presets.two_arc(N))
    table = DiscTable(Psi)
    stopped = []
    for b in small_ensemble.batches():
        from holopart.engine import ladder_batch

        r = ladder_batch(b, table, [4.0], 2, small_ensemble.config)
        stopped.append(r["values_4.0"])
    sv = np.concatenate(stopped)
    psi0 = evaluate_interior(Psi, 0.0)
    for j in range(sv.shape[1]):
        assert mc_expectation(sv[:, j]).within(psi0, 4.0)


def test_ladder_constant_has_no_crossings():
    path = sample_path(PathConfig(seed=1), 3)
    lad = crossing_ladder(path, AnalyticBoundaryFunction.constant(1.0, 256), 2.0, 4)
    assert lad.realized.tolist() == [True, False, False, False, False]
    assert np.max(np.abs(lad.increments)) < 1e-14
    assert lad.stopped_values[0] == pytest.approx(1.0)


def test_ladder_invariants():
    Psi = outer_from_modulus(presets.two_arc(N))
    cfg = PathConfig(seed=9)
    table = DiscTable(Psi)
    for k in range(40):
        path = sample_path(cfg, k)
        lad = crossing_ladder(path, Psi, 2.0, 5, cfg, table)
        # telescoping
        assert abs(lad.stopped_values[0] + lad.increments.sum() - lad.exit_value) < 1e-12
        # crossing levels and times
        real = np.flatnonzero(lad.realized)
        assert lad.crossing_times[0] == 0.0
        assert np.all(np.diff(lad.crossing_times[real]) >= 0)
        for j in real[real >= 1]:
            m = abs(lad.stopped_values[j]) / 2.0**j
            assert 1 - 1e-12 <= m <= 1 + lad.overshoot_factor + 1e-12


def test_highest_level_matches_dense_reevaluation():
    """Highest crossed level equals floor(log_M sup|Psi|) recomputed with the power series."""
    Psi = outer_from_modulus(presets.two_arc(N))
    cfg = PathConfig(seed=4)
    table = DiscTable(Psi)
    M = 4.0
    agree = 0
    total = 300
    for k in range(total):
        path = sample_path(cfg, k)
        lad = crossing_ladder(path, Psi, M, 4, cfg, table)
        pts = path.points[:-1]
        sup = max(np.abs(evaluate_interior(Psi, pts[np.abs(pts) < 1 - 1e-9])).max(),
                  abs(table.boundary(path.exit_angle)))
        dense = int(np.floor(np.log(sup) / np.log(M))) if sup > 1 else 0
        agree += lad.highest_level == max(dense, 0)
    assert agree / total >= 0.97


# -- Monte Carlo helpers, lift and projection ---------------------------------------------------


def test_mc_expectation_constant_and_invalid_paths():
    r = mc_expectation(np.ones(100))
    assert r.mean == 1.0 and r.stderr == 0.0
    valid = np.ones(100, dtype=bool)
    valid[:5] = False
    with pytest.raises(EnsembleFailure):
        mc_expectation(np.ones(100), valid)


def test_lift_is_multiplicative_and_norm_one(small_ensemble):
    f = AnalyticBoundaryFunction.from_holomorphic(lambda z: 1 + 0.5 * z, N)
    g = AnalyticBoundaryFunction.from_holomorphic(np.exp, N)
    fg = AnalyticBoundaryFunction.measured(f.values * g.values)
    ang = np.concatenate([b.exit_angles for b in small_ensemble.batches()])
    Mf, Mg, Mfg = lift_M(f)(ang), lift_M(g)(ang), lift_M(fg)(ang)
    assert np.max(np.abs(Mf * Mg - Mfg)) < 1e-5
    one = lift_M(AnalyticBoundaryFunction.constant(1.0, N))(ang)
    assert np.max(np.abs(one - 1)) < 1e-14
    assert mc_expectation(np.abs(Mg)).within(np.mean(np.abs(g.values)), 4.0)


def test_project_constant(small_ensemble):
    ang = np.concatenate([b.exit_angles for b in small_ensemble.batches()])
    proj = project_N(np.full(ang.size, 2 - 1j), ang, N, bins=32)
    assert np.max(np.abs(proj.function.values - (2 - 1j))) < 1e-12


def test_project_recovers_lift_and_module_identity(small_ensemble):
    ang = np.concatenate([b.exit_angles for b in small_ensemble.batches()])
    f = AnalyticBoundaryFunction.from_holomorphic(lambda z: 1 + 0.3 * z**2, N)
    F = AnalyticBoundaryFunction.from_holomorphic(np.exp, N)
    bins = 32
    pf = project_N(lift_M(F)(ang), ang, N, bins=bins)
    err = np.sqrt(np.mean(np.abs(pf.function.values - F.values) ** 2))
    assert err <= 3 * pf.binning_error
    lhs = project_N(lift_M(f)(ang) * lift_M(F)(ang), ang, N, bins=bins)
    rhs = f.values * pf.function.values
    tol = 3 * (lhs.binning_error + np.abs(f.values).max() * pf.binning_error)
    assert np.sqrt(np.mean(np.abs(lhs.function.values - rhs) ** 2)) <= tol


def test_project_underfilled_bins():
    with pytest.raises(UnderfilledBins):
        project_N(np.ones(100), np.linspace(0, 6, 100), 64, bins=16)


# -- parallel map and persistence ------------------------------------------------------------------


def _exit_chunk(batch, payload):
    return {"angle": batch.exit_angles, "len": np.diff(batch.offsets)}


def test_map_ensemble_independent_of_workers():
    ens = PathEnsemble(PathConfig(seed=2), 3000, chunk=700)
    one = concat_results(map_ensemble(ens, _exit_chunk, workers=1))
    four = concat_results(map_ensemble(ens, _exit_chunk, workers=4))
    assert np.array_equal(one["angle"], four["angle"])
    assert np.array_equal(one["len"], four["len"])


@given(st.integers(1, 3000), st.integers(0, 2**31 - 1))
def test_chunking_does_not_change_paths(chunk, seed):
    cfg = PathConfig(seed=seed)
    a = PathEnsemble(cfg, 40, chunk=chunk)
    angles = np.concatenate([b.exit_angles for b in a.batches()])
    ref = simulate_batch(cfg, np.arange(40)).exit_angles
    assert np.array_equal(angles, ref)


def test_batch_values_uses_boundary_at_exit():
    F = AnalyticBoundaryFunction.from_holomorphic(np.exp, N)
    b = simulate_batch(PathConfig(seed=1), np.arange(5))
    v = batch_values(b, DiscTable(F))
    assert np.max(np.abs(v[b.ends] - np.exp(b.exit_points))) < 1e-6


def test_persist_round_trip(tmp_path):
    ens = PathEnsemble(PathConfig(seed=8, start=0.1 + 0.2j), 50)
    ang = np.concatenate([b.exit_angles for b in ens.batches()])
    valid = np.ones(50, dtype=bool)
    valid[3] = False
    save_ensemble(tmp_path / "e.bin", ens, ang, valid)
    st_ = load_ensemble(tmp_path / "e.bin")
    assert st_.ensemble.same_paths(ens)
    assert np.array_equal(st_.exit_angle, ang)
    assert np.array_equal(st_.valid, valid)
    assert st_.stopped is None
    # same inputs give identical bytes
    save_ensemble(tmp_path / "f.bin", ens, ang, valid)
    assert (tmp_path / "e.bin").read_bytes() == (tmp_path / "f.bin").read_bytes()


def test_persist_records_round_trip(tmp_path):
    from holopart.partition import run_ladders

    ens = PathEnsemble(PathConfig(seed=8), 200)
    Psi = outer_from_modulus(presets.two_arc(256))
    rec = run_ladders(Psi, [4.0], {4.0: 2}, ens)
    save_records(tmp_path / "r.bin", ens, rec, 4.0)
    st_ = load_ensemble(tmp_path / "r.bin")
    assert st_.M == 4.0
    assert np.array_equal(st_.stopped, rec.stopped[4.0])
    assert np.array_equal(st_.realized, rec.realized[4.0])
    with open(tmp_path / "bad.bin", "wb") as fh:
        fh.write(b"NOTMAGIC")
    with pytest.raises(ValueError):
        load_ensemble(tmp_path / "bad.bin")
