import numpy as np
import pytest

from randonet import linalg
from randonet.embeddings import EmbeddingSpec, sample_jl, sample_rffn, sample_tanh_trunk
from randonet.harness import dataset_for, mse, split
from randonet.model import (
    AlignedDataset,
    TrainingError,
    UnalignedDataset,
    evaluate,
    explode_aligned,
    load_model,
    save_model,
    train_aligned,
    train_unaligned,
)
from randonet.problems import case_config


def toy_dataset(m=10, n=10, s=5, seed=0):
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, m)
    y = np.linspace(0.0, 1.0, n)
    return AlignedDataset(x=x, y=y, U=rng.standard_normal((m, s)), V=rng.standard_normal((n, s)))


def toy_maps(m=10, n_feat=8, m_feat=8, seed=1):
    trunk = sample_tanh_trunk((0.0, 1.0), n_feat, seed=(seed, 0))
    branch = sample_jl(m, m_feat, seed=(seed, 1))
    return trunk, branch


class TestDatasetTypes:
    def test_aligned_validation(self):
        x = np.linspace(0, 1, 4)
        with pytest.raises(ValueError, match="increasing"):
            AlignedDataset(x=x[::-1], y=x, U=np.zeros((4, 2)), V=np.zeros((4, 2)))
        with pytest.raises(ValueError, match="shapes"):
            AlignedDataset(x=x, y=x, U=np.zeros((4, 2)), V=np.zeros((4, 3)))
        with pytest.raises(ValueError, match="non-finite"):
            AlignedDataset(x=x, y=x, U=np.full((4, 1), np.nan), V=np.zeros((4, 1)))

    def test_unaligned_validation(self):
        with pytest.raises(ValueError, match="sample counts"):
            UnalignedDataset(U=np.zeros((3, 4)), Y=np.zeros((1, 4)), V=np.zeros(5))


class TestTrainAligned:
    def test_zero_targets_give_zero_readout(self):
        ds = toy_dataset()
        ds = AlignedDataset(x=ds.x, y=ds.y, U=ds.U, V=np.zeros_like(ds.V))
        trunk, branch = toy_maps()
        for solver in ("cod", "tsvd", "tikhonov"):
            model = train_aligned(ds, trunk, branch, solver=solver)
            np.testing.assert_array_equal(model.readout, np.zeros((8, 8)))

    def test_identity_operator_self_consistency(self):
        # U = V on the same grid: held-out training column reproduced.
        rng = np.random.default_rng(2)
        m = 12
        x = np.linspace(0, 1, m)
        u_mat = rng.standard_normal((m, 30))
        ds = AlignedDataset(x=x, y=x, U=u_mat, V=u_mat)
        trunk = sample_tanh_trunk((0.0, 1.0), 40, seed=(3, 0))
        branch = sample_jl(m, m, seed=(3, 1))
        model = train_aligned(ds, trunk, branch, solver="cod")
        probe = u_mat[:, 7]
        pred = evaluate(model, probe, x)
        assert np.linalg.norm(pred - probe) <= 1e-8

    def test_accepts_specs_and_maps(self):
        ds = toy_dataset()
        trunk_spec = EmbeddingSpec(kind="tanh", input_dim=1, feature_dim=8, seed=(4, 0),
                                   domain=(0.0, 1.0))
        branch_spec = EmbeddingSpec(kind="jl", input_dim=10, feature_dim=8, seed=(4, 1))
        a = train_aligned(ds, trunk_spec, branch_spec)
        b = train_aligned(ds, *toy_maps(seed=4))
        np.testing.assert_array_equal(a.readout, b.readout)
        with pytest.raises(TypeError):
            train_aligned(ds, "trunk", branch_spec)

    def test_input_dim_checks(self):
        ds = toy_dataset()
        trunk, branch = toy_maps()
        bad_branch = sample_jl(9, 8, seed=5)
        with pytest.raises(ValueError, match="sensor count"):
            train_aligned(ds, trunk, bad_branch)
        bad_trunk = sample_tanh_trunk((0.0, 1.0), 8, seed=5, input_dim=2)
        with pytest.raises(ValueError, match="trunk input_dim"):
            train_aligned(ds, bad_trunk, branch)

    def test_association_orders_agree(self):
        # n <= s and n > s take different association orders.
        trunk, branch = toy_maps()
        wide = toy_dataset(s=25, seed=6)
        tall = toy_dataset(s=4, seed=7)
        for ds in (wide, tall):
            model = train_aligned(ds, trunk, branch, solver="tsvd")
            t_mat = trunk.apply(ds.y[None, :]).T
            b_mat = branch.apply(ds.U)
            ft = linalg.tsvd_factorize(t_mat)
            fb = linalg.tsvd_factorize(b_mat)
            w_to = linalg.tsvd_pinv_apply(
                fb, linalg.tsvd_pinv_apply(ft, ds.V, side="left"), side="right"
            )
            w_ot = linalg.tsvd_pinv_apply(
                ft, linalg.tsvd_pinv_apply(fb, ds.V, side="right"), side="left"
            )
            assert np.linalg.norm(w_to - w_ot) / np.linalg.norm(w_to) <= 1e-10
            assert np.linalg.norm(model.readout - w_to) / np.linalg.norm(w_to) <= 1e-10

    def test_non_finite_solve_raises_with_diagnostics(self, monkeypatch):
        ds = toy_dataset()
        trunk, branch = toy_maps()

        def poisoned(*args, **kwargs):
            return np.full((8, 5), np.inf)

        monkeypatch.setattr("randonet.model.linalg.cod_pinv_apply", poisoned)
        with pytest.raises(TrainingError, match="sigma_max"):
            train_aligned(ds, trunk, branch, solver="cod")

    def test_metadata_recorded(self):
        model = train_aligned(toy_dataset(), *toy_maps(), solver="tsvd", tol=1e-10)
        md = model.train_metadata
        assert md["solver"] == "tsvd"
        assert md["tol"] == 1e-10
        assert md["n_train_functions"] == 5
        assert md["train_seconds"] >= 0.0


class TestEvaluate:
    def test_zero_readout(self):
        ds = toy_dataset()
        trunk, branch = toy_maps()
        model = train_aligned(
            AlignedDataset(x=ds.x, y=ds.y, U=ds.U, V=np.zeros_like(ds.V)), trunk, branch
        )
        out = evaluate(model, ds.U[:, 0], [0.1, 0.9])
        np.testing.assert_array_equal(out, np.zeros(2))

    def test_one_hot_readout_decomposes_exactly(self):
        from dataclasses import replace

        trunk, branch = toy_maps()
        model = train_aligned(toy_dataset(), trunk, branch)
        w = np.zeros((8, 8))
        w[3, 5] = 1.0
        model = replace(model, readout=w)
        u = np.random.default_rng(8).standard_normal(10)
        ys = np.array([0.2, 0.7])
        expected = trunk.apply(ys[None, :])[3] * branch.apply(u)[5]
        np.testing.assert_array_equal(evaluate(model, u, ys), expected)

    def test_bilinearity_in_readout(self):
        from dataclasses import replace

        trunk, branch = toy_maps()
        base = train_aligned(toy_dataset(), trunk, branch)
        rng = np.random.default_rng(9)
        w1 = rng.standard_normal((8, 8))
        w2 = rng.standard_normal((8, 8))
        u = rng.standard_normal((10, 3))
        ys = np.linspace(0, 1, 6)
        p_sum = evaluate(replace(base, readout=w1 + w2), u, ys)
        p1 = evaluate(replace(base, readout=w1), u, ys)
        p2 = evaluate(replace(base, readout=w2), u, ys)
        np.testing.assert_allclose(p_sum, p1 + p2, rtol=1e-12, atol=1e-13)

    def test_batched_matches_single(self):
        trunk, branch = toy_maps()
        model = train_aligned(toy_dataset(), trunk, branch)
        u = np.random.default_rng(10).standard_normal((10, 4))
        ys = np.linspace(0, 1, 5)
        batch = evaluate(model, u, ys)
        for i in range(4):
            np.testing.assert_allclose(
                batch[:, i], evaluate(model, u[:, i], ys), rtol=1e-12, atol=1e-15
            )


class TestUnaligned:
    def test_single_sample_scalar_weight(self):
        trunk = sample_tanh_trunk((0.0, 1.0), 1, seed=(11, 0))
        branch = sample_jl(3, 1, seed=(11, 1))
        u = np.array([[0.4], [1.0], [-0.2]])
        yq = np.array([[0.3]])
        v = np.array([2.0])
        t_val = trunk.apply(yq).item()
        b_val = branch.apply(u).item()
        assert t_val * b_val != 0.0
        model = train_unaligned(UnalignedDataset(U=u, Y=yq, V=v), trunk, branch)
        assert model.readout[0, 0] == pytest.approx(2.0 / (t_val * b_val))

    def test_zero_outputs_give_zero_readout(self):
        ds = toy_dataset()
        ex = explode_aligned(AlignedDataset(x=ds.x, y=ds.y, U=ds.U, V=np.zeros_like(ds.V)))
        trunk, branch = toy_maps()
        model = train_unaligned(ex, trunk, branch)
        np.testing.assert_array_equal(model.readout, np.zeros((8, 8)))

    @pytest.mark.parametrize("solver", ["cod", "tsvd", "tikhonov"])
    def test_matches_aligned_training_on_tiny_instance(self, solver):
        ds = toy_dataset(m=10, n=10, s=5, seed=12)
        trunk, branch = toy_maps(seed=13)
        aligned = train_aligned(ds, trunk, branch, solver=solver)
        unaligned = train_unaligned(explode_aligned(ds), trunk, branch, solver=solver)
        pred_a = evaluate(aligned, ds.U, ds.y)
        pred_u = evaluate(unaligned, ds.U, ds.y)
        rel = np.linalg.norm(pred_a - pred_u) / np.linalg.norm(pred_a)
        assert rel <= 1e-6

    def test_memory_guard(self):
        ds = toy_dataset()
        trunk, branch = toy_maps()
        with pytest.raises(ValueError, match="budget"):
            train_unaligned(explode_aligned(ds), trunk, branch, max_collocation_entries=10)


class TestExplodeAligned:
    def test_single_function_three_locations(self):
        x = np.linspace(0, 1, 2)
        y = np.linspace(0, 1, 3)
        ds = AlignedDataset(x=x, y=y, U=np.array([[1.0], [2.0]]), V=np.array([[1.0], [2.0], [3.0]]))
        ex = explode_aligned(ds)
        assert ex.n_samples == 3
        np.testing.assert_array_equal(ex.U, np.repeat(ds.U, 3, axis=1))
        np.testing.assert_array_equal(ex.V, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(ex.Y[0], y)

    def test_column_major_output_order(self):
        x = np.linspace(0, 1, 2)
        y = np.linspace(0, 1, 2)
        v_mat = np.array([[1.0, 3.0], [2.0, 4.0]])
        ds = AlignedDataset(x=x, y=y, U=np.eye(2), V=v_mat)
        ex = explode_aligned(ds)
        assert ex.n_samples == 4
        np.testing.assert_array_equal(ex.V, [1.0, 2.0, 3.0, 4.0])
        np.testing.assert_array_equal(ex.Y[0], [0.0, 1.0, 0.0, 1.0])


class TestInvariants:
    def test_grid_permutation_covariance(self):
        # Permuting output-grid rows of T and V together leaves the trained
        # predictor unchanged: trunk features depend on the y values only.
        ds = toy_dataset(m=10, n=10, s=6, seed=14)
        trunk, branch = toy_maps(seed=15)
        t_mat = trunk.apply(ds.y[None, :]).T
        b_mat = branch.apply(ds.U)
        perm = np.random.default_rng(16).permutation(10)
        w_ref = linalg.tsvd_pinv_apply(
            linalg.tsvd_factorize(b_mat),
            linalg.tsvd_pinv_apply(linalg.tsvd_factorize(t_mat), ds.V, side="left"),
            side="right",
        )
        w_perm = linalg.tsvd_pinv_apply(
            linalg.tsvd_factorize(b_mat),
            linalg.tsvd_pinv_apply(linalg.tsvd_factorize(t_mat[perm]), ds.V[perm], side="left"),
            side="right",
        )
        probe_t = trunk.apply(np.array([[0.37]]))
        pred_ref = probe_t.T @ w_ref @ b_mat
        pred_perm = probe_t.T @ w_perm @ b_mat
        assert np.max(np.abs(pred_ref - pred_perm)) <= 1e-10

    @pytest.mark.parametrize("case_id", [1, 2, 3, 4, 5])
    def test_solver_routes_agree_up_to_fit_error(self, case_id, cache_dir):
        # Independent solvers can only agree up to their own approximation
        # error; 1e-6 is asserted where the fit error allows it.
        size = {1: 60, 2: 12, 3: 60, 4: 60, 5: 60}[case_id]
        case = case_config(case_id, size=size, seed=90 + case_id)
        ds = dataset_for(case, cache_dir)
        train, test = split(ds, 0.8, 2)
        trunk = sample_tanh_trunk(case.domain, 100, seed=(17, 0))
        if case_id in (1, 3):
            branch = sample_jl(100, 60, seed=(17, 1))
        else:
            branch = sample_rffn(100, 200, seed=(17, 1), bandwidth=500.0)
        preds = {}
        errs = {}
        for solver in ("cod", "tsvd"):
            model = train_aligned(train, trunk, branch, solver=solver)
            pred = evaluate(model, test.U, test.y)
            preds[solver] = pred
            errs[solver] = np.linalg.norm(pred - test.V) / max(np.linalg.norm(test.V), 1e-30)
        rel = np.linalg.norm(preds["cod"] - preds["tsvd"]) / np.linalg.norm(preds["tsvd"])
        assert rel <= max(1e-6, 10 * (errs["cod"] + errs["tsvd"]))


class TestSaveLoad:
    def test_roundtrip_reproduces_predictions_bitwise(self, tmp_path):
        ds = toy_dataset(seed=18)
        trunk, branch = toy_maps(seed=19)
        model = train_aligned(ds, trunk, branch, solver="cod")
        path = tmp_path / "model.npz"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.solver_used == "cod"
        np.testing.assert_array_equal(loaded.readout, model.readout)
        u = np.random.default_rng(20).standard_normal((10, 3))
        ys = np.linspace(0, 1, 7)
        np.testing.assert_array_equal(evaluate(loaded, u, ys), evaluate(model, u, ys))

    def test_version_check(self, tmp_path):
        ds = toy_dataset(seed=21)
        model = train_aligned(ds, *toy_maps(seed=21))
        path = tmp_path / "model.npz"
        save_model(model, path)
        import numpy as np_mod

        with np_mod.load(path) as data:
            payload = dict(data)
        payload["format_version"] = 99
        np_mod.savez(path, **payload)
        with pytest.raises(ValueError, match="version"):
            load_model(path)
