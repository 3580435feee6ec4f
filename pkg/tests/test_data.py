import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from somix import (
    DataError,
    MultiOmicsDataset,
    OmicsMatrix,
    SubsetPartition,
    SynthConfig,
    generate_synthetic,
    load_dataset,
    load_omics_matrix,
    load_partition,
    mean_impute,
    partition_uniform,
    split,
    standardize_apply,
    standardize_fit,
    subsample_labels,
    write_dataset,
)
from somix.data import load_labels


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadOmicsMatrix:
    def test_basic_csv(self, tmp_path):
        path = _write(
            tmp_path,
            "v.csv",
            "sample_id,f1,f2\ns1,1.5,2\ns2,-3,0.25\n",
        )
        m = load_omics_matrix(path, "v")
        assert m.sample_ids == ["s1", "s2"]
        assert m.feature_ids == ["f1", "f2"]
        np.testing.assert_array_equal(m.values, [[1.5, 2.0], [-3.0, 0.25]])

    def test_tsv_by_extension(self, tmp_path):
        path = _write(tmp_path, "v.tsv", "sample_id\tf1\ns1\t4\n")
        m = load_omics_matrix(path, "v")
        assert m.values[0, 0] == 4.0

    def test_missing_tokens_become_nan(self, tmp_path):
        path = _write(tmp_path, "v.csv", "sample_id,f1,f2\ns1,,NA\ns2,1,2\n")
        m = load_omics_matrix(path, "v")
        assert np.isnan(m.values[0]).all()
        assert not np.isnan(m.values[1]).any()

    def test_bad_number_names_line_and_column(self, tmp_path):
        path = _write(tmp_path, "v.csv", "sample_id,f1\ns1,1\ns2,oops\n")
        with pytest.raises(DataError, match="line 3") as err:
            load_omics_matrix(path, "v")
        assert "f1" in str(err.value)
        assert "oops" in str(err.value)

    def test_ragged_row_names_line(self, tmp_path):
        path = _write(tmp_path, "v.csv", "sample_id,f1,f2\ns1,1\n")
        with pytest.raises(DataError, match="line 2"):
            load_omics_matrix(path, "v")

    def test_header_must_start_with_sample_id(self, tmp_path):
        path = _write(tmp_path, "v.csv", "id,f1\ns1,1\n")
        with pytest.raises(DataError, match="sample_id"):
            load_omics_matrix(path, "v")

    def test_duplicate_sample_id(self, tmp_path):
        path = _write(tmp_path, "v.csv", "sample_id,f1\ns1,1\ns1,2\n")
        with pytest.raises(DataError, match="duplicate sample id"):
            load_omics_matrix(path, "v")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_omics_matrix(tmp_path / "nope.csv", "v")

    def test_empty_file(self, tmp_path):
        path = _write(tmp_path, "v.csv", "")
        with pytest.raises(DataError, match="empty"):
            load_omics_matrix(path, "v")


class TestLabels:
    def test_classes_sorted_by_name(self, tmp_path):
        path = _write(
            tmp_path,
            "labels.csv",
            "sample_id,label\ns1,lung\ns2,brain\ns3,lung\n",
        )
        labels, names = load_labels(path, ["s1", "s2", "s3"])
        assert names == ["brain", "lung"]
        np.testing.assert_array_equal(labels, [1, 0, 1])

    def test_missing_sample_label(self, tmp_path):
        path = _write(tmp_path, "labels.csv", "sample_id,label\ns1,a\n")
        with pytest.raises(DataError, match="s2"):
            load_labels(path, ["s1", "s2"])

    def test_duplicate_sample(self, tmp_path):
        path = _write(tmp_path, "labels.csv", "sample_id,label\ns1,a\ns1,b\n")
        with pytest.raises(DataError, match="duplicate"):
            load_labels(path, ["s1"])


class TestImpute:
    def test_column_mean_fills_missing(self):
        m = OmicsMatrix(
            "v", ["a", "b", "c"], ["f1", "f2"],
            np.array([[1.0, np.nan], [3.0, 4.0], [np.nan, 8.0]]),
        )
        out = mean_impute(m)
        np.testing.assert_allclose(out.values, [[1.0, 6.0], [3.0, 4.0], [2.0, 8.0]])
        assert np.isnan(m.values).any(), "input must not be modified"

    def test_all_missing_column_is_error(self):
        m = OmicsMatrix(
            "v", ["a", "b"], ["f1", "f2"],
            np.array([[1.0, np.nan], [2.0, np.nan]]),
        )
        with pytest.raises(DataError, match="f2"):
            mean_impute(m)

    def test_no_missing_is_identity(self):
        m = OmicsMatrix("v", ["a"], ["f1"], np.array([[5.0]]))
        out = mean_impute(m)
        np.testing.assert_array_equal(out.values, m.values)


class TestStandardize:
    def test_known_values(self):
        # population std of [1, 2, 3] is sqrt(2/3); (1-2)/sqrt(2/3) = -sqrt(3/2)
        m = OmicsMatrix(
            "v", ["a", "b", "c"], ["f1"], np.array([[1.0], [2.0], [3.0]])
        )
        scaler = standardize_fit(m, np.array([0, 1, 2]))
        out = standardize_apply(m, scaler)
        expected = math.sqrt(1.5)
        np.testing.assert_allclose(
            out.values[:, 0], [-expected, 0.0, expected], atol=1e-12
        )

    def test_train_rows_only(self):
        values = np.array([[0.0], [2.0], [100.0]])
        m = OmicsMatrix("v", ["a", "b", "c"], ["f1"], values)
        scaler = standardize_fit(m, np.array([0, 1]))
        assert scaler.mean[0] == 1.0
        assert scaler.std[0] == 1.0
        out = standardize_apply(m, scaler)
        np.testing.assert_allclose(out.values[:, 0], [-1.0, 1.0, 99.0])

    def test_zero_variance_maps_to_zero(self):
        m = OmicsMatrix("v", ["a", "b"], ["f1"], np.array([[7.0], [7.0]]))
        scaler = standardize_fit(m, np.array([0, 1]))
        assert scaler.std[0] == 1.0
        out = standardize_apply(m, scaler)
        np.testing.assert_array_equal(out.values[:, 0], [0.0, 0.0])

    def test_nan_rejected(self):
        m = OmicsMatrix("v", ["a"], ["f1"], np.array([[np.nan]]))
        with pytest.raises(DataError, match="impute"):
            standardize_fit(m, np.array([0]))

    @given(
        st.integers(min_value=2, max_value=30),
        st.integers(min_value=1, max_value=5),
        st.integers(min_value=0, max_value=10**6),
    )
    @settings(max_examples=25, deadline=None)
    def test_standardized_train_rows_have_zero_mean_unit_std(self, n, d, seed):
        rng = np.random.default_rng(seed)
        values = rng.normal(size=(n, d)) * 3.0 + 1.0
        m = OmicsMatrix(
            "v", [f"s{i}" for i in range(n)], [f"f{j}" for j in range(d)], values
        )
        idx = np.arange(n)
        out = standardize_apply(m, standardize_fit(m, idx))
        np.testing.assert_allclose(out.values.mean(axis=0), 0.0, atol=1e-9)
        np.testing.assert_allclose(out.values.std(axis=0), 1.0, atol=1e-9)


class TestPartition:
    def test_reference_dimensions(self):
        # 60483 features over 23 subsets: 60483 = 16*2630 + 7*2629
        part = partition_uniform(60483, 23, "v")
        counts = np.bincount(part.assignment)
        assert counts.size == 23
        assert (counts[:16] == 2630).all()
        assert (counts[16:] == 2629).all()
        assert counts.sum() == 60483

    def test_tiny_case(self):
        part = partition_uniform(4, 2, "v")
        np.testing.assert_array_equal(part.assignment, [0, 0, 1, 1])

    def test_blocks_are_contiguous(self):
        part = partition_uniform(10, 3, "v")
        assert (np.diff(part.assignment) >= 0).all()

    def test_bounds(self):
        with pytest.raises(DataError):
            partition_uniform(3, 4, "v")
        with pytest.raises(DataError):
            partition_uniform(3, 0, "v")

    @given(
        st.integers(min_value=1, max_value=500),
        st.integers(min_value=1, max_value=30),
    )
    @settings(max_examples=60, deadline=None)
    def test_sizes_differ_by_at_most_one(self, n, k):
        if k > n:
            k = n
        part = partition_uniform(n, k, "v")
        counts = np.bincount(part.assignment, minlength=k)
        assert counts.sum() == n
        assert counts.size == k
        assert counts.max() - counts.min() <= 1

    def test_features_in(self):
        part = partition_uniform(5, 2, "v")
        np.testing.assert_array_equal(part.features_in(0), [0, 1, 2])
        np.testing.assert_array_equal(part.features_in(1), [3, 4])
        with pytest.raises(DataError):
            part.features_in(2)


class TestLoadPartition:
    def test_round_trip(self, tmp_path):
        path = _write(
            tmp_path,
            "p.csv",
            "feature_id,subset_id\nf1,0\nf2,1\nf3,0\n",
        )
        part = load_partition(path, "v", ["f1", "f2", "f3"])
        np.testing.assert_array_equal(part.assignment, [0, 1, 0])

    def test_unassigned_feature(self, tmp_path):
        path = _write(tmp_path, "p.csv", "feature_id,subset_id\nf1,0\n")
        with pytest.raises(DataError, match="f2"):
            load_partition(path, "v", ["f1", "f2"])

    def test_unknown_feature(self, tmp_path):
        path = _write(tmp_path, "p.csv", "feature_id,subset_id\nbogus,0\n")
        with pytest.raises(DataError, match="bogus"):
            load_partition(path, "v", ["f1"])

    def test_empty_subset(self, tmp_path):
        path = _write(tmp_path, "p.csv", "feature_id,subset_id\nf1,0\nf2,2\n")
        with pytest.raises(DataError, match="subset 1"):
            load_partition(path, "v", ["f1", "f2"])

    def test_double_assignment(self, tmp_path):
        path = _write(tmp_path, "p.csv", "feature_id,subset_id\nf1,0\nf1,1\n")
        with pytest.raises(DataError, match="twice"):
            load_partition(path, "v", ["f1"])


def _toy_dataset(n=100, n_classes=10, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % n_classes
    rng.shuffle(labels)
    views = [
        OmicsMatrix(
            "v0",
            [f"s{i}" for i in range(n)],
            ["f0", "f1"],
            rng.normal(size=(n, 2)),
        )
    ]
    return MultiOmicsDataset(
        views=views,
        labels=labels,
        class_names=[f"c{i}" for i in range(n_classes)],
    )


class TestSplit:
    def test_stratified_counts(self):
        ds = _toy_dataset(n=100, n_classes=10)
        spec = split(ds, (0.8, 0.1, 0.1), seed=0)
        assert spec.train.size == 80
        assert spec.val.size == 10
        assert spec.test.size == 10
        for part in (spec.train, spec.val, spec.test):
            counts = np.bincount(ds.labels[part], minlength=10)
            assert (counts == part.size // 10).all()

    def test_partition_is_disjoint_and_complete(self):
        ds = _toy_dataset(n=97, n_classes=5)
        spec = split(ds, (0.7, 0.15, 0.15), seed=3)
        merged = np.concatenate([spec.train, spec.val, spec.test])
        assert np.unique(merged).size == merged.size == 97

    def test_deterministic_by_seed(self):
        ds = _toy_dataset()
        a = split(ds, (0.7, 0.15, 0.15), seed=5)
        b = split(ds, (0.7, 0.15, 0.15), seed=5)
        c = split(ds, (0.7, 0.15, 0.15), seed=6)
        np.testing.assert_array_equal(a.train, b.train)
        assert not np.array_equal(a.train, c.train)

    def test_tiny_class_errors_under_stratification(self):
        ds = _toy_dataset(n=21, n_classes=10)  # one class has 1 member
        with pytest.raises(DataError, match="fewer"):
            split(ds, (0.6, 0.2, 0.2), seed=0)

    def test_unstratified_allows_tiny_classes(self):
        ds = _toy_dataset(n=21, n_classes=10)
        spec = split(ds, (0.6, 0.2, 0.2), seed=0, stratified=False)
        assert spec.train.size + spec.val.size + spec.test.size == 21

    def test_bad_fractions(self):
        ds = _toy_dataset()
        with pytest.raises(DataError):
            split(ds, (0.8, 0.3, 0.1), seed=0)
        with pytest.raises(DataError):
            split(ds, (0.0, 0.5, 0.5), seed=0)


class TestSubsampleLabels:
    def test_one_percent_of_balanced(self):
        ds = _toy_dataset(n=1000, n_classes=10)
        spec = split(ds, (1.0, 0.0, 0.0), seed=0)
        picked = subsample_labels(spec, ds.labels, 0.01, seed=0)
        assert picked.size == 10
        assert np.unique(ds.labels[picked]).size == 10

    def test_full_fraction_returns_train(self):
        ds = _toy_dataset()
        spec = split(ds, (0.8, 0.1, 0.1), seed=0)
        picked = subsample_labels(spec, ds.labels, 1.0, seed=0)
        np.testing.assert_array_equal(picked, spec.train)

    def test_subset_of_train(self):
        ds = _toy_dataset(n=500, n_classes=5)
        spec = split(ds, (0.7, 0.15, 0.15), seed=1)
        picked = subsample_labels(spec, ds.labels, 0.2, seed=2)
        assert np.isin(picked, spec.train).all()
        assert picked.size == round(0.2 * spec.train.size)

    def test_tiny_fraction_keeps_one_per_class_with_warning(self):
        ds = _toy_dataset(n=1000, n_classes=10)
        spec = split(ds, (1.0, 0.0, 0.0), seed=0)
        with pytest.warns(UserWarning, match="class"):
            picked = subsample_labels(spec, ds.labels, 0.005, seed=0)
        assert np.unique(ds.labels[picked]).size == 10

    def test_deterministic(self):
        ds = _toy_dataset(n=400, n_classes=4)
        spec = split(ds, (0.8, 0.1, 0.1), seed=0)
        a = subsample_labels(spec, ds.labels, 0.1, seed=9)
        b = subsample_labels(spec, ds.labels, 0.1, seed=9)
        c = subsample_labels(spec, ds.labels, 0.1, seed=10)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_bad_fraction(self):
        ds = _toy_dataset()
        spec = split(ds, (0.8, 0.1, 0.1), seed=0)
        with pytest.raises(DataError):
            subsample_labels(spec, ds.labels, 0.0, seed=0)
        with pytest.raises(DataError):
            subsample_labels(spec, ds.labels, 1.5, seed=0)


class TestSynthetic:
    def test_shapes_and_metadata(self):
        cfg = SynthConfig(
            n_samples=50, n_classes=5, view_dims=(12, 7), shared_latent_dim=3,
            noise_sigma=0.1, seed=0,
        )
        ds = generate_synthetic(cfg)
        assert ds.n_samples == 50
        assert ds.view_dims == (12, 7)
        assert ds.n_classes == 5
        assert set(ds.partitions) == {"view0", "view1"}
        assert ds.partitions["view0"].n_subsets == 12
        assert len(set(ds.sample_ids)) == 50

    def test_labels_balanced_within_one(self):
        ds = generate_synthetic(SynthConfig(n_samples=103, n_classes=10, seed=1))
        counts = np.bincount(ds.labels, minlength=10)
        assert counts.max() - counts.min() <= 1

    def test_deterministic_per_seed(self):
        a = generate_synthetic(SynthConfig(n_samples=30, seed=4))
        b = generate_synthetic(SynthConfig(n_samples=30, seed=4))
        c = generate_synthetic(SynthConfig(n_samples=30, seed=5))
        np.testing.assert_array_equal(a.views[0].values, b.views[0].values)
        assert not np.array_equal(a.views[0].values, c.views[0].values)

    def test_zero_noise_views_have_latent_rank(self):
        cfg = SynthConfig(
            n_samples=60, n_classes=3, view_dims=(20,), shared_latent_dim=4,
            noise_sigma=0.0, seed=0,
        )
        ds = generate_synthetic(cfg)
        assert np.linalg.matrix_rank(ds.views[0].values) == 4

    def test_partition_capped_by_dim(self):
        ds = generate_synthetic(
            SynthConfig(n_samples=30, n_classes=3, view_dims=(50, 10), seed=0)
        )
        assert ds.partitions["view0"].n_subsets == 23
        assert ds.partitions["view1"].n_subsets == 10

    def test_invalid_configs(self):
        with pytest.raises(DataError):
            SynthConfig(n_samples=5, n_classes=10)
        with pytest.raises(DataError):
            SynthConfig(noise_sigma=-1.0)


class TestDatasetIO:
    def test_write_then_load_round_trip(self, tmp_path):
        ds = generate_synthetic(
            SynthConfig(n_samples=25, n_classes=3, view_dims=(6, 4), seed=2)
        )
        manifest = write_dataset(ds, tmp_path / "data")
        loaded = load_dataset(manifest)
        assert loaded.view_ids == ds.view_ids
        assert loaded.class_names == ds.class_names
        np.testing.assert_array_equal(loaded.labels, ds.labels)
        for a, b in zip(loaded.views, ds.views):
            np.testing.assert_allclose(a.values, b.values, rtol=0, atol=0)
        for vid in ds.partitions:
            np.testing.assert_array_equal(
                loaded.partitions[vid].assignment, ds.partitions[vid].assignment
            )

    def test_refuses_nonempty_dir(self, tmp_path):
        ds = generate_synthetic(SynthConfig(n_samples=12, n_classes=3, seed=0))
        out = tmp_path / "data"
        out.mkdir()
        (out / "junk.txt").write_text("x")
        with pytest.raises(DataError, match="not empty"):
            write_dataset(ds, out)
        write_dataset(ds, out, force=True)

    def test_manifest_unknown_key(self, tmp_path):
        (tmp_path / "m.json").write_text('{"views": [], "labels": "l.csv", "extra": 1}')
        with pytest.raises(DataError, match="extra"):
            load_dataset(tmp_path / "m.json")

    def test_views_must_align(self, tmp_path):
        _write(tmp_path, "a.csv", "sample_id,f1\ns1,1\ns2,2\n")
        _write(tmp_path, "b.csv", "sample_id,g1\ns2,1\ns1,2\n")
        _write(tmp_path, "labels.csv", "sample_id,label\ns1,x\ns2,y\n")
        (tmp_path / "m.json").write_text(
            '{"views": [{"view_id": "a", "path": "a.csv"},'
            ' {"view_id": "b", "path": "b.csv"}], "labels": "labels.csv"}'
        )
        with pytest.raises(DataError, match="same order"):
            load_dataset(tmp_path / "m.json")
