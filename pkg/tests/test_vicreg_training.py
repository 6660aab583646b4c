import dataclasses

import numpy as np
import pytest

from sagkit.errors import TrainingDivergedError
from sagkit.sagvicreg.experiment import (
    DEFAULT_EXPERIMENT_SYNTH,
    dispersion_ratios,
    split_pools,
    unseen_cluster_experiment,
)
from sagkit.sagvicreg.losses import VicregConfig
from sagkit.sagvicreg.model import ToyEncoder
from sagkit.sagvicreg.synth import Augmenter, SynthConfig, synth_generate
from sagkit.sagvicreg.train import train

SMALL = SynthConfig(n_clusters=3, points_per_cluster=16, ambient_dim=6)


class TestSynth:
    def test_zero_cluster_std(self):
        data = synth_generate(dataclasses.replace(SMALL, cluster_std=0.0))
        for c in range(3):
            pts = data.points[data.labels == c]
            assert np.all(pts == pts[0])

    def test_zero_augment_std(self):
        data = synth_generate(dataclasses.replace(SMALL, augment_std=0.0))
        v1, v2 = data.augmenter.views(data.points, np.random.default_rng(0))
        np.testing.assert_array_equal(v1, data.points)
        np.testing.assert_array_equal(v2, data.points)

    def test_same_seed(self):
        a, b = synth_generate(SMALL), synth_generate(SMALL)
        assert a.points.tobytes() == b.points.tobytes()
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_views_are_noisy(self):
        v1, v2 = Augmenter(0.5).views(np.zeros((200, 3)), np.random.default_rng(1))
        assert abs(v1.std() - 0.5) < 0.05 and not np.array_equal(v1, v2)

    @pytest.mark.parametrize("kw", [{"n_clusters": 0}, {"ambient_dim": 0}, {"cluster_std": -1.0}])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            SynthConfig(**kw)


class TestModel:
    def test_represent_is_encoder_prefix(self):
        enc = ToyEncoder.init(5, seed=0)
        x = np.random.default_rng(0).normal(size=(4, 5))
        assert enc.represent(x).shape == (4, enc.rep_dim)
        h = enc.represent(x)
        for i in range(enc.n_encoder_layers, len(enc.weights)):
            h = h @ enc.weights[i] + enc.biases[i]
            if i < len(enc.weights) - 1:
                h = np.maximum(h, 0)
        np.testing.assert_allclose(enc.forward(x)[0], h)

    def test_default_shape(self):
        enc = ToyEncoder.init(8)
        assert [w.shape for w in enc.weights] == [(8, 32), (32, 16), (16, 32), (32, 32)]

    def test_bad_shapes(self):
        with pytest.raises(ValueError):
            ToyEncoder([np.zeros((2, 3)), np.zeros((4, 2))], [np.zeros(3), np.zeros(2)], 1)


class TestTrain:
    @pytest.mark.parametrize("variant", ["vicreg", "sag"])
    def test_bitwise_deterministic(self, variant):
        data = synth_generate(SMALL)
        enc = ToyEncoder.init(6, seed=1)
        runs = [
            train(variant, data.points, enc, VicregConfig(), 5, seed=3, augmenter=data.augmenter, batch_size=16)
            for _ in range(2)
        ]
        assert [b.as_row() for b in runs[0][1]] == [b.as_row() for b in runs[1][1]]
        for p, q in zip(runs[0][0].params(), runs[1][0].params()):
            assert p.tobytes() == q.tobytes()

    def test_zero_epochs(self):
        data = synth_generate(SMALL)
        enc = ToyEncoder.init(6, seed=1)
        out, hist = train("sag", data.points, enc, VicregConfig(), 0, augmenter=data.augmenter)
        assert hist == []
        for p, q in zip(out.params(), enc.params()):
            np.testing.assert_array_equal(p, q)

    def test_does_not_mutate_input(self):
        data = synth_generate(SMALL)
        enc = ToyEncoder.init(6, seed=1)
        before = [p.copy() for p in enc.params()]
        train("vicreg", data.points, enc, VicregConfig(), 3, augmenter=data.augmenter)
        for p, q in zip(enc.params(), before):
            np.testing.assert_array_equal(p, q)

    @pytest.mark.parametrize("variant", ["vicreg", "sag"])
    def test_divergence_reports_epoch(self, variant):
        data = synth_generate(SMALL)
        with pytest.raises(TrainingDivergedError) as info:
            train(variant, data.points, ToyEncoder.init(6), VicregConfig(), 50, lr=1e6, augmenter=data.augmenter)
        assert 0 <= info.value.epoch < 50

    @pytest.mark.parametrize("variant", ["vicreg", "sag"])
    def test_default_run_learns(self, variant):
        data = synth_generate(SynthConfig(seed=0))
        _, hist = train(variant, data.points, ToyEncoder.init(32, seed=0), VicregConfig(), 500, augmenter=data.augmenter)
        assert hist[-1].total <= 0.5 * hist[0].total
        assert hist[-1].variance < 0.1

    @pytest.mark.parametrize(
        "kw", [{"variant": "simclr"}, {"epochs": -1}, {"lr": 0.0}, {"batch_size": 1}]
    )
    def test_bad_arguments(self, kw):
        args = dict(variant="vicreg", epochs=1, lr=0.1, batch_size=8)
        args.update(kw)
        data = synth_generate(SMALL)
        with pytest.raises(ValueError):
            train(args["variant"], data.points, ToyEncoder.init(6), VicregConfig(), args["epochs"],
                  lr=args["lr"], batch_size=args["batch_size"])


class TestDispersion:
    def test_hand_example(self):
        emb = np.array([[0.0, 0.0], [0.0, 2.0], [10.0, 0.0], [10.0, 4.0]])
        ratios = dispersion_ratios(emb, [0, 0, 1, 1])
        # centroids (0,1) and (10,2): distance sqrt(101)
        assert ratios[0] == pytest.approx(2 / np.sqrt(101))
        assert ratios[1] == pytest.approx(4 / np.sqrt(101))

    def test_needs_two_clusters(self):
        with pytest.raises(ValueError):
            dispersion_ratios(np.eye(3), [0, 0, 0])

    def test_split_pools(self):
        tr, te = split_pools([0, 0, 1, 1, 1, 0])
        np.testing.assert_array_equal(tr, [0, 5, 2, 4])
        np.testing.assert_array_equal(te, [1, 3])


FAST = dataclasses.replace(DEFAULT_EXPERIMENT_SYNTH, n_clusters=4, points_per_cluster=24, ambient_dim=8)


class TestUnseenExperiment:
    def test_same_seed_same_report(self):
        a = unseen_cluster_experiment(FAST, (0, 1), seed=3, steps=20)
        b = unseen_cluster_experiment(FAST, (0, 1), seed=3, steps=20)
        assert a.to_dict() == b.to_dict()

    def test_all_clusters_flagged(self):
        rep = unseen_cluster_experiment(FAST, (0, 1, 2, 3), seed=0, steps=5)
        assert not rep.has_unseen
        for v in rep.variants.values():
            assert v.unseen_ratio is None and v.unseen_similarity is None
        assert rep.to_dict()["has_unseen"] is False

    def test_report_shape(self):
        rep = unseen_cluster_experiment(FAST, (2, 0), seed=1, steps=10)
        assert rep.train_clusters == (0, 2) and rep.unseen_clusters == (1, 3)
        for v in rep.variants.values():
            assert set(v.per_cluster) == {0, 1, 2, 3}
            assert v.unseen_similarity.n == 24
            assert v.test_embedding.shape == (48, 16)
            assert v.train_embedding.shape == (24, 16)

    @pytest.mark.parametrize("clusters", [(), (4,), (-1, 0)])
    def test_bad_subset(self, clusters):
        with pytest.raises(ValueError):
            unseen_cluster_experiment(FAST, clusters, steps=1)
