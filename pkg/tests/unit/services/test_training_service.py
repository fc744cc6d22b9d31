"""Unit tests for the rampup, the joint objective terms and the training loops"""

import math
from unittest.mock import patch

import numpy as np
import pytest

from app.exceptions import ConfigError
from app.models.training import AugmentConfig
from app.numerics import fd_check
from app.services import training_service
from app.services.cds_service import run_cds
from app.services.training_service import (
    adversarial_loss,
    consistency_loss,
    erm_config,
    rampup,
    train,
    train_supervised,
)
from tests.fixtures.factories import make_bundle, make_config, make_scenario


@pytest.mark.unit
class TestRampup:
    """Tests for exp(-5(1 - t)²)"""

    def test_endpoints(self):
        """exp(-5) at epoch 0, 1 from warmup on"""
        assert rampup(0, 10) == pytest.approx(math.exp(-5.0))
        assert rampup(10, 10) == 1.0
        assert rampup(25, 10) == 1.0

    def test_monotone(self):
        """Should never decrease"""
        values = [rampup(e, 20) for e in range(30)]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_no_warmup(self):
        """warmup_epochs = 0 means full strength immediately"""
        assert rampup(0, 0) == 1.0

    def test_negative_epoch(self):
        """Should raise ConfigError"""
        with pytest.raises(ConfigError):
            rampup(-1, 5)


@pytest.mark.unit
class TestObjectiveTerms:
    """Tests for L_SSL and the adversarial term"""

    @pytest.fixture
    def batch(self, rng):
        """Random labeled/unlabeled batch with weights"""
        return {
            "x_l": rng.normal(size=(5, 4)),
            "x_u": rng.normal(size=(6, 4)),
            "w_ud": rng.uniform(size=6),
            "w_uc": rng.uniform(size=6),
        }

    def test_consistency_is_a_scalar_tensor(self, bundle, batch, rng):
        """The weighted term should reduce to a single differentiable (1, 1) value"""
        loss = consistency_loss(bundle, batch["x_u"], batch["w_uc"], AugmentConfig(noise_std=1.0), rng)
        assert loss.shape == (1, 1)
        assert loss.item() > 0.0
        loss.backward()
        assert any(entry.grad.any() for _, entry in bundle.store.items())

    def test_consistency_zero_weights(self, bundle, batch, rng):
        """All-zero w_uc should silence the consistency term"""
        loss = consistency_loss(bundle, batch["x_u"], np.zeros(6), AugmentConfig(), rng)
        assert loss.item() == 0.0

    def test_consistency_without_augmentation(self, bundle, batch, rng):
        """Identical views should give zero loss"""
        cfg = AugmentConfig(noise_std=0.0, drop_prob=0.0)
        assert consistency_loss(bundle, batch["x_u"], batch["w_uc"], cfg, rng).item() == 0.0

    def test_consistency_gradient(self, bundle, batch, rng):
        """Both views are differentiated; FD should agree"""
        bundle.store.jitter(rng, 0.3)

        def loss():
            return consistency_loss(bundle, batch["x_u"], batch["w_uc"], AugmentConfig(), np.random.default_rng(2))

        assert fd_check(loss, bundle.store) < 1e-4

    def test_adversarial_zero_weights(self, bundle, batch):
        """With w_ud·w_uc = 0 only the labeled term remains"""
        full = adversarial_loss(bundle, batch["x_l"], batch["x_u"], np.zeros(6), batch["w_uc"], lam=0.5).item()
        labeled_only = adversarial_loss(bundle, batch["x_l"], batch["x_u"][:0], np.zeros(0), np.zeros(0), lam=0.5).item()
        assert full == pytest.approx(labeled_only)

    def test_reversal_flips_extractor_gradient(self, bundle, batch):
        """Extractor gradients should be -lam times the unreversed ones; D is untouched"""
        lam = 0.3

        def grads(reverse):
            bundle.store.zero_grad()
            adversarial_loss(bundle, batch["x_l"], batch["x_u"], batch["w_ud"], batch["w_uc"], lam, reverse).backward()
            out = {name: entry.grad.copy() for name, entry in bundle.store.items()}
            bundle.store.zero_grad()
            return out

        reversed_grads, plain = grads(True), grads(False)
        for name in bundle.store.names("F"):
            np.testing.assert_allclose(reversed_grads[name], -lam * plain[name], atol=1e-12)
        for name in bundle.store.names("D"):
            np.testing.assert_array_equal(reversed_grads[name], plain[name])
        for name in bundle.store.names("C") + bundle.store.names("Dp"):
            assert not reversed_grads[name].any()

    def test_negative_lambda(self, bundle, batch):
        """Should raise ConfigError"""
        with pytest.raises(ConfigError):
            adversarial_loss(bundle, batch["x_l"], batch["x_u"], batch["w_ud"], batch["w_uc"], lam=-1.0)


@pytest.mark.unit
class TestTrain:
    """Tests for the joint schedule"""

    @pytest.fixture
    def cds(self, scenario, config):
        """Domain separation of the small scenario"""
        return run_cds(scenario, config)

    def test_history_phases(self, scenario, config, cds):
        """Warm-up epochs first, then joint epochs"""
        result = train(scenario, make_bundle(), cds, config)
        phases = [h.phase for h in result.history]
        assert phases == ["warmup", "warmup", "joint", "joint"]
        assert [h.epoch for h in result.history] == [0, 1, 2, 3]

    def test_warmup_has_no_unlabeled_terms(self, scenario, config, cds):
        """L_SSL and the adversarial term stay 0 during warm-up"""
        result = train(scenario, make_bundle(), cds, config)
        for entry in result.history[:2]:
            assert entry.l_ssl == 0.0
            assert entry.l_adv == 0.0

    def test_weights_in_range(self, scenario, config, cds):
        """Final w_uc, w_ud and w_d should all be in [0, 1]"""
        result = train(scenario, make_bundle(), cds, config)
        for weights in (result.w_uc, result.w_ud, result.w_d):
            assert weights.shape == (len(scenario.unlabeled),)
            assert np.all((weights >= 0.0) & (weights <= 1.0))
        assert result.ukc_scores is not None

    def test_deterministic(self, scenario, config, cds):
        """Same config and seed give identical loss traces and parameters"""
        a, b = make_bundle(), make_bundle()
        trace_a = train(scenario, a, cds, config).l_ce_trace
        trace_b = train(scenario, b, cds, config).l_ce_trace
        assert trace_a == trace_b
        for name in a.store:
            assert np.array_equal(a.store[name].value, b.store[name].value)

    def test_requires_cds_when_enabled(self, scenario, config):
        """Missing domain separation with use_cds on should raise ConfigError"""
        with pytest.raises(ConfigError):
            train(scenario, make_bundle(), None, config)

    def test_cds_disabled(self, scenario):
        """use_cds off treats every unlabeled sample as unknown-domain"""
        result = train(scenario, make_bundle(), None, make_config(use_cds=False))
        np.testing.assert_array_equal(result.w_d, np.ones(len(scenario.unlabeled)))
        assert all(h.l_dom == 0.0 for h in result.history)

    def test_doe_disabled(self, scenario, cds):
        """use_doe off keeps every w_uc at 1"""
        result = train(scenario, make_bundle(), cds, make_config(use_doe=False))
        np.testing.assert_array_equal(result.w_uc, np.ones(len(scenario.unlabeled)))

    def test_doe_disabled_weights_consistency_by_w_d(self, scenario, cds):
        """use_doe off should hand w_d to the consistency term instead of w_uc"""
        with patch.object(training_service, "consistency_loss", wraps=consistency_loss) as spy:
            train(scenario, make_bundle(), cds, make_config(use_doe=False))
        assert spy.call_count > 0
        for call in spy.call_args_list:
            assert np.all(np.isin(call.args[2], cds.scores.w_d))

    def test_doe_and_cds_disabled_weight_consistency_by_one(self, scenario):
        """Without both estimators every unlabeled sample has consistency weight 1"""
        with patch.object(training_service, "consistency_loss", wraps=consistency_loss) as spy:
            train(scenario, make_bundle(), None, make_config(use_doe=False, use_cds=False))
        assert spy.call_count > 0
        for call in spy.call_args_list:
            np.testing.assert_array_equal(call.args[2], 1.0)

    def test_ssl_disabled(self, scenario, cds):
        """use_ssl off should never evaluate the consistency term"""
        with patch.object(training_service, "consistency_loss", wraps=consistency_loss) as spy:
            result = train(scenario, make_bundle(), cds, make_config(use_ssl=False))
        assert spy.call_count == 0
        assert all(h.l_ssl == 0.0 for h in result.history)
        assert any(h.l_adv != 0.0 for h in result.history)

    def test_adversarial_disabled(self, scenario, cds):
        """use_adversarial off should leave out the adversarial term only"""
        result = train(scenario, make_bundle(), cds, make_config(use_adversarial=False))
        assert all(h.l_adv == 0.0 for h in result.history)
        assert any(h.l_ssl != 0.0 for h in result.history)
        assert any(h.l_dom != 0.0 for h in result.history)

    def test_no_labeled_data(self, config):
        """Training without labeled samples should raise ConfigError"""
        scenario = make_scenario()
        scenario.labeled = scenario.labeled.subset(np.zeros(len(scenario.labeled), dtype=bool))
        with pytest.raises(ConfigError):
            train(scenario, make_bundle(), None, config)

    def test_erm_matches_supervised_loop(self, scenario, config):
        """The degenerate configuration should replay the supervised loop exactly"""
        cfg = erm_config(config)
        joint = train(scenario, make_bundle(), None, cfg).l_ce_trace
        supervised = [h.l_ce for h in train_supervised(scenario, make_bundle(), cfg)]
        assert joint == supervised

    def test_erm_config(self, config):
        """erm_config should zero both coefficients and drop unlabeled data"""
        cfg = erm_config(config)
        assert (cfg.alpha_max, cfg.beta_max, cfg.drop_unlabeled) == (0.0, 0.0, True)

    def test_supervised_loss_decreases(self, scenario):
        """CE on separable blobs should go down over a few epochs"""
        history = train_supervised(scenario, make_bundle(), make_config(total_epochs=20, warmup_epochs=5))
        assert history[-1].l_ce < history[0].l_ce
