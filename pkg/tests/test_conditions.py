import json
import math

import numpy as np
import pytest

from memchan_lab.conditions import (
    check_conditions_gaussian,
    check_decayrepeat_mps,
    check_longshort_mps,
    delta_for_length,
)
from memchan_lab.mps import MPSSpec, transfer_spectrum, wolf_mps


def product_spec():
    # minimal bond-1 representation; the transfer operator is the scalar 1
    q = np.array([[1.0 / math.sqrt(2.0)]])
    return MPSSpec(matrices=(q, q))


class TestDecayRepeatMPS:
    def test_wolf_confirmed_with_predicted_rate(self):
        spec = wolf_mps(0.5)
        rep = check_decayrepeat_mps(spec, l_values=(2, 3), s_values=range(1, 7), v=2)
        assert rep.verdict == "decay_confirmed"
        lam2 = transfer_spectrum(spec).moduli[1]
        assert rep.predicted_rate == pytest.approx(math.log(lam2), abs=1e-12)
        assert rep.fit.rate == pytest.approx(rep.predicted_rate, rel=0.2)
        assert len(rep.per_scale_fits) == 2

    def test_product_environment_trivially_confirmed(self):
        rep = check_decayrepeat_mps(product_spec(), l_values=(2,), s_values=range(1, 5), v=2)
        assert rep.verdict == "decay_confirmed"
        assert rep.fit is None
        assert "vanish" in rep.notes

    def test_critical_point_inconclusive(self):
        rep = check_decayrepeat_mps(wolf_mps(0.0))
        assert rep.verdict == "inconclusive"
        assert "degenerate" in rep.notes

    def test_deterministic(self):
        a = check_decayrepeat_mps(wolf_mps(0.5), l_values=(2,), s_values=range(1, 5))
        b = check_decayrepeat_mps(wolf_mps(0.5), l_values=(2,), s_values=range(1, 5))
        assert a == b


class TestLongShortMPS:
    def test_wolf_confirmed(self):
        spec = wolf_mps(0.5)
        rep = check_longshort_mps(spec, l_values=(4, 6, 9), delta_rule="sqrt", N_big=40)
        assert rep.verdict == "decay_confirmed"
        assert rep.fit.rate < 0.0

    def test_product_environment_zeros(self):
        rep = check_longshort_mps(product_spec(), l_values=(4, 6, 9), N_big=20)
        assert rep.verdict == "decay_confirmed"
        assert rep.fit is None

    def test_padding_rules(self):
        assert delta_for_length(9, "sqrt") == 3
        assert delta_for_length(8, "linear_fraction") == 2
        with pytest.raises(ValueError):
            delta_for_length(4, "cubic")

    def test_rates_agree_between_conditions(self):
        spec = wolf_mps(0.5)
        decay = check_decayrepeat_mps(spec, l_values=(3,), s_values=range(1, 7), v=2)
        longshort = check_longshort_mps(spec, l_values=(4, 6, 9), N_big=40)
        assert decay.fit.rate == pytest.approx(longshort.fit.rate, rel=0.3)


class TestGaussianConditions:
    def test_uncoupled_trivially_confirmed(self):
        decay, longshort = check_conditions_gaussian(
            0.0, L=3, d_values=range(2, 6), n_total=30, l=4, delta_values=range(1, 5), n_big=20
        )
        assert decay.verdict == "decay_confirmed"
        assert longshort.verdict == "decay_confirmed"

    def test_default_coupled_confirmed(self):
        decay, longshort = check_conditions_gaussian(0.2)
        assert decay.verdict == "decay_confirmed"
        assert longshort.verdict == "decay_confirmed"
        assert decay.fit.r_squared >= 0.95
        assert longshort.fit.r_squared >= 0.9

    def test_unstable_potential_rejected(self):
        with pytest.raises(ValueError, match="positive definite"):
            check_conditions_gaussian(-0.3)


class TestReportSerialization:
    def test_to_dict_round_trips_through_json(self):
        rep = check_decayrepeat_mps(wolf_mps(0.5), l_values=(2,), s_values=range(1, 5))
        payload = json.loads(json.dumps(rep.to_dict()))
        assert payload["condition"] == "decayrepeat"
        assert payload["verdict"] == "decay_confirmed"
        assert payload["fit"]["rate"] < 0.0
        assert len(payload["samples"]) == 4

    def test_confirmed_requires_negative_rate(self):
        from memchan_lab.conditions import ConditionReport
        from memchan_lab.numerics import DecayFit

        good = DecayFit(log_amplitude=0.0, rate=-1.0, r_squared=0.99)
        ConditionReport(
            condition="decayrepeat",
            environment="x",
            samples=((1.0, 0.5),),
            fit=good,
            verdict="decay_confirmed",
        )
        bad = DecayFit(log_amplitude=0.0, rate=0.5, r_squared=0.99)
        with pytest.raises(ValueError):
            ConditionReport(
                condition="decayrepeat",
                environment="x",
                samples=((1.0, 0.5),),
                fit=bad,
                verdict="decay_confirmed",
            )
