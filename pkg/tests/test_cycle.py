import numpy as np
import pytest

from otto_cavity import cycle, dressed
from otto_cavity.cycle import (
    PlateauSettings,
    carnot,
    detect_plateau,
    efficiency,
    run_engine,
    suppression,
)
from otto_cavity.dressed import n_thermal
from otto_cavity.drive import DriveSchedule
from otto_cavity.errors import FirstLawError, NoHeatInputError
from otto_cavity.model import BathParams, ModelParams
from otto_cavity.operators import TruncationSpec

SPEC = TruncationSpec(4, 3, 3)
W1, W2 = 1.0091, 1.3068
SHORT = DriveSchedule(W1, W2, tau=20.0, dt_hot=300.0, dt_cold=300.0)
QUICK = PlateauSettings(window=100, rel_tol=1e-3, max_extension=300.0)


def quick_run(model=ModelParams(omega_c=W1), bath=BathParams(), sched=SHORT, n_cycles=2, **kw):
    return run_engine(model, bath, sched, SPEC, n_cycles=n_cycles, plateau=QUICK, **kw)


@pytest.fixture(scope="module")
def engine():
    return quick_run()


def test_detect_plateau():
    assert detect_plateau(np.full(50, 0.3), 10, 1e-12)
    assert not detect_plateau(np.linspace(0, 1, 50), 10, 1e-3)
    assert not detect_plateau(np.ones(5), 10, 1.0)
    with pytest.raises(ValueError):
        detect_plateau(np.ones(50), 5, 1.0)


def test_efficiency_and_carnot():
    assert efficiency(0.0, 1.0) == 0.0
    assert efficiency(0.3, 1.0, 0.15, 0.40) == (0.3, 0.625)
    assert carnot(0.15, 0.40) == 0.625
    with pytest.raises(NoHeatInputError):
        efficiency(1.0, 0.0)
    with pytest.raises(NoHeatInputError):
        efficiency(1.0, -1e-3)


def test_suppression():
    assert suppression(n_thermal(1.0, 0.2), 1.0, 0.2) == pytest.approx(0.0, abs=1e-15)
    assert suppression(0.0, 1.0, 0.2) == 1.0


def test_engine_produces_work(engine):
    assert len(engine.reports) == 2
    for r in engine.reports:
        assert r.engine and r.W_out > 0 and r.W_net == -r.W_out
        assert 0 < r.eta < r.eta_carnot
        assert r.first_law_max < cycle.FIRST_LAW_TOL
        assert r.Q_in > 0 and r.Q_out > 0


def test_stroke_signs(engine):
    for r in engine.reports:
        s = r.strokes
        assert list(s) == ["compression", "hot", "expansion", "cold"]
        assert abs(s["hot"].dW) < 1e-6 and abs(s["cold"].dW) < 1e-6
        assert s["compression"].dW > 0
        assert s["hot"].dQ > 0 and s["cold"].dQ < 0
        assert -s["expansion"].dW > s["compression"].dW
        total = sum(v.dU for v in s.values())
        assert total == pytest.approx(sum(v.dQ + v.dW for v in s.values()), abs=1e-12)


def test_cycles_follow_reference(engine):
    starts = engine.schedule.cycle_starts
    assert starts[0] == engine.reference.t
    assert starts[1] == engine.reports[0].t_end
    assert engine.ledger.t[-1] == engine.reports[-1].t_end


def test_phonon_to_photon_conversion(engine):
    L = engine.ledger
    b = engine.schedule.stroke_bounds(0)
    i0, i1 = L.index_at(b["hot"][0]), L.index_at(b["hot"][1])
    hot = L.samples[i0:i1 + 1]
    assert hot[-1].N_c > 5 * hot[0].N_c
    assert min(s.N_w2 for s in hot) < L.at(b["compression"][0]).N_w2


def test_no_cycles_gives_transient_only():
    run = quick_run(n_cycles=0)
    assert run.reports == [] and run.schedule.cycle_starts == ()
    assert np.all(run.ledger.column("f") == 0)


def test_no_temperature_gradient_no_engine():
    run = quick_run(bath=BathParams(T_c=0.3, T_h=0.3), n_cycles=1)
    assert run.reports[0].W_out <= 1e-4


def test_uncoupled_walls_do_nothing():
    run = quick_run(model=ModelParams(omega_c=1.1, g_1=0.0, g_2=0.0), n_cycles=1)
    r = run.reports[0]
    assert abs(r.W_out) < 1e-8
    assert r.N_c_end_cold == pytest.approx(0.0, abs=1e-12)  # n_thermal(1.1, 1e-7) underflows to 0


def test_dressed_operators_built_once(monkeypatch):
    calls = []
    original = dressed.build_dressed_operators

    def counting(*args, **kw):
        calls.append(1)
        return original(*args, **kw)

    monkeypatch.setattr(dressed, "build_dressed_operators", counting)
    quick_run(n_cycles=2)
    assert len(calls) == 1


def test_first_law_escalates(monkeypatch):
    monkeypatch.setattr(cycle, "FIRST_LAW_TOL", 0.0)
    with pytest.raises(FirstLawError):
        quick_run(n_cycles=1)
    run = quick_run(n_cycles=1, strict_first_law=False)
    assert run.reports[0].first_law_max > 0


def test_report_serializes(engine):
    d = engine.reports[0].as_dict()
    assert d["engine"] is True
    assert set(d["strokes"]) == {"compression", "hot", "expansion", "cold"}
    assert set(d["strokes"]["hot"]) == {"dU", "dQ", "dW"}
