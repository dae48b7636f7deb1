from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asyncrank.engine import (
    EndpointWire,
    Schedule,
    Step,
    UEState,
    ingest_fragment,
    latest_per_sender,
    round_robin_script,
    run_async,
    simulate_deterministic,
    trace_from_text,
    trace_to_text,
    ue_step,
)
from asyncrank.errors import ParameterError, ProtocolError, ScriptError, TransportError
from asyncrank.kernels import GoogleParams, dense_oracle, residual_l1, run_sync
from asyncrank.messages import Fragment
from asyncrank.transport import InProcessNetwork, tcp_cluster
from asyncrank.webgraph import build_all_blocks, partition_rows

from conftest import random_graph


def state_with(p=3, n=6, last_seen=None):
    st_ = UEState.create(0, partition_rows(n, p), np.full(n, 1.0 / n))
    if last_seen is not None:
        st_.last_seen = list(last_seen)
    return st_


def stacked_iterates(res):
    """Assemble per-UE iterate histories into full vectors per step."""
    count = min(len(h) for h in res.iterates)
    return [np.concatenate([h[k] for h in res.iterates]) for k in range(count)]


class TestIngest:
    def test_newer_accepted(self):
        st_ = state_with(last_seen=[0, 3, 0])
        assert ingest_fragment(st_, Fragment(1, 5, 2, [0.5, 0.25]))
        assert st_.last_seen[1] == 5
        assert st_.view[2:4].tolist() == [0.5, 0.25]
        assert st_.import_counts[1] == 1

    @pytest.mark.parametrize("incoming", [5, 4])
    def test_duplicate_or_stale_rejected(self, incoming):
        st_ = state_with(last_seen=[0, 5, 0])
        before = st_.view.copy()
        assert not ingest_fragment(st_, Fragment(1, incoming, 2, [0.5, 0.25]))
        assert st_.last_seen[1] == 5
        assert st_.view.tobytes() == before.tobytes()
        assert st_.import_counts[1] == 0

    @pytest.mark.parametrize("frag", [
        Fragment(1, 1, 3, [0.5, 0.25]),
        Fragment(1, 1, 2, [0.5]),
        Fragment(0, 1, 0, [0.5, 0.25]),
        Fragment(7, 1, 0, [0.5, 0.25]),
    ])
    def test_protocol_errors(self, frag):
        with pytest.raises(ProtocolError):
            ingest_fragment(state_with(), frag)

    def test_latest_per_sender(self):
        fr = [Fragment(2, 3, 0, [1.0]), Fragment(1, 1, 0, [1.0]), Fragment(2, 5, 0, [1.0]),
              Fragment(2, 4, 0, [1.0])]
        latest, superseded = latest_per_sender(fr)
        assert [(f.sender, f.local_iter) for f in latest] == [(1, 1), (2, 5)]
        assert sorted(f.local_iter for f in superseded) == [3, 4]


class TestStep:
    def test_single_ue_is_a_sync_step(self, g3):
        params = GoogleParams(3)
        part = partition_rows(3, 1)
        st_ = UEState.create(0, part, np.full(3, 1 / 3))
        frag, residual = ue_step(st_, build_all_blocks(g3, part)[0], params)
        x1 = run_sync(g3, params, 1e-300, max_iters=1).x
        assert frag.values.tobytes() == x1.tobytes()
        assert residual == residual_l1(x1, np.full(3, 1 / 3))
        assert (st_.local_iter, st_.import_counts, frag.local_iter) == (1, [1], 1)

    def test_wrong_block(self, g3):
        part = partition_rows(3, 3)
        st_ = UEState.create(0, part, np.full(3, 1 / 3))
        with pytest.raises(ParameterError):
            ue_step(st_, build_all_blocks(g3, part)[1], GoogleParams(3))

    def test_two_steps_before_exchange(self, g3):
        res = simulate_deterministic(g3, GoogleParams(3), partition_rows(3, 3), script=[
            [Step(0)], [Step(0)]], record_iterates=True)
        first, second = res.steps
        assert (first.ue, first.t, first.tau) == (0, 0, (0, 0, 0))
        assert (second.ue, second.t, second.tau) == (0, 1, (1, 0, 0))
        # page 0 is linked only from page 2 (out-degree 1): row 0 of G x
        # = 0.85 * x2 + 0.15/3 * sum(x); peers still hold x0 = 1/3 each
        third = Fraction(1, 3)
        expected = Fraction(85, 100) * third + Fraction(15, 100) / 3
        assert res.iterates[0][2][0] == pytest.approx(float(expected), abs=1e-16)
        assert res.per_ue_iters == [2, 0, 0]
        assert not res.converged


class TestLockstep:
    @pytest.mark.parametrize("kernel", ["power", "linear"])
    @pytest.mark.parametrize("p", [1, 2, 3, 4])
    def test_iterates_equal_sync(self, kernel, p):
        g = random_graph(np.random.default_rng(p), 40, 0.2)
        params = GoogleParams(g.n)
        a = run_async(g, params, partition_rows(g.n, p), kernel=kernel, tolerance=1e-9,
                      record_iterates=True)
        steps = stacked_iterates(a)
        s = run_sync(g, params, 1e-300, max_iters=len(steps) - 1, kernel=kernel,
                     record_iterates=True)
        assert len(s.iterates) == len(steps)
        assert max(residual_l1(u, w) for u, w in zip(steps, s.iterates)) <= 1e-14
        assert len(set(a.per_ue_iters)) == 1

    def test_two_cycle_linear(self, two_cycle):
        params = GoogleParams(2)
        a = run_async(two_cycle, params, partition_rows(2, 2), kernel="linear",
                      tolerance=1e-6)
        s = run_sync(two_cycle, params, 1e-300, max_iters=a.per_ue_iters[0], kernel="linear")
        assert residual_l1(a.x, s.x) <= 1e-12
        assert a.converged

    def test_round_robin_tau_equals_t(self, g3):
        res = simulate_deterministic(g3, GoogleParams(3), partition_rows(3, 3),
                                     script=round_robin_script(3, 10))
        assert len(res.steps) == 30
        for rec in res.steps:
            assert all(tau == rec.t for tau in rec.tau)

    def test_lockstep_rejects_delays(self):
        with pytest.raises(ParameterError):
            Schedule("lockstep", delay_bound=1)


class TestScripts:
    def test_delay_two(self):
        g = random_graph(np.random.default_rng(0), 12, 0.1)
        script = [[Step(0), Step(1), Step(2, delay=2)] for _ in range(12)]
        res = simulate_deterministic(g, GoogleParams(g.n), partition_rows(g.n, 3),
                                     script=script)
        lags = [rec.t - rec.tau[2] for rec in res.steps if rec.ue != 2 and rec.t >= 3]
        assert lags and set(lags) == {2}
        assert all(rec.t - rec.tau[0] == 0 for rec in res.steps if rec.ue != 0)

    def test_drop_then_superseded(self):
        g = random_graph(np.random.default_rng(1), 10, 0.1)
        script = [[Step(0), Step(1, drop=(0,) if k == 2 else ())] for k in range(6)]
        res = simulate_deterministic(g, GoogleParams(g.n), partition_rows(g.n, 2),
                                     script=script)
        assert res.per_ue_iters == [6, 6]
        # the final fragment of each UE is still in flight when the script ends
        assert res.import_matrix[0, 1] == 6 - 1 - 1
        assert res.import_matrix[1, 0] == 6 - 1
        pct = res.completed_imports_pct()
        assert pct[0] < pct[1] < 100.0
        assert any(e.kind == "drop" for e in res.trace)

    def test_bunched_arrivals_consume_newest_only(self):
        g = random_graph(np.random.default_rng(2), 8, 0.1)
        script = [[Step(1, delay=2)], [Step(1, delay=1)], [Step(1)], [Step(0)]]
        res = simulate_deterministic(g, GoogleParams(g.n), partition_rows(g.n, 2),
                                     script=script)
        assert res.steps[-1].tau == (0, 3)
        assert res.import_matrix[0, 1] == 1
        assert [e.local_iter for e in res.trace if e.kind == "superseded"] == [1, 2]

    @pytest.mark.parametrize("script", [
        [[Step(5)]],
        [[Step(0, drop=(9,))]],
        [[Step(0, delay=-1)]],
        [["zero"]],
        [],
    ])
    def test_malformed(self, g3, script):
        with pytest.raises(ScriptError):
            simulate_deterministic(g3, GoogleParams(3), partition_rows(3, 2), script=script)


class TestSeeded:
    @settings(max_examples=25)
    @given(st.integers(0, 2**31), st.integers(1, 4), st.integers(0, 5),
           st.floats(0.0, 0.3), st.sampled_from(["power", "linear"]))
    def test_staleness_and_accounting(self, seed, p, delay, drop, kernel):
        g = random_graph(np.random.default_rng(seed), 30, 0.2)
        res = simulate_deterministic(g, GoogleParams(g.n), partition_rows(g.n, p), kernel,
                                     Schedule.seeded(seed, delay, drop), tolerance=1e-8)
        seen = {}
        for rec in res.steps:
            for j, tau in enumerate(rec.tau):
                if j != rec.ue:
                    assert rec.t - tau <= delay + 1
            prev = seen.get(rec.ue, rec.tau)
            assert all(a >= b for a, b in zip(rec.tau, prev))
            seen[rec.ue] = rec.tau
        m, iters = res.import_matrix, res.per_ue_iters
        assert np.diag(m).tolist() == iters
        for i in range(p):
            assert m[i].sum() - m[i, i] <= (p - 1) * iters[i]
            assert all(m[i, j] <= iters[j] for j in range(p))
        assert all(0 <= v <= 100 for v in res.completed_imports_pct())

    @pytest.mark.parametrize("kernel", ["power", "linear"])
    def test_oracle_example(self, kernel):
        from asyncrank.webgraph import generate_synthetic
        g = generate_synthetic(100, 5.0, 0.1, 9)
        params = GoogleParams(g.n)
        res = run_async(g, params, partition_rows(g.n, 4), kernel=kernel,
                        schedule=Schedule.seeded(9, 3, 0.2), tolerance=1e-9)
        assert res.converged
        assert residual_l1(res.x, dense_oracle(g, params)) <= 1e-5

    def test_deterministic(self):
        g = random_graph(np.random.default_rng(4), 50, 0.2)
        runs = [simulate_deterministic(g, GoogleParams(g.n), partition_rows(g.n, 3),
                                       schedule=Schedule.seeded(11, 4, 0.25), tolerance=1e-9)
                for _ in range(2)]
        assert runs[0].trace == runs[1].trace
        assert runs[0].x.tobytes() == runs[1].x.tobytes()

    def test_exhaustion_reported(self):
        g = random_graph(np.random.default_rng(5), 50, 0.2)
        res = run_async(g, GoogleParams(g.n), partition_rows(g.n, 2), tolerance=1e-15,
                        max_iters=5)
        assert not res.converged and max(res.per_ue_iters) == 5

    def test_pc_max_delays_stop(self):
        g = random_graph(np.random.default_rng(6), 40, 0.2)
        params, part = GoogleParams(g.n), partition_rows(g.n, 2)
        quick = run_async(g, params, part, tolerance=1e-8)
        patient = run_async(g, params, part, tolerance=1e-8, pc_max=3)
        assert patient.converged and patient.per_ue_iters[0] > quick.per_ue_iters[0]


class TestTraceText:
    def test_round_trip(self, g3):
        res = simulate_deterministic(g3, GoogleParams(3), partition_rows(3, 3),
                                     schedule=Schedule.seeded(3, 2, 0.2), tolerance=1e-6)
        text = trace_to_text(res.trace)
        assert all(len(line.split("\t")) == 6 for line in text.splitlines())
        assert trace_from_text(text) == res.trace

    def test_bad_line(self):
        with pytest.raises(ScriptError):
            trace_from_text("1\t2\tstep\n")


class TestWires:
    SCRIPT = [[Step(0), Step(1, delay=1), Step(2, drop=(0,))]] * 4 + [[Step(2), Step(0)]] * 2

    def _run(self, g, wire=None):
        return simulate_deterministic(g, GoogleParams(g.n), partition_rows(g.n, 3),
                                      script=self.SCRIPT, wire=wire)

    def test_inproc_and_tcp_match_direct(self):
        g = random_graph(np.random.default_rng(7), 20, 0.2)
        direct = self._run(g)
        net = InProcessNetwork(range(4))
        inproc = self._run(g, EndpointWire(net.endpoints))
        eps = tcp_cluster(range(4))
        try:
            tcp = self._run(g, EndpointWire(eps))
        finally:
            for ep in eps.values():
                ep.close()
        assert direct.trace == inproc.trace == tcp.trace
        assert direct.x.tobytes() == inproc.x.tobytes() == tcp.x.tobytes()


class TestConcurrent:
    @pytest.mark.parametrize("execution", ["threads", "tcp"])
    @pytest.mark.parametrize("kernel", ["power", "linear"])
    def test_converges(self, execution, kernel):
        g = random_graph(np.random.default_rng(8), 80, 0.2)
        params = GoogleParams(g.n)
        res = run_async(g, params, partition_rows(g.n, 3), kernel=kernel,
                        execution=execution, tolerance=1e-10, timeout=60)
        assert res.converged
        assert np.diag(res.import_matrix).tolist() == res.per_ue_iters
        assert residual_l1(res.x, dense_oracle(g, params)) <= 1e-5

    def test_schedule_rejected(self, g3):
        with pytest.raises(ParameterError):
            run_async(g3, GoogleParams(3), partition_rows(3, 2), execution="threads",
                      schedule=Schedule.lockstep())

    def test_unreachable_peer_surfaces_ue(self, g3, monkeypatch):
        from asyncrank.engine import concurrent

        def broken(transport, ids, *a, **k):
            eps = tcp_cluster(ids)
            eps[1].close()
            return eps
        monkeypatch.setattr(concurrent, "make_endpoints", broken)
        with pytest.raises(TransportError) as info:
            run_async(g3, GoogleParams(3), partition_rows(3, 2), execution="tcp",
                      send_timeout=0.5, timeout=20)
        assert info.value.ue_id is not None
