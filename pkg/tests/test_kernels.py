import numpy as np
import pytest

from fedt import kernels
from fedt.kernels import pure

try:
    from fedt.kernels import _scan as compiled
except ImportError:
    compiled = None

BACKENDS = [pure] + ([compiled] if compiled else [])


def random_case(rng):
    n = int(rng.integers(2, 80))
    # draw from a small pool to provoke ties
    pool = rng.normal(0, 1, max(2, n // 3))
    v = np.sort(rng.choice(pool, size=n))
    g = rng.normal(0, 1, n)
    h = rng.uniform(0.001, 1.0, n)
    return v, g, h


class TestScanContract:
    @pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
    def test_no_candidates_on_constant_feature(self, backend):
        v = np.ones(10)
        g = np.arange(10.0)
        h = np.ones(10)
        assert backend.scan_sorted_split(v, g, h, g.sum(), 10.0, 0.0, 2.0, 0.0) is None

    @pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
    def test_threshold_is_midpoint_and_partitions(self, backend):
        rng = np.random.default_rng(20)
        for _ in range(200):
            v, g, h = random_case(rng)
            tg = pure.sequential_sum(g)
            th = pure.sequential_sum(h)
            res = backend.scan_sorted_split(v, g, h, tg, th, 0.0, 1.0, 0.0)
            if res is None:
                continue
            gain, thr, gl, hl, n_left = res
            assert (v < thr).sum() == n_left  # midpoint cleanly separates
            assert gl == pytest.approx(g[:n_left].sum(), rel=1e-9)
            assert hl == pytest.approx(h[:n_left].sum(), rel=1e-9)

    @pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
    def test_gain_matches_bruteforce_best(self, backend):
        rng = np.random.default_rng(21)
        for _ in range(100):
            v, g, h = random_case(rng)
            alpha, beta = float(rng.uniform(0, 0.5)), float(rng.uniform(0.01, 2))
            tg = pure.sequential_sum(g)
            th = pure.sequential_sum(h)
            res = backend.scan_sorted_split(v, g, h, tg, th, alpha, 2 * beta, 0.0)
            # brute force over all admissible cut positions
            best = None
            for i in range(len(v) - 1):
                if v[i] == v[i + 1]:
                    continue
                gl, hl = g[: i + 1].sum(), h[: i + 1].sum()
                gr, hr = tg - gl, th - hl
                if hl + 2 * beta <= 0 or hr + 2 * beta <= 0:
                    continue
                gain = 0.5 * (
                    gl**2 / (hl + 2 * beta) + gr**2 / (hr + 2 * beta) - tg**2 / (th + 2 * beta)
                ) - alpha
                if best is None or gain > best:
                    best = gain
            if best is None:
                assert res is None
            else:
                assert res is not None
                assert res[0] == pytest.approx(best, rel=1e-9, abs=1e-12)

    @pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.BACKEND)
    def test_min_child_hessian_respected(self, backend):
        v = np.array([0.0, 1.0, 2.0, 3.0])
        g = np.array([1.0, -1.0, 1.0, -1.0])
        h = np.full(4, 0.4)
        res = backend.scan_sorted_split(v, g, h, 0.0, 1.6, 0.0, 0.0, 0.5)
        if res is not None:
            _, _, _, hl, n_left = res
            assert hl >= 0.5 and (1.6 - hl) >= 0.5
            assert n_left == 2  # only the middle cut has 0.8 hessian each side


@pytest.mark.skipif(compiled is None, reason="compiled kernel not built")
class TestBackendEquivalence:
    def test_bit_identical_results(self):
        rng = np.random.default_rng(22)
        for _ in range(500):
            v, g, h = random_case(rng)
            tg = pure.sequential_sum(g)
            th = pure.sequential_sum(h)
            args = (tg, th, float(rng.uniform(0, 1)), float(rng.uniform(0, 4)), float(rng.uniform(0, 0.3)))
            a = pure.scan_sorted_split(v, g, h, *args)
            b = compiled.scan_sorted_split(v, g, h, *args)
            assert (a is None) == (b is None)
            if a is not None:
                assert a == b  # exact float equality, same tie-break

    def test_sequential_sum_identical(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            a = rng.normal(0, 1, int(rng.integers(0, 100)))
            assert pure.sequential_sum(a) == compiled.sequential_sum(a)


def test_active_backend_exposed():
    assert kernels.BACKEND in ("pure", "compiled")
    assert kernels.backend_name() == kernels.BACKEND


def test_training_identical_across_backends(small_training_set, monkeypatch):
    """The model must not depend on which kernel backend built it."""
    if compiled is None:
        pytest.skip("compiled kernel not built")
    from fedt import boosting
    from fedt.boosting import FedtParams, train

    params = FedtParams(n_rounds=4, max_depth=3)
    models = {}
    for impl in (pure, compiled):
        monkeypatch.setattr(boosting.kernels, "scan_sorted_split", impl.scan_sorted_split)
        monkeypatch.setattr(boosting.kernels, "sequential_sum", impl.sequential_sum)
        models[impl.BACKEND] = train(small_training_set, params)
    a, b = models["pure"], models["compiled"]
    assert len(a.trees) == len(b.trees)
    for ta, tb in zip(a.trees, b.trees):
        np.testing.assert_array_equal(ta.feature, tb.feature)
        np.testing.assert_array_equal(ta.threshold, tb.threshold)
        np.testing.assert_array_equal(ta.weight, tb.weight)
