import math

import pytest

import bnpseg


def small_problem():
    return bnpseg.make_problem(
        [[3, 1], [2, 2], [0, 4]], [(0, 1, 0.5), (1, 2, 0.5)], ground_truth=[0, 0, 1]
    )


def test_exact_posterior_is_normalized():
    post = bnpseg.exact_posterior(small_problem(), bnpseg.DirichletProcess(1.0), phi=2.0)
    assert len(post) == 5
    assert math.isclose(sum(post.values()), 1.0, rel_tol=1e-12)


def test_log_epf_dirichlet_process():
    # alpha^k * prod Gamma(m)
    value = bnpseg.log_epf(bnpseg.DirichletProcess(2.0), [3, 1])
    assert math.isclose(value, 2 * math.log(2.0) + math.log(2.0), rel_tol=1e-12)


def test_segment_is_deterministic():
    problem = bnpseg.synthesize(width=8, height=8, seed=3)
    kernel = bnpseg.GswKernel(bnpseg.ConstantDelta(10.0), bnpseg.ScanOrder.RANDOM)
    a = bnpseg.segment(problem, bnpseg.DirichletProcess(3.0), kernel, iterations=20, seed=4,
                       timing=False)
    b = bnpseg.segment(problem, bnpseg.DirichletProcess(3.0), kernel, iterations=20, seed=4,
                       timing=False)
    assert a == b
    assert len(a["records"]) == 21
    assert len(a["best_labels"]) == problem.num_sites
    best = max(r["log_posterior"] for r in a["records"])
    assert a["best_log_posterior"] == best


def test_gibbs_and_truncated_prior():
    problem = bnpseg.synthesize(width=6, height=6, seed=2)
    out = bnpseg.segment(problem, bnpseg.TruncatedDP(3.0, 3), bnpseg.GswKernel(),
                         iterations=10, record_sizes=True)
    assert all(min(r["sizes"]) >= 3 for r in out["records"])
    out = bnpseg.segment(problem, kernel=bnpseg.GibbsKernel(), iterations=5)
    assert len(out["records"]) == 6


def test_rand_index_and_crp():
    assert bnpseg.rand_index([0, 0, 1, 1], [0, 0, 1, 1]) == 1.0
    assert math.isclose(bnpseg.rand_index([0, 0, 1], [0, 1, 1]), 1 / 3)
    stats = bnpseg.crp_simulate(3.0, 100, draws=500, seed=1)
    assert len(stats["clusters"]) == 500
    expected = bnpseg.crp_expected_clusters(3.0, 100)
    assert abs(stats["summary"]["mean"] - expected) < 4 * stats["summary"]["standard_error"]


def test_render_and_round_trip(tmp_path):
    problem = bnpseg.synthesize(width=5, height=4, seed=1)
    image = bnpseg.render_ppm(problem, problem.ground_truth)
    assert image.startswith(b"P6")
    path = tmp_path / "p.problem"
    problem.save(path)
    loaded = bnpseg.load_problem(path)
    assert loaded.edges() == problem.edges()
    assert loaded.histogram(7) == problem.histogram(7)


def test_errors():
    with pytest.raises(bnpseg.ConfigError):
        bnpseg.segment(small_problem(), bnpseg.DirichletProcess(-1.0))
    with pytest.raises(bnpseg.InputError):
        bnpseg.make_problem([[1, 0], [0, 1]], [(0, 0, 1.0)])
    with pytest.raises(bnpseg.InputError):
        bnpseg.load_problem("does/not/exist.problem")
    with pytest.raises(ValueError):
        bnpseg.make_problem([[1, 0], [0]], [])
