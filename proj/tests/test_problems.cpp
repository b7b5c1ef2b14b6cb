#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hadam/problems.hpp"
#include "hadam/rng.hpp"

using namespace hadam;

namespace {

std::vector<double> random_point(Rng& rng, std::size_t dim, double scale = 1.5)
{
    std::vector<double> x(dim);
    for (double& v : x) v = rng.uniform(-scale, scale);
    return x;
}

// All size-s subsets of {0..n-1}, lexicographic.
std::vector<std::vector<std::size_t>> subsets(std::size_t n, std::size_t s)
{
    std::vector<std::vector<std::size_t>> out;
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(s), true);
    do {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (pick[i]) idx.push_back(i);
        out.push_back(idx);
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return out;
}

const std::size_t kLayers[] = {5, 7, 3};

} // namespace

TEST_CASE("quadratic problem")
{
    const auto p = quadratic_problem(2);
    const Batch b = p->full_batch();
    const double x[] = {3.0, -1.0};
    CHECK(p->grad(x, b) == std::vector<double>{3.0, -1.0});
    const double zero[] = {0.0, 0.0};
    CHECK(p->loss(zero, b) == 0.0);
    CHECK(p->optimum()->value == 0.0);
    CHECK_FALSE(p->stochastic());

    Rng rng(1);
    const auto q = quadratic_problem(6);
    for (int i = 0; i < 10; ++i) {
        const auto xi = random_point(rng, 6);
        CHECK(relative_error(q->grad(xi, q->full_batch()), finite_difference_grad(*q, xi, q->full_batch())) <= 1e-7);
    }
}

TEST_CASE("rosenbrock problem")
{
    const auto p = rosenbrock_problem();
    const Batch b = p->full_batch();
    const double opt[] = {1.0, 1.0};
    CHECK(p->grad(opt, b) == std::vector<double>{0.0, 0.0});
    CHECK(p->loss(opt, b) == 0.0);
    const double origin[] = {0.0, 0.0};
    const auto fd = finite_difference_grad(*p, origin, b);
    CHECK(fd[0] == doctest::Approx(-2.0).epsilon(1e-8));
    CHECK(fd[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
    CHECK(p->grad(origin, b) == std::vector<double>{-2.0, 0.0});

    Rng rng(2);
    for (int i = 0; i < 10; ++i) {
        const auto x = random_point(rng, 2, 2.0);
        CHECK(relative_error(p->grad(x, b), finite_difference_grad(*p, x, b)) <= 1e-6);
    }
}

TEST_CASE("linear problem has a constant gradient")
{
    LinearProblem p({2.0, -0.5});
    const double x[] = {10.0, 3.0};
    CHECK(p.grad(x, p.full_batch()) == std::vector<double>{2.0, -0.5});
    CHECK(p.loss(x, p.full_batch()) == doctest::Approx(18.5));
}

TEST_CASE("analytic gradients match central differences on every stochastic problem")
{
    std::vector<std::unique_ptr<Problem>> problems;
    problems.push_back(std::make_unique<NoisyQuadraticProblem>(4, 40, NoiseKind::normal, 1.0, 1));
    problems.push_back(logistic_problem(40, 5, 2));
    problems.push_back(mlp_problem(kLayers, 40, 3));
    problems.push_back(skew_mlp_problem(kLayers, 40, 4));
    Rng rng(3);
    for (const auto& p : problems) {
        INFO(p->name());
        for (int i = 0; i < 10; ++i) {
            const auto x = random_point(rng, p->dim());
            const Batch b = p->sample_batch(rng.next(), 8);
            CHECK(relative_error(p->grad(x, b), finite_difference_grad(*p, x, b)) <= 1e-6);
        }
    }
}

TEST_CASE("mlp gradient on a 5-parameter slice")
{
    const auto p = mlp_problem(kLayers, 50, 9);
    Rng rng(10);
    for (int i = 0; i < 3; ++i) {
        const auto x = p->initial_point(rng.next());
        const Batch b = p->full_batch();
        std::vector<std::size_t> coords;
        for (int j = 0; j < 5; ++j) coords.push_back(rng.below(p->dim()));
        const auto full = p->grad(x, b);
        std::vector<double> analytic;
        for (auto c : coords) analytic.push_back(full[c]);
        CHECK(relative_error(analytic, finite_difference_grad(*p, x, b, coords)) <= 1e-6);
    }
}

TEST_CASE("full-batch gradient is the mean of per-example gradients")
{
    const auto p = mlp_problem(kLayers, 30, 5);
    const auto x = p->initial_point(1);
    std::vector<double> mean(p->dim(), 0.0);
    for (std::size_t i = 0; i < p->num_examples(); ++i) {
        const auto gi = p->grad(x, Batch({i}, p->num_examples()));
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += gi[j] / static_cast<double>(p->num_examples());
    }
    CHECK(relative_error(p->grad(x, p->full_batch()), mean) <= 1e-13);

    // Two disjoint halves average to the whole.
    std::vector<std::size_t> lo(15), hi(15);
    std::iota(lo.begin(), lo.end(), 0);
    std::iota(hi.begin(), hi.end(), 15);
    const auto gl = p->grad(x, Batch(lo, 30));
    const auto gh = p->grad(x, Batch(hi, 30));
    std::vector<double> avg(p->dim());
    for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = 0.5 * (gl[j] + gh[j]);
    CHECK(relative_error(p->grad(x, p->full_batch()), avg) <= 1e-13);
}

TEST_CASE("minibatch gradients are unbiased (exhaustive over a 10-example problem)")
{
    const auto p = logistic_problem(10, 3, 6);
    const auto x = p->initial_point(2);
    const auto full = p->grad(x, p->full_batch());
    for (std::size_t s : {1, 3, 5, 10}) {
        const auto all = subsets(10, s);
        std::vector<double> mean(p->dim(), 0.0);
        for (const auto& idx : all) {
            const auto g = p->grad(x, Batch(idx, 10));
            for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += g[j];
        }
        for (std::size_t j = 0; j < mean.size(); ++j) {
            CHECK(std::abs(mean[j] / static_cast<double>(all.size()) - full[j]) <= 1e-12);
        }
    }
}

TEST_CASE("sample_batch: distinct, reproducible, bounded")
{
    const auto p = logistic_problem(100, 4, 1);
    const Batch a = p->sample_batch(123, 40);
    const Batch b = p->sample_batch(123, 40);
    CHECK(std::equal(a.indices().begin(), a.indices().end(), b.indices().begin(), b.indices().end()));
    std::set<std::size_t> unique(a.indices().begin(), a.indices().end());
    CHECK(unique.size() == 40);
    CHECK(*unique.rbegin() < 100);
    CHECK(p->sample_batch(124, 40).indices()[0] != a.indices()[0]); // different seed, different draw (for these seeds)
    CHECK(p->sample_batch(1, 100).size() == 100);
    CHECK_THROWS_AS(p->sample_batch(1, 101), std::domain_error);
    CHECK_THROWS_AS(p->sample_batch(1, 0), std::domain_error);
}

TEST_CASE("Batch invariants")
{
    CHECK_THROWS_AS(Batch({1, 1}, 5), std::domain_error);
    CHECK_THROWS_AS(Batch({5}, 5), std::domain_error);
    CHECK_THROWS_AS(Batch({}, 5), std::domain_error);
    CHECK(Batch({4, 0}, 5).size() == 2);
}

TEST_CASE("cluster data is deterministic in its seed")
{
    DataSpec spec;
    spec.examples = 50;
    const auto a = make_cluster_data(spec);
    const auto b = make_cluster_data(spec);
    CHECK(a.inputs == b.inputs);
    CHECK(a.labels == b.labels);
    spec.seed = 2;
    CHECK(make_cluster_data(spec).inputs != a.inputs);
    for (int y : a.labels) CHECK((y >= 0 && y < 4));
}

TEST_CASE("classification accuracy and NaN parameters")
{
    const auto p = mlp_problem(kLayers, 200, 8);
    auto x = p->initial_point(3);
    const double acc = *p->accuracy(x);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    std::fill(x.begin(), x.end(), std::nan(""));
    CHECK(std::isnan(p->loss(x, p->full_batch())));
    // NaN logits predict class 0; accuracy falls to that class's share.
    CHECK(*p->accuracy(x) < 0.6);
    CHECK_FALSE(quadratic_problem(2)->accuracy(std::vector<double>{0, 0}));
}

TEST_CASE("noisy quadratic optimum is the mean target")
{
    NoisyQuadraticProblem p(3, 25, NoiseKind::exponential, 2.0, 4);
    const auto opt = p.optimum();
    REQUIRE(opt);
    const auto g = p.grad(opt->x, p.full_batch());
    for (double v : g) CHECK(std::abs(v) <= 1e-14);
    CHECK(p.loss(opt->x, p.full_batch()) == doctest::Approx(opt->value));
}
