#include "hadam/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hadam/rng.hpp"

namespace hadam {

namespace {

void require_dim(std::span<const double> x, std::size_t dim)
{
    if (x.size() != dim) {
        throw std::invalid_argument("point has dimension " + std::to_string(x.size()) + ", problem expects " +
                                    std::to_string(dim));
    }
}

/// log(sum exp(z)) with the maximum factored out; NaN if any logit is NaN.
double log_sum_exp(std::span<const double> z)
{
    double top = z[0];
    for (double v : z) {
        if (std::isnan(v)) {
            return v;
        }
        top = std::max(top, v);
    }
    double sum = 0.0;
    for (double v : z) {
        sum += std::exp(v - top);
    }
    return top + std::log(sum);
}

/// Index of the largest logit. NaN logits never win, so an all-NaN row
/// predicts class 0.
std::size_t arg_max(std::span<const double> z)
{
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c) {
        if (z[c] > z[best]) {
            best = c;
        }
    }
    return best;
}

} // namespace

// ---------------------------------------------------------------------------

Batch::Batch(std::vector<std::size_t> indices, std::size_t n) : indices_(std::move(indices))
{
    if (indices_.empty()) {
        throw std::domain_error("batch must be nonempty");
    }
    std::vector<std::size_t> sorted = indices_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::domain_error("batch indices must be distinct");
    }
    if (sorted.back() >= n) {
        throw std::domain_error("batch index " + std::to_string(sorted.back()) + " out of range for n = " +
                                std::to_string(n));
    }
}

std::vector<double> Problem::grad(std::span<const double> x, const Batch& batch) const
{
    std::vector<double> g(dim());
    loss_and_grad(x, batch, g);
    return g;
}

Batch Problem::full_batch() const
{
    std::vector<std::size_t> all(num_examples());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return Batch(std::move(all), num_examples());
}

Batch Problem::sample_batch(std::uint64_t seed, std::size_t size) const
{
    const std::size_t n = num_examples();
    if (size == 0 || size > n) {
        throw std::domain_error("batch size " + std::to_string(size) + " must lie in [1, n = " + std::to_string(n) +
                                "]");
    }
    // Partial Fisher-Yates: the first `size` slots are a uniform sample
    // without replacement.
    Rng rng(seed);
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(size);
    return Batch(std::move(pool), n);
}

// ---------------------------------------------------------------------------

QuadraticProblem::QuadraticProblem(std::size_t dim) : dim_(dim)
{
    if (dim == 0) {
        throw std::invalid_argument("quadratic problem needs dim >= 1");
    }
}

double QuadraticProblem::loss(std::span<const double> x, const Batch&) const
{
    require_dim(x, dim_);
    double sum = 0.0;
    for (double v : x) {
        sum += v * v;
    }
    return 0.5 * sum;
}

double QuadraticProblem::loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const
{
    std::copy(x.begin(), x.end(), grad.begin());
    return loss(x, batch);
}

std::vector<double> QuadraticProblem::initial_point(std::uint64_t) const { return std::vector<double>(dim_, 1.0); }

std::optional<Optimum> QuadraticProblem::optimum() const { return Optimum{std::vector<double>(dim_, 0.0), 0.0}; }

// ---------------------------------------------------------------------------

LinearProblem::LinearProblem(std::vector<double> slope) : slope_(std::move(slope))
{
    if (slope_.empty()) {
        throw std::invalid_argument("linear problem needs dim >= 1");
    }
}

double LinearProblem::loss(std::span<const double> x, const Batch&) const
{
    require_dim(x, slope_.size());
    return std::inner_product(x.begin(), x.end(), slope_.begin(), 0.0);
}

double LinearProblem::loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const
{
    std::copy(slope_.begin(), slope_.end(), grad.begin());
    return loss(x, batch);
}

std::vector<double> LinearProblem::initial_point(std::uint64_t) const
{
    return std::vector<double>(slope_.size(), 0.0);
}

// ---------------------------------------------------------------------------

double RosenbrockProblem::loss(std::span<const double> x, const Batch&) const
{
    require_dim(x, 2);
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return a * a + 100.0 * b * b;
}

double RosenbrockProblem::loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const
{
    const double b = x[1] - x[0] * x[0];
    grad[0] = -2.0 * (1.0 - x[0]) - 400.0 * x[0] * b;
    grad[1] = 200.0 * b;
    return loss(x, batch);
}

std::vector<double> RosenbrockProblem::initial_point(std::uint64_t) const { return {-1.2, 1.0}; }

std::optional<Optimum> RosenbrockProblem::optimum() const { return Optimum{{1.0, 1.0}, 0.0}; }

// ---------------------------------------------------------------------------

NoisyQuadraticProblem::NoisyQuadraticProblem(std::size_t dim, std::size_t n, NoiseKind noise, double scale,
                                             std::uint64_t seed)
    : dim_(dim), n_(n), targets_(dim * n)
{
    if (dim == 0 || n == 0) {
        throw std::invalid_argument("noisy quadratic needs dim >= 1 and n >= 1");
    }
    Rng rng(seed);
    for (double& t : targets_) {
        // Both kinds have zero mean and unit variance before scaling.
        t = scale * (noise == NoiseKind::normal ? rng.normal() : rng.exponential() - 1.0);
    }
}

double NoisyQuadraticProblem::loss(std::span<const double> x, const Batch& batch) const
{
    require_dim(x, dim_);
    double sum = 0.0;
    for (std::size_t i : batch.indices()) {
        const double* target = targets_.data() + i * dim_;
        for (std::size_t j = 0; j < dim_; ++j) {
            const double d = x[j] - target[j];
            sum += 0.5 * d * d;
        }
    }
    return sum / static_cast<double>(batch.size());
}

double NoisyQuadraticProblem::loss_and_grad(std::span<const double> x, const Batch& batch,
                                            std::span<double> grad) const
{
    require_dim(x, dim_);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i : batch.indices()) {
        const double* target = targets_.data() + i * dim_;
        for (std::size_t j = 0; j < dim_; ++j) {
            grad[j] += x[j] - target[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) {
        g *= inv;
    }
    return loss(x, batch);
}

std::vector<double> NoisyQuadraticProblem::initial_point(std::uint64_t) const
{
    return std::vector<double>(dim_, 1.0);
}

std::optional<Optimum> NoisyQuadraticProblem::optimum() const
{
    std::vector<double> centre(dim_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            centre[j] += targets_[i * dim_ + j];
        }
    }
    for (double& c : centre) {
        c /= static_cast<double>(n_);
    }
    const double value = loss(centre, full_batch());
    return Optimum{std::move(centre), value};
}

// ---------------------------------------------------------------------------

ClassificationData make_cluster_data(const DataSpec& spec)
{
    if (spec.examples == 0 || spec.features == 0 || spec.classes < 2) {
        throw std::invalid_argument("cluster data needs examples >= 1, features >= 1, classes >= 2");
    }
    if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0)) {
        throw std::invalid_argument("label_noise must lie in [0, 1]");
    }
    Rng rng(spec.seed);
    std::vector<double> centres(spec.classes * spec.features);
    for (double& c : centres) {
        c = spec.separation * rng.normal();
    }

    ClassificationData data;
    data.features = spec.features;
    data.classes = spec.classes;
    data.inputs.resize(spec.examples * spec.features);
    data.labels.resize(spec.examples);
    for (std::size_t i = 0; i < spec.examples; ++i) {
        const auto label = static_cast<std::size_t>(rng.below(spec.classes));
        for (std::size_t j = 0; j < spec.features; ++j) {
            double value = centres[label * spec.features + j] + rng.normal();
            if (spec.skew_scale > 0.0) {
                value += spec.skew_scale * (rng.exponential() - 1.0);
            }
            data.inputs[i * spec.features + j] = value;
        }
        std::size_t observed = label;
        if (spec.label_noise > 0.0 && rng.uniform() < spec.label_noise) {
            observed = (label + 1) % spec.classes;
        }
        data.labels[i] = static_cast<int>(observed);
    }
    return data;
}

// ---------------------------------------------------------------------------

LogisticProblem::LogisticProblem(ClassificationData data) : data_(std::move(data))
{
    if (data_.size() == 0) {
        throw std::invalid_argument("logistic problem needs data");
    }
}

std::size_t LogisticProblem::dim() const { return data_.classes * (data_.features + 1); }

double LogisticProblem::loss(std::span<const double> x, const Batch& batch) const
{
    std::vector<double> g(dim());
    return loss_and_grad(x, batch, g);
}

double LogisticProblem::loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const
{
    require_dim(x, dim());
    const std::size_t F = data_.features;
    const std::size_t C = data_.classes;
    const double* weights = x.data();
    const double* bias = x.data() + C * F;
    std::fill(grad.begin(), grad.end(), 0.0);
    double* gw = grad.data();
    double* gb = grad.data() + C * F;

    std::vector<double> z(C);
    double total = 0.0;
    for (std::size_t i : batch.indices()) {
        const auto input = data_.row(i);
        for (std::size_t c = 0; c < C; ++c) {
            z[c] = bias[c] + std::inner_product(input.begin(), input.end(), weights + c * F, 0.0);
        }
        const double lse = log_sum_exp(z);
        const auto label = static_cast<std::size_t>(data_.labels[i]);
        total += lse - z[label];
        for (std::size_t c = 0; c < C; ++c) {
            const double dz = std::exp(z[c] - lse) - (c == label ? 1.0 : 0.0);
            gb[c] += dz;
            for (std::size_t j = 0; j < F; ++j) {
                gw[c * F + j] += dz * input[j];
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) {
        g *= inv;
    }
    return total * inv;
}

std::vector<double> LogisticProblem::initial_point(std::uint64_t seed) const
{
    Rng rng(seed);
    std::vector<double> x(dim(), 0.0);
    for (std::size_t i = 0; i < data_.classes * data_.features; ++i) {
        x[i] = 0.01 * rng.normal();
    }
    return x;
}

std::optional<double> LogisticProblem::accuracy(std::span<const double> x) const
{
    require_dim(x, dim());
    const std::size_t F = data_.features;
    const std::size_t C = data_.classes;
    std::vector<double> z(C);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data_.size(); ++i) {
        const auto input = data_.row(i);
        for (std::size_t c = 0; c < C; ++c) {
            z[c] = x[C * F + c] + std::inner_product(input.begin(), input.end(), x.data() + c * F, 0.0);
        }
        correct += arg_max(z) == static_cast<std::size_t>(data_.labels[i]) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data_.size());
}

// ---------------------------------------------------------------------------

MlpProblem::MlpProblem(ClassificationData data, std::size_t hidden, std::string name)
    : data_(std::move(data)), hidden_(hidden), name_(std::move(name))
{
    if (data_.size() == 0 || hidden_ == 0) {
        throw std::invalid_argument("mlp problem needs data and hidden >= 1");
    }
}

std::size_t MlpProblem::dim() const
{
    return hidden_ * data_.features + hidden_ + data_.classes * hidden_ + data_.classes;
}

double MlpProblem::loss(std::span<const double> x, const Batch& batch) const
{
    require_dim(x, dim());
    std::vector<double> scratch;
    double total = 0.0;
    for (std::size_t i : batch.indices()) {
        total += example_loss(x, i, {}, scratch);
    }
    return total / static_cast<double>(batch.size());
}

double MlpProblem::loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const
{
    require_dim(x, dim());
    std::fill(grad.begin(), grad.end(), 0.0);
    std::vector<double> scratch;
    double total = 0.0;
    for (std::size_t i : batch.indices()) {
        total += example_loss(x, i, grad, scratch);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (double& g : grad) {
        g *= inv;
    }
    return total * inv;
}

// Loss of example i; when grad is nonempty its gradient is accumulated into it.
double MlpProblem::example_loss(std::span<const double> x, std::size_t i, std::span<double> grad,
                                std::vector<double>& scratch) const
{
    const std::size_t F = data_.features;
    const std::size_t H = hidden_;
    const std::size_t C = data_.classes;
    const double* w1 = x.data();
    const double* b1 = w1 + H * F;
    const double* w2 = b1 + H;
    const double* b2 = w2 + C * H;

    scratch.resize(H + C + H);
    std::span<double> hid(scratch.data(), H);
    std::span<double> z(scratch.data() + H, C);
    std::span<double> back(scratch.data() + H + C, H);

    const auto input = data_.row(i);
    for (std::size_t h = 0; h < H; ++h) {
        hid[h] = std::tanh(b1[h] + std::inner_product(input.begin(), input.end(), w1 + h * F, 0.0));
    }
    for (std::size_t c = 0; c < C; ++c) {
        z[c] = b2[c] + std::inner_product(hid.begin(), hid.end(), w2 + c * H, 0.0);
    }
    const double lse = log_sum_exp(z);
    const auto label = static_cast<std::size_t>(data_.labels[i]);
    const double loss = lse - z[label];
    if (grad.empty()) {
        return loss;
    }

    double* gw1 = grad.data();
    double* gb1 = gw1 + H * F;
    double* gw2 = gb1 + H;
    double* gb2 = gw2 + C * H;
    std::fill(back.begin(), back.end(), 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        const double dz = std::exp(z[c] - lse) - (c == label ? 1.0 : 0.0);
        gb2[c] += dz;
        for (std::size_t h = 0; h < H; ++h) {
            gw2[c * H + h] += dz * hid[h];
            back[h] += dz * w2[c * H + h];
        }
    }
    for (std::size_t h = 0; h < H; ++h) {
        const double da = back[h] * (1.0 - hid[h] * hid[h]);
        gb1[h] += da;
        for (std::size_t j = 0; j < F; ++j) {
            gw1[h * F + j] += da * input[j];
        }
    }
    return loss;
}

std::size_t MlpProblem::predict(std::span<const double> x, std::size_t i, std::vector<double>& scratch) const
{
    const std::size_t F = data_.features;
    const std::size_t H = hidden_;
    const std::size_t C = data_.classes;
    const double* w1 = x.data();
    const double* b1 = w1 + H * F;
    const double* w2 = b1 + H;
    const double* b2 = w2 + C * H;
    scratch.resize(H + C);
    std::span<double> hid(scratch.data(), H);
    std::span<double> z(scratch.data() + H, C);
    const auto input = data_.row(i);
    for (std::size_t h = 0; h < H; ++h) {
        hid[h] = std::tanh(b1[h] + std::inner_product(input.begin(), input.end(), w1 + h * F, 0.0));
    }
    for (std::size_t c = 0; c < C; ++c) {
        z[c] = b2[c] + std::inner_product(hid.begin(), hid.end(), w2 + c * H, 0.0);
    }
    return arg_max(z);
}

std::vector<double> MlpProblem::initial_point(std::uint64_t seed) const
{
    const std::size_t F = data_.features;
    const std::size_t H = hidden_;
    const std::size_t C = data_.classes;
    Rng rng(seed);
    std::vector<double> x(dim(), 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(F));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(H));
    for (std::size_t i = 0; i < H * F; ++i) {
        x[i] = s1 * rng.normal();
    }
    double* w2 = x.data() + H * F + H;
    for (std::size_t i = 0; i < C * H; ++i) {
        w2[i] = s2 * rng.normal();
    }
    return x;
}

std::optional<double> MlpProblem::accuracy(std::span<const double> x) const
{
    require_dim(x, dim());
    std::vector<double> scratch;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data_.size(); ++i) {
        correct += predict(x, i, scratch) == static_cast<std::size_t>(data_.labels[i]) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data_.size());
}

// ---------------------------------------------------------------------------

std::unique_ptr<Problem> quadratic_problem(std::size_t dim) { return std::make_unique<QuadraticProblem>(dim); }

std::unique_ptr<Problem> rosenbrock_problem() { return std::make_unique<RosenbrockProblem>(); }

std::unique_ptr<Problem> logistic_problem(std::size_t n, std::size_t dim, std::uint64_t seed)
{
    DataSpec spec;
    spec.examples = n;
    spec.features = dim;
    spec.seed = seed;
    return std::make_unique<LogisticProblem>(make_cluster_data(spec));
}

namespace {

DataSpec mlp_spec(std::span<const std::size_t> layer_sizes, std::size_t n, std::uint64_t seed)
{
    if (layer_sizes.size() != 3) {
        throw std::invalid_argument("mlp layer sizes must be {features, hidden, classes}");
    }
    DataSpec spec;
    spec.examples = n;
    spec.features = layer_sizes[0];
    spec.classes = layer_sizes[2];
    spec.seed = seed;
    return spec;
}

} // namespace

std::unique_ptr<Problem> mlp_problem(std::span<const std::size_t> layer_sizes, std::size_t n, std::uint64_t seed)
{
    return std::make_unique<MlpProblem>(make_cluster_data(mlp_spec(layer_sizes, n, seed)), layer_sizes[1]);
}

std::unique_ptr<Problem> skew_mlp_problem(std::span<const std::size_t> layer_sizes, std::size_t n, std::uint64_t seed,
                                          double skew_scale, double label_noise)
{
    DataSpec spec = mlp_spec(layer_sizes, n, seed);
    spec.skew_scale = skew_scale;
    spec.label_noise = label_noise;
    return std::make_unique<MlpProblem>(make_cluster_data(spec), layer_sizes[1], "skew_mlp");
}

// ---------------------------------------------------------------------------

std::vector<double> finite_difference_grad(const Problem& problem, std::span<const double> x, const Batch& batch,
                                           std::span<const std::size_t> coords, double h)
{
    if (!(h > 0.0)) {
        throw std::invalid_argument("finite difference step must be positive");
    }
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> out;
    out.reserve(coords.size());
    for (std::size_t i : coords) {
        const double saved = probe[i];
        probe[i] = saved + h;
        const double up = problem.loss(probe, batch);
        probe[i] = saved - h;
        const double down = problem.loss(probe, batch);
        probe[i] = saved;
        out.push_back((up - down) / (2.0 * h));
    }
    return out;
}

std::vector<double> finite_difference_grad(const Problem& problem, std::span<const double> x, const Batch& batch,
                                           double h)
{
    std::vector<std::size_t> all(x.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return finite_difference_grad(problem, x, batch, all, h);
}

double relative_error(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw std::invalid_argument("relative_error: length mismatch");
    }
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

} // namespace hadam
