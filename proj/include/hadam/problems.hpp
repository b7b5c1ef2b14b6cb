#pragma once

// Differentiable test objectives of the empirical-risk form
//   f(x) = (1/n) sum_i f_i(x),
// evaluated on minibatches of example indices.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hadam {

/// Distinct example indices drawn from {0, ..., n-1}.
class Batch {
public:
    /// Throws std::domain_error on an empty batch, a repeated index, or an index >= n.
    Batch(std::vector<std::size_t> indices, std::size_t n);

    std::span<const std::size_t> indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }

private:
    std::vector<std::size_t> indices_;
};

struct Optimum {
    std::vector<double> x;
    double value = 0.0;
};

class Problem {
public:
    virtual ~Problem() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    /// Number of terms n in the average. Analytic problems have n = 1.
    virtual std::size_t num_examples() const = 0;

    virtual double loss(std::span<const double> x, const Batch& batch) const = 0;
    /// Writes the batch gradient into grad (length dim()) and returns the batch loss.
    virtual double loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const = 0;

    virtual std::vector<double> initial_point(std::uint64_t seed) const = 0;
    virtual std::optional<Optimum> optimum() const { return std::nullopt; }
    /// Fraction of correctly classified training examples; classification problems only.
    virtual std::optional<double> accuracy(std::span<const double> /*x*/) const { return std::nullopt; }

    bool stochastic() const { return num_examples() > 1; }

    std::vector<double> grad(std::span<const double> x, const Batch& batch) const;
    Batch full_batch() const;
    /// size distinct indices, reproducible from seed. Throws std::domain_error if size > n.
    Batch sample_batch(std::uint64_t seed, std::size_t size) const;
};

/// f(x) = 1/2 |x|^2.
class QuadraticProblem final : public Problem {
public:
    explicit QuadraticProblem(std::size_t dim);

    std::string name() const override { return "quadratic"; }
    std::size_t dim() const override { return dim_; }
    std::size_t num_examples() const override { return 1; }
    double loss(std::span<const double> x, const Batch& batch) const override;
    double loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const override;
    std::vector<double> initial_point(std::uint64_t seed) const override;
    std::optional<Optimum> optimum() const override;

private:
    std::size_t dim_;
};

/// f(x) = <c, x>: a constant gradient everywhere. No minimum.
class LinearProblem final : public Problem {
public:
    explicit LinearProblem(std::vector<double> slope);

    std::string name() const override { return "linear"; }
    std::size_t dim() const override { return slope_.size(); }
    std::size_t num_examples() const override { return 1; }
    double loss(std::span<const double> x, const Batch& batch) const override;
    double loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const override;
    std::vector<double> initial_point(std::uint64_t seed) const override;

private:
    std::vector<double> slope_;
};

/// f(x, y) = (1 - x)^2 + 100 (y - x^2)^2.
class RosenbrockProblem final : public Problem {
public:
    std::string name() const override { return "rosenbrock"; }
    std::size_t dim() const override { return 2; }
    std::size_t num_examples() const override { return 1; }
    double loss(std::span<const double> x, const Batch& batch) const override;
    double loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const override;
    std::vector<double> initial_point(std::uint64_t seed) const override;
    std::optional<Optimum> optimum() const override;
};

enum class NoiseKind { normal, exponential };

/// f_i(x) = 1/2 |x - xi_i|^2 with centered noise targets xi_i. Minibatch
/// gradients are x minus the batch mean of xi, so their distribution follows
/// the noise: symmetric for normal noise, right-skewed for exponential.
class NoisyQuadraticProblem final : public Problem {
public:
    NoisyQuadraticProblem(std::size_t dim, std::size_t n, NoiseKind noise, double scale, std::uint64_t seed);

    std::string name() const override { return "noisy_quadratic"; }
    std::size_t dim() const override { return dim_; }
    std::size_t num_examples() const override { return n_; }
    double loss(std::span<const double> x, const Batch& batch) const override;
    double loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const override;
    std::vector<double> initial_point(std::uint64_t seed) const override;
    std::optional<Optimum> optimum() const override;

private:
    std::size_t dim_;
    std::size_t n_;
    std::vector<double> targets_; // n x dim, row-major
};

struct ClassificationData {
    std::size_t features = 0;
    std::size_t classes = 0;
    std::vector<double> inputs; // n x features, row-major
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return {inputs.data() + i * features, features}; }
};

struct DataSpec {
    std::size_t examples = 2000;
    std::size_t features = 20;
    std::size_t classes = 4;
    std::uint64_t seed = 1;
    double separation = 1.0; ///< std-dev of the class centres
    /// Scale of centered exponential noise added to every feature (0 = none).
    double skew_scale = 0.0;
    /// Probability that a label is moved to the next class, (y + 1) mod C.
    double label_noise = 0.0;
};

/// Gaussian class clusters, optionally with asymmetric feature and label noise.
ClassificationData make_cluster_data(const DataSpec& spec);

/// Multinomial logistic regression, softmax cross-entropy. Parameters are
/// W (classes x features) followed by b (classes).
class LogisticProblem final : public Problem {
public:
    explicit LogisticProblem(ClassificationData data);

    std::string name() const override { return "logistic"; }
    std::size_t dim() const override;
    std::size_t num_examples() const override { return data_.size(); }
    double loss(std::span<const double> x, const Batch& batch) const override;
    double loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const override;
    std::vector<double> initial_point(std::uint64_t seed) const override;
    std::optional<double> accuracy(std::span<const double> x) const override;

private:
    ClassificationData data_;
};

/// One tanh hidden layer, softmax cross-entropy output, manual backprop.
/// Parameters: W1 (hidden x features), b1, W2 (classes x hidden), b2.
class MlpProblem final : public Problem {
public:
    MlpProblem(ClassificationData data, std::size_t hidden, std::string name = "mlp");

    std::string name() const override { return name_; }
    std::size_t dim() const override;
    std::size_t num_examples() const override { return data_.size(); }
    double loss(std::span<const double> x, const Batch& batch) const override;
    double loss_and_grad(std::span<const double> x, const Batch& batch, std::span<double> grad) const override;
    std::vector<double> initial_point(std::uint64_t seed) const override;
    std::optional<double> accuracy(std::span<const double> x) const override;

    std::size_t hidden() const { return hidden_; }

private:
    double example_loss(std::span<const double> x, std::size_t i, std::span<double> grad,
                        std::vector<double>& scratch) const;
    std::size_t predict(std::span<const double> x, std::size_t i, std::vector<double>& scratch) const;

    ClassificationData data_;
    std::size_t hidden_;
    std::string name_;
};

std::unique_ptr<Problem> quadratic_problem(std::size_t dim);
std::unique_ptr<Problem> rosenbrock_problem();
std::unique_ptr<Problem> logistic_problem(std::size_t n, std::size_t dim, std::uint64_t seed);
/// layer_sizes = {features, hidden, classes}.
std::unique_ptr<Problem> mlp_problem(std::span<const std::size_t> layer_sizes, std::size_t n, std::uint64_t seed);
/// MLP on clusters with exponential feature noise and one-directional label noise.
std::unique_ptr<Problem> skew_mlp_problem(std::span<const std::size_t> layer_sizes, std::size_t n, std::uint64_t seed,
                                          double skew_scale = 2.0, double label_noise = 0.2);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h on a fixed batch.
std::vector<double> finite_difference_grad(const Problem& problem, std::span<const double> x, const Batch& batch,
                                           double h = 1e-5);

/// Restricted to the listed coordinates; entry j corresponds to coords[j].
std::vector<double> finite_difference_grad(const Problem& problem, std::span<const double> x, const Batch& batch,
                                           std::span<const std::size_t> coords, double h = 1e-5);

/// |a - b|_2 / max(|a|_2, |b|_2), or 0 when both are zero.
double relative_error(std::span<const double> a, std::span<const double> b);

} // namespace hadam
