#pragma once

// Sample-moment statistics, k-th roots, and exponential moving averages
// with bias correction.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hadam {

/// Raised when a statistic has no value for the given samples (zero
/// variance for skewness, zero k-th moment for M_k).
class UndefinedStatistic : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A nonempty set of finite real samples.
class SampleSet {
public:
    explicit SampleSet(std::vector<double> values);

    std::span<const double> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

private:
    std::vector<double> values_;
};

/// x^k for integer k >= 0 by repeated squaring.
double int_pow(double x, int k);

/// (1/N) * sum of Y_j^k.
double raw_sample_moment(const SampleSet& samples, int k);

/// Population variance (divide by N), computed from the centered sum.
double sample_variance(const SampleSet& samples);

/// gamma = (E[g^3] - 3 E[g] Var(g) - E[g]^3) / Var(g)^(3/2), population estimators.
/// Throws UndefinedStatistic for N < 2 or zero variance.
double sample_skewness(const SampleSet& samples);

/// |E[g] / root_k(E[g^k])| with the signed real root for odd k.
/// Throws UndefinedStatistic when the k-th raw moment is zero.
double metric_mk(const SampleSet& samples, int k);

enum class RootPolicy {
    naive,  ///< x^(1/k) as a real power: NaN for any negative x
    signed_ ///< sign(x)|x|^(1/k) for odd k; domain error for negative x at even k
};

double kth_root(double x, int k, RootPolicy policy);

/// An exponential moving average started from zero.
struct EmaAccumulator {
    double value = 0.0;
    double decay = 0.0;
    std::uint64_t step = 0;
};

/// value' = decay * value + (1 - decay) * input; step' = step + 1.
/// NaN inputs propagate.
EmaAccumulator ema_update(const EmaAccumulator& acc, double input);

/// (1 - beta) * sum_{i=0}^{t-1} beta^i g_{t-i}^k, evaluated term by term.
/// This is the non-recursive form of a zero-initialized EMA over g^k.
double closed_form_ema(std::span<const double> history, double beta, int k);

/// value / (1 - decay^step). Throws std::domain_error at step 0.
double bias_correct(const EmaAccumulator& acc);

struct MomentSummary {
    std::size_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    std::map<int, double> raw_moments;
    /// Empty when skewness is undefined (zero variance or a single sample).
    std::optional<double> skewness;
    /// Only orders whose metric is defined appear here.
    std::map<int, double> metric;
};

/// Collects mean, variance, raw moments for each order (plus order 1),
/// skewness, and M_k for each order.
MomentSummary summarize(const SampleSet& samples, std::span<const int> orders);

} // namespace hadam
