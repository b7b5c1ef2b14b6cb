#include "hadam/moments.hpp"

#include <cmath>
#include <limits>

namespace hadam {

SampleSet::SampleSet(std::vector<double> values) : values_(std::move(values))
{
    if (values_.empty()) {
        throw std::domain_error("sample set must be nonempty");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw std::domain_error("sample set contains a non-finite value");
        }
    }
}

double int_pow(double x, int k)
{
    if (k < 0) {
        throw std::domain_error("int_pow: negative exponent");
    }
    double result = 1.0;
    double base = x;
    unsigned e = static_cast<unsigned>(k);
    while (e != 0) {
        if (e & 1U) {
            result *= base;
        }
        e >>= 1U;
        if (e != 0) {
            base *= base;
        }
    }
    return result;
}

double raw_sample_moment(const SampleSet& samples, int k)
{
    if (k < 1) {
        throw std::domain_error("moment order must be >= 1");
    }
    double sum = 0.0;
    for (double y : samples.values()) {
        sum += int_pow(y, k);
    }
    return sum / static_cast<double>(samples.size());
}

double sample_variance(const SampleSet& samples)
{
    const double mean = raw_sample_moment(samples, 1);
    double sum = 0.0;
    for (double y : samples.values()) {
        sum += (y - mean) * (y - mean);
    }
    return sum / static_cast<double>(samples.size());
}

double sample_skewness(const SampleSet& samples)
{
    if (samples.size() < 2) {
        throw UndefinedStatistic("skewness needs at least two samples");
    }
    const double variance = sample_variance(samples);
    if (!(variance > 0.0)) {
        throw UndefinedStatistic("skewness is undefined for zero variance");
    }
    const double mean = raw_sample_moment(samples, 1);
    const double third = raw_sample_moment(samples, 3);
    return (third - 3.0 * mean * variance - mean * mean * mean) / std::pow(std::sqrt(variance), 3);
}

double metric_mk(const SampleSet& samples, int k)
{
    const double moment = raw_sample_moment(samples, k);
    if (moment == 0.0) {
        throw UndefinedStatistic("M_k is undefined when the k-th raw moment is zero");
    }
    const double mean = raw_sample_moment(samples, 1);
    return std::abs(mean / kth_root(moment, k, RootPolicy::signed_));
}

double kth_root(double x, int k, RootPolicy policy)
{
    if (k < 1) {
        throw std::domain_error("root order must be >= 1");
    }
    if (k == 1) {
        return x;
    }
    const double exponent = 1.0 / static_cast<double>(k);
    switch (policy) {
    case RootPolicy::naive:
        // std::pow of a negative base with a non-integer exponent is NaN.
        return std::pow(x, exponent);
    case RootPolicy::signed_:
        if (x < 0.0) {
            if (k % 2 == 0) {
                throw std::domain_error("even root of a negative value");
            }
            return -std::pow(-x, exponent);
        }
        return std::pow(x, exponent);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

EmaAccumulator ema_update(const EmaAccumulator& acc, double input)
{
    return EmaAccumulator{acc.decay * acc.value + (1.0 - acc.decay) * input, acc.decay, acc.step + 1};
}

double closed_form_ema(std::span<const double> history, double beta, int k)
{
    if (history.empty()) {
        throw std::domain_error("closed_form_ema: empty history");
    }
    double sum = 0.0;
    double weight = 1.0;
    // history[t-1] is the newest gradient and carries weight beta^0.
    for (auto it = history.rbegin(); it != history.rend(); ++it) {
        sum += weight * std::pow(*it, k);
        weight *= beta;
    }
    return (1.0 - beta) * sum;
}

double bias_correct(const EmaAccumulator& acc)
{
    if (acc.step == 0) {
        throw std::domain_error("bias_correct: no updates yet (t = 0)");
    }
    return acc.value / (1.0 - std::pow(acc.decay, static_cast<double>(acc.step)));
}

MomentSummary summarize(const SampleSet& samples, std::span<const int> orders)
{
    MomentSummary s;
    s.count = samples.size();
    s.mean = raw_sample_moment(samples, 1);
    s.variance = sample_variance(samples);
    s.raw_moments[1] = s.mean;
    for (int k : orders) {
        s.raw_moments[k] = raw_sample_moment(samples, k);
        try {
            s.metric[k] = metric_mk(samples, k);
        } catch (const UndefinedStatistic&) {
        }
    }
    try {
        s.skewness = sample_skewness(samples);
    } catch (const UndefinedStatistic&) {
    }
    return s;
}

} // namespace hadam
