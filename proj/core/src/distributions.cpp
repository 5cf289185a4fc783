#include "uvae/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uvae/errors.hpp"

namespace uvae {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double stable_softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void softmax_inplace(std::vector<double>& v) {
    double mx = *std::max_element(v.begin(), v.end());
    double total = 0.0;
    for (double& x : v) {
        x = std::exp(x - mx);
        total += x;
    }
    for (double& x : v) x /= total;
}

double simplex_sum(const Tensor& value) {
    double s = 0.0;
    for (double v : value.data) s += v;
    return s;
}

void require_open_simplex(const Tensor& value, const char* family) {
    for (double v : value.data) {
        if (!(v > 0.0)) {
            throw ContractError(std::string(family) + ": value must lie on the open simplex");
        }
    }
    if (std::abs(simplex_sum(value) - 1.0) > 1e-9) {
        throw ContractError(std::string(family) + ": value components must sum to 1");
    }
}

// Closed simplex: corners are legitimate values (one-hot labels).
void require_closed_simplex(const Tensor& value, const char* family) {
    for (double v : value.data) {
        if (v < -1e-12) {
            throw ContractError(std::string(family) + ": negative simplex component");
        }
    }
    if (std::abs(simplex_sum(value) - 1.0) > 1e-9) {
        throw ContractError(std::string(family) + ": value components must sum to 1");
    }
}

double gaussian_log_density_1d(double x, double mean, double log_var) {
    double d = x - mean;
    return -0.5 * (kLog2Pi + log_var + d * d * std::exp(-log_var));
}

} // namespace

const char* family_name(Family family) {
    switch (family) {
        case Family::DiagGaussian: return "diag_gaussian";
        case Family::LogisticNormal: return "logistic_normal";
        case Family::UniformBox: return "uniform_box";
        case Family::SimplexUniform: return "simplex_uniform";
        case Family::Concrete: return "concrete";
        case Family::Bernoulli: return "bernoulli";
    }
    return "?";
}

Family family_from_string(const std::string& name) {
    if (name == "diag_gaussian") return Family::DiagGaussian;
    if (name == "logistic_normal") return Family::LogisticNormal;
    if (name == "uniform_box") return Family::UniformBox;
    if (name == "simplex_uniform") return Family::SimplexUniform;
    if (name == "concrete") return Family::Concrete;
    if (name == "bernoulli") return Family::Bernoulli;
    throw ConfigError("unknown distribution family: " + name);
}

DistSpec DistSpec::diag_gaussian(Tensor mean, Tensor log_var) {
    if (!mean.same_shape(log_var)) throw ContractError("diag_gaussian: mean/log_var shape mismatch");
    if (!log_var.all_finite()) throw ContractError("diag_gaussian: log_var must be finite");
    DistSpec d;
    d.family = Family::DiagGaussian;
    d.mean = std::move(mean);
    d.log_var = std::move(log_var);
    return d;
}

DistSpec DistSpec::logistic_normal(Tensor mean_simplex, Tensor log_var) {
    if (!mean_simplex.same_shape(log_var)) throw ContractError("logistic_normal: shape mismatch");
    if (!log_var.all_finite()) throw ContractError("logistic_normal: log_var must be finite");
    if (mean_simplex.size() < 2) throw ContractError("logistic_normal: needs at least 2 coordinates");
    DistSpec d;
    d.family = Family::LogisticNormal;
    d.mean = std::move(mean_simplex);
    d.log_var = std::move(log_var);
    return d;
}

DistSpec DistSpec::uniform_box(Tensor lo, Tensor hi) {
    if (!lo.same_shape(hi)) throw ContractError("uniform_box: bound shape mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] < hi[i])) throw ContractError("uniform_box: requires lo < hi per coordinate");
    }
    DistSpec d;
    d.family = Family::UniformBox;
    d.lo = std::move(lo);
    d.hi = std::move(hi);
    return d;
}

DistSpec DistSpec::simplex_uniform(std::size_t k) {
    if (k < 2) throw ContractError("simplex_uniform: K must be at least 2");
    DistSpec d;
    d.family = Family::SimplexUniform;
    d.dim = k;
    return d;
}

DistSpec DistSpec::concrete(Tensor logits, double temperature) {
    if (!(temperature > 0.0)) throw ContractError("concrete: temperature must be positive");
    DistSpec d;
    d.family = Family::Concrete;
    d.logits = std::move(logits);
    d.temperature = temperature;
    return d;
}

DistSpec DistSpec::bernoulli(Tensor logits) {
    DistSpec d;
    d.family = Family::Bernoulli;
    d.logits = std::move(logits);
    return d;
}

std::size_t DistSpec::event_size() const {
    switch (family) {
        case Family::DiagGaussian:
        case Family::LogisticNormal: return mean.size();
        case Family::UniformBox: return lo.size();
        case Family::SimplexUniform: return dim;
        case Family::Concrete:
        case Family::Bernoulli: return logits.size();
    }
    return 0;
}

double log_density(const DistSpec& dist, const Tensor& value) {
    if (value.size() != dist.event_size()) {
        throw ContractError(std::string(family_name(dist.family)) + ": value size " +
                            std::to_string(value.size()) + " != event size " +
                            std::to_string(dist.event_size()));
    }
    switch (dist.family) {
        case Family::DiagGaussian: {
            double total = 0.0;
            for (std::size_t i = 0; i < value.size(); ++i) {
                total += gaussian_log_density_1d(value[i], dist.mean[i], dist.log_var[i]);
            }
            return total;
        }
        case Family::LogisticNormal: {
            // Additive log-ratio construction on the first K-1 coordinates
            // against the K-th: u_i = log(y_i/y_K) Gaussian with location
            // mean_i - mean_K and the i-th variance, plus the exact
            // change-of-variables term -sum_i log y_i.
            require_open_simplex(value, "logistic_normal");
            std::size_t k = value.size();
            double log_yk = std::log(value[k - 1]);
            double total = 0.0;
            for (std::size_t i = 0; i + 1 < k; ++i) {
                double u = std::log(value[i]) - log_yk;
                total += gaussian_log_density_1d(u, dist.mean[i] - dist.mean[k - 1], dist.log_var[i]);
            }
            for (std::size_t i = 0; i < k; ++i) total -= std::log(value[i]);
            return total;
        }
        case Family::UniformBox: {
            double total = 0.0;
            for (std::size_t i = 0; i < value.size(); ++i) {
                if (value[i] < dist.lo[i] || value[i] > dist.hi[i]) {
                    return -std::numeric_limits<double>::infinity();
                }
                total -= std::log(dist.hi[i] - dist.lo[i]);
            }
            return total;
        }
        case Family::SimplexUniform: {
            require_closed_simplex(value, "simplex_uniform");
            return std::lgamma(static_cast<double>(dist.dim));
        }
        case Family::Concrete: {
            // Density of the relaxed categorical on the open simplex.
            require_open_simplex(value, "concrete");
            std::size_t k = value.size();
            double tau = dist.temperature;
            double total = std::lgamma(static_cast<double>(k)) +
                           (static_cast<double>(k) - 1.0) * std::log(tau);
            double lse_max = -std::numeric_limits<double>::infinity();
            std::vector<double> w(k);
            for (std::size_t i = 0; i < k; ++i) {
                double log_yi = std::log(value[i]);
                total += dist.logits[i] - (tau + 1.0) * log_yi;
                w[i] = dist.logits[i] - tau * log_yi;
                lse_max = std::max(lse_max, w[i]);
            }
            double acc = 0.0;
            for (double wi : w) acc += std::exp(wi - lse_max);
            total -= static_cast<double>(k) * (lse_max + std::log(acc));
            return total;
        }
        case Family::Bernoulli: {
            double total = 0.0;
            double floor_log = std::log(kProbFloor);
            for (std::size_t i = 0; i < value.size(); ++i) {
                double x = value[i];
                if (x < -1e-9 || x > 1.0 + 1e-9) {
                    throw ContractError("bernoulli: values must lie in [0, 1]");
                }
                double log_p = std::max(-stable_softplus(-dist.logits[i]), floor_log);
                double log_1mp = std::max(-stable_softplus(dist.logits[i]), floor_log);
                total += x * log_p + (1.0 - x) * log_1mp;
            }
            return total;
        }
    }
    throw ContractError("unknown family");
}

std::size_t noise_size(const DistSpec& dist) {
    return dist.family == Family::Bernoulli ? 0 : dist.event_size();
}

NoiseKind noise_kind_for(Family family) {
    switch (family) {
        case Family::Concrete: return NoiseKind::Gumbel;
        case Family::UniformBox:
        case Family::SimplexUniform: return NoiseKind::Uniform;
        default: return NoiseKind::Normal;
    }
}

Tensor rsample(const DistSpec& dist, const NoiseDraw& noise) {
    if (noise.values.size() != noise_size(dist)) {
        throw ContractError(std::string(family_name(dist.family)) + ": noise size mismatch");
    }
    switch (dist.family) {
        case Family::DiagGaussian: {
            Tensor out = dist.mean;
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] += std::exp(0.5 * dist.log_var[i]) * noise.values[i];
            }
            return out;
        }
        case Family::LogisticNormal: {
            std::vector<double> v(dist.mean.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] = dist.mean[i] + std::exp(0.5 * dist.log_var[i]) * noise.values[i];
            }
            softmax_inplace(v);
            return Tensor::vector(std::move(v));
        }
        case Family::UniformBox: {
            Tensor out = dist.lo;
            for (std::size_t i = 0; i < out.size(); ++i) {
                out[i] += (dist.hi[i] - dist.lo[i]) * noise.values[i];
            }
            return out;
        }
        case Family::SimplexUniform: {
            // Exponential spacings: e_i = -log u_i, normalized.
            std::vector<double> v(dist.dim);
            double total = 0.0;
            for (std::size_t i = 0; i < dist.dim; ++i) {
                v[i] = -std::log(noise.values[i]);
                total += v[i];
            }
            for (double& x : v) x /= total;
            return Tensor::vector(std::move(v));
        }
        case Family::Concrete: {
            std::vector<double> v(dist.logits.size());
            for (std::size_t i = 0; i < v.size(); ++i) {
                v[i] = (dist.logits[i] + noise.values[i]) / dist.temperature;
            }
            softmax_inplace(v);
            return Tensor::vector(std::move(v));
        }
        case Family::Bernoulli: {
            return dist_mean(dist);
        }
    }
    throw ContractError("unknown family");
}

Tensor dist_mean(const DistSpec& dist) {
    switch (dist.family) {
        case Family::DiagGaussian:
        case Family::LogisticNormal: return dist.mean;
        case Family::UniformBox: {
            Tensor out = dist.lo;
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (dist.lo[i] + dist.hi[i]);
            return out;
        }
        case Family::SimplexUniform:
            return Tensor::full({dist.dim}, 1.0 / static_cast<double>(dist.dim));
        case Family::Concrete: {
            std::vector<double> v(dist.logits.data);
            softmax_inplace(v);
            return Tensor::vector(std::move(v));
        }
        case Family::Bernoulli: {
            Tensor out = dist.logits;
            for (double& v : out.data) v = stable_sigmoid(v);
            return out;
        }
    }
    throw ContractError("unknown family");
}

double kl_categorical(const Tensor& p, const Tensor& q) {
    if (p.size() != q.size()) throw ContractError("kl_categorical: length mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) {
            throw ContractError("kl_categorical: negative probability component");
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        total += p[i] * (std::log(p[i]) - std::log(std::max(q[i], kProbFloor)));
    }
    return total;
}

double uniform_box_log_volume(std::size_t dim, double lo, double hi) {
    if (!(lo < hi)) throw ContractError("uniform_box_log_volume: requires lo < hi");
    return -static_cast<double>(dim) * std::log(hi - lo);
}

// ---------------------------------------------------------------------------
// Graph mirror.

DistSpec DistVars::freeze(const Tape& tape) const {
    switch (family) {
        case Family::DiagGaussian:
            return DistSpec::diag_gaussian(tape.value(mean), tape.value(log_var));
        case Family::LogisticNormal:
            return DistSpec::logistic_normal(tape.value(mean), tape.value(log_var));
        case Family::Concrete:
            return DistSpec::concrete(tape.value(logits), temperature);
        case Family::Bernoulli:
            return DistSpec::bernoulli(tape.value(logits));
        case Family::UniformBox: {
            Tensor l = Tensor::full({dim}, lo);
            Tensor h = Tensor::full({dim}, hi);
            return DistSpec::uniform_box(std::move(l), std::move(h));
        }
        case Family::SimplexUniform:
            return DistSpec::simplex_uniform(dim);
    }
    throw ContractError("unknown family");
}

namespace {

/// -0.5 * sum(log 2pi + lv + (v-mu)^2 * exp(-lv))
Var gaussian_log_density_terms(Var value, Var mu, Var lv, std::size_t n) {
    Var diff = value - mu;
    Var quad = square(diff) * exp(-lv);
    Var s = sum(lv + quad);
    return add_const(scale(s, -0.5), -0.5 * kLog2Pi * static_cast<double>(n));
}

/// (K-1) x K log-ratio map against the last coordinate as a constant matrix.
Var alr_matrix(Tape& tape, std::size_t k) {
    Tensor m = Tensor::zeros({k - 1, k});
    for (std::size_t i = 0; i + 1 < k; ++i) {
        m.data[i * k + i] = 1.0;
        m.data[i * k + (k - 1)] = -1.0;
    }
    return tape.constant(std::move(m));
}

/// (K-1) x K selector of the leading coordinates as a constant matrix.
Var head_selector(Tape& tape, std::size_t k) {
    Tensor m = Tensor::zeros({k - 1, k});
    for (std::size_t i = 0; i + 1 < k; ++i) m.data[i * k + i] = 1.0;
    return tape.constant(std::move(m));
}

} // namespace

Var log_density_g(Tape& tape, const DistVars& dist, Var value) {
    switch (dist.family) {
        case Family::DiagGaussian: {
            std::size_t n = tape.value(value).size();
            return gaussian_log_density_terms(value, dist.mean, dist.log_var, n);
        }
        case Family::LogisticNormal: {
            std::size_t k = tape.value(value).size();
            Var zero_b = tape.constant(Tensor::zeros({k - 1}));
            Var alr = alr_matrix(tape, k);
            Var log_y = log(value);
            Var u = affine(alr, zero_b, log_y);
            Var u_loc = affine(alr, zero_b, dist.mean);
            Var u_lv = affine(head_selector(tape, k), zero_b, dist.log_var);
            Var gauss = gaussian_log_density_terms(u, u_loc, u_lv, k - 1);
            return gauss - sum(log_y);
        }
        case Family::UniformBox:
        case Family::SimplexUniform: {
            // Piecewise-constant in the value: contributes no gradient.
            double v = log_density(dist.freeze(tape), tape.value(value));
            return tape.constant(Tensor::scalar(v));
        }
        case Family::Bernoulli: {
            double floor_log = std::log(kProbFloor);
            Var log_p = clamp(-softplus(-dist.logits), floor_log, 0.0);
            Var log_1mp = clamp(-softplus(dist.logits), floor_log, 0.0);
            Var one_minus = add_const(-value, 1.0);
            return sum(value * log_p + one_minus * log_1mp);
        }
        case Family::Concrete:
            throw ContractError(
                "concrete: no graph density; objectives use the logistic-normal surrogate");
    }
    throw ContractError("unknown family");
}

Var rsample_g(Tape& tape, const DistVars& dist, const NoiseDraw& noise) {
    switch (dist.family) {
        case Family::DiagGaussian: {
            Var eps = tape.constant(noise.values);
            return dist.mean + exp(scale(dist.log_var, 0.5)) * eps;
        }
        case Family::LogisticNormal: {
            Var eps = tape.constant(noise.values);
            return softmax(dist.mean + exp(scale(dist.log_var, 0.5)) * eps);
        }
        case Family::Concrete: {
            Var g = tape.constant(noise.values);
            return softmax(scale(dist.logits + g, 1.0 / dist.temperature));
        }
        case Family::Bernoulli:
            return sigmoid(dist.logits);
        case Family::UniformBox: {
            Tensor out = noise.values;
            for (double& v : out.data) v = dist.lo + (dist.hi - dist.lo) * v;
            return tape.constant(std::move(out));
        }
        case Family::SimplexUniform:
            return tape.constant(rsample(DistSpec::simplex_uniform(dist.dim), noise));
    }
    throw ContractError("unknown family");
}

Var dist_mean_g(Tape& tape, const DistVars& dist) {
    switch (dist.family) {
        case Family::DiagGaussian:
        case Family::LogisticNormal: return dist.mean;
        case Family::Concrete: return softmax(dist.logits);
        case Family::Bernoulli: return sigmoid(dist.logits);
        case Family::UniformBox:
            return tape.constant(Tensor::full({dist.dim}, 0.5 * (dist.lo + dist.hi)));
        case Family::SimplexUniform:
            return tape.constant(Tensor::full({dist.dim}, 1.0 / static_cast<double>(dist.dim)));
    }
    throw ContractError("unknown family");
}

Var kl_categorical_g(Tape& tape, const Tensor& p, Var q) {
    double self_term = 0.0;
    for (double pi : p.data) {
        if (pi < 0.0) throw ContractError("kl_categorical: negative probability component");
        if (pi > 0.0) self_term += pi * std::log(pi);
    }
    Var log_q = log(clamp(q, kProbFloor, std::numeric_limits<double>::infinity()));
    return add_const(-dot(tape.constant(p), log_q), self_term);
}

} // namespace uvae
