#include "uvae/objectives.hpp"

#include <cmath>
#include <limits>

#include "uvae/errors.hpp"

namespace uvae {

void ObjectiveCoefficients::validate() const {
    if (alpha_f < 0 || alpha_f_d < 0 || alpha_r < 0 || alpha_r_d < 0) {
        throw ConfigError("objective coefficients must be non-negative");
    }
}

UnfeaturedVariant variant_from_string(const std::string& name) {
    if (name == "latent_z") return UnfeaturedVariant::LatentZ;
    if (name == "observed_z") return UnfeaturedVariant::ObservedZ;
    if (name == "aux_z") return UnfeaturedVariant::AuxZ;
    throw ConfigError("unknown unfeatured variant: " + name);
}

const char* variant_to_string(UnfeaturedVariant variant) {
    switch (variant) {
        case UnfeaturedVariant::LatentZ: return "latent_z";
        case UnfeaturedVariant::ObservedZ: return "observed_z";
        case UnfeaturedVariant::AuxZ: return "aux_z";
    }
    return "?";
}

namespace {

constexpr double kPiSqOver6 = 1.6449340668482264364724151666460;

/// Gumbel-moment-matched logistic-normal stand-in for the concrete encoder's
/// density: location logits/tau, per-coordinate variance (pi^2/6)/tau^2.
DistVars concrete_surrogate(Tape& tape, const DistVars& qy, std::size_t k) {
    DistVars s;
    s.family = Family::LogisticNormal;
    s.mean = scale(qy.logits, 1.0 / qy.temperature);
    s.log_var = tape.constant(
        Tensor::full({k}, std::log(kPiSqOver6) - 2.0 * std::log(qy.temperature)));
    return s;
}

/// Composition targets this close to the simplex boundary are scored by
/// categorical log-mass instead of the log-ratio density. The simplex-valued
/// mean head can only center log-ratios within (-1, 1), so boundary-hugging
/// targets (one-hots, near-corner unfeatured labels, jittered edge points)
/// would otherwise saturate the head and inflate its variance.
constexpr double kBoundaryMassThreshold = 0.01;

bool near_boundary(const Tensor& y) {
    for (double v : y.data) {
        if (v < kBoundaryMassThreshold) return true;
    }
    return false;
}

/// log q(y|x) for the composition encoder: the exact logistic-normal density
/// (or the concrete surrogate) for interior targets, the categorical
/// log-mass of the mean probabilities near the boundary.
Var log_q_y_g(Tape& tape, const ModelConfig& config, const DistVars& qy, Var y) {
    Tensor y_val = tape.value(y);  // copied: emitting nodes may reallocate the tape
    if (!near_boundary(y_val)) {
        if (qy.family == Family::LogisticNormal) return log_density_g(tape, qy, y);
        return log_density_g(tape, concrete_surrogate(tape, qy, config.y_dim), y);
    }
    Var probs = clamp(dist_mean_g(tape, qy), kProbFloor, 1.0);
    return dot(tape.constant(y_val), log(probs));
}

double log_prior_y(const ModelConfig& config, const Tensor& y) {
    return log_density(DistSpec::simplex_uniform(config.y_dim), y);
}

double log_prior_z_volume(const ModelConfig& config) {
    return uniform_box_log_volume(config.z_dim, config.z_lo, config.z_hi);
}

double log_q_x_volume(const ModelConfig& config) {
    return uniform_box_log_volume(config.x_dim, -config.gamma, config.gamma);
}

struct TermAccumulator {
    std::vector<std::pair<std::string, std::vector<Var>>> named;

    void add(const std::string& name, Var v) {
        for (auto& [n, vs] : named) {
            if (n == name) {
                vs.push_back(v);
                return;
            }
        }
        named.push_back({name, {v}});
    }

    TermVars average(Tape& tape, int sample_count) const {
        TermVars out;
        Var total;
        for (const auto& [name, vs] : named) {
            Var acc = vs[0];
            for (std::size_t i = 1; i < vs.size(); ++i) acc = acc + vs[i];
            if (sample_count > 1) acc = scale(acc, 1.0 / sample_count);
            out.terms.push_back({name, acc});
            total = total.valid() ? total + acc : acc;
        }
        out.total = total;
        return out;
    }
};

void require_sample_count(int sample_count) {
    if (sample_count < 1) throw ContractError("sample_count must be at least 1");
}

/// Reverse-labeled terms for one already-drawn prior nuisance value.
void reverse_labeled_terms(Tape& tape, const ModelConfig& config, const ParamVars& params, Var xc,
                           Var yc, const Tensor& z, TermAccumulator& acc) {
    Var zc = tape.constant(z);
    DistVars qy = encode_y_g(tape, config, params, xc);
    DistVars qz = encode_z_g(tape, config, params, xc, yc);
    acc.add("log_q_y", log_q_y_g(tape, config, qy, yc));
    acc.add("log_q_z", log_density_g(tape, qz, zc));
    acc.add("neg_log_prior_z", tape.constant(Tensor::scalar(-log_prior_z_volume(config))));
    acc.add("log_q_x", tape.constant(Tensor::scalar(log_q_x_volume(config))));
}

} // namespace

// Noise order per sample: eps_z (z_dim normals).
TermVars elbo_forward_labeled_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                                const Tensor& x, const Tensor& y, Rng& rng, int sample_count) {
    require_sample_count(sample_count);
    Var xc = tape.constant(x);
    Var yc = tape.constant(y);
    TermAccumulator acc;
    for (int s = 0; s < sample_count; ++s) {
        DistVars qz = encode_z_g(tape, config, params, xc, yc);
        Var z = clamp_z(rsample_g(tape, qz, draw_normal(rng, config.z_dim)), config);
        DistVars px = decode_x_g(tape, config, params, yc, z);
        acc.add("reconstruction", log_density_g(tape, px, xc));
        acc.add("entropy_z", -log_density_g(tape, qz, z));
        acc.add("log_prior_y", tape.constant(Tensor::scalar(log_prior_y(config, y))));
        acc.add("log_prior_z", tape.constant(Tensor::scalar(log_prior_z_volume(config))));
    }
    return acc.average(tape, sample_count);
}

// Noise order per sample: eps_y (y_dim normals or gumbels), eps_z (z_dim normals).
TermVars elbo_forward_unlabeled_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                                  const Tensor& x, Rng& rng, int sample_count) {
    require_sample_count(sample_count);
    Var xc = tape.constant(x);
    TermAccumulator acc;
    for (int s = 0; s < sample_count; ++s) {
        DistVars qy = encode_y_g(tape, config, params, xc);
        NoiseDraw ny = qy.family == Family::Concrete ? draw_gumbel(rng, config.y_dim)
                                                     : draw_normal(rng, config.y_dim);
        Var y = rsample_g(tape, qy, ny);
        DistVars qz = encode_z_g(tape, config, params, xc, y);
        Var z = clamp_z(rsample_g(tape, qz, draw_normal(rng, config.z_dim)), config);
        DistVars px = decode_x_g(tape, config, params, y, z);
        acc.add("reconstruction", log_density_g(tape, px, xc));
        acc.add("entropy_y", -log_q_y_g(tape, config, qy, y));
        acc.add("entropy_z", -log_density_g(tape, qz, z));
        acc.add("log_prior_y",
                tape.constant(Tensor::scalar(log_prior_y(config, tape.value(y)))));
        acc.add("log_prior_z", tape.constant(Tensor::scalar(log_prior_z_volume(config))));
    }
    return acc.average(tape, sample_count);
}

// Noise order per sample: z (z_dim uniforms on the prior box).
TermVars elbo_reverse_labeled_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                                const Tensor& x, const Tensor& y, Rng& rng, int sample_count) {
    require_sample_count(sample_count);
    Var xc = tape.constant(x);
    Var yc = tape.constant(y);
    TermAccumulator acc;
    for (int s = 0; s < sample_count; ++s) {
        Tensor z = rng.uniform_vec(config.z_dim, config.z_lo, config.z_hi);
        reverse_labeled_terms(tape, config, params, xc, yc, z, acc);
    }
    return acc.average(tape, sample_count);
}

// Noise order per sample: latent_z -> z (z_dim uniforms) then eps_x;
// observed_z -> eps_x only; aux_z -> eps_aux (z_dim normals) then eps_x.
// eps_x is x_dim normals for the Gaussian decoder and nothing for the
// relaxed Bernoulli decoder.
TermVars elbo_reverse_unfeatured_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                                   const Tensor& y, const Tensor* z_observed,
                                   UnfeaturedVariant variant, Rng& rng, int sample_count) {
    require_sample_count(sample_count);
    if (variant == UnfeaturedVariant::ObservedZ && z_observed == nullptr) {
        throw ContractError("observed_z variant requires an observed nuisance value");
    }
    if (variant == UnfeaturedVariant::AuxZ && !config.use_aux) {
        throw ContractError("aux_z variant requires the auxiliary network");
    }
    Var yc = tape.constant(y);
    TermAccumulator acc;
    for (int s = 0; s < sample_count; ++s) {
        Var z;
        Var neg_log_qzy;  // aux variant only
        switch (variant) {
            case UnfeaturedVariant::LatentZ:
                z = tape.constant(rng.uniform_vec(config.z_dim, config.z_lo, config.z_hi));
                break;
            case UnfeaturedVariant::ObservedZ:
                z = tape.constant(*z_observed);
                break;
            case UnfeaturedVariant::AuxZ: {
                DistVars qzy = aux_z_g(tape, config, params, yc);
                z = clamp_z(rsample_g(tape, qzy, draw_normal(rng, config.z_dim)), config);
                neg_log_qzy = -log_density_g(tape, qzy, z);
                break;
            }
        }
        DistVars px = decode_x_g(tape, config, params, yc, z);
        NoiseDraw nx = px.family == Family::DiagGaussian ? draw_normal(rng, config.x_dim)
                                                         : NoiseDraw{};
        Var x_hat = rsample_g(tape, px, nx);
        DistVars qy = encode_y_g(tape, config, params, x_hat);
        DistVars qz = encode_z_g(tape, config, params, x_hat, yc);
        acc.add("log_q_y", log_q_y_g(tape, config, qy, yc));
        acc.add("log_q_z", log_density_g(tape, qz, z));
        if (variant == UnfeaturedVariant::LatentZ) {
            acc.add("neg_log_prior_z",
                    tape.constant(Tensor::scalar(-log_prior_z_volume(config))));
        }
        if (variant == UnfeaturedVariant::AuxZ) acc.add("neg_log_q_z_given_y", neg_log_qzy);
        acc.add("neg_reconstruction", -log_density_g(tape, px, x_hat));
        acc.add("log_q_x", tape.constant(Tensor::scalar(log_q_x_volume(config))));
    }
    return acc.average(tape, sample_count);
}

// Noise order: per mixture component s: eps_aux (z_dim normals) then eps_x.
Var aux_consistency_kl_g(Tape& tape, const ModelConfig& config, const ParamVars& params,
                         const Tensor& y, int sample_count, Rng& rng) {
    require_sample_count(sample_count);
    if (!config.use_aux) throw ContractError("aux_consistency_kl requires the auxiliary network");
    Var yc = tape.constant(y);
    DistVars qzy = aux_z_g(tape, config, params, yc);

    std::vector<Var> z_draws;
    std::vector<DistVars> components;
    for (int s = 0; s < sample_count; ++s) {
        Var z = clamp_z(rsample_g(tape, qzy, draw_normal(rng, config.z_dim)), config);
        DistVars px = decode_x_g(tape, config, params, yc, z);
        NoiseDraw nx = px.family == Family::DiagGaussian ? draw_normal(rng, config.x_dim)
                                                         : NoiseDraw{};
        Var x_hat = rsample_g(tape, px, nx);
        z_draws.push_back(z);
        components.push_back(encode_z_g(tape, config, params, x_hat, yc));
    }

    // KL(q(z|y) || mix) ~= mean_s [log q(z_s|y) - logsumexp_t log q(z_s|x_t,y) + log S]
    Var total;
    double log_s = std::log(static_cast<double>(sample_count));
    for (int s = 0; s < sample_count; ++s) {
        std::vector<Var> comp_logs;
        double max_log = -std::numeric_limits<double>::infinity();
        for (int t = 0; t < sample_count; ++t) {
            Var l = log_density_g(tape, components[static_cast<std::size_t>(t)],
                                  z_draws[static_cast<std::size_t>(s)]);
            comp_logs.push_back(l);
            max_log = std::max(max_log, tape.value(l)[0]);
        }
        // Shift by the current max as a constant; the gradient is unaffected.
        Var exp_sum;
        for (Var l : comp_logs) {
            Var e = exp(add_const(l, -max_log));
            exp_sum = exp_sum.valid() ? exp_sum + e : e;
        }
        Var log_mix = add_const(log(exp_sum), max_log - log_s);
        Var term = log_density_g(tape, qzy, z_draws[static_cast<std::size_t>(s)]) - log_mix;
        total = total.valid() ? total + term : term;
    }
    return scale(total, 1.0 / sample_count);
}

DiscriminativeVars discriminative_losses_g(Tape& tape, const ModelConfig& config,
                                           const ParamVars& params, const Tensor& x,
                                           const Tensor& y, const NoiseDraw& z_prior) {
    Var xc = tape.constant(x);
    Var yc = tape.constant(y);
    DistVars qy = encode_y_g(tape, config, params, xc);
    Var y_bar = dist_mean_g(tape, qy);
    Var loss_y = kl_categorical_g(tape, y, y_bar);

    Var z = tape.constant(z_prior.values);
    DistVars px = decode_x_g(tape, config, params, yc, z);
    Var x_bar = dist_mean_g(tape, px);
    Var loss_x = sum(square(x_bar - xc));
    return DiscriminativeVars{loss_y, loss_x};
}

namespace {

template <typename Fn>
ElboEstimate run_estimate(const ModelConfig& config, const ParamSet& params, Rng& rng, Fn&& fn) {
    Tape tape;
    ParamVars vars = bind_params(tape, params);
    NoiseProvenance prov{rng.seed(), rng.position(), 0};
    TermVars terms = fn(tape, vars);
    prov.end = rng.position();
    ElboEstimate est;
    est.noise = prov;
    for (const auto& [name, v] : terms.terms) {
        double value = tape.value(v).scalar_value();
        est.breakdown.push_back({name, value});
        est.value += value;
    }
    return est;
}

} // namespace

ElboEstimate elbo_forward_labeled(const ModelConfig& config, const ParamSet& params,
                                  const Tensor& x, const Tensor& y, Rng& rng, int sample_count) {
    return run_estimate(config, params, rng, [&](Tape& t, const ParamVars& v) {
        return elbo_forward_labeled_g(t, config, v, x, y, rng, sample_count);
    });
}

ElboEstimate elbo_forward_unlabeled(const ModelConfig& config, const ParamSet& params,
                                    const Tensor& x, Rng& rng, int sample_count) {
    return run_estimate(config, params, rng, [&](Tape& t, const ParamVars& v) {
        return elbo_forward_unlabeled_g(t, config, v, x, rng, sample_count);
    });
}

ElboEstimate elbo_reverse_labeled(const ModelConfig& config, const ParamSet& params,
                                  const Tensor& x, const Tensor& y, Rng& rng, int sample_count) {
    return run_estimate(config, params, rng, [&](Tape& t, const ParamVars& v) {
        return elbo_reverse_labeled_g(t, config, v, x, y, rng, sample_count);
    });
}

ElboEstimate elbo_reverse_unfeatured(const ModelConfig& config, const ParamSet& params,
                                     const Tensor& y, const Tensor* z_observed,
                                     UnfeaturedVariant variant, Rng& rng, int sample_count) {
    return run_estimate(config, params, rng, [&](Tape& t, const ParamVars& v) {
        return elbo_reverse_unfeatured_g(t, config, v, y, z_observed, variant, rng, sample_count);
    });
}

double aux_consistency_kl(const ModelConfig& config, const ParamSet& params, const Tensor& y,
                          int sample_count, Rng& rng) {
    Tape tape;
    ParamVars vars = bind_params(tape, params);
    Var kl = aux_consistency_kl_g(tape, config, vars, y, sample_count, rng);
    return tape.value(kl).scalar_value();
}

std::pair<double, double> discriminative_losses(const ModelConfig& config, const ParamSet& params,
                                                const Tensor& x, const Tensor& y, Rng& rng) {
    Tape tape;
    ParamVars vars = bind_params(tape, params);
    NoiseDraw z_prior = draw_uniform(rng, config.z_dim, config.z_lo, config.z_hi);
    DiscriminativeVars d = discriminative_losses_g(tape, config, vars, x, y, z_prior);
    return {tape.value(d.loss_y).scalar_value(), tape.value(d.loss_x).scalar_value()};
}

TotalObjectiveVars total_objective_g(Tape& tape, const ModelConfig& config,
                                     const ParamVars& params, const MiniBatch& batch,
                                     const ObjectiveCoefficients& coeffs,
                                     UnfeaturedVariant variant, Rng& rng) {
    coeffs.validate();
    ObjectiveMetrics metrics;
    metrics.n_labeled = batch.labeled.size();
    metrics.n_unlabeled = batch.unlabeled_x.size();
    metrics.n_unfeatured = batch.unfeatured.size();
    metrics.empty_batch_warning = batch.empty();

    Var j = tape.constant(Tensor::scalar(0.0));
    double n_l = static_cast<double>(batch.labeled.size());

    for (const auto& [x, y] : batch.labeled) {
        if (coeffs.alpha_f != 0.0) {
            TermVars fwd = elbo_forward_labeled_g(tape, config, params, x, y, rng);
            metrics.elbo_fxy += tape.value(fwd.total).scalar_value();
            j = j + scale(fwd.total, coeffs.alpha_f);
        }
        bool need_disc = coeffs.alpha_f_d != 0.0 || coeffs.alpha_r_d != 0.0;
        bool need_rev = coeffs.alpha_r != 0.0;
        NoiseDraw z_prior;
        if (need_disc || need_rev) {
            z_prior = draw_uniform(rng, config.z_dim, config.z_lo, config.z_hi);
        }
        DiscriminativeVars d;
        if (need_disc) {
            d = discriminative_losses_g(tape, config, params, x, y, z_prior);
            metrics.loss_y += tape.value(d.loss_y).scalar_value();
            metrics.loss_x += tape.value(d.loss_x).scalar_value();
        }
        if (coeffs.alpha_f_d != 0.0) j = j - scale(d.loss_y, coeffs.alpha_f_d / n_l);
        if (need_rev) {
            // Reuses the same prior draw as the discriminative
            // reconstruction: one z ~ p(z) per labeled item.
            TermAccumulator acc;
            reverse_labeled_terms(tape, config, params, tape.constant(x), tape.constant(y),
                                  z_prior.values, acc);
            TermVars rev = acc.average(tape, 1);
            metrics.elbo_rxy += tape.value(rev.total).scalar_value();
            j = j + scale(rev.total, coeffs.alpha_r);
        }
        if (coeffs.alpha_r_d != 0.0) j = j - scale(d.loss_x, coeffs.alpha_r_d / n_l);
    }

    if (coeffs.alpha_f != 0.0) {
        for (const Tensor& x : batch.unlabeled_x) {
            TermVars fwd = elbo_forward_unlabeled_g(tape, config, params, x, rng);
            metrics.elbo_fx += tape.value(fwd.total).scalar_value();
            j = j + scale(fwd.total, coeffs.alpha_f);
        }
    }

    if (coeffs.alpha_r != 0.0) {
        for (const auto& item : batch.unfeatured) {
            const Tensor* z_obs = item.z ? &*item.z : nullptr;
            TermVars rev = elbo_reverse_unfeatured_g(tape, config, params, item.y, z_obs, variant,
                                                     rng);
            metrics.elbo_ry += tape.value(rev.total).scalar_value();
            j = j + scale(rev.total, coeffs.alpha_r);
        }
    }

    if (metrics.n_labeled > 0) {
        metrics.elbo_fxy /= n_l;
        metrics.elbo_rxy /= n_l;
        metrics.loss_y /= n_l;
        metrics.loss_x /= n_l;
    }
    if (metrics.n_unlabeled > 0) metrics.elbo_fx /= static_cast<double>(metrics.n_unlabeled);
    if (metrics.n_unfeatured > 0) metrics.elbo_ry /= static_cast<double>(metrics.n_unfeatured);

    metrics.j = tape.value(j).scalar_value();
    return TotalObjectiveVars{j, metrics};
}

double total_objective(const ModelConfig& config, const ParamSet& params, const MiniBatch& batch,
                       const ObjectiveCoefficients& coeffs, UnfeaturedVariant variant, Rng& rng,
                       ObjectiveMetrics* metrics_out) {
    Tape tape;
    ParamVars vars = bind_params(tape, params);
    TotalObjectiveVars total =
        total_objective_g(tape, config, vars, batch, coeffs, variant, rng);
    if (metrics_out) *metrics_out = total.metrics;
    return total.metrics.j;
}

} // namespace uvae
