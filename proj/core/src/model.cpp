#include "uvae/model.hpp"

#include <cmath>
#include <limits>

#include "uvae/errors.hpp"

namespace uvae {

void ModelConfig::validate() const {
    if (x_dim == 0 || y_dim == 0 || z_dim == 0) throw ConfigError("model dims must be positive");
    if (y_dim < 2) throw ConfigError("y_dim must be at least 2 (simplex-valued compositions)");
    if (!(z_lo < z_hi)) throw ConfigError("z support requires lo < hi");
    if (!(concrete_tau > 0.0)) throw ConfigError("concrete_tau must be positive");
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    if (y_family != Family::LogisticNormal && y_family != Family::Concrete) {
        throw ConfigError("y_family must be logistic_normal or concrete");
    }
    if (x_family != Family::DiagGaussian && x_family != Family::Bernoulli) {
        throw ConfigError("x_family must be diag_gaussian or bernoulli");
    }
    for (std::size_t w : hidden_y)
        if (w == 0) throw ConfigError("hidden widths must be positive");
    for (std::size_t w : hidden_z)
        if (w == 0) throw ConfigError("hidden widths must be positive");
    for (std::size_t w : hidden_x)
        if (w == 0) throw ConfigError("hidden widths must be positive");
    for (std::size_t w : hidden_aux)
        if (w == 0) throw ConfigError("hidden widths must be positive");
}

namespace {

struct HeadSpec {
    std::string name;
    std::size_t out_dim;
};

struct NetSpec {
    std::string prefix;
    Partition part;
    std::size_t in_dim;
    std::vector<std::size_t> hidden;
    std::vector<HeadSpec> heads;
};

// Declared network order; initialization draws follow it.
std::vector<NetSpec> net_specs(const ModelConfig& c) {
    std::vector<NetSpec> nets;
    {
        NetSpec n{"encoder_y", Partition::Phi, c.x_dim, c.hidden_y, {}};
        if (c.y_family == Family::LogisticNormal) {
            n.heads.push_back({"mean", c.y_dim});
            n.heads.push_back({"logvar", c.y_dim});
        } else {
            n.heads.push_back({"logits", c.y_dim});
        }
        nets.push_back(std::move(n));
    }
    {
        NetSpec n{"encoder_z", Partition::Phi, c.x_dim + c.y_dim, c.hidden_z, {}};
        n.heads.push_back({"mean", c.z_dim});
        n.heads.push_back({"logstd", c.z_dim});
        nets.push_back(std::move(n));
    }
    {
        NetSpec n{"decoder_x", Partition::Theta, c.y_dim + c.z_dim, c.hidden_x, {}};
        if (c.x_family == Family::DiagGaussian) {
            n.heads.push_back({"mean", c.x_dim});
            if (!c.fixed_x_log_var) n.heads.push_back({"logvar", c.x_dim});
        } else {
            n.heads.push_back({"logits", c.x_dim});
        }
        nets.push_back(std::move(n));
    }
    if (c.use_aux) {
        NetSpec n{"aux_z", Partition::Phi, c.y_dim, c.hidden_aux, {}};
        n.heads.push_back({"mean", c.z_dim});
        n.heads.push_back({"logstd", c.z_dim});
        nets.push_back(std::move(n));
    }
    return nets;
}

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor w = Tensor::zeros({rows, cols});
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    return w;
}

Var hidden_activation(Var h, Activation act) {
    switch (act) {
        case Activation::Identity: return h;
        case Activation::Tanh: return tanh(h);
        case Activation::Softplus: return softplus(h);
        case Activation::Sigmoid: return sigmoid(h);
        case Activation::Softmax: return softmax(h);
    }
    throw ContractError("unknown activation");
}

Var mlp_trunk(Tape& tape, const ParamVars& params, const std::string& prefix,
              const std::vector<std::size_t>& hidden, Activation act, Var input) {
    Var h = input;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        std::string layer = prefix + "/h" + std::to_string(i);
        h = hidden_activation(affine(params.at(layer + "/W"), params.at(layer + "/b"), h), act);
    }
    return h;
}

Var head(Tape& tape, const ParamVars& params, const std::string& prefix, const std::string& name,
         Var h) {
    std::string base = prefix + "/" + name;
    return affine(params.at(base + "/W"), params.at(base + "/b"), h);
}

/// sigmoid mean rescaled onto the prior box plus a floored, capped
/// softplus standard-deviation head shared by the two nuisance encoders.
DistVars z_gaussian_head(Tape& tape, const ModelConfig& c, const ParamVars& params,
                         const std::string& prefix, Var h) {
    Var mean_raw = head(tape, params, prefix, "mean", h);
    Var mean = add_const(scale(sigmoid(mean_raw), c.z_width()), c.z_lo);
    Var std_raw = head(tape, params, prefix, "logstd", h);
    // Cap keeps mean +- 6 sigma within twice the support width.
    double std_cap = c.z_width() / 6.0;
    Var sigma = clamp(softplus(std_raw), kZStdFloor, std_cap);
    DistVars d;
    d.family = Family::DiagGaussian;
    d.mean = mean;
    d.log_var = scale(log(sigma), 2.0);
    return d;
}

void require_length(const Tensor& t, std::size_t n, const char* what) {
    if (t.size() != n) {
        throw ContractError(std::string(what) + ": expected length " + std::to_string(n) +
                            ", got " + std::to_string(t.size()));
    }
}

} // namespace

ParamSet init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(derive_seed(seed, "init"));
    ParamSet params;
    for (const NetSpec& net : net_specs(config)) {
        std::size_t in = net.in_dim;
        for (std::size_t i = 0; i < net.hidden.size(); ++i) {
            std::size_t out = net.hidden[i];
            std::string layer = net.prefix + "/h" + std::to_string(i);
            params.insert(layer + "/W", glorot_uniform(out, in, rng), net.part);
            params.insert(layer + "/b", Tensor::zeros({out}), net.part);
            in = out;
        }
        for (const HeadSpec& h : net.heads) {
            std::string base = net.prefix + "/" + h.name;
            params.insert(base + "/W", glorot_uniform(h.out_dim, in, rng), net.part);
            params.insert(base + "/b", Tensor::zeros({h.out_dim}), net.part);
        }
    }
    return params;
}

void assign_partitions(ParamSet& params) {
    for (auto& [name, part] : params.partition) {
        part = name.rfind("decoder_x/", 0) == 0 ? Partition::Theta : Partition::Phi;
    }
}

DistVars encode_y_g(Tape& tape, const ModelConfig& config, const ParamVars& params, Var x) {
    require_length(tape.value(x), config.x_dim, "encode_y");
    Var h = mlp_trunk(tape, params, "encoder_y", config.hidden_y, config.act_y, x);
    DistVars d;
    if (config.y_family == Family::LogisticNormal) {
        d.family = Family::LogisticNormal;
        d.mean = softmax(head(tape, params, "encoder_y", "mean", h));
        d.log_var = head(tape, params, "encoder_y", "logvar", h);
    } else {
        d.family = Family::Concrete;
        d.logits = head(tape, params, "encoder_y", "logits", h);
        d.temperature = config.concrete_tau;
    }
    return d;
}

DistVars encode_z_g(Tape& tape, const ModelConfig& config, const ParamVars& params, Var x, Var y) {
    require_length(tape.value(x), config.x_dim, "encode_z");
    require_length(tape.value(y), config.y_dim, "encode_z");
    Var h = mlp_trunk(tape, params, "encoder_z", config.hidden_z, config.act_z, concat(x, y));
    return z_gaussian_head(tape, config, params, "encoder_z", h);
}

DistVars decode_x_g(Tape& tape, const ModelConfig& config, const ParamVars& params, Var y, Var z) {
    require_length(tape.value(y), config.y_dim, "decode_x");
    require_length(tape.value(z), config.z_dim, "decode_x");
    Var h = mlp_trunk(tape, params, "decoder_x", config.hidden_x, config.act_x, concat(y, z));
    DistVars d;
    if (config.x_family == Family::DiagGaussian) {
        d.family = Family::DiagGaussian;
        Var mu = head(tape, params, "decoder_x", "mean", h);
        if (config.x_output == Activation::Softplus) mu = softplus(mu);
        d.mean = mu;
        d.log_var = config.fixed_x_log_var
                        ? tape.constant(Tensor::full({config.x_dim}, *config.fixed_x_log_var))
                        : head(tape, params, "decoder_x", "logvar", h);
    } else {
        d.family = Family::Bernoulli;
        d.logits = head(tape, params, "decoder_x", "logits", h);
    }
    return d;
}

DistVars aux_z_g(Tape& tape, const ModelConfig& config, const ParamVars& params, Var y) {
    if (!config.use_aux) throw ContractError("aux_z: auxiliary network not configured");
    require_length(tape.value(y), config.y_dim, "aux_z");
    Var h = mlp_trunk(tape, params, "aux_z", config.hidden_aux, config.act_aux, y);
    return z_gaussian_head(tape, config, params, "aux_z", h);
}

Var clamp_z(Var z, const ModelConfig& config) {
    return clamp(z, config.z_lo + kZClampMargin, config.z_hi - kZClampMargin);
}

namespace {

template <typename Fn>
DistSpec run_plain(const ModelConfig& config, const ParamSet& params, Fn&& fn) {
    Tape tape;
    ParamVars vars = bind_params(tape, params);
    DistVars d = fn(tape, vars);
    return d.freeze(tape);
}

} // namespace

DistSpec encode_y(const ModelConfig& config, const ParamSet& params, const Tensor& x) {
    return run_plain(config, params, [&](Tape& t, const ParamVars& v) {
        return encode_y_g(t, config, v, t.constant(x));
    });
}

DistSpec encode_z(const ModelConfig& config, const ParamSet& params, const Tensor& x,
                  const Tensor& y) {
    return run_plain(config, params, [&](Tape& t, const ParamVars& v) {
        return encode_z_g(t, config, v, t.constant(x), t.constant(y));
    });
}

DistSpec decode_x(const ModelConfig& config, const ParamSet& params, const Tensor& y,
                  const Tensor& z) {
    return run_plain(config, params, [&](Tape& t, const ParamVars& v) {
        return decode_x_g(t, config, v, t.constant(y), t.constant(z));
    });
}

DistSpec aux_z(const ModelConfig& config, const ParamSet& params, const Tensor& y) {
    return run_plain(config, params, [&](Tape& t, const ParamVars& v) {
        return aux_z_g(t, config, v, t.constant(y));
    });
}

Tensor generate_conditional(const ModelConfig& config, const ParamSet& params, const Tensor& y,
                            const Tensor& z, GenerateMode mode, Rng& noise) {
    DistSpec px = decode_x(config, params, y, z);
    if (mode == GenerateMode::Mean) return dist_mean(px);
    if (px.family == Family::Bernoulli) {
        // Visualization-only discrete draws; gradients never flow here.
        Tensor probs = dist_mean(px);
        Tensor out = probs;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = noise.uniform01() < probs[i] ? 1.0 : 0.0;
        }
        return out;
    }
    return rsample(px, draw_normal(noise, noise_size(px)));
}

Tensor infer_nuisance(const ModelConfig& config, const ParamSet& params, const Tensor& x,
                      const Tensor* y, Rng& noise, bool use_mean) {
    Tensor y_value;
    if (y != nullptr) {
        y_value = *y;
    } else {
        DistSpec qy = encode_y(config, params, x);
        if (use_mean) {
            y_value = dist_mean(qy);
        } else {
            NoiseDraw d = qy.family == Family::Concrete ? draw_gumbel(noise, noise_size(qy))
                                                        : draw_normal(noise, noise_size(qy));
            y_value = rsample(qy, d);
        }
    }
    DistSpec qz = encode_z(config, params, x, y_value);
    Tensor z = use_mean ? dist_mean(qz) : rsample(qz, draw_normal(noise, noise_size(qz)));
    for (double& v : z.data) {
        v = std::min(std::max(v, config.z_lo + kZClampMargin), config.z_hi - kZClampMargin);
    }
    return z;
}

} // namespace uvae
