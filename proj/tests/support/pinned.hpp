#pragma once

// Hand-set tiny models built twice from the same integer formula: once as a
// library ParamSet, once as the oracle's plain-vector model. The formula is
// the shared input; everything downstream of it is independent.

#include "oracle.hpp"
#include "uvae/model.hpp"

namespace testsupport {

inline double pinned_weight(std::size_t slot, std::size_t i, std::size_t j) {
    return (static_cast<double>((slot * 5 + i * 7 + j * 3) % 11) - 5.0) / 20.0;
}

inline double pinned_bias(std::size_t slot, std::size_t i) {
    return (static_cast<double>((slot * 3 + i * 5) % 7) - 3.0) / 15.0;
}

struct PinnedPair {
    uvae::ModelConfig config;
    uvae::ParamSet params;
    oracle::Model model;
};

/// Builds the matching pair for a configuration. Supported knobs: dims,
/// hidden widths, families, decoder output, fixed variance, aux network.
inline PinnedPair make_pinned(const uvae::ModelConfig& config) {
    PinnedPair pair;
    pair.config = config;
    oracle::Model& m = pair.model;
    m.x_dim = static_cast<int>(config.x_dim);
    m.y_dim = static_cast<int>(config.y_dim);
    m.z_dim = static_cast<int>(config.z_dim);
    switch (config.act_y) {
        case uvae::Activation::Tanh: m.act = 't'; break;
        case uvae::Activation::Softplus: m.act = 's'; break;
        case uvae::Activation::Sigmoid: m.act = 'g'; break;
        default: m.act = 'i'; break;
    }
    m.concrete = config.y_family == uvae::Family::Concrete;
    m.tau = config.concrete_tau;
    m.bernoulli_x = config.x_family == uvae::Family::Bernoulli;
    m.softplus_x = config.x_output == uvae::Activation::Softplus;
    if (config.fixed_x_log_var) m.fixed_logvar = *config.fixed_x_log_var;
    m.use_aux = config.use_aux;
    m.z_lo = config.z_lo;
    m.z_hi = config.z_hi;
    m.gamma = config.gamma;

    std::size_t slot = 0;
    auto fill = [&](const std::string& name, std::size_t rows, std::size_t cols,
                    uvae::Partition part, oracle::Mat* mat_out, oracle::Vec* bias_out) {
        uvae::Tensor w = uvae::Tensor::zeros({rows, cols});
        oracle::Mat mat(rows, oracle::Vec(cols));
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                double v = pinned_weight(slot, i, j);
                w.data[i * cols + j] = v;
                mat[i][j] = v;
            }
        }
        uvae::Tensor b = uvae::Tensor::zeros({rows});
        oracle::Vec bias(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            double v = pinned_bias(slot, i);
            b[i] = v;
            bias[i] = v;
        }
        ++slot;
        pair.params.insert(name + "/W", std::move(w), part);
        pair.params.insert(name + "/b", std::move(b), part);
        if (mat_out) *mat_out = std::move(mat);
        if (bias_out) *bias_out = std::move(bias);
    };

    auto fill_trunk = [&](const std::string& prefix, std::size_t in,
                          const std::vector<std::size_t>& hidden, uvae::Partition part,
                          std::vector<oracle::Mat>& ws, std::vector<oracle::Vec>& bs) {
        std::size_t cur = in;
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            oracle::Mat mat;
            oracle::Vec bias;
            fill(prefix + "/h" + std::to_string(i), hidden[i], cur, part, &mat, &bias);
            ws.push_back(std::move(mat));
            bs.push_back(std::move(bias));
            cur = hidden[i];
        }
    };

    using P = uvae::Partition;
    std::size_t ey_out = config.hidden_y.empty() ? config.x_dim : config.hidden_y.back();
    fill_trunk("encoder_y", config.x_dim, config.hidden_y, P::Phi, m.ey_w, m.ey_b);
    if (m.concrete) {
        fill("encoder_y/logits", config.y_dim, ey_out, P::Phi, &m.ey_mean_w, &m.ey_mean_b);
    } else {
        fill("encoder_y/mean", config.y_dim, ey_out, P::Phi, &m.ey_mean_w, &m.ey_mean_b);
        fill("encoder_y/logvar", config.y_dim, ey_out, P::Phi, &m.ey_lv_w, &m.ey_lv_b);
    }
    std::size_t ez_in = config.x_dim + config.y_dim;
    std::size_t ez_out = config.hidden_z.empty() ? ez_in : config.hidden_z.back();
    fill_trunk("encoder_z", ez_in, config.hidden_z, P::Phi, m.ez_w, m.ez_b);
    fill("encoder_z/mean", config.z_dim, ez_out, P::Phi, &m.ez_mean_w, &m.ez_mean_b);
    fill("encoder_z/logstd", config.z_dim, ez_out, P::Phi, &m.ez_ls_w, &m.ez_ls_b);
    std::size_t dx_in = config.y_dim + config.z_dim;
    std::size_t dx_out = config.hidden_x.empty() ? dx_in : config.hidden_x.back();
    fill_trunk("decoder_x", dx_in, config.hidden_x, P::Theta, m.dx_w, m.dx_b);
    if (m.bernoulli_x) {
        fill("decoder_x/logits", config.x_dim, dx_out, P::Theta, &m.dx_mean_w, &m.dx_mean_b);
    } else {
        fill("decoder_x/mean", config.x_dim, dx_out, P::Theta, &m.dx_mean_w, &m.dx_mean_b);
        if (!config.fixed_x_log_var) {
            fill("decoder_x/logvar", config.x_dim, dx_out, P::Theta, &m.dx_lv_w, &m.dx_lv_b);
        }
    }
    if (config.use_aux) {
        std::size_t ax_out = config.hidden_aux.empty() ? config.y_dim : config.hidden_aux.back();
        fill_trunk("aux_z", config.y_dim, config.hidden_aux, P::Phi, m.ax_w, m.ax_b);
        fill("aux_z/mean", config.z_dim, ax_out, P::Phi, &m.ax_mean_w, &m.ax_mean_b);
        fill("aux_z/logstd", config.z_dim, ax_out, P::Phi, &m.ax_ls_w, &m.ax_ls_b);
    }
    return pair;
}

/// The spec's tiny pinned configuration: 2-dim observations, 2 endmembers,
/// scalar nuisance, one hidden unit everywhere.
inline uvae::ModelConfig tiny_config() {
    uvae::ModelConfig c;
    c.x_dim = 2;
    c.y_dim = 2;
    c.z_dim = 1;
    c.hidden_y = {1};
    c.hidden_z = {1};
    c.hidden_x = {1};
    c.hidden_aux = {1};
    return c;
}

inline oracle::Vec to_vec(const uvae::Tensor& t) { return t.data; }
inline uvae::Tensor to_tensor(const oracle::Vec& v) { return uvae::Tensor::vector(v); }

} // namespace testsupport
