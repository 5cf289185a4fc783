#pragma once

#include <functional>
#include <map>
#include <string>

#include "uvae/tape.hpp"
#include "uvae/tensor.hpp"

namespace uvae {

enum class Partition : unsigned char { Theta, Phi };

/// Named parameter tensors with a generative/recognition partition.
/// std::map keeps iteration order stable, which the optimizer, the
/// serializer, and the determinism guarantees all rely on.
struct ParamSet {
    std::map<std::string, Tensor> values;
    std::map<std::string, Partition> partition;

    void insert(const std::string& name, Tensor value, Partition part);
    const Tensor& at(const std::string& name) const;
    std::size_t count() const { return values.size(); }
};

/// Every parameter bound as a leaf node on one tape.
struct ParamVars {
    std::map<std::string, Var> vars;
    const Var& at(const std::string& name) const;
};

ParamVars bind_params(Tape& tape, const ParamSet& params);

/// Adjoints of every bound parameter, shaped like `like`.
ParamSet collect_gradients(const Tape& tape, const ParamVars& vars, const ParamSet& like);

/// d(objective)/d(p) for every parameter. The objective callback builds a
/// scalar expression from the bound parameters; non-scalar results are a
/// contract violation.
ParamSet gradient(const std::function<Var(Tape&, const ParamVars&)>& objective,
                  const ParamSet& params);

enum class Activation : unsigned char { Identity, Tanh, Softplus, Sigmoid, Softmax };

Activation activation_from_string(const std::string& name);
const char* activation_to_string(Activation act);

/// activation(W*input + b) computed directly (no tape).
Tensor dense_layer(const Tensor& w, const Tensor& b, const Tensor& input, Activation act);

// Flat binary format: magic "UVAE", version u32, entry count u32, then per
// entry: name length u32 + UTF-8 name, rank u32, extents u64 each, values
// little-endian f64. Round-trips bit-exactly. Partition labels are not part
// of the format; loaders reassign them from the model layout.
inline constexpr std::uint32_t kParamFormatVersion = 1;
void save_param_set(const std::string& path, const ParamSet& params);
ParamSet load_param_set(const std::string& path);

} // namespace uvae
