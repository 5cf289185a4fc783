#include "uvae/param_set.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "uvae/errors.hpp"

namespace uvae {

void ParamSet::insert(const std::string& name, Tensor value, Partition part) {
    if (values.count(name)) throw ContractError("duplicate parameter identifier: " + name);
    values.emplace(name, std::move(value));
    partition.emplace(name, part);
}

const Tensor& ParamSet::at(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw ContractError("unknown parameter: " + name);
    return it->second;
}

const Var& ParamVars::at(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw ContractError("unbound parameter: " + name);
    return it->second;
}

ParamVars bind_params(Tape& tape, const ParamSet& params) {
    ParamVars bound;
    for (const auto& [name, value] : params.values) {
        bound.vars.emplace(name, tape.leaf(value));
    }
    return bound;
}

ParamSet collect_gradients(const Tape& tape, const ParamVars& vars, const ParamSet& like) {
    ParamSet grads;
    for (const auto& [name, value] : like.values) {
        Tensor g = tape.adjoint(vars.at(name));
        if (g.size() == 0) g = Tensor::zeros(value.shape);
        grads.insert(name, std::move(g), like.partition.at(name));
    }
    return grads;
}

ParamSet gradient(const std::function<Var(Tape&, const ParamVars&)>& objective,
                  const ParamSet& params) {
    Tape tape;
    ParamVars vars = bind_params(tape, params);
    Var root = objective(tape, vars);
    if (tape.value(root).size() != 1) {
        throw ContractError("gradient: objective must evaluate to a scalar, got shape " +
                            shape_to_string(tape.value(root).shape));
    }
    tape.backward(root);
    return collect_gradients(tape, vars, params);
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity" || name == "none") return Activation::Identity;
    if (name == "tanh") return Activation::Tanh;
    if (name == "softplus") return Activation::Softplus;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "softmax") return Activation::Softmax;
    throw ConfigError("unknown activation: " + name);
}

const char* activation_to_string(Activation act) {
    switch (act) {
        case Activation::Identity: return "identity";
        case Activation::Tanh: return "tanh";
        case Activation::Softplus: return "softplus";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

Tensor dense_layer(const Tensor& w, const Tensor& b, const Tensor& input, Activation act) {
    Tape tape;
    Var out = affine(tape.constant(w), tape.constant(b), tape.constant(input));
    switch (act) {
        case Activation::Identity: break;
        case Activation::Tanh: out = tanh(out); break;
        case Activation::Softplus: out = softplus(out); break;
        case Activation::Sigmoid: out = sigmoid(out); break;
        case Activation::Softmax: out = softmax(out); break;
    }
    return tape.value(out);
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

std::uint32_t read_u32(std::istream& is, std::size_t& offset) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is) throw ParseError("truncated parameter file", offset);
    offset += 4;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& is, std::size_t& offset) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw ParseError("truncated parameter file", offset);
    offset += 8;
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& is, std::size_t& offset) {
    std::uint64_t bits = read_u64(is, offset);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

constexpr char kMagic[4] = {'U', 'V', 'A', 'E'};

} // namespace

void save_param_set(const std::string& path, const ParamSet& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw NumericError("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, kParamFormatVersion);
    write_u32(os, static_cast<std::uint32_t>(params.values.size()));
    for (const auto& [name, value] : params.values) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u32(os, static_cast<std::uint32_t>(value.rank()));
        for (std::size_t e : value.shape) write_u64(os, e);
        for (double v : value.data) write_f64(os, v);
    }
    if (!os) throw NumericError("write failed: " + path);
}

ParamSet load_param_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParseError("cannot open parameter file: " + path, 0);
    std::size_t offset = 0;
    char magic[4];
    is.read(magic, 4);
    if (!is) throw ParseError("truncated parameter file", 0);
    for (int i = 0; i < 4; ++i) {
        if (magic[i] != kMagic[i]) throw ParseError("bad magic in parameter file", static_cast<std::size_t>(i));
    }
    offset = 4;
    std::uint32_t version = read_u32(is, offset);
    if (version != kParamFormatVersion) {
        throw ParseError("unsupported parameter format version " + std::to_string(version), 4);
    }
    std::uint32_t count = read_u32(is, offset);
    ParamSet params;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = read_u32(is, offset);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw ParseError("truncated parameter name", offset);
        offset += name_len;
        std::uint32_t rank = read_u32(is, offset);
        std::vector<std::size_t> shape(rank);
        for (std::uint32_t r = 0; r < rank; ++r) shape[r] = static_cast<std::size_t>(read_u64(is, offset));
        std::size_t n = shape_volume(shape);
        std::vector<double> data(n);
        for (std::size_t j = 0; j < n; ++j) data[j] = read_f64(is, offset);
        params.insert(name, Tensor(std::move(shape), std::move(data)), Partition::Phi);
    }
    return params;
}

} // namespace uvae
