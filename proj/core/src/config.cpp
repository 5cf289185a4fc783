#include "uvae/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uvae/errors.hpp"

namespace uvae {

using nlohmann::json;

void ExperimentConfig::validate() const {
    model.validate();
    train.validate();
    data.mixture.validate();
    if (data.corner_radius < 0) throw ConfigError("data.corner_radius must be non-negative");
    if (eval.grid_columns == 0) throw ConfigError("eval.grid_columns must be positive");
}

namespace {

struct FieldDoc {
    const char* key;
    const char* doc;
};

const FieldDoc kFieldDocs[] = {
    {"seed", "master seed for data generation, initialization and sampling (u64)"},
    {"model.x_dim", "observation dimensionality"},
    {"model.y_dim", "composition dimensionality (simplex size)"},
    {"model.z_dim", "nuisance dimensionality"},
    {"model.hidden_y", "hidden widths of the x->y encoder, e.g. [5]"},
    {"model.hidden_z", "hidden widths of the (x,y)->z encoder"},
    {"model.hidden_x", "hidden widths of the (y,z)->x decoder"},
    {"model.hidden_aux", "hidden widths of the optional y->z auxiliary network"},
    {"model.activation", "hidden nonlinearity for all networks: tanh|softplus|sigmoid|identity"},
    {"model.activation_y", "override hidden nonlinearity of the y encoder"},
    {"model.activation_z", "override hidden nonlinearity of the z encoder"},
    {"model.activation_x", "override hidden nonlinearity of the decoder"},
    {"model.activation_aux", "override hidden nonlinearity of the auxiliary network"},
    {"model.y_family", "composition encoder family: logistic_normal|concrete"},
    {"model.x_family", "decoder family: diag_gaussian|bernoulli"},
    {"model.x_output", "decoder mean nonlinearity: identity|softplus"},
    {"model.z_lo", "lower edge of the nuisance prior box"},
    {"model.z_hi", "upper edge of the nuisance prior box"},
    {"model.concrete_tau", "temperature of the concrete composition encoder"},
    {"model.use_aux", "enable the auxiliary y->z network (bool)"},
    {"model.fixed_x_log_var", "freeze the decoder log-variance at this value (null = learned)"},
    {"model.gamma", "half-width of the flat observation prior"},
    {"train.batch_size", "items drawn per sub-collection per step"},
    {"train.epochs", "passes over the labeled collection"},
    {"train.learning_rate", "Adam learning rate"},
    {"train.alpha_f", "weight of the forward bounds"},
    {"train.alpha_f_d", "weight of the composition discriminative loss"},
    {"train.alpha_r", "weight of the reverse bounds (0 recovers the forward-only ablation)"},
    {"train.alpha_r_d", "weight of the observation discriminative loss"},
    {"train.variant", "unfeatured bound variant: observed_z|latent_z|aux_z"},
    {"train.log_every", "metric-log cadence in steps"},
    {"train.checkpoint_every", "checkpoint cadence in steps (0 = final only)"},
    {"train.beta1", "Adam first-moment decay"},
    {"train.beta2", "Adam second-moment decay"},
    {"train.eps_adam", "Adam denominator epsilon"},
    {"train.clip_lo", "lower gradient clip bound"},
    {"train.clip_hi", "upper gradient clip bound"},
    {"train.divergence_ceiling", "abort when |J| stays above this for 10 logs"},
    {"data.endmembers", "number of endmembers K"},
    {"data.channels", "spectral channels C"},
    {"data.grid_resolution", "abundance grid resolution (10 -> 66 points at K=3)"},
    {"data.nuisance_levels", "per-configuration multiplicative distortion levels"},
    {"data.noise_scale", "additive Gaussian observation noise"},
    {"data.mixing", "mixing law: linear|nonlinear"},
    {"data.replicates", "rows per (grid point, configuration)"},
    {"data.abundance_jitter", "uniform jitter applied to nominal abundances"},
    {"data.corrupt_fraction", "fraction of rows replaced by off-manifold spectra"},
    {"data.corner_radius", "L1 exclusion radius around simplex vertices"},
    {"data.labeled", "labeled split size"},
    {"data.unlabeled", "unlabeled split size"},
    {"data.unfeatured", "unfeatured split size"},
    {"data.standardize", "standardize observations channel-wise (bool)"},
    {"eval.grid_columns", "columns in generated image grids"},
    {"eval.z_policy", "conditioning nuisance: dataset_mean|prior_mean"},
};

void check_known(const json& j, const std::string& section, const std::set<std::string>& known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string full = section.empty() ? it.key() : section + "." + it.key();
        if (!known.count(full)) throw ConfigError("unknown config field: " + full);
    }
}

std::set<std::string> known_fields() {
    std::set<std::string> k;
    for (const FieldDoc& f : kFieldDocs) k.insert(f.key);
    k.insert("model");
    k.insert("train");
    k.insert("data");
    k.insert("eval");
    return k;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_activation(const json& j, const char* key, Activation& out) {
    if (j.contains(key)) out = activation_from_string(j.at(key).get<std::string>());
}

} // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    std::set<std::string> known = known_fields();
    check_known(j, "", known);
    for (const char* section : {"model", "train", "data", "eval"}) {
        if (j.contains(section)) check_known(j.at(section), section, known);
    }

    ExperimentConfig c;
    maybe(j, "seed", c.seed);
    if (j.contains("model")) {
        const json& m = j.at("model");
        maybe(m, "x_dim", c.model.x_dim);
        maybe(m, "y_dim", c.model.y_dim);
        maybe(m, "z_dim", c.model.z_dim);
        maybe(m, "hidden_y", c.model.hidden_y);
        maybe(m, "hidden_z", c.model.hidden_z);
        maybe(m, "hidden_x", c.model.hidden_x);
        maybe(m, "hidden_aux", c.model.hidden_aux);
        if (m.contains("activation")) {
            Activation a = activation_from_string(m.at("activation").get<std::string>());
            c.model.act_y = c.model.act_z = c.model.act_x = c.model.act_aux = a;
        }
        maybe_activation(m, "activation_y", c.model.act_y);
        maybe_activation(m, "activation_z", c.model.act_z);
        maybe_activation(m, "activation_x", c.model.act_x);
        maybe_activation(m, "activation_aux", c.model.act_aux);
        if (m.contains("y_family")) {
            c.model.y_family = family_from_string(m.at("y_family").get<std::string>());
        }
        if (m.contains("x_family")) {
            c.model.x_family = family_from_string(m.at("x_family").get<std::string>());
        }
        maybe_activation(m, "x_output", c.model.x_output);
        maybe(m, "z_lo", c.model.z_lo);
        maybe(m, "z_hi", c.model.z_hi);
        maybe(m, "concrete_tau", c.model.concrete_tau);
        maybe(m, "use_aux", c.model.use_aux);
        if (m.contains("fixed_x_log_var") && !m.at("fixed_x_log_var").is_null()) {
            c.model.fixed_x_log_var = m.at("fixed_x_log_var").get<double>();
        }
        maybe(m, "gamma", c.model.gamma);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        maybe(t, "batch_size", c.train.batch_size);
        maybe(t, "epochs", c.train.epochs);
        maybe(t, "learning_rate", c.train.learning_rate);
        maybe(t, "alpha_f", c.train.coeffs.alpha_f);
        maybe(t, "alpha_f_d", c.train.coeffs.alpha_f_d);
        maybe(t, "alpha_r", c.train.coeffs.alpha_r);
        maybe(t, "alpha_r_d", c.train.coeffs.alpha_r_d);
        if (t.contains("variant")) {
            c.train.variant = variant_from_string(t.at("variant").get<std::string>());
        }
        maybe(t, "log_every", c.train.log_every);
        maybe(t, "checkpoint_every", c.train.checkpoint_every);
        maybe(t, "beta1", c.train.beta1);
        maybe(t, "beta2", c.train.beta2);
        maybe(t, "eps_adam", c.train.eps_adam);
        maybe(t, "clip_lo", c.train.clip_lo);
        maybe(t, "clip_hi", c.train.clip_hi);
        maybe(t, "divergence_ceiling", c.train.divergence_ceiling);
    }
    if (j.contains("data")) {
        const json& d = j.at("data");
        maybe(d, "endmembers", c.data.mixture.endmembers);
        maybe(d, "channels", c.data.mixture.channels);
        maybe(d, "grid_resolution", c.data.mixture.grid_resolution);
        maybe(d, "nuisance_levels", c.data.mixture.nuisance_levels);
        maybe(d, "noise_scale", c.data.mixture.noise_scale);
        if (d.contains("mixing")) {
            c.data.mixture.mixing = mixing_from_string(d.at("mixing").get<std::string>());
        }
        maybe(d, "replicates", c.data.mixture.replicates);
        maybe(d, "abundance_jitter", c.data.mixture.abundance_jitter);
        maybe(d, "corrupt_fraction", c.data.mixture.corrupt_fraction);
        maybe(d, "corner_radius", c.data.corner_radius);
        maybe(d, "labeled", c.data.counts.labeled);
        maybe(d, "unlabeled", c.data.counts.unlabeled);
        maybe(d, "unfeatured", c.data.counts.unfeatured);
        maybe(d, "standardize", c.data.standardize);
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        maybe(e, "grid_columns", c.eval.grid_columns);
        if (e.contains("z_policy")) {
            c.eval.z_policy = z_policy_from_string(e.at("z_policy").get<std::string>());
        }
    }
    c.train.seed = c.seed;
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return config_from_json_text(ss.str());
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
}

std::string config_to_json_text(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    json m;
    m["x_dim"] = c.model.x_dim;
    m["y_dim"] = c.model.y_dim;
    m["z_dim"] = c.model.z_dim;
    m["hidden_y"] = c.model.hidden_y;
    m["hidden_z"] = c.model.hidden_z;
    m["hidden_x"] = c.model.hidden_x;
    m["hidden_aux"] = c.model.hidden_aux;
    m["activation_y"] = activation_to_string(c.model.act_y);
    m["activation_z"] = activation_to_string(c.model.act_z);
    m["activation_x"] = activation_to_string(c.model.act_x);
    m["activation_aux"] = activation_to_string(c.model.act_aux);
    m["y_family"] = family_name(c.model.y_family);
    m["x_family"] = family_name(c.model.x_family);
    m["x_output"] = activation_to_string(c.model.x_output);
    m["z_lo"] = c.model.z_lo;
    m["z_hi"] = c.model.z_hi;
    m["concrete_tau"] = c.model.concrete_tau;
    m["use_aux"] = c.model.use_aux;
    if (c.model.fixed_x_log_var) {
        m["fixed_x_log_var"] = *c.model.fixed_x_log_var;
    } else {
        m["fixed_x_log_var"] = nullptr;
    }
    m["gamma"] = c.model.gamma;
    j["model"] = m;
    json t;
    t["batch_size"] = c.train.batch_size;
    t["epochs"] = c.train.epochs;
    t["learning_rate"] = c.train.learning_rate;
    t["alpha_f"] = c.train.coeffs.alpha_f;
    t["alpha_f_d"] = c.train.coeffs.alpha_f_d;
    t["alpha_r"] = c.train.coeffs.alpha_r;
    t["alpha_r_d"] = c.train.coeffs.alpha_r_d;
    t["variant"] = variant_to_string(c.train.variant);
    t["log_every"] = c.train.log_every;
    t["checkpoint_every"] = c.train.checkpoint_every;
    t["beta1"] = c.train.beta1;
    t["beta2"] = c.train.beta2;
    t["eps_adam"] = c.train.eps_adam;
    t["clip_lo"] = c.train.clip_lo;
    t["clip_hi"] = c.train.clip_hi;
    t["divergence_ceiling"] = c.train.divergence_ceiling;
    j["train"] = t;
    json d;
    d["endmembers"] = c.data.mixture.endmembers;
    d["channels"] = c.data.mixture.channels;
    d["grid_resolution"] = c.data.mixture.grid_resolution;
    d["nuisance_levels"] = c.data.mixture.nuisance_levels;
    d["noise_scale"] = c.data.mixture.noise_scale;
    d["mixing"] = mixing_to_string(c.data.mixture.mixing);
    d["replicates"] = c.data.mixture.replicates;
    d["abundance_jitter"] = c.data.mixture.abundance_jitter;
    d["corrupt_fraction"] = c.data.mixture.corrupt_fraction;
    d["corner_radius"] = c.data.corner_radius;
    d["labeled"] = c.data.counts.labeled;
    d["unlabeled"] = c.data.counts.unlabeled;
    d["unfeatured"] = c.data.counts.unfeatured;
    d["standardize"] = c.data.standardize;
    j["data"] = d;
    json e;
    e["grid_columns"] = c.eval.grid_columns;
    e["z_policy"] = c.eval.z_policy == ZPolicy::DatasetMean ? "dataset_mean" : "prior_mean";
    j["eval"] = e;
    return j.dump(2);
}

void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value) {
    std::set<std::string> known = known_fields();
    if (!known.count(dotted_key) || dotted_key.find('.') == std::string::npos) {
        if (dotted_key != "seed") throw ConfigError("unknown config field: " + dotted_key);
    }
    // Round-trip through the JSON form so overrides share the parse rules.
    json j = json::parse(config_to_json_text(config));
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;  // bare strings (tanh, linear, ...)

    std::size_t dot = dotted_key.find('.');
    if (dot == std::string::npos) {
        j[dotted_key] = parsed;
    } else {
        std::string section = dotted_key.substr(0, dot);
        std::string field = dotted_key.substr(dot + 1);
        // "activation" fans out to all four networks; keep the shorthand.
        j[section][field] = parsed;
        if (section == "model" && field == "activation") {
            j["model"].erase("activation_y");
            j["model"].erase("activation_z");
            j["model"].erase("activation_x");
            j["model"].erase("activation_aux");
        }
    }
    try {
        config = config_from_json_text(j.dump());
    } catch (const json::exception& e) {
        throw ConfigError("bad value for " + dotted_key + ": " + e.what());
    }
}

std::string config_field_docs() {
    std::ostringstream os;
    for (const FieldDoc& f : kFieldDocs) {
        os << "  " << f.key;
        for (std::size_t i = std::string(f.key).size(); i < 28; ++i) os << ' ';
        os << f.doc << "\n";
    }
    return os.str();
}

} // namespace uvae
