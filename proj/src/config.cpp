#include "fnucb/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace fnucb {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// The frozen schema: every recognized key. Sweep axes mirror their base key.
const std::set<std::string>& schema_keys() {
    static const std::set<std::string> keys = {
        "schema_version",
        "policy",
        "seed",
        "iterations",
        "agents",
        "sync_threshold",
        "lambda",
        "nu_tkn",
        "nu_tk",
        "mode",
        "sync_check_diagonal",
        "rescale",
        "simplified_alpha",
        "no_param_aggregation",
        "alpha_schedule",
        "alpha_reference_samples",
        "alpha_sigma_at_epoch_start",
        "net_width",
        "net_depth",
        "train_steps",
        "train_learning_rate",
        "train_batch",
        "train_warm_start",
        "train_warm_aggregate",
        "train_cutoff",
        "env",
        "env_dim",
        "env_arms",
        "env_noise_sd",
        "env_dataset",
        "env_schema",
        "env_duplicate_contexts",
        "baseline_nu",
        "baseline_raw_features",
        "record_snapshots",
        "sweep_agents",
        "sweep_sync_threshold",
        "sweep_policy",
        "sweep_seed",
    };
    return keys;
}

std::string expand_data_root(const std::string& path) {
    const std::string token = "${DATA_ROOT}";
    const std::size_t pos = path.find(token);
    if (pos == std::string::npos) return path;
    const char* root = std::getenv("FNUCB_DATA_ROOT");
    std::string out = path;
    out.replace(pos, token.size(), root ? root : ".");
    return out;
}

double parse_double_value(const std::string& raw, const std::string& where) {
    const std::string v = trim(raw);
    if (v == "inf" || v == "+inf" || v == "infinity")
        return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(where + ": not a number: '" + v + "'");
    }
}

AlphaSchedule parse_alpha_schedule(const std::string& raw, const std::string& where) {
    const std::string v = trim(raw);
    AlphaSchedule s;
    if (v == "none") return s;
    if (v.rfind("linear:", 0) == 0) {
        s.kind = AlphaSchedule::Kind::linear_ramp;
        s.horizon = parse_double_value(v.substr(7), where);
        if (!(s.horizon > 0.0)) throw ConfigError(where + ": linear ramp horizon must be > 0");
        return s;
    }
    if (v.rfind("constant:", 0) == 0) {
        s.kind = AlphaSchedule::Kind::constant;
        s.value = parse_double_value(v.substr(9), where);
        if (s.value < 0.0 || s.value > 1.0)
            throw ConfigError(where + ": constant alpha must be in [0,1]");
        return s;
    }
    throw ConfigError(where + ": expected none | linear:<horizon> | constant:<value>, got '" + v +
                      "'");
}

}  // namespace

FlatConfig FlatConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

FlatConfig FlatConfig::parse_string(const std::string& text, const std::string& origin) {
    FlatConfig cfg;
    cfg.origin_ = origin;
    std::stringstream ss(text);
    std::string line;
    long line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" + t + "'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        if (cfg.entries_.count(key))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "' (first at line " + std::to_string(cfg.lines_.at(key)) + ")");
        cfg.entries_[key] = value;
        cfg.lines_[key] = line_no;
    }
    return cfg;
}

void FlatConfig::fail(const std::string& key, const std::string& msg) const {
    const auto it = lines_.find(key);
    const std::string loc =
        it == lines_.end() ? origin_ : origin_ + ":" + std::to_string(it->second);
    throw ConfigError(loc + ": key '" + key + "' " + msg);
}

long FlatConfig::line_of(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
}

std::string FlatConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

long FlatConfig::get_long(const std::string& key, long fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t used = 0;
        const long v = std::stol(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        fail(key, "is not an integer: '" + it->second + "'");
    }
}

double FlatConfig::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const std::string where = origin_ + ":" + std::to_string(line_of(key)) + ": key '" + key + "'";
    return parse_double_value(it->second, where);
}

bool FlatConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    fail(key, "is not a boolean: '" + it->second + "'");
}

std::vector<std::string> FlatConfig::get_list(const std::string& key) const {
    std::vector<std::string> out;
    const auto it = entries_.find(key);
    if (it == entries_.end()) return out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const std::string v = trim(tok);
        if (!v.empty()) out.push_back(v);
    }
    if (out.empty()) fail(key, "is an empty list");
    return out;
}

RunConfig run_config_from(const FlatConfig& c) {
    // Unknown keys are configuration errors.
    for (const auto& [key, value] : c.entries()) {
        if (!schema_keys().count(key))
            throw ConfigError(c.origin() + ":" + std::to_string(c.line_of(key)) +
                              ": unknown key '" + key + "'");
    }
    const long version = c.get_long("schema_version", -1);
    if (version != 1)
        throw ConfigError(c.origin() + ": schema_version = 1 is required");

    RunConfig r;
    r.policy = policy_from_name(c.get_string("policy", "fnucb"));
    r.seed = static_cast<std::uint64_t>(c.get_long("seed", 1));
    r.iterations = c.get_long("iterations", 2000);
    r.agents = static_cast<int>(c.get_long("agents", 1));
    r.sync_threshold = c.get_double("sync_threshold", 0.0);
    // "auto" picks the regularizer the regret analysis assumes for this
    // horizon; experiments typically override with a literal value.
    if (c.get_string("lambda", "") == "auto")
        r.lambda = 1.0 + 2.0 / static_cast<double>(r.iterations);
    else
        r.lambda = c.get_double("lambda", 0.1);
    r.nu_tkn = c.get_double("nu_tkn", 0.1);
    r.nu_tk = c.get_double("nu_tk", 0.1);

    const std::string mode = c.get_string("mode", "full");
    if (mode == "full") r.mode = CovMode::full;
    else if (mode == "diagonal") r.mode = CovMode::diagonal;
    else throw ConfigError(c.origin() + ": mode must be full or diagonal, got '" + mode + "'");

    r.sync_check_diagonal = c.get_bool("sync_check_diagonal", true);
    const std::string rescale = c.get_string("rescale", "auto");
    if (rescale == "auto") r.rescale = RescaleMode::automatic;
    else if (rescale == "on") r.rescale = RescaleMode::on;
    else if (rescale == "off") r.rescale = RescaleMode::off;
    else throw ConfigError(c.origin() + ": rescale must be auto|on|off, got '" + rescale + "'");

    r.simplified_alpha = c.get_bool("simplified_alpha", false);
    r.no_param_aggregation = c.get_bool("no_param_aggregation", false);
    r.alpha_sigma_at_epoch_start = c.get_bool("alpha_sigma_at_epoch_start", false);
    r.alpha_schedule =
        parse_alpha_schedule(c.get_string("alpha_schedule", "none"), c.origin() + ": alpha_schedule");
    r.alpha_reference_samples = static_cast<int>(c.get_long("alpha_reference_samples", 256));

    r.width = static_cast<int>(c.get_long("net_width", 20));
    r.depth = static_cast<int>(c.get_long("net_depth", 2));
    r.train.steps = static_cast<int>(c.get_long("train_steps", 30));
    r.train.learning_rate = c.get_double("train_learning_rate", 0.01);
    r.train.batch_size = static_cast<int>(c.get_long("train_batch", 0));
    r.train.warm_start = c.get_bool("train_warm_start", true);
    r.warm_start_from_aggregate = c.get_bool("train_warm_aggregate", true);
    r.train.cutoff = c.get_long("train_cutoff", 2000);
    r.train.lambda = r.lambda;

    const std::string env = c.get_string("env", "cosine");
    if (env == "cosine") r.env.kind = EnvConfig::Kind::cosine;
    else if (env == "square") r.env.kind = EnvConfig::Kind::square;
    else if (env == "dataset") r.env.kind = EnvConfig::Kind::dataset;
    else throw ConfigError(c.origin() + ": env must be cosine|square|dataset, got '" + env + "'");
    r.env.dim = static_cast<int>(c.get_long("env_dim", 10));
    r.env.arms = static_cast<int>(c.get_long("env_arms", 4));
    r.env.noise_sd = c.get_double("env_noise_sd", 0.01);
    r.env.dataset_path = expand_data_root(c.get_string("env_dataset", ""));
    r.env.schema_path = expand_data_root(c.get_string("env_schema", ""));
    r.env.duplicate_contexts = c.get_bool("env_duplicate_contexts", false);
    if (r.env.kind == EnvConfig::Kind::dataset &&
        (r.env.dataset_path.empty() || r.env.schema_path.empty()))
        throw ConfigError(c.origin() + ": dataset env needs env_dataset and env_schema");

    r.baseline_nu = c.get_double("baseline_nu", 0.1);
    r.baseline_raw_features = c.get_bool("baseline_raw_features", false);
    r.record_snapshots = c.get_bool("record_snapshots", false);

    r.validate();
    return r;
}

namespace {
std::string threshold_token(double d) {
    if (std::isinf(d)) return "inf";
    std::ostringstream ss;
    ss << d;
    return ss.str();
}
}  // namespace

std::vector<GridCell> expand_grid(const FlatConfig& c) {
    const RunConfig base = run_config_from(c);

    std::vector<int> agents;
    for (const auto& v : c.get_list("sweep_agents")) agents.push_back(std::stoi(v));
    if (agents.empty()) agents.push_back(base.agents);

    std::vector<double> thresholds;
    for (const auto& v : c.get_list("sweep_sync_threshold"))
        thresholds.push_back(parse_double_value(v, c.origin() + ": sweep_sync_threshold"));
    if (thresholds.empty()) thresholds.push_back(base.sync_threshold);

    std::vector<PolicyKind> policies;
    for (const auto& v : c.get_list("sweep_policy")) policies.push_back(policy_from_name(v));
    if (policies.empty()) policies.push_back(base.policy);

    std::vector<std::uint64_t> seeds;
    for (const auto& v : c.get_list("sweep_seed"))
        seeds.push_back(static_cast<std::uint64_t>(std::stoll(v)));
    if (seeds.empty()) seeds.push_back(base.seed);

    std::vector<GridCell> cells;
    for (const PolicyKind p : policies) {
        for (const int n : agents) {
            for (const double d : thresholds) {
                for (const std::uint64_t s : seeds) {
                    GridCell cell;
                    cell.cfg = base;
                    cell.cfg.policy = p;
                    cell.cfg.agents = n;
                    cell.cfg.sync_threshold = d;
                    cell.cfg.seed = s;
                    cell.name = std::string(policy_name(p)) + "_N" + std::to_string(n) + "_D" +
                                threshold_token(d) + "_s" + std::to_string(s);
                    cells.push_back(std::move(cell));
                }
            }
        }
    }
    return cells;
}

}  // namespace fnucb
