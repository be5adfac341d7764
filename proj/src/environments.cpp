#include "fnucb/environments.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fnucb {

std::vector<double> duplicate_transform(std::span<const double> x) {
    double norm2 = 0.0;
    for (const double v : x) norm2 += v * v;
    if (norm2 == 0.0) throw std::invalid_argument("duplicate_transform: zero vector");
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    std::vector<double> out(2 * x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double v = x[j] * inv_sqrt2;
        out[j] = v;
        out[j + x.size()] = v;
    }
    return out;
}

SyntheticEnv::SyntheticEnv(SyntheticKind kind, int dim, int arms, double noise_sd,
                           std::uint64_t seed, bool duplicated_contexts)
    : kind_(kind), dim_(dim), arms_(arms), noise_sd_(noise_sd), seed_(seed),
      duplicated_(duplicated_contexts) {
    if (dim <= 0 || arms <= 0) throw std::invalid_argument("SyntheticEnv: dim and arms must be positive");
    if (noise_sd < 0.0) throw std::invalid_argument("SyntheticEnv: negative noise");
    Rng rng = Rng(seed_).fork(stream::kEnvHidden);
    a_ = sample_unit(rng, dim_);
    if (duplicated_) a_ = duplicate_transform(a_);
}

std::vector<double> SyntheticEnv::sample_unit(Rng& rng, int dim) const {
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (auto& c : v) {
            c = rng.next_gaussian();
            norm2 += c * c;
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& c : v) c *= inv;
    return v;
}

ContextSet SyntheticEnv::draw_contexts(long t, int agent) const {
    Rng rng = Rng(seed_).fork(stream::kEnvContext, static_cast<std::uint64_t>(t),
                              static_cast<std::uint64_t>(agent));
    ContextSet set;
    set.contexts.reserve(static_cast<std::size_t>(arms_));
    set.true_h.reserve(static_cast<std::size_t>(arms_));
    for (int k = 0; k < arms_; ++k) {
        std::vector<double> x = sample_unit(rng, dim_);
        if (duplicated_) x = duplicate_transform(x);
        set.true_h.push_back(true_reward(x));
        set.contexts.push_back(std::move(x));
    }
    return set;
}

double SyntheticEnv::true_reward(std::span<const double> x) const {
    if (x.size() != a_.size())
        throw std::invalid_argument("SyntheticEnv: foreign context (dimension mismatch)");
    double ip = 0.0;
    for (std::size_t j = 0; j < a_.size(); ++j) ip += a_[j] * x[j];
    return kind_ == SyntheticKind::cosine ? std::cos(3.0 * ip) : 10.0 * ip * ip;
}

double SyntheticEnv::observe(const ContextSet& set, int arm, long t, int agent) const {
    if (arm < 0 || arm >= static_cast<int>(set.contexts.size()))
        throw std::out_of_range("SyntheticEnv: arm index out of range");
    double h = 0.0;
    return reward_at(set.contexts[static_cast<std::size_t>(arm)], t, agent, &h);
}

double SyntheticEnv::reward_at(std::span<const double> x, long t, int agent,
                               double* h_true) const {
    const double h = true_reward(x);
    if (h_true) *h_true = h;
    if (noise_sd_ == 0.0) return h;
    Rng rng = Rng(seed_).fork(stream::kEnvNoise, static_cast<std::uint64_t>(t),
                              static_cast<std::uint64_t>(agent));
    return h + noise_sd_ * rng.next_gaussian();
}

void DatasetSchema::validate() const {
    if (feature_cols.empty()) throw std::invalid_argument("DatasetSchema: no feature columns");
    if (label_col < 0) throw std::invalid_argument("DatasetSchema: missing label column");
    if (classes < 2) throw std::invalid_argument("DatasetSchema: need at least two classes");
    for (const int c : feature_cols)
        if (c < 0 || c == label_col)
            throw std::invalid_argument("DatasetSchema: bad feature column index");
}

DatasetSchema DatasetSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("DatasetSchema: cannot open " + path);
    nlohmann::json j;
    in >> j;
    DatasetSchema s;
    s.feature_cols = j.at("features").get<std::vector<int>>();
    s.label_col = j.at("label").get<int>();
    s.label_base = j.value("label_base", 0);
    s.classes = j.at("classes").get<int>();
    s.normalize = j.value("normalize", true);
    s.has_header = j.value("has_header", false);
    s.validate();
    return s;
}

ClassificationBanditEnv::ClassificationBanditEnv(std::vector<std::vector<double>> rows,
                                                 std::vector<int> labels, int classes,
                                                 std::uint64_t seed)
    : rows_(std::move(rows)), labels_(std::move(labels)), classes_(classes), seed_(seed) {
    if (rows_.empty()) throw std::invalid_argument("ClassificationBanditEnv: empty dataset");
    if (rows_.size() != labels_.size())
        throw std::invalid_argument("ClassificationBanditEnv: rows/labels size mismatch");
    feature_dim_ = static_cast<int>(rows_.front().size());
    for (const auto& r : rows_)
        if (static_cast<int>(r.size()) != feature_dim_)
            throw std::invalid_argument("ClassificationBanditEnv: ragged rows");
    for (const int l : labels_)
        if (l < 0 || l >= classes_)
            throw std::invalid_argument("ClassificationBanditEnv: label out of range");
}

ClassificationBanditEnv ClassificationBanditEnv::from_csv(const std::string& path,
                                                          const DatasetSchema& schema,
                                                          std::uint64_t seed) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("dataset: cannot open " + path);

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    long line_no = 0;
    int max_col = schema.label_col;
    for (const int c : schema.feature_cols) max_col = std::max(max_col, c);

    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && schema.has_header) continue;
        // strip trailing CR and skip blank lines
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;

        std::vector<double> fields;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                // allow surrounding whitespace only
                while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
                if (used != tok.size()) throw std::invalid_argument(tok);
                fields.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error("dataset: malformed value '" + tok + "' at " + path +
                                         ":" + std::to_string(line_no));
            }
        }
        if (static_cast<int>(fields.size()) <= max_col)
            throw std::runtime_error("dataset: too few columns at " + path + ":" +
                                     std::to_string(line_no));

        const double raw_label = fields[static_cast<std::size_t>(schema.label_col)];
        const int label = static_cast<int>(raw_label) - schema.label_base;
        if (raw_label != std::floor(raw_label) || label < 0 || label >= schema.classes)
            throw std::runtime_error("dataset: label out of range at " + path + ":" +
                                     std::to_string(line_no));

        std::vector<double> feat(schema.feature_cols.size());
        for (std::size_t j = 0; j < feat.size(); ++j)
            feat[j] = fields[static_cast<std::size_t>(schema.feature_cols[j])];
        if (schema.normalize) {
            double norm2 = 0.0;
            for (const double v : feat) norm2 += v * v;
            if (norm2 == 0.0)
                throw std::runtime_error("dataset: zero feature row at " + path + ":" +
                                         std::to_string(line_no));
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& v : feat) v *= inv;
        }
        rows.push_back(std::move(feat));
        labels.push_back(label);
    }
    if (rows.empty()) throw std::runtime_error("dataset: no data rows in " + path);
    return ClassificationBanditEnv(std::move(rows), std::move(labels), schema.classes, seed);
}

std::size_t ClassificationBanditEnv::row_index(long t, int agent) const {
    Rng rng = Rng(seed_).fork(stream::kEnvContext, static_cast<std::uint64_t>(t),
                              static_cast<std::uint64_t>(agent));
    return static_cast<std::size_t>(rng.next_below(rows_.size()));
}

int ClassificationBanditEnv::label_at(long t, int agent) const {
    return labels_[row_index(t, agent)];
}

ContextSet ClassificationBanditEnv::draw_contexts(long t, int agent) const {
    const std::size_t r = row_index(t, agent);
    const std::vector<double>& feat = rows_[r];
    const int label = labels_[r];
    ContextSet set;
    set.contexts.assign(static_cast<std::size_t>(classes_),
                        std::vector<double>(static_cast<std::size_t>(context_dim()), 0.0));
    set.true_h.assign(static_cast<std::size_t>(classes_), 0.0);
    for (int k = 0; k < classes_; ++k) {
        auto& ctx = set.contexts[static_cast<std::size_t>(k)];
        std::copy(feat.begin(), feat.end(),
                  ctx.begin() + static_cast<std::ptrdiff_t>(k) * feature_dim_);
        set.true_h[static_cast<std::size_t>(k)] = (k == label) ? 1.0 : 0.0;
    }
    return set;
}

double ClassificationBanditEnv::observe(const ContextSet& set, int arm, [[maybe_unused]] long t,
                                        [[maybe_unused]] int agent) const {
    if (arm < 0 || arm >= static_cast<int>(set.contexts.size()))
        throw std::out_of_range("ClassificationBanditEnv: arm index out of range");
    return set.true_h[static_cast<std::size_t>(arm)];
}

double ClassificationBanditEnv::reward_at(std::span<const double> x, long t, int agent,
                                          double* h_true) const {
    if (static_cast<int>(x.size()) != context_dim())
        throw std::invalid_argument("ClassificationBanditEnv: foreign context (dimension)");
    // Identify the unique nonzero block.
    int arm = -1;
    for (int k = 0; k < classes_; ++k) {
        bool nonzero = false;
        for (int j = 0; j < feature_dim_; ++j) {
            if (x[static_cast<std::size_t>(k * feature_dim_ + j)] != 0.0) {
                nonzero = true;
                break;
            }
        }
        if (nonzero) {
            if (arm != -1)
                throw std::invalid_argument("ClassificationBanditEnv: foreign context (two blocks)");
            arm = k;
        }
    }
    if (arm == -1)
        throw std::invalid_argument("ClassificationBanditEnv: foreign context (all zero)");
    const double y = (arm == label_at(t, agent)) ? 1.0 : 0.0;
    if (h_true) *h_true = y;
    return y;
}

}  // namespace fnucb
