#include "uncattr/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "uncattr/errors.hpp"
#include "uncattr/rng.hpp"

namespace uncattr {
namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    bool in_quotes = false;
    for (char c : line) {
        if (c == '"') {
            in_quotes = !in_quotes;
        } else if (c == delim && !in_quotes) {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(field);
    for (auto& f : out) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
        while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    }
    return out;
}

double parse_cell(const std::string& s, std::size_t row, const std::string& col) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("non-numeric cell '" + s + "' in column '" + col +
                        "' at data row " + std::to_string(row));
    }
}

}  // namespace

RawTable ingest(const std::string& path, const std::vector<std::string>& feature_subset,
                const std::string& label_name, char delimiter) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    const auto header = split_line(line, delimiter);

    auto col_index = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw DataError("column '" + name + "' not found in " + path);
        return static_cast<std::size_t>(it - header.begin());
    };

    std::vector<std::size_t> feat_idx;
    for (const auto& name : feature_subset) feat_idx.push_back(col_index(name));
    const std::size_t label_idx = col_index(label_name);

    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row_no;
        const auto cells = split_line(line, delimiter);
        if (cells.size() != header.size())
            throw DataError("row " + std::to_string(row_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        std::vector<double> r(feat_idx.size());
        for (std::size_t j = 0; j < feat_idx.size(); ++j)
            r[j] = parse_cell(cells[feat_idx[j]], row_no, feature_subset[j]);
        rows.push_back(std::move(r));
        labels.push_back(parse_cell(cells[label_idx], row_no, label_name));
    }
    if (rows.size() < 2) throw DataError("dataset needs at least 2 rows");

    RawTable t;
    t.feature_names = feature_subset;
    t.rows.resize(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(feat_idx.size()));
    t.labels.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < feat_idx.size(); ++j)
            t.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        t.labels(static_cast<Eigen::Index>(i)) = labels[i];
    }
    return t;
}

std::pair<RawTable, RawTable> split(const RawTable& raw, double test_fraction,
                                    std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ArgumentError("test_fraction must be in (0,1)");

    const Eigen::Index n = raw.n();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    auto eng = make_engine(seed);
    std::shuffle(perm.begin(), perm.end(), eng);

    const Eigen::Index n_train =
        static_cast<Eigen::Index>(std::ceil(static_cast<double>(n) * (1.0 - test_fraction)));

    auto take = [&](Eigen::Index begin, Eigen::Index count) {
        RawTable t;
        t.feature_names = raw.feature_names;
        t.rows.resize(count, raw.d());
        t.labels.resize(count);
        for (Eigen::Index i = 0; i < count; ++i) {
            t.rows.row(i) = raw.rows.row(perm[static_cast<std::size_t>(begin + i)]);
            t.labels(i) = raw.labels(perm[static_cast<std::size_t>(begin + i)]);
        }
        return t;
    };
    return {take(0, n_train), take(n_train, n - n_train)};
}

std::pair<Scaler, StandardizedDataset> fit_standardize(const RawTable& train) {
    if (train.n() < 2) throw ArgumentError("need at least 2 rows to fit a scaler");
    Scaler s;
    s.feature_names = train.feature_names;
    s.means = train.rows.colwise().mean();
    s.sds.resize(train.d());
    for (Eigen::Index j = 0; j < train.d(); ++j) {
        const double var =
            (train.rows.col(j).array() - s.means(j)).square().mean();  // population
        s.sds(j) = std::sqrt(var);
        if (!(s.sds(j) > 0.0))
            throw DataError("degenerate feature with zero variance: " +
                            train.feature_names[static_cast<std::size_t>(j)]);
    }
    return {s, transform(s, train)};
}

StandardizedDataset transform(const Scaler& scaler, const RawTable& table) {
    if (scaler.means.size() != table.d())
        throw ArgumentError("scaler dimension does not match table");
    StandardizedDataset ds;
    ds.feature_names = table.feature_names;
    ds.scaler = scaler;
    ds.labels = table.labels;
    ds.features = (table.rows.rowwise() - scaler.means.transpose()).array().rowwise() /
                  scaler.sds.transpose().array();
    return ds;
}

Eigen::VectorXd inverse_transform(const Scaler& scaler, const Eigen::VectorXd& z) {
    return (z.array() * scaler.sds.array() + scaler.means.array()).matrix();
}

double noise_level_scale(NoiseLevel level) {
    switch (level) {
        case NoiseLevel::high: return 1.0;
        case NoiseLevel::medium: return 0.5;
        case NoiseLevel::low: return 0.3;
        case NoiseLevel::none: return 0.0;
    }
    throw ArgumentError("bad noise level");
}

NoiseLevel noise_level_from_string(const std::string& s) {
    if (s == "high") return NoiseLevel::high;
    if (s == "medium") return NoiseLevel::medium;
    if (s == "low") return NoiseLevel::low;
    if (s == "none") return NoiseLevel::none;
    throw ArgumentError("unknown uncertainty level '" + s +
                        "' (expected high|medium|low|none)");
}

UncertaintySpec make_uncertainty_spec(NoiseLevel level,
                                      const std::vector<std::string>& uncertain_features,
                                      const StandardizedDataset& dataset) {
    UncertaintySpec spec;
    spec.sigma = Eigen::VectorXd::Zero(dataset.d());
    const double scale = noise_level_scale(level);
    for (const auto& name : uncertain_features) {
        auto it = std::find(dataset.feature_names.begin(), dataset.feature_names.end(), name);
        if (it == dataset.feature_names.end())
            throw ArgumentError("unknown feature name: " + name);
        // features are standardized, so the train sd is 1
        spec.sigma(it - dataset.feature_names.begin()) = scale;
    }
    return spec;
}

std::string scaler_to_json(const Scaler& scaler) {
    nlohmann::json j;
    j["means"] = std::vector<double>(scaler.means.begin(), scaler.means.end());
    j["sds"] = std::vector<double>(scaler.sds.begin(), scaler.sds.end());
    j["feature_names"] = scaler.feature_names;
    return j.dump(2);
}

Scaler scaler_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Scaler s;
    const auto means = j.at("means").get<std::vector<double>>();
    const auto sds = j.at("sds").get<std::vector<double>>();
    s.means = Eigen::Map<const Eigen::VectorXd>(means.data(),
                                                static_cast<Eigen::Index>(means.size()));
    s.sds = Eigen::Map<const Eigen::VectorXd>(sds.data(),
                                              static_cast<Eigen::Index>(sds.size()));
    s.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    return s;
}

}  // namespace uncattr
