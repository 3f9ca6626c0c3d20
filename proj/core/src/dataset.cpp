#include "face/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "face/error.hpp"
#include "sampling.hpp"

namespace face {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffU;
        h *= kFnvPrime;
    }
}

std::vector<std::string> default_names(std::size_t d) {
    std::vector<std::string> names;
    names.reserve(d);
    for (std::size_t k = 0; k < d; ++k) names.push_back("f" + std::to_string(k));
    return names;
}

std::string trim(std::string_view s) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return std::string(s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

bool parse_int(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec == std::errc() && ptr == last) return true;
    // Accept integral values written as reals ("1.0").
    double d = 0.0;
    if (parse_double(s, d) && d == std::floor(d) && std::abs(d) < 9.0e15) {
        out = static_cast<std::int64_t>(d);
        return true;
    }
    return false;
}

}  // namespace

Dataset::Dataset(std::vector<double> features, std::size_t rows, std::size_t cols,
                 std::vector<int> labels, std::size_t num_classes,
                 std::vector<std::string> feature_names)
    : features_(std::move(features)),
      rows_(rows),
      cols_(cols),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      names_(std::move(feature_names)) {
    if (rows_ < 2) throw Error("dataset needs at least 2 rows, got " + std::to_string(rows_));
    if (cols_ < 1) throw Error("dataset needs at least 1 feature");
    if (num_classes_ < 2) throw Error("dataset needs at least 2 classes");
    if (features_.size() != rows_ * cols_)
        throw Error("feature buffer size does not match " + std::to_string(rows_) + "x" +
                    std::to_string(cols_));
    if (labels_.size() != rows_) throw Error("label count does not match row count");
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (!std::isfinite(features_[i]))
            throw Error("non-finite feature value at row " + std::to_string(i / cols_) +
                        ", column " + std::to_string(i % cols_));
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes_)
            throw Error("label " + std::to_string(labels_[i]) + " at row " + std::to_string(i) +
                        " outside [0, " + std::to_string(num_classes_) + ")");
    }
    if (names_.empty()) names_ = default_names(cols_);
    if (names_.size() != cols_) throw Error("feature name count does not match column count");
}

std::uint64_t Dataset::content_hash() const {
    std::uint64_t h = kFnvOffset;
    fnv_mix(h, rows_);
    fnv_mix(h, cols_);
    fnv_mix(h, num_classes_);
    for (double v : features_) fnv_mix(h, std::bit_cast<std::uint64_t>(v));
    for (int l : labels_) fnv_mix(h, static_cast<std::uint64_t>(l));
    return h;
}

std::string Dataset::fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(content_hash()));
    return buf;
}

Dataset Dataset::select(std::span<const std::size_t> rows) const {
    std::vector<double> feats;
    std::vector<int> labs;
    feats.reserve(rows.size() * cols_);
    labs.reserve(rows.size());
    for (std::size_t r : rows) {
        if (r >= rows_) throw Error("row index " + std::to_string(r) + " out of range");
        auto x = row(r);
        feats.insert(feats.end(), x.begin(), x.end());
        labs.push_back(labels_[r]);
    }
    return Dataset(std::move(feats), rows.size(), cols_, std::move(labs), num_classes_, names_);
}

Dataset Dataset::with_row(std::span<const double> x, int label) const {
    if (x.size() != cols_)
        throw Error("dimension mismatch: expected " + std::to_string(cols_) + ", got " +
                    std::to_string(x.size()));
    std::vector<double> feats = features_;
    feats.insert(feats.end(), x.begin(), x.end());
    std::vector<int> labs = labels_;
    labs.push_back(label);
    return Dataset(std::move(feats), rows_ + 1, cols_, std::move(labs), num_classes_, names_);
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

LoadedDataset load_csv(const std::filesystem::path& path, const LabelColumn& label_column) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open data file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error("empty data file: " + path.string());
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
    const std::vector<std::string> header = split_csv_line(line);

    std::size_t label_idx = 0;
    if (const auto* name = std::get_if<std::string>(&label_column)) {
        auto it = std::find(header.begin(), header.end(), *name);
        if (it == header.end()) throw Error("label column '" + *name + "' not found in header");
        label_idx = static_cast<std::size_t>(it - header.begin());
    } else {
        label_idx = std::get<std::size_t>(label_column);
        if (label_idx >= header.size())
            throw Error("label column index " + std::to_string(label_idx) + " out of range");
    }
    if (header.size() < 2) throw Error("data file needs at least one feature and a label column");

    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_idx) names.push_back(header[c]);
    const std::size_t d = names.size();

    std::vector<double> feats;
    std::vector<std::int64_t> raw_labels;
    std::size_t data_row = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++data_row;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw Error("row " + std::to_string(data_row) + " (line " + std::to_string(line_no) +
                        ") has " + std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(header.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) {
                std::int64_t l = 0;
                if (!parse_int(cells[c], l))
                    throw Error("row " + std::to_string(data_row) + " (line " +
                                std::to_string(line_no) + "), column '" + header[c] +
                                "': label '" + cells[c] + "' is not an integer");
                raw_labels.push_back(l);
            } else {
                double v = 0.0;
                if (!parse_double(cells[c], v))
                    throw Error("row " + std::to_string(data_row) + " (line " +
                                std::to_string(line_no) + "), column '" + header[c] +
                                "': '" + cells[c] + "' is not a finite number");
                feats.push_back(v);
            }
        }
    }
    if (data_row < 2)
        throw Error("data file needs at least 2 rows, found " + std::to_string(data_row));

    std::map<std::int64_t, int> dense;
    for (auto l : raw_labels) dense.emplace(l, 0);
    if (dense.size() < 2) throw Error("data file has a single distinct label");
    std::vector<std::int64_t> values;
    int next = 0;
    for (auto& [raw, idx] : dense) {
        idx = next++;
        values.push_back(raw);
    }
    std::vector<int> labels;
    labels.reserve(raw_labels.size());
    for (auto l : raw_labels) labels.push_back(dense.at(l));

    return {Dataset(std::move(feats), data_row, d, std::move(labels), dense.size(),
                    std::move(names)),
            std::move(values)};
}

void save_csv(const Dataset& data, const std::filesystem::path& path,
              std::span<const std::int64_t> label_values) {
    if (!label_values.empty() && label_values.size() != data.num_classes())
        throw Error("label value table does not match class count");
    std::ofstream out(path);
    if (!out) throw Error("cannot write data file: " + path.string());
    for (const auto& n : data.feature_names()) out << n << ',';
    out << "label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.row(i)) out << format_double(v) << ',';
        const int l = data.label(i);
        if (label_values.empty())
            out << l;
        else
            out << label_values[static_cast<std::size_t>(l)];
        out << '\n';
    }
    if (!out) throw Error("write failed: " + path.string());
}

Dataset generate_toy(const ToySpec& spec) {
    if (spec.n_blue < 1 || spec.n_red_bottom < 1 || spec.n_red_cluster < 1)
        throw Error("toy component counts must all be at least 1");

    std::mt19937_64 rng(spec.seed);
    auto span = [&] { return detail::uniform(rng, kToyRangeMin, kToyRangeMax); };

    const std::size_t n = spec.n_blue + spec.n_red_bottom + spec.n_red_cluster;
    std::vector<double> feats;
    feats.reserve(2 * n);
    std::vector<int> labels;
    labels.reserve(n);

    // Draw order is fixed (x then y per point) so the output depends only on the seed.
    for (std::size_t i = 0; i < spec.n_blue; ++i) {
        const double x = detail::normal(rng, 0.0, kToyBlueStd);
        const double y = span();
        feats.insert(feats.end(), {x, y});
        labels.push_back(0);
    }
    for (std::size_t i = 0; i < spec.n_red_bottom; ++i) {
        const double x = span();
        const double y = detail::normal(rng, 0.0, kToyBottomStd);
        feats.insert(feats.end(), {x, y});
        labels.push_back(1);
    }
    for (std::size_t i = 0; i < spec.n_red_cluster; ++i) {
        const double x = detail::normal(rng, kToyClusterX, kToyClusterStd);
        const double y = detail::normal(rng, kToyClusterY, kToyClusterStd);
        feats.insert(feats.end(), {x, y});
        labels.push_back(1);
    }
    return Dataset(std::move(feats), n, 2, std::move(labels), 2, {"x0", "x1"});
}

Subsample subsample(const Dataset& data, std::size_t m, std::uint64_t seed) {
    if (m < 2 || m > data.size())
        throw Error("subsample size " + std::to_string(m) + " outside [2, " +
                    std::to_string(data.size()) + "]");
    // Partial Fisher-Yates, then restore the original row order.
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(detail::below(rng, all.size() - i));
        std::swap(all[i], all[j]);
    }
    std::vector<std::size_t> picked(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(picked.begin(), picked.end());
    return {data.select(picked), std::move(picked)};
}

}  // namespace face
