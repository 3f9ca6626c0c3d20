#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace face {

// N instances x d continuous features with dense class labels in [0, C).
// Immutable after construction; every accessor is const.
class Dataset {
public:
    Dataset(std::vector<double> features, std::size_t rows, std::size_t cols,
            std::vector<int> labels, std::size_t num_classes,
            std::vector<std::string> feature_names = {});

    std::size_t size() const { return rows_; }
    std::size_t dim() const { return cols_; }
    std::size_t num_classes() const { return num_classes_; }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * cols_, cols_};
    }
    double at(std::size_t i, std::size_t k) const { return features_[i * cols_ + k]; }
    int label(std::size_t i) const { return labels_[i]; }

    const std::vector<double>& features() const { return features_; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<std::string>& feature_names() const { return names_; }

    // Content hash (FNV-1a over shape, feature bits and labels) used to tie
    // serialized graphs and models back to the data they were built from.
    std::uint64_t content_hash() const;
    std::string fingerprint() const;

    // New dataset made of the given rows, in order. Keeps C and the names.
    Dataset select(std::span<const std::size_t> rows) const;
    // New dataset with one extra row appended.
    Dataset with_row(std::span<const double> x, int label) const;

    bool operator==(const Dataset&) const = default;

private:
    std::vector<double> features_;
    std::size_t rows_;
    std::size_t cols_;
    std::vector<int> labels_;
    std::size_t num_classes_;
    std::vector<std::string> names_;
};

// Column selector for the label: by header name or by zero-based index.
using LabelColumn = std::variant<std::string, std::size_t>;

struct LoadedDataset {
    Dataset data;
    // label_values[c] is the raw label that was remapped to class c.
    std::vector<std::int64_t> label_values;
};

LoadedDataset load_csv(const std::filesystem::path& path,
                       const LabelColumn& label_column = std::string("label"));

// Writes the header (feature names then "label") and rows with shortest
// round-trip decimal formatting, so load_csv recovers identical doubles.
// If label_values is non-empty, class c is written as label_values[c].
void save_csv(const Dataset& data, const std::filesystem::path& path,
              std::span<const std::int64_t> label_values = {});

// Three-cloud toy problem: a vertical class-0 cloud, a horizontal class-1
// cloud along the bottom and a compact class-1 cluster at (3.5, 8.0).
struct ToySpec {
    std::size_t n_blue = 200;
    std::size_t n_red_bottom = 200;
    std::size_t n_red_cluster = 100;
    std::uint64_t seed = 0;
};

inline constexpr double kToyRangeMin = 0.0;
inline constexpr double kToyRangeMax = 10.0;
inline constexpr double kToyBlueStd = 0.4;
inline constexpr double kToyBottomStd = 0.5;
inline constexpr double kToyClusterX = 3.5;
inline constexpr double kToyClusterY = 8.0;
inline constexpr double kToyClusterStd = 0.5;

Dataset generate_toy(const ToySpec& spec);

struct Subsample {
    Dataset data;
    std::vector<std::size_t> original_index;
};

// Uniform random subset of m rows without replacement. The subset keeps the
// original row order; original_index maps each new row back.
Subsample subsample(const Dataset& data, std::size_t m, std::uint64_t seed);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace face
