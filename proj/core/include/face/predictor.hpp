#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "face/dataset.hpp"

namespace face {

// Any map from a feature vector to a probability distribution over classes.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual std::size_t input_dim() const = 0;
    virtual std::size_t num_classes() const = 0;
    virtual std::vector<double> predict_proba(std::span<const double> x) const = 0;

    // d P(cls | x) / dx. The default uses central finite differences with a
    // step scaled to |x_k|; differentiable models override it.
    virtual std::vector<double> proba_gradient(std::span<const double> x, std::size_t cls) const;
};

// Checks the dimension and the output contract (entries >= 0, sum 1 +- 1e-9).
std::vector<double> predict_proba(const Predictor& model, std::span<const double> x);

// Wraps a user-supplied callable.
class FunctionPredictor final : public Predictor {
public:
    using Fn = std::function<std::vector<double>(std::span<const double>)>;

    FunctionPredictor(std::size_t input_dim, std::size_t num_classes, Fn fn)
        : dim_(input_dim), classes_(num_classes), fn_(std::move(fn)) {}

    std::size_t input_dim() const override { return dim_; }
    std::size_t num_classes() const override { return classes_; }
    std::vector<double> predict_proba(std::span<const double> x) const override { return fn_(x); }

private:
    std::size_t dim_;
    std::size_t classes_;
    Fn fn_;
};

// Precomputed probabilities for the rows of one dataset, looked up by exact
// feature values. Asking about any other point is an error.
class TablePredictor final : public Predictor {
public:
    TablePredictor(const Dataset& data, std::vector<std::vector<double>> probabilities);

    std::size_t input_dim() const override { return dim_; }
    std::size_t num_classes() const override { return classes_; }
    std::vector<double> predict_proba(std::span<const double> x) const override;

private:
    std::size_t dim_;
    std::size_t classes_;
    std::vector<double> keys_;
    std::vector<std::vector<double>> probs_;
};

// Loads a CSV whose columns are class probabilities, one row per data row.
TablePredictor load_probability_table(const Dataset& data, const std::string& path);

struct TrainConfig {
    double learning_rate = 0.05;
    int epochs = 5000;
    std::uint64_t seed = 0;
    double init_std = 0.1;
    std::vector<std::size_t> hidden = {10, 10};
};

// Fully connected network: ReLU hidden layers, softmax output.
class Mlp final : public Predictor {
public:
    struct Layer {
        std::size_t in = 0;
        std::size_t out = 0;
        std::vector<double> weights;  // out x in, row-major
        std::vector<double> bias;     // out
    };

    explicit Mlp(std::vector<Layer> layers);
    // Random Normal(0, init_std) parameters for the given layer sizes.
    static Mlp initialize(std::span<const std::size_t> layer_sizes, double init_std,
                          std::uint64_t seed);

    std::size_t input_dim() const override { return layers_.front().in; }
    std::size_t num_classes() const override { return layers_.back().out; }
    std::vector<double> predict_proba(std::span<const double> x) const override;
    std::vector<double> proba_gradient(std::span<const double> x, std::size_t cls) const override;

    std::vector<std::size_t> layer_sizes() const;
    const std::vector<Layer>& layers() const { return layers_; }

    // Flattened parameters in layer order: W_0, b_0, W_1, b_1, ...
    std::size_t parameter_count() const;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> params);

    // Mean cross-entropy over the dataset and its gradient w.r.t. parameters().
    double loss(const Dataset& data) const;
    double loss_and_gradient(const Dataset& data, std::vector<double>& grad) const;

    double accuracy(const Dataset& data) const;

    bool operator==(const Mlp&) const;

private:
    struct Trace {
        std::vector<std::vector<double>> pre;  // pre-activations per layer
        std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = output of layer l
    };
    Trace forward(std::span<const double> x) const;

    std::vector<Layer> layers_;
};

struct TrainReport {
    double final_loss = 0.0;
    double accuracy = 0.0;
    int epochs = 0;
};

struct TrainedMlp {
    Mlp model;
    TrainReport report;
};

// Full-batch gradient descent on mean cross-entropy. Throws if any parameter
// becomes non-finite.
TrainedMlp train_mlp(const Dataset& data, const TrainConfig& config);

nlohmann::json mlp_to_json(const Mlp& model);
Mlp mlp_from_json(const nlohmann::json& doc);

}  // namespace face
