#pragma once

#include "mda/matrix.hpp"
#include "mda/nn.hpp"
#include "mda/rng.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mda {

struct NetworkConfig {
    std::size_t input_dim = 11;
    std::size_t fc1_width = 256;
    std::size_t fc2_width = 128;
    double dropout_rate = 0.5;
    std::size_t num_classes = 2;

    void validate() const;
    friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

// input → fc1 → ReLU → dropout → fc2 → ReLU → classifier → softmax
struct MdaNetwork {
    NetworkConfig config;
    AffineParams fc1;
    AffineParams fc2;
    AffineParams classifier;

    friend bool operator==(const MdaNetwork&, const MdaNetwork&) = default;
};

// Same layout as MdaNetwork's parameters.
struct NetworkGrads {
    AffineParams fc1;
    AffineParams fc2;
    AffineParams classifier;
};

// Everything forward() computes, kept for backward() and for the
// domain-adaptation taps.
struct ForwardTrace {
    Matrix input;
    Matrix fc1_pre;
    Matrix fc1_act;
    DropoutState dropout;
    Matrix layer1_feats;  // post-ReLU, post-dropout
    Matrix fc2_pre;
    Matrix layer2_feats;  // post-ReLU
    Matrix logits;

    // Tap 1 or 2.
    const Matrix& tap(int layer) const;
};

MdaNetwork init_network(const NetworkConfig& config, RngStream& rng);
MdaNetwork zero_network(const NetworkConfig& config);
NetworkGrads zero_grads(const MdaNetwork& net);

ForwardTrace forward(const MdaNetwork& net, const Matrix& batch, Mode mode, RngStream& rng);
// Eval-mode forward without a stream.
ForwardTrace forward_eval(const MdaNetwork& net, const Matrix& batch);

// Upstream gradients for the logits and for each tap; empty matrices mean
// no gradient reaches that point.
NetworkGrads backward(const MdaNetwork& net, const ForwardTrace& trace, const Matrix& grad_logits,
                      const Matrix& grad_layer1, const Matrix& grad_layer2);

void accumulate(NetworkGrads& dst, const NetworkGrads& src);

struct Prediction {
    Matrix probabilities;
    std::vector<int> predicted_class;
};

// Argmax per row; ties go to class 0.
Prediction predict(const MdaNetwork& net, const Matrix& batch);
Prediction predict_from_logits(const Matrix& logits);

// Parameter arrays in a fixed order: fc1.W, fc1.b, fc2.W, fc2.b, cls.W, cls.b.
std::array<std::span<double>, 6> parameter_views(MdaNetwork& net);
std::array<std::span<const double>, 6> parameter_views(const MdaNetwork& net);
std::array<std::span<double>, 6> parameter_views(NetworkGrads& grads);
std::size_t parameter_count(const MdaNetwork& net);

// Versioned text checkpoint; values stored as hex floats so a round trip is
// bit-exact.
// `metadata` values must not contain whitespace.
void save_checkpoint(const std::filesystem::path& path, const MdaNetwork& net,
                     const std::string& manifest_ref = {},
                     const std::map<std::string, std::string>& metadata = {});
MdaNetwork load_checkpoint(const std::filesystem::path& path);
std::map<std::string, std::string> load_checkpoint_metadata(const std::filesystem::path& path);

} // namespace mda
