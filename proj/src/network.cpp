#include "mda/network.hpp"

#include "mda/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mda {

void NetworkConfig::validate() const {
    if (input_dim == 0 || fc1_width == 0 || fc2_width == 0)
        throw ParameterError("network widths must be >= 1 (input " + std::to_string(input_dim) +
                             ", fc1 " + std::to_string(fc1_width) + ", fc2 " +
                             std::to_string(fc2_width) + ")");
    if (num_classes != 2)
        throw ParameterError("num_classes is fixed at 2, got " + std::to_string(num_classes));
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ParameterError("dropout rate must lie in [0, 1), got " +
                             std::to_string(dropout_rate));
}

const Matrix& ForwardTrace::tap(int layer) const {
    if (layer == 1) return layer1_feats;
    if (layer == 2) return layer2_feats;
    throw ParameterError("no adaptation tap at layer " + std::to_string(layer));
}

namespace {

AffineParams uniform_affine(std::size_t in, std::size_t out, RngStream& rng) {
    AffineParams p{Matrix(in, out), std::vector<double>(out, 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& w : p.weights.values()) w = rng.uniform(-bound, bound);
    return p;
}

AffineParams zero_affine(std::size_t in, std::size_t out) {
    return {Matrix(in, out), std::vector<double>(out, 0.0)};
}

} // namespace

MdaNetwork init_network(const NetworkConfig& config, RngStream& rng) {
    config.validate();
    MdaNetwork net{config, {}, {}, {}};
    net.fc1 = uniform_affine(config.input_dim, config.fc1_width, rng);
    net.fc2 = uniform_affine(config.fc1_width, config.fc2_width, rng);
    net.classifier = uniform_affine(config.fc2_width, config.num_classes, rng);
    return net;
}

MdaNetwork zero_network(const NetworkConfig& config) {
    config.validate();
    return {config, zero_affine(config.input_dim, config.fc1_width),
            zero_affine(config.fc1_width, config.fc2_width),
            zero_affine(config.fc2_width, config.num_classes)};
}

NetworkGrads zero_grads(const MdaNetwork& net) {
    const auto& c = net.config;
    return {zero_affine(c.input_dim, c.fc1_width), zero_affine(c.fc1_width, c.fc2_width),
            zero_affine(c.fc2_width, c.num_classes)};
}

ForwardTrace forward(const MdaNetwork& net, const Matrix& batch, Mode mode, RngStream& rng) {
    if (batch.cols() != net.config.input_dim)
        throw ShapeError("forward: batch " + shape_string(batch) + " but network input_dim is " +
                         std::to_string(net.config.input_dim));
    ForwardTrace t;
    t.input = batch;
    t.fc1_pre = affine_forward(batch, net.fc1);
    t.fc1_act = relu_forward(t.fc1_pre);
    t.dropout.rate = net.config.dropout_rate;
    t.dropout.mode = mode;
    t.layer1_feats = dropout_forward(t.fc1_act, t.dropout, rng);
    t.fc2_pre = affine_forward(t.layer1_feats, net.fc2);
    t.layer2_feats = relu_forward(t.fc2_pre);
    t.logits = affine_forward(t.layer2_feats, net.classifier);
    return t;
}

ForwardTrace forward_eval(const MdaNetwork& net, const Matrix& batch) {
    RngStream unused(0);
    return forward(net, batch, Mode::eval, unused);
}

NetworkGrads backward(const MdaNetwork& net, const ForwardTrace& trace, const Matrix& grad_logits,
                      const Matrix& grad_layer1, const Matrix& grad_layer2) {
    NetworkGrads g;
    AffineGrads cls = affine_backward(trace.layer2_feats, net.classifier, grad_logits);
    g.classifier = {std::move(cls.grad_weights), std::move(cls.grad_bias)};

    Matrix d_layer2 = std::move(cls.grad_x);
    if (!grad_layer2.empty()) add_inplace(d_layer2, grad_layer2);
    const Matrix d_fc2_pre = relu_backward(trace.fc2_pre, d_layer2);

    AffineGrads fc2 = affine_backward(trace.layer1_feats, net.fc2, d_fc2_pre);
    g.fc2 = {std::move(fc2.grad_weights), std::move(fc2.grad_bias)};

    Matrix d_layer1 = std::move(fc2.grad_x);
    if (!grad_layer1.empty()) add_inplace(d_layer1, grad_layer1);
    const Matrix d_fc1_act = dropout_backward(d_layer1, trace.dropout);
    const Matrix d_fc1_pre = relu_backward(trace.fc1_pre, d_fc1_act);

    AffineGrads fc1 = affine_backward(trace.input, net.fc1, d_fc1_pre);
    g.fc1 = {std::move(fc1.grad_weights), std::move(fc1.grad_bias)};
    return g;
}

void accumulate(NetworkGrads& dst, const NetworkGrads& src) {
    auto add = [](AffineParams& a, const AffineParams& b) {
        add_inplace(a.weights, b.weights);
        for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
    };
    add(dst.fc1, src.fc1);
    add(dst.fc2, src.fc2);
    add(dst.classifier, src.classifier);
}

Prediction predict_from_logits(const Matrix& logits) {
    Prediction p;
    p.probabilities = softmax(logits);
    p.predicted_class.resize(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols(); ++j)
            if (logits(i, j) > logits(i, best)) best = j;
        p.predicted_class[i] = static_cast<int>(best);
    }
    return p;
}

Prediction predict(const MdaNetwork& net, const Matrix& batch) {
    return predict_from_logits(forward_eval(net, batch).logits);
}

std::array<std::span<double>, 6> parameter_views(MdaNetwork& net) {
    return {net.fc1.weights.values(), std::span<double>(net.fc1.bias),
            net.fc2.weights.values(), std::span<double>(net.fc2.bias),
            net.classifier.weights.values(), std::span<double>(net.classifier.bias)};
}

std::array<std::span<const double>, 6> parameter_views(const MdaNetwork& net) {
    return {net.fc1.weights.values(), std::span<const double>(net.fc1.bias),
            net.fc2.weights.values(), std::span<const double>(net.fc2.bias),
            net.classifier.weights.values(), std::span<const double>(net.classifier.bias)};
}

std::array<std::span<double>, 6> parameter_views(NetworkGrads& grads) {
    return {grads.fc1.weights.values(), std::span<double>(grads.fc1.bias),
            grads.fc2.weights.values(), std::span<double>(grads.fc2.bias),
            grads.classifier.weights.values(), std::span<double>(grads.classifier.bias)};
}

std::size_t parameter_count(const MdaNetwork& net) {
    std::size_t n = 0;
    for (auto v : parameter_views(net)) n += v.size();
    return n;
}

// ---------------------------------------------------------------------------
// Checkpoint format (version 1):
//   mda-checkpoint 1
//   manifest <ref>                      (optional)
//   meta <key> <value>                  (zero or more)
//   input_dim <n> / fc1_width / fc2_width / num_classes
//   dropout_rate <hexfloat>
//   param <name> <count> <hexfloat>...  (six lines, fixed order)
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kParamNames[6] = {"fc1.weights", "fc1.bias",        "fc2.weights",
                                        "fc2.bias",    "classifier.weights", "classifier.bias"};

std::string hexfloat(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_double(const std::string& tok, const std::filesystem::path& path) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw SchemaError(path.string() + ": bad number '" + tok + "'");
    return v;
}

} // namespace

void save_checkpoint(const std::filesystem::path& path, const MdaNetwork& net,
                     const std::string& manifest_ref,
                     const std::map<std::string, std::string>& metadata) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << "mda-checkpoint 1\n";
    if (!manifest_ref.empty()) out << "manifest " << manifest_ref << "\n";
    for (const auto& [k, v] : metadata) out << "meta " << k << " " << v << "\n";
    const auto& c = net.config;
    out << "input_dim " << c.input_dim << "\n"
        << "fc1_width " << c.fc1_width << "\n"
        << "fc2_width " << c.fc2_width << "\n"
        << "num_classes " << c.num_classes << "\n"
        << "dropout_rate " << hexfloat(c.dropout_rate) << "\n";
    const auto views = parameter_views(net);
    for (std::size_t k = 0; k < views.size(); ++k) {
        out << "param " << kParamNames[k] << " " << views[k].size();
        for (double v : views[k]) out << " " << hexfloat(v);
        out << "\n";
    }
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

MdaNetwork load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "mda-checkpoint 1")
        throw SchemaError(path.string() + ": not a version-1 mda checkpoint");

    NetworkConfig cfg;
    std::vector<std::vector<double>> params;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "manifest" || key == "meta") continue;
        if (key == "input_dim") ls >> cfg.input_dim;
        else if (key == "fc1_width") ls >> cfg.fc1_width;
        else if (key == "fc2_width") ls >> cfg.fc2_width;
        else if (key == "num_classes") ls >> cfg.num_classes;
        else if (key == "dropout_rate") {
            std::string tok;
            ls >> tok;
            cfg.dropout_rate = parse_double(tok, path);
        } else if (key == "param") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            if (params.size() >= 6 || name != kParamNames[params.size()])
                throw SchemaError(path.string() + ": unexpected parameter block '" + name + "'");
            std::vector<double> vals;
            vals.reserve(count);
            std::string tok;
            while (ls >> tok) vals.push_back(parse_double(tok, path));
            if (vals.size() != count)
                throw SchemaError(path.string() + ": parameter " + name + " declares " +
                                  std::to_string(count) + " values, found " +
                                  std::to_string(vals.size()));
            params.push_back(std::move(vals));
        } else {
            throw SchemaError(path.string() + ": unknown checkpoint key '" + key + "'");
        }
        if (ls.fail() && key != "param")
            throw SchemaError(path.string() + ": malformed line '" + line + "'");
    }
    if (params.size() != 6) throw SchemaError(path.string() + ": incomplete checkpoint");

    MdaNetwork net = zero_network(cfg);
    auto views = parameter_views(net);
    for (std::size_t k = 0; k < 6; ++k) {
        if (params[k].size() != views[k].size())
            throw SchemaError(path.string() + ": parameter " + kParamNames[k] + " has " +
                              std::to_string(params[k].size()) + " values, config implies " +
                              std::to_string(views[k].size()));
        std::copy(params[k].begin(), params[k].end(), views[k].begin());
    }
    return net;
}

std::map<std::string, std::string> load_checkpoint_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    std::map<std::string, std::string> meta;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("param ", 0) == 0) break;
        std::istringstream ls(line);
        std::string key, k, v;
        ls >> key;
        if (key == "meta" && ls >> k >> v) meta[k] = v;
        else if (key == "manifest" && ls >> v) meta["manifest"] = v;
    }
    return meta;
}

} // namespace mda
