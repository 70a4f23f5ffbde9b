#include "mda/loss_weighting.hpp"

#include "mda/error.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mda {

std::string_view variant_name(MethodVariant v) {
    switch (v) {
    case MethodVariant::target_only: return "target_only";
    case MethodVariant::source_only: return "source_only";
    case MethodVariant::single_coral: return "single_coral";
    case MethodVariant::double_coral: return "double_coral";
    case MethodVariant::single_mmd: return "single_mmd";
    case MethodVariant::double_mmd: return "double_mmd";
    case MethodVariant::single_coral_mmd: return "single_coral_mmd";
    case MethodVariant::double_coral_mmd: return "double_coral_mmd";
    }
    return "?";
}

std::string_view variant_label(MethodVariant v) {
    switch (v) {
    case MethodVariant::target_only: return "Target-only";
    case MethodVariant::source_only: return "Source-only";
    case MethodVariant::single_coral: return "Single-layer CORAL";
    case MethodVariant::double_coral: return "Double-layer CORAL";
    case MethodVariant::single_mmd: return "Single-layer MMD";
    case MethodVariant::double_mmd: return "Double-layer MMD";
    case MethodVariant::single_coral_mmd: return "Single-layer Coral+MMD";
    case MethodVariant::double_coral_mmd: return "Double-layer Coral+MMD";
    }
    return "?";
}

std::string variant_names_joined() {
    std::string s;
    for (auto v : kAllVariants) {
        if (!s.empty()) s += ", ";
        s += variant_name(v);
    }
    return s;
}

MethodVariant parse_variant(std::string_view name) {
    for (auto v : kAllVariants)
        if (variant_name(v) == name) return v;
    throw UsageError("unknown variant '" + std::string(name) +
                     "'; valid variants: " + variant_names_joined());
}

bool uses_mmd(MethodVariant v) {
    return v == MethodVariant::single_mmd || v == MethodVariant::double_mmd ||
           v == MethodVariant::single_coral_mmd || v == MethodVariant::double_coral_mmd;
}

bool uses_coral(MethodVariant v) {
    return v == MethodVariant::single_coral || v == MethodVariant::double_coral ||
           v == MethodVariant::single_coral_mmd || v == MethodVariant::double_coral_mmd;
}

bool is_adaptive(MethodVariant v) { return uses_mmd(v) || uses_coral(v); }

std::vector<int> adapted_layers(MethodVariant v) {
    switch (v) {
    case MethodVariant::single_coral:
    case MethodVariant::single_mmd:
    case MethodVariant::single_coral_mmd: return {1};
    case MethodVariant::double_coral:
    case MethodVariant::double_mmd:
    case MethodVariant::double_coral_mmd: return {1, 2};
    default: return {};
    }
}

std::string_view weighting_name(WeightingMode m) {
    return m == WeightingMode::dynamic ? "dynamic" : "gamma";
}

WeightingMode parse_weighting(std::string_view name) {
    if (name == "dynamic") return WeightingMode::dynamic;
    if (name == "gamma") return WeightingMode::gamma;
    throw UsageError("unknown weighting mode '" + std::string(name) +
                     "'; valid modes: dynamic, gamma");
}

namespace {

void check_loss_value(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0)
        throw ParameterError(std::string(what) + " must be finite and >= 0, got " +
                             std::to_string(v));
}

} // namespace

LossWeights dynamic_weights(double l_class, const std::vector<double>& l_mmd,
                            const std::vector<double>& l_coral) {
    check_loss_value(l_class, "l_class");
    double denom = l_class;
    for (double v : l_mmd) {
        check_loss_value(v, "l_mmd");
        denom += v;
    }
    for (double v : l_coral) {
        check_loss_value(v, "l_coral");
        denom += v;
    }
    if (!(denom > 0.0)) throw DegenerateError("dynamic_weights: all losses are zero");

    LossWeights w;
    w.n = l_class / denom;
    for (double v : l_mmd) w.x.push_back(v / denom);
    for (double v : l_coral) w.y.push_back(v / denom);
    return w;
}

double weighted_total(const LossTerms& terms, const LossWeights& weights) {
    if (weights.x.size() != terms.l_mmd.size() || weights.y.size() != terms.l_coral.size())
        throw ParameterError("weighted_total: weights do not match loss terms");
    double total = weights.n * terms.l_class;
    for (std::size_t i = 0; i < terms.l_mmd.size(); ++i) total += weights.x[i] * terms.l_mmd[i];
    for (std::size_t i = 0; i < terms.l_coral.size(); ++i)
        total += weights.y[i] * terms.l_coral[i];
    return total;
}

LossBreakdown total_loss(MethodVariant variant, const LossTerms& terms, WeightingMode mode,
                         double gamma) {
    const std::size_t layers = adapted_layers(variant).size();
    const std::size_t want_mmd = uses_mmd(variant) ? layers : 0;
    const std::size_t want_coral = uses_coral(variant) ? layers : 0;
    if (terms.l_mmd.size() != want_mmd || terms.l_coral.size() != want_coral)
        throw ParameterError("variant " + std::string(variant_name(variant)) + " expects " +
                             std::to_string(want_mmd) + " MMD and " + std::to_string(want_coral) +
                             " CORAL terms, got " + std::to_string(terms.l_mmd.size()) + " and " +
                             std::to_string(terms.l_coral.size()));

    LossBreakdown b;
    b.l_class = terms.l_class;
    b.l_mmd = terms.l_mmd;
    b.l_coral = terms.l_coral;
    b.mode = mode;

    if (mode == WeightingMode::gamma) {
        if (layers > 1)
            throw ParameterError("gamma weighting is defined for single-layer variants only, not " +
                                 std::string(variant_name(variant)));
        if (!std::isfinite(gamma) || gamma < 0.0)
            throw ParameterError("gamma must be finite and >= 0, got " + std::to_string(gamma));
        check_loss_value(terms.l_class, "l_class");
        b.gamma = gamma;
        b.weights.n = 1.0;
        b.weights.x.assign(want_mmd, gamma);
        b.weights.y.assign(want_coral, gamma);
    } else {
        try {
            b.weights = dynamic_weights(terms.l_class, terms.l_mmd, terms.l_coral);
        } catch (const DegenerateError&) {
            const double u = 1.0 / static_cast<double>(1 + want_mmd + want_coral);
            b.weights.n = u;
            b.weights.x.assign(want_mmd, u);
            b.weights.y.assign(want_coral, u);
            b.uniform_fallback = true;
        }
    }
    b.total = weighted_total(terms, b.weights);
    return b;
}

std::string history_csv_header(MethodVariant variant) {
    const std::size_t layers = adapted_layers(variant).size();
    const std::size_t nm = uses_mmd(variant) ? layers : 0;
    const std::size_t nc = uses_coral(variant) ? layers : 0;
    std::string h = "step,l_class";
    for (std::size_t i = 1; i <= nm; ++i) h += ",l_mmd_" + std::to_string(i);
    for (std::size_t i = 1; i <= nc; ++i) h += ",l_coral_" + std::to_string(i);
    h += ",n";
    for (std::size_t i = 1; i <= nm; ++i) h += ",x_" + std::to_string(i);
    for (std::size_t i = 1; i <= nc; ++i) h += ",y_" + std::to_string(i);
    h += ",total";
    return h;
}

void write_history_row(std::ostream& out, std::size_t step, const LossBreakdown& b) {
    char buf[40];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
    };
    out << step;
    num(b.l_class);
    for (double v : b.l_mmd) num(v);
    for (double v : b.l_coral) num(v);
    num(b.weights.n);
    for (double v : b.weights.x) num(v);
    for (double v : b.weights.y) num(v);
    num(b.total);
    out << '\n';
}

} // namespace mda
