#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mda {

enum class MethodVariant {
    target_only,
    source_only,
    single_coral,
    double_coral,
    single_mmd,
    double_mmd,
    single_coral_mmd,
    double_coral_mmd,
};

inline constexpr std::array<MethodVariant, 8> kAllVariants = {
    MethodVariant::target_only,      MethodVariant::source_only, MethodVariant::single_coral,
    MethodVariant::double_coral,     MethodVariant::single_mmd,  MethodVariant::double_mmd,
    MethodVariant::single_coral_mmd, MethodVariant::double_coral_mmd,
};

std::string_view variant_name(MethodVariant v);
// Row label used in report tables ("Double-layer Coral+MMD").
std::string_view variant_label(MethodVariant v);
// Throws UsageError listing the valid names.
MethodVariant parse_variant(std::string_view name);
std::string variant_names_joined();

bool uses_mmd(MethodVariant v);
bool uses_coral(MethodVariant v);
bool is_adaptive(MethodVariant v);
// Network taps the variant aligns: {} , {1} or {1, 2}.
std::vector<int> adapted_layers(MethodVariant v);

enum class WeightingMode { dynamic, gamma };

std::string_view weighting_name(WeightingMode m);
WeightingMode parse_weighting(std::string_view name);

inline constexpr double kDefaultGamma = 10.0;

// Raw per-step loss values; one entry per adapted layer for each metric the
// variant uses, empty otherwise.
struct LossTerms {
    double l_class = 0.0;
    std::vector<double> l_mmd;
    std::vector<double> l_coral;
};

struct LossWeights {
    double n = 1.0;
    std::vector<double> x;  // per-layer MMD weights
    std::vector<double> y;  // per-layer CORAL weights
};

struct LossBreakdown {
    double l_class = 0.0;
    std::vector<double> l_mmd;
    std::vector<double> l_coral;
    LossWeights weights;
    double gamma = 0.0;  // gamma mode only
    WeightingMode mode = WeightingMode::dynamic;
    bool uniform_fallback = false;
    double total = 0.0;
};

// Each weight is its loss over the sum of all supplied losses. Throws
// DegenerateError when every loss is zero.
LossWeights dynamic_weights(double l_class, const std::vector<double>& l_mmd,
                            const std::vector<double>& l_coral);

// n·l_class + Σ x_i·l_mmd_i + Σ y_i·l_coral_i
double weighted_total(const LossTerms& terms, const LossWeights& weights);

// Combines the variant's terms. Dynamic mode recomputes the weights from the
// current values (uniform over active terms if all are zero); gamma mode is
// l_class + gamma·metric and is defined for single-layer variants only.
LossBreakdown total_loss(MethodVariant variant, const LossTerms& terms,
                         WeightingMode mode = WeightingMode::dynamic,
                         double gamma = kDefaultGamma);

// Per-step training history:
//   step,l_class,l_mmd_1..,l_coral_1..,n,x_1..,y_1..,total
std::string history_csv_header(MethodVariant variant);
void write_history_row(std::ostream& out, std::size_t step, const LossBreakdown& b);

} // namespace mda
