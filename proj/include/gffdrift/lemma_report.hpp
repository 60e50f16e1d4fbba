#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace gffdrift {

struct LemmaSample {
    std::vector<std::pair<std::string, double>> params;
    double lhs = 0.0;
    double rhs = 0.0;
    /// Sample-level quantity entering the fitted constant (lhs/rhs-type).
    double ratio = 0.0;
    /// rhs - lhs at the fitted constant; negative means a violation.
    double margin = 0.0;
    bool pass = true;
    std::string note;
};

/// Outcome of one numerical lemma audit: per-sample sides, the fitted
/// constant and pass/fail bookkeeping. Reports never throw on failure.
struct LemmaCheckReport {
    std::string lemma_id;
    std::string constant_name;
    double fitted_constant = 0.0;
    std::vector<LemmaSample> samples;
    std::vector<std::pair<std::string, double>> summary;
    std::vector<std::string> notes;

    std::size_t failures() const;
    bool pass() const { return failures() == 0 && finite_constant(); }
    bool finite_constant() const;
    double summary_value(const std::string& key, double fallback = 0.0) const;
    void set_summary(const std::string& key, double value);

    nlohmann::json to_json() const;
};

} // namespace gffdrift
