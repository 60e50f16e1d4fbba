#include "gffdrift/lemma_report.hpp"

#include <algorithm>
#include <cmath>

namespace gffdrift {

namespace {

// JSON has no inf/nan; emit them as strings so reports stay parseable.
nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

} // namespace

std::size_t LemmaCheckReport::failures() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const LemmaSample& s) { return !s.pass; }));
}

bool LemmaCheckReport::finite_constant() const { return constant_name.empty() || std::isfinite(fitted_constant); }

double LemmaCheckReport::summary_value(const std::string& key, double fallback) const {
    for (const auto& [k, v] : summary)
        if (k == key) return v;
    return fallback;
}

void LemmaCheckReport::set_summary(const std::string& key, double value) {
    for (auto& [k, v] : summary)
        if (k == key) {
            v = value;
            return;
        }
    summary.emplace_back(key, value);
}

nlohmann::json LemmaCheckReport::to_json() const {
    nlohmann::json j;
    j["lemma"] = lemma_id;
    if (!constant_name.empty()) {
        j["constant"] = constant_name;
        j["fitted_constant"] = num(fitted_constant);
    }
    j["n_samples"] = samples.size();
    j["failures"] = failures();
    j["pass"] = pass();
    nlohmann::json summ = nlohmann::json::object();
    for (const auto& [k, v] : summary) summ[k] = num(v);
    j["summary"] = summ;
    j["notes"] = notes;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : samples) {
        nlohmann::json e;
        nlohmann::json p = nlohmann::json::object();
        for (const auto& [k, v] : s.params) p[k] = num(v);
        e["params"] = p;
        e["lhs"] = num(s.lhs);
        e["rhs"] = num(s.rhs);
        e["ratio"] = num(s.ratio);
        e["margin"] = num(s.margin);
        e["pass"] = s.pass;
        if (!s.note.empty()) e["note"] = s.note;
        arr.push_back(std::move(e));
    }
    j["samples"] = std::move(arr);
    return j;
}

} // namespace gffdrift
