#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "panelbreak/breakci.hpp"
#include "panelbreak/critval.hpp"
#include "panelbreak/dp_search.hpp"
#include "panelbreak/ftests.hpp"
#include "panelbreak/simlab.hpp"

namespace panelbreak {

// Insertion order is preserved, so a fixed construction order plus nlohmann's
// shortest-roundtrip doubles gives byte-stable output.
using json = nlohmann::ordered_json;

json to_json(const FitResult& fit);
json to_json(const SearchResult& sr);
json to_json(const TestReport& rep);
json to_json(const KhatReport& rep);
json to_json(const std::vector<BreakInterval>& cis);
json to_json(const McReport& rep);
json to_json(const CvProvenance& prov);
json table_summary_json(const CriticalValueTable& table);

std::string render_json(const json& j);  // dump with trailing newline

// Text tables; period labels map dates to display values when given.
std::string text_break_table(const BreakSet& breaks, const std::vector<BreakInterval>* cis,
                             const std::vector<std::string>* period_labels);
std::string text_coef_table(const FitResult& fit, const CovarianceEstimate& cov,
                            const std::vector<std::string>& w_names);
std::string text_test(const TestReport& rep);
std::string text_khat(const KhatReport& rep, const std::vector<std::string>* period_labels);
std::string text_mc(const McReport& rep);

}  // namespace panelbreak
