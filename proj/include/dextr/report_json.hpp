#pragma once

#include "json.hpp"

#include "dextr/eval.hpp"
#include "dextr/search.hpp"
#include "dextr/theory.hpp"

namespace dextr {

// Insertion-ordered JSON keeps serialized reports byte-stable run to run.
// NaN fields (invalid scores) serialize as null.
using ordered_json = nlohmann::ordered_json;

ordered_json report_json(const LayerRecord& rec);
ordered_json report_json(const ProxyReport& rep);
ordered_json report_json(const CorrelationReport& rep);
ordered_json report_json(const StabilityReport& rep);
ordered_json report_json(const SearchResult& res);
ordered_json report_json(const CohortReport& rep,
                         const std::string& rho_label);
ordered_json report_json(const LemmaReport& rep);

}  // namespace dextr
