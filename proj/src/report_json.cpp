#include "dextr/report_json.hpp"

#include <cmath>

namespace dextr {

ordered_json report_json(const LayerRecord& rec) {
  ordered_json j;
  j["layer_id"] = rec.layer_id;
  j["kind"] = layer_kind_name(rec.kind);
  j["channels"] = rec.channels;
  j["spatial"] = rec.spatial;
  j["qualifying"] = rec.qualifying;
  j["inv_cond"] = rec.inv_cond;
  j["sigma_max"] = rec.sigma_max;
  return j;
}

ordered_json report_json(const ProxyReport& rep) {
  ordered_json j;
  j["arch"] = rep.arch;
  j["valid"] = rep.valid;
  j["dextr"] = rep.dextr;
  j["cond_sum"] = rep.cond_sum;
  j["cond_term"] = rep.cond_term;
  j["kappa"] = rep.kappa;
  j["curv_term"] = rep.curv_term;
  j["params"] = rep.params;
  j["flops"] = rep.flops;
  j["seeds"] = {{"init", rep.seeds.init},
                {"data", rep.seeds.data},
                {"circular", rep.seeds.circular},
                {"theta", rep.seeds.theta},
                {"q", rep.seeds.q}};
  j["layers"] = ordered_json::array();
  for (const auto& rec : rep.layers) j["layers"].push_back(report_json(rec));
  return j;
}

ordered_json report_json(const CorrelationReport& rep) {
  ordered_json j;
  j["variant"] = rep.variant;
  j["runs"] = rep.runs;
  j["rows"] = rep.rows;
  j["rho_mean"] = rep.rho_mean;
  j["rho_std"] = rep.rho_std;
  j["rhos"] = rep.rhos;
  j["invalid"] = rep.invalid;
  return j;
}

ordered_json report_json(const StabilityReport& rep) {
  ordered_json j;
  j["arch"] = rep.arch;
  j["draws"] = rep.draws;
  j["mean"] = rep.mean;
  j["stddev"] = rep.stddev;
  j["scores"] = rep.scores;
  j["invalid"] = rep.invalid;
  return j;
}

ordered_json report_json(const SearchResult& res) {
  ordered_json j;
  j["best_encoding"] = res.best_encoding;
  j["best_score"] = res.best_score;
  j["evaluated"] = res.evaluated;
  j["rejected"] = res.rejected;
  j["invalid"] = res.invalid;
  return j;
}

ordered_json report_json(const CohortReport& rep,
                         const std::string& rho_label) {
  ordered_json j;
  j[rho_label] = rep.rho;
  j["sets"] = ordered_json::array();
  for (const auto& run : rep.sets) {
    ordered_json r;
    r["alpha"] = run.alpha;
    r["inv_cond"] = run.inv_cond;
    r["steps"] = run.steps;
    r["speed"] = run.speed;
    r["diverged"] = run.diverged;
    r["test_mse"] = run.test_mse;
    j["sets"].push_back(r);
  }
  return j;
}

ordered_json report_json(const LemmaReport& rep) {
  ordered_json j;
  j["nets"] = rep.nets;
  j["mean_fraction"] = rep.mean_fraction;
  j["skipped"] = rep.skipped;
  j["fractions"] = rep.fractions;
  return j;
}

}  // namespace dextr
