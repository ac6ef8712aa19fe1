#include "hurstlab/run_config.hpp"

#include <json.hpp>

#include "hurstlab/errors.hpp"
#include "hurstlab/version.hpp"

namespace hurstlab {

using nlohmann::json;

std::string RunConfig::to_json(int indent) const {
  const json doc{{"subcommand", subcommand},
                 {"case", case_name},
                 {"n", n},
                 {"alpha", alpha},
                 {"estimator", estimator},
                 {"p", p},
                 {"reps", reps},
                 {"n_fields", n_fields},
                 {"field", field},
                 {"master_seed", master_seed},
                 {"preset", preset},
                 {"input", input},
                 {"out", out},
                 {"t_grid", t_grid},
                 {"what", what},
                 {"threads", threads},
                 {"table_cache", table_cache},
                 {"version", kVersion}};
  return doc.dump(indent);
}

RunConfig RunConfig::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& ex) {
    throw Error(std::string("bad run config: ") + ex.what());
  }
  RunConfig cfg;
  try {
    doc.at("subcommand").get_to(cfg.subcommand);
    doc.at("case").get_to(cfg.case_name);
    doc.at("n").get_to(cfg.n);
    doc.at("alpha").get_to(cfg.alpha);
    doc.at("estimator").get_to(cfg.estimator);
    doc.at("p").get_to(cfg.p);
    doc.at("reps").get_to(cfg.reps);
    doc.at("n_fields").get_to(cfg.n_fields);
    doc.at("field").get_to(cfg.field);
    doc.at("master_seed").get_to(cfg.master_seed);
    doc.at("preset").get_to(cfg.preset);
    doc.at("input").get_to(cfg.input);
    doc.at("out").get_to(cfg.out);
    doc.at("t_grid").get_to(cfg.t_grid);
    doc.at("what").get_to(cfg.what);
    doc.at("threads").get_to(cfg.threads);
    doc.at("table_cache").get_to(cfg.table_cache);
  } catch (const json::exception& ex) {
    throw Error(std::string("bad run config: ") + ex.what());
  }
  return cfg;
}

}  // namespace hurstlab
