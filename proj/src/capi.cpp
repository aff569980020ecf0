#include "tvinesynth.h"

#include <cstring>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tvs/common.hpp"
#include "tvs/csv.hpp"
#include "tvs/cvine.hpp"
#include "tvs/datagen.hpp"
#include "tvs/evaluation.hpp"
#include "tvs/ordering.hpp"
#include "tvs/privacy.hpp"
#include "tvs/stats.hpp"

using nlohmann::json;

struct tvs_dataset {
  tvs::Dataset ds;
};
struct tvs_model {
  tvs::CVineModel model;
};

namespace {

thread_local std::string g_last_error;

#define TVS_API __attribute__((visibility("default")))

int fail(int code, const std::string& what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return TVS_OK;
  } catch (const tvs::numeric_error& e) {
    return fail(TVS_ERR_NUMERIC, e.what());
  } catch (const tvs::data_error& e) {
    return fail(TVS_ERR_DATA, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(TVS_ERR_USAGE, e.what());
  } catch (const std::domain_error& e) {
    return fail(TVS_ERR_USAGE, e.what());
  } catch (const json::exception& e) {
    return fail(TVS_ERR_DATA, std::string("json: ") + e.what());
  } catch (const std::exception& e) {
    return fail(TVS_ERR_DATA, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_json(const char* text, const char* what) {
  if (text == nullptr || *text == '\0') return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw tvs::data_error(std::string(what) + ": malformed json: " + e.what());
  }
}

std::vector<int> order_from_json(const tvs::Dataset& ds, const json& j) {
  if (!j.contains("order")) throw tvs::data_error("order json: missing 'order' field");
  std::vector<int> order;
  for (const auto& name : j.at("order")) order.push_back(ds.column_index(name.get<std::string>()));
  return order;
}

int sensitive_from_json(const tvs::Dataset& ds, const json& cfg) {
  if (!cfg.contains("sensitive")) throw tvs::data_error("attack config: missing 'sensitive' field");
  return ds.column_index(cfg.at("sensitive").get<std::string>());
}

tvs::ForestConfig forest_from_json(const json& j) {
  tvs::ForestConfig fc;
  fc.n_trees = j.value("n_trees", fc.n_trees);
  fc.max_depth = j.value("max_depth", fc.max_depth);
  fc.min_leaf = j.value("min_leaf", fc.min_leaf);
  fc.features_per_split = j.value("features_per_split", fc.features_per_split);
  fc.seed = j.value("seed", static_cast<std::uint64_t>(fc.seed));
  return fc;
}

tvs::AIAConfig aia_from_json(const json& j) {
  tvs::AIAConfig c;
  c.n_iter = j.value("n_iter", c.n_iter);
  c.size_raw_t = j.value("size_raw_t", c.size_raw_t);
  c.size_syn_t = j.value("size_syn_t", c.size_syn_t);
  c.n_synth = j.value("n_synth", c.n_synth);
  c.bootstrap_size = j.value("bootstrap_size", c.bootstrap_size);
  return c;
}

tvs::MIAConfig mia_from_json(const json& j) {
  tvs::MIAConfig c;
  c.n_iter = j.value("n_iter", c.n_iter);
  c.size_raw_a = j.value("size_raw_a", c.size_raw_a);
  c.n_shadows = j.value("n_shadows", c.n_shadows);
  c.n_syn_a = j.value("n_syn_a", c.n_syn_a);
  c.size_raw_t = j.value("size_raw_t", c.size_raw_t);
  c.size_syn_t = j.value("size_syn_t", c.size_syn_t);
  c.n_syn_t = j.value("n_syn_t", c.n_syn_t);
  return c;
}

std::vector<int> pick_targets(const tvs::Dataset& ds, int sensitive, const json& cfg, tvs::RngStream& rng) {
  std::vector<int> targets;
  const int n_out = cfg.value("outlier_targets", 0);
  const int n_rnd = cfg.value("random_targets", 0);
  if (n_out > 0) {
    auto t = tvs::select_targets(ds, sensitive, tvs::TargetMode::outlier, n_out, rng);
    targets.insert(targets.end(), t.begin(), t.end());
  }
  if (n_rnd > 0) {
    auto t = tvs::select_targets(ds, sensitive, tvs::TargetMode::random, n_rnd, rng);
    targets.insert(targets.end(), t.begin(), t.end());
  }
  return targets;
}

}  // namespace

extern "C" {

TVS_API const char* tvs_version(void) { return "0.1.0"; }

TVS_API const char* tvs_last_error(void) { return g_last_error.c_str(); }

TVS_API void tvs_string_free(char* s) { std::free(s); }

TVS_API void tvs_set_jobs(int jobs) { tvs::set_jobs(jobs); }

TVS_API int tvs_dataset_read_csv(const char* path, const char* response, tvs_dataset** out) {
  return guarded([&] {
    if (!path || !out) throw std::invalid_argument("tvs_dataset_read_csv: null argument");
    *out = new tvs_dataset{tvs::read_csv(path, response ? response : "y")};
  });
}

TVS_API int tvs_dataset_write_csv(const tvs_dataset* ds, const char* path) {
  return guarded([&] {
    if (!ds || !path) throw std::invalid_argument("tvs_dataset_write_csv: null argument");
    tvs::write_csv(ds->ds, path);
  });
}

TVS_API int tvs_dataset_simulate(int n, unsigned long long seed, tvs_dataset** out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("tvs_dataset_simulate: null argument");
    tvs::RngStream rng(seed, 0x51);
    *out = new tvs_dataset{tvs::simulate(tvs::simulated_study_spec(), n, rng)};
  });
}

TVS_API int tvs_dataset_split(const tvs_dataset* ds, double test_fraction, unsigned long long seed,
                              tvs_dataset** train, tvs_dataset** test) {
  return guarded([&] {
    if (!ds || !train || !test) throw std::invalid_argument("tvs_dataset_split: null argument");
    tvs::RngStream rng(seed, 0x5B);
    auto [tr, te] = tvs::train_test_split(ds->ds, test_fraction, rng);
    *train = new tvs_dataset{std::move(tr)};
    *test = new tvs_dataset{std::move(te)};
  });
}

TVS_API int tvs_dataset_n_rows(const tvs_dataset* ds) { return ds ? ds->ds.n_rows() : 0; }
TVS_API int tvs_dataset_n_cols(const tvs_dataset* ds) { return ds ? ds->ds.n_cols() : 0; }
TVS_API void tvs_dataset_free(tvs_dataset* ds) { delete ds; }

TVS_API int tvs_find_order(const tvs_dataset* ds, const char* spec_json, char** out_json) {
  return guarded([&] {
    if (!ds || !out_json) throw std::invalid_argument("tvs_find_order: null argument");
    json spec = parse_json(spec_json, "order spec");
    tvs::OrderSpec os;
    for (const auto& name : spec.value("sensitive", json::array()))
      os.sensitive.push_back(ds->ds.column_index(name.get<std::string>()));
    os.threshold = spec.value("threshold", 0.5);
    const std::string measure = spec.value("measure", "kendall");
    if (measure == "kendall")
      os.measure = tvs::AssociationMeasure::kendall;
    else if (measure == "pearson")
      os.measure = tvs::AssociationMeasure::pearson;
    else
      throw tvs::data_error("order spec: unknown measure '" + measure + "'");

    tvs::OrderResult res = tvs::find_order(ds->ds, os);
    tvs::OrderDiagnostics diag =
        tvs::validate_order(res.order, os.sensitive, res.k_set, ds->ds.n_cols());

    json out;
    json order = json::array(), kset = json::array(), sens = json::array();
    for (int p : res.order) order.push_back(ds->ds.names[p]);
    for (int k : res.k_set) kset.push_back(ds->ds.names[k]);
    for (int s : os.sensitive) sens.push_back(ds->ds.names[s]);
    out["order"] = order;
    out["k_set"] = kset;
    out["sensitive"] = sens;
    out["threshold"] = os.threshold;
    out["measure"] = measure;
    out["safe_truncation_bound"] = diag.safe_truncation_bound;
    json assoc = json::array();
    for (int i = 0; i < res.association.rows(); ++i) {
      json row = json::array();
      for (int j = 0; j < res.association.cols(); ++j) row.push_back(res.association(i, j));
      assoc.push_back(row);
    }
    out["association"] = assoc;
    *out_json = dup_string(out.dump(2));
  });
}

TVS_API int tvs_model_fit(const tvs_dataset* ds, const char* order_json, int t_max, unsigned long long seed,
                          tvs_model** out) {
  return guarded([&] {
    if (!ds || !out) throw std::invalid_argument("tvs_model_fit: null argument");
    std::vector<int> order;
    if (order_json && *order_json) {
      order = order_from_json(ds->ds, parse_json(order_json, "order json"));
    } else {
      order.resize(ds->ds.n_cols());
      for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    }
    if (t_max == 0) t_max = ds->ds.n_cols();
    (void)seed;  // fitting is deterministic
    *out = new tvs_model{tvs::fit_cvine(ds->ds, order, t_max)};
  });
}

TVS_API int tvs_model_truncate(const tvs_model* m, int level, tvs_model** out) {
  return guarded([&] {
    if (!m || !out) throw std::invalid_argument("tvs_model_truncate: null argument");
    *out = new tvs_model{tvs::truncate(m->model, level)};
  });
}

TVS_API int tvs_model_save(const tvs_model* m, const char* path) {
  return guarded([&] {
    if (!m || !path) throw std::invalid_argument("tvs_model_save: null argument");
    tvs::save_model(m->model, path);
  });
}

TVS_API int tvs_model_load(const char* path, tvs_model** out) {
  return guarded([&] {
    if (!path || !out) throw std::invalid_argument("tvs_model_load: null argument");
    *out = new tvs_model{tvs::load_model(path)};
  });
}

TVS_API int tvs_model_to_json(const tvs_model* m, char** out_json) {
  return guarded([&] {
    if (!m || !out_json) throw std::invalid_argument("tvs_model_to_json: null argument");
    *out_json = dup_string(tvs::model_to_json(m->model));
  });
}

TVS_API int tvs_model_dim(const tvs_model* m) { return m ? m->model.dim() : 0; }
TVS_API int tvs_model_truncation_level(const tvs_model* m) { return m ? m->model.truncation_level : 0; }

TVS_API int tvs_model_sample(const tvs_model* m, int n, unsigned long long seed, tvs_dataset** out) {
  return guarded([&] {
    if (!m || !out) throw std::invalid_argument("tvs_model_sample: null argument");
    tvs::RngStream rng(seed, 0x5A);
    *out = new tvs_dataset{tvs::sample(m->model, n, rng)};
  });
}

TVS_API void tvs_model_free(tvs_model* m) { delete m; }

TVS_API int tvs_utility_auc(const tvs_dataset* train, const tvs_dataset* test, const char* forest_json,
                            double* out_auc) {
  return guarded([&] {
    if (!train || !test || !out_auc) throw std::invalid_argument("tvs_utility_auc: null argument");
    *out_auc = tvs::utility_auc(train->ds, test->ds, forest_from_json(parse_json(forest_json, "forest config")));
  });
}

TVS_API int tvs_fidelity(const tvs_dataset* real, const tvs_dataset* synthetic, char** out_json) {
  return guarded([&] {
    if (!real || !synthetic || !out_json) throw std::invalid_argument("tvs_fidelity: null argument");
    tvs::FidelityReport rep = tvs::fidelity(real->ds.x, synthetic->ds.x);
    json out;
    out["alpha_grid"] = rep.alpha_grid;
    out["p_alpha"] = rep.p_alpha;
    out["beta_grid"] = rep.beta_grid;
    out["r_beta"] = rep.r_beta;
    out["ip_alpha"] = rep.ip_alpha;
    out["ir_beta"] = rep.ir_beta;
    out["authenticity"] = rep.authenticity;
    *out_json = dup_string(out.dump(2));
  });
}

TVS_API int tvs_run_aia(const tvs_dataset* real, const char* generator_json, const char* config_json,
                        unsigned long long seed, char** out_json) {
  return guarded([&] {
    if (!real || !out_json) throw std::invalid_argument("tvs_run_aia: null argument");
    json gen = parse_json(generator_json, "generator json");
    json cfg_j = parse_json(config_json, "aia config");
    std::vector<int> order = order_from_json(real->ds, gen);
    const int truncation = gen.value("truncation", static_cast<int>(order.size()));
    const int sensitive = sensitive_from_json(real->ds, cfg_j);
    tvs::AIAConfig cfg = aia_from_json(cfg_j);

    tvs::RngStream rng(seed, 0xA1A);
    tvs::RngStream tgt_rng = rng.substream(3);
    std::vector<int> targets = pick_targets(real->ds, sensitive, cfg_j, tgt_rng);

    tvs::GeneratorFn generator = tvs::cvine_generator(order, truncation);
    tvs::AIAReport rep = tvs::run_aia(real->ds, generator, sensitive, targets, cfg, rng);

    json out;
    out["sensitive"] = real->ds.names[sensitive];
    out["truncation"] = truncation;
    out["mab"] = rep.mab;
    out["wcab"] = rep.wcab;
    out["per_set_mab"] = rep.per_set_mab;
    out["mse_synth"] = rep.mse_synth;
    out["mse_real"] = rep.mse_real;
    out["skipped"] = rep.skipped;
    out["targets"] = targets;
    out["n_iter"] = rep.n_iter;
    out["n_synth"] = rep.n_synth;
    out["d"] = rep.d;
    out["beta"] = rep.beta;
    *out_json = dup_string(out.dump(2));
  });
}

TVS_API int tvs_run_mia(const tvs_dataset* real, const char* generator_json, const char* config_json,
                        unsigned long long seed, char** out_json) {
  return guarded([&] {
    if (!real || !out_json) throw std::invalid_argument("tvs_run_mia: null argument");
    json gen = parse_json(generator_json, "generator json");
    json cfg_j = parse_json(config_json, "mia config");
    std::vector<int> order = order_from_json(real->ds, gen);
    const int truncation = gen.value("truncation", static_cast<int>(order.size()));
    const int sensitive = sensitive_from_json(real->ds, cfg_j);
    tvs::MIAConfig cfg = mia_from_json(cfg_j);

    tvs::RngStream rng(seed, 0x41A);
    tvs::RngStream tgt_rng = rng.substream(3);
    std::vector<int> targets = pick_targets(real->ds, sensitive, cfg_j, tgt_rng);
    if (targets.empty()) throw tvs::data_error("mia config: no targets requested");

    tvs::GeneratorFn generator = tvs::cvine_generator(order, truncation);
    json per_target = json::array();
    std::vector<double> pgs;
    for (size_t k = 0; k < targets.size(); ++k) {
      tvs::RngStream mia_rng = rng.substream(100 + k);
      tvs::MIAReport rep = tvs::run_mia(real->ds, generator, targets[k], cfg, mia_rng);
      per_target.push_back({{"target_row", targets[k]},
                            {"privacy_gain", rep.privacy_gain},
                            {"p_guess_in", rep.p_guess_in},
                            {"p_guess_out", rep.p_guess_out}});
      pgs.push_back(rep.privacy_gain);
    }
    json out;
    out["sensitive"] = real->ds.names[sensitive];
    out["truncation"] = truncation;
    out["per_target"] = per_target;
    out["median_privacy_gain"] = tvs::median(pgs);
    *out_json = dup_string(out.dump(2));
  });
}

TVS_API int tvs_sweep(const tvs_dataset* train, const tvs_dataset* test, const char* config_json,
                      unsigned long long seed, char** out_json) {
  return guarded([&] {
    if (!train || !test || !out_json) throw std::invalid_argument("tvs_sweep: null argument");
    json cfg_j = parse_json(config_json, "sweep config");
    tvs::SweepConfig cfg;
    std::vector<int> order = order_from_json(train->ds, cfg_j);
    cfg.truncations = cfg_j.at("truncations").get<std::vector<int>>();
    cfg.privacy = cfg_j.value("privacy", "mab");
    cfg.sensitive = sensitive_from_json(train->ds, cfg_j);
    cfg.utility_reps = cfg_j.value("utility_reps", cfg.utility_reps);
    cfg.synth_rows = cfg_j.value("synth_rows", 0);
    cfg.aia = aia_from_json(cfg_j.value("aia", json::object()));
    cfg.mia = mia_from_json(cfg_j.value("mia", json::object()));
    cfg.mia_outlier_targets = cfg_j.value("outlier_targets", cfg.mia_outlier_targets);
    cfg.mia_random_targets = cfg_j.value("random_targets", cfg.mia_random_targets);
    cfg.forest = forest_from_json(cfg_j.value("forest", json::object()));

    tvs::RngStream rng(seed, 0x53F);
    std::vector<tvs::SweepRecord> records = tvs::sweep(train->ds, test->ds, order, cfg, rng);

    json recs = json::array();
    for (const auto& r : records) {
      recs.push_back({{"truncation", r.truncation},
                      {"utility_median", r.utility_median},
                      {"utility_q25", r.utility_q25},
                      {"utility_q75", r.utility_q75},
                      {"privacy_metric", r.privacy_metric},
                      {"privacy_median", r.privacy_median},
                      {"privacy_q25", r.privacy_q25},
                      {"privacy_q75", r.privacy_q75}});
    }
    json out;
    out["records"] = recs;
    out["csv"] = tvs::sweep_records_to_csv(records);
    *out_json = dup_string(out.dump(2));
  });
}

}  // extern "C"
