// tvinesynth command line: simulate / order / fit / sample / attack /
// utility / fidelity / sweep. Everything goes through the C API in
// tvinesynth.h; outputs land in --out-dir together with a run manifest.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tvinesynth.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  std::string out_dir = ".";
  std::uint64_t seed = 42;
  int jobs = 0;
  std::string response = "y";
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

[[noreturn]] void die(int code) {
  std::cerr << "error: " << tvs_last_error() << "\n";
  std::exit(code);
}

void check(int status) {
  if (status != TVS_OK) die(status);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) {
    std::cerr << "error: cannot open '" << path << "'\n";
    std::exit(TVS_ERR_DATA);
  }
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) {
    std::cerr << "error: cannot write '" << path << "'\n";
    std::exit(TVS_ERR_DATA);
  }
  f << text;
}

std::string out_path(const Context& ctx, const std::string& name) {
  fs::create_directories(ctx.out_dir);
  return (fs::path(ctx.out_dir) / name).string();
}

void write_manifest(const Context& ctx, const std::string& command, const json& config,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["inputs"] = inputs;
  m["config"] = config;
  m["base_seed"] = ctx.seed;
  m["tool_version"] = tvs_version();
  m["outputs"] = outputs;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  m["wall_clock_seconds"] = secs;
  write_file(out_path(ctx, "manifest.json"), m.dump(2) + "\n");
}

struct DatasetHandle {
  tvs_dataset* p = nullptr;
  ~DatasetHandle() { tvs_dataset_free(p); }
};
struct ModelHandle {
  tvs_model* p = nullptr;
  ~ModelHandle() { tvs_model_free(p); }
};
struct StringHandle {
  char* p = nullptr;
  ~StringHandle() { tvs_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

// Self-contained scatter plot of (utility, privacy) per truncation level,
// with optional competitor points from an auxiliary CSV (label,utility,privacy).
std::string sweep_svg(const json& records, const std::string& privacy_metric,
                      const std::vector<std::array<std::string, 3>>& competitors) {
  const int width = 640, height = 480, ml = 70, mr = 30, mt = 30, mb = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto upd = [&](double x, double y) {
    xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  };
  for (const auto& r : records) upd(r.at("utility_median").get<double>(), r.at("privacy_median").get<double>());
  for (const auto& c : competitors) upd(std::stod(c[1]), std::stod(c[2]));
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double xpad = 0.08 * (xmax - xmin), ypad = 0.10 * (ymax - ymin);
  xmin -= xpad, xmax += xpad, ymin -= ypad, ymax += ypad;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto sy = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    svg << "<text x=\"" << sx(fx) << "\" y=\"" << height - mb + 18
        << "\" font-size=\"11\" text-anchor=\"middle\" fill=\"black\">" << std::fixed << fx << "</text>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
        << "\" font-size=\"11\" text-anchor=\"end\" fill=\"black\">" << std::fixed << fy << "</text>\n";
  }
  svg.unsetf(std::ios::floatfield);
  svg << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 16
      << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"black\">utility (AUC)</text>\n";
  svg << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" fill=\"black\" transform=\"rotate(-90 18 "
      << (mt + height - mb) / 2 << ")\">" << privacy_metric << "</text>\n";
  for (const auto& r : records) {
    const double x = sx(r.at("utility_median").get<double>());
    const double y = sy(r.at("privacy_median").get<double>());
    svg << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"5\" fill=\"#1f77b4\"/>\n";
    svg << "<text x=\"" << x + 8 << "\" y=\"" << y - 6 << "\" font-size=\"12\" fill=\"#1f77b4\">t="
        << r.at("truncation").get<int>() << "</text>\n";
  }
  for (const auto& c : competitors) {
    const double x = sx(std::stod(c[1])), y = sy(std::stod(c[2]));
    svg << "<path d=\"M" << x - 5 << " " << y - 5 << " L" << x + 5 << " " << y + 5 << " M" << x - 5 << " "
        << y + 5 << " L" << x + 5 << " " << y - 5 << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << x + 8 << "\" y=\"" << y + 4 << "\" font-size=\"12\" fill=\"#d62728\">" << c[0]
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TVineSynth: truncated C-vine synthetic data with privacy/utility evaluation"};
  app.require_subcommand(1);

  Context ctx;
  app.add_option("--out-dir", ctx.out_dir, "Directory for outputs and the run manifest");
  app.add_option("--seed", ctx.seed, "Base seed; every command is reproducible given it");
  app.add_option("--jobs", ctx.jobs, "Worker threads (default: TVS_JOBS env or hardware)");
  app.add_option("--response", ctx.response, "Response column name")->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Write simulated block-Gaussian train/test CSVs");
  int sim_n = 1000;
  double sim_frac = 0.2;
  sim->add_option("-n,--n-train", sim_n, "Training rows")->capture_default_str();
  sim->add_option("--test-fraction", sim_frac, "Held-out fraction")->capture_default_str();

  // order
  auto* ord = app.add_subcommand("order", "Compute the privacy-aware covariate order");
  std::string ord_data;
  std::vector<std::string> ord_sensitive;
  double ord_threshold = 0.5;
  std::string ord_measure = "kendall";
  std::string ord_out = "order.json";
  ord->add_option("data", ord_data, "Input CSV")->required();
  ord->add_option("--sensitive", ord_sensitive, "Sensitive covariate names")->required();
  ord->add_option("--threshold", ord_threshold, "Association threshold rho*")->capture_default_str();
  ord->add_option("--measure", ord_measure, "kendall or pearson")->capture_default_str();
  ord->add_option("--out", ord_out, "Order JSON filename")->capture_default_str();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit the C-vine model");
  std::string fit_data, fit_order, fit_out = "model.json";
  int fit_tmax = 0;
  fit->add_option("data", fit_data, "Input CSV")->required();
  fit->add_option("order", fit_order, "Order JSON from 'order' (omit for column order)");
  fit->add_option("--t-max", fit_tmax, "Maximal truncation level (0 = d)")->capture_default_str();
  fit->add_option("--out", fit_out, "Model JSON filename")->capture_default_str();

  // sample
  auto* smp = app.add_subcommand("sample", "Draw synthetic data from a model");
  std::string smp_model, smp_out = "synthetic.csv";
  int smp_trunc = 0, smp_n = 0;
  smp->add_option("model", smp_model, "Model JSON")->required();
  smp->add_option("--truncate", smp_trunc, "Truncate to this level first (0 = keep)");
  smp->add_option("-n,--rows", smp_n, "Rows to draw (0 = training size)");
  smp->add_option("--out", smp_out, "Output CSV filename")->capture_default_str();

  // attack
  auto* atk = app.add_subcommand("attack", "Run a privacy attack against the generator");
  std::string atk_kind, atk_data, atk_order, atk_config, atk_sensitive;
  int atk_trunc = 0;
  atk->add_option("kind", atk_kind, "aia or mia")->required();
  atk->add_option("data", atk_data, "Real data CSV")->required();
  atk->add_option("--order", atk_order, "Order JSON (omit for column order)");
  atk->add_option("--truncate", atk_trunc, "Generator truncation level (0 = d)");
  atk->add_option("--config", atk_config, "Attack config JSON file");
  atk->add_option("--sensitive", atk_sensitive, "Sensitive covariate name (overrides config)");

  // utility
  auto* uti = app.add_subcommand("utility", "Train-on-first, test-on-second AUC");
  std::string uti_train, uti_test;
  uti->add_option("train", uti_train, "Training CSV (real or synthetic)")->required();
  uti->add_option("test", uti_test, "Held-out test CSV")->required();

  // fidelity
  auto* fid = app.add_subcommand("fidelity", "Alpha-precision / beta-recall / authenticity");
  std::string fid_real, fid_synth;
  fid->add_option("real", fid_real, "Real CSV")->required();
  fid->add_option("synthetic", fid_synth, "Synthetic CSV")->required();

  // sweep
  auto* swp = app.add_subcommand("sweep", "Privacy-utility sweep over truncation levels");
  std::string swp_data, swp_order, swp_test, swp_truncs, swp_privacy = "mab", swp_sensitive, swp_competitors;
  int swp_reps = 50;
  std::string swp_aia_config, swp_mia_config;
  swp->add_option("data", swp_data, "Training CSV")->required();
  swp->add_option("order", swp_order, "Order JSON (omit for column order)");
  swp->add_option("--test", swp_test, "Held-out test CSV")->required();
  swp->add_option("--truncations", swp_truncs, "Comma-separated levels, e.g. 1,11,12,18")->required();
  swp->add_option("--privacy", swp_privacy, "mab or pg")->capture_default_str();
  swp->add_option("--sensitive", swp_sensitive, "Sensitive covariate name")->required();
  swp->add_option("--reps", swp_reps, "Synthetic replicates for utility")->capture_default_str();
  swp->add_option("--aia-config", swp_aia_config, "AIA config JSON file");
  swp->add_option("--mia-config", swp_mia_config, "MIA config JSON file");
  swp->add_option("--competitors", swp_competitors, "CSV of competitor points (label,utility,privacy)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return TVS_ERR_USAGE;
  }

  if (ctx.jobs == 0) {
    if (const char* env = std::getenv("TVS_JOBS")) ctx.jobs = std::atoi(env);
  }
  tvs_set_jobs(ctx.jobs);

  if (*sim) {
    const long long total = std::llround(sim_n / (1.0 - sim_frac));
    DatasetHandle all, train, test;
    check(tvs_dataset_simulate(static_cast<int>(total), ctx.seed, &all.p));
    check(tvs_dataset_split(all.p, sim_frac, ctx.seed, &train.p, &test.p));
    const std::string train_path = out_path(ctx, "train.csv"), test_path = out_path(ctx, "test.csv");
    check(tvs_dataset_write_csv(train.p, train_path.c_str()));
    check(tvs_dataset_write_csv(test.p, test_path.c_str()));
    std::cout << "wrote " << train_path << " (" << tvs_dataset_n_rows(train.p) << " rows), " << test_path
              << " (" << tvs_dataset_n_rows(test.p) << " rows)\n";
    write_manifest(ctx, "simulate", {{"n_train", sim_n}, {"test_fraction", sim_frac}}, {},
                   {train_path, test_path});
  } else if (*ord) {
    DatasetHandle ds;
    check(tvs_dataset_read_csv(ord_data.c_str(), ctx.response.c_str(), &ds.p));
    json spec = {{"sensitive", ord_sensitive}, {"threshold", ord_threshold}, {"measure", ord_measure}};
    StringHandle out;
    check(tvs_find_order(ds.p, spec.dump().c_str(), &out.p));
    const std::string path = out_path(ctx, ord_out);
    write_file(path, out.str() + "\n");
    std::cout << "wrote " << path << "\n";
    write_manifest(ctx, "order", spec, {ord_data}, {path});
  } else if (*fit) {
    DatasetHandle ds;
    check(tvs_dataset_read_csv(fit_data.c_str(), ctx.response.c_str(), &ds.p));
    std::string order_json = fit_order.empty() ? std::string() : read_file(fit_order);
    ModelHandle model;
    check(tvs_model_fit(ds.p, order_json.c_str(), fit_tmax, ctx.seed, &model.p));
    const std::string path = out_path(ctx, fit_out);
    check(tvs_model_save(model.p, path.c_str()));
    std::cout << "wrote " << path << " (d=" << tvs_model_dim(model.p)
              << ", t_max=" << tvs_model_truncation_level(model.p) << ")\n";
    write_manifest(ctx, "fit", {{"t_max", fit_tmax}, {"order_file", fit_order}}, {fit_data, fit_order}, {path});
  } else if (*smp) {
    ModelHandle model;
    check(tvs_model_load(smp_model.c_str(), &model.p));
    ModelHandle truncated;
    const tvs_model* use = model.p;
    if (smp_trunc > 0) {
      check(tvs_model_truncate(model.p, smp_trunc, &truncated.p));
      use = truncated.p;
    }
    DatasetHandle out;
    check(tvs_model_sample(use, smp_n, ctx.seed, &out.p));
    const std::string path = out_path(ctx, smp_out);
    check(tvs_dataset_write_csv(out.p, path.c_str()));
    std::cout << "wrote " << path << " (" << tvs_dataset_n_rows(out.p) << " rows)\n";
    write_manifest(ctx, "sample", {{"truncate", smp_trunc}, {"rows", smp_n}}, {smp_model}, {path});
  } else if (*atk) {
    DatasetHandle ds;
    check(tvs_dataset_read_csv(atk_data.c_str(), ctx.response.c_str(), &ds.p));
    json gen = json::object();
    if (!atk_order.empty()) gen = json::parse(read_file(atk_order));
    if (!gen.contains("order")) {
      std::cerr << "error: attack needs an order file (or one with an 'order' field)\n";
      return TVS_ERR_USAGE;
    }
    if (atk_trunc > 0) gen["truncation"] = atk_trunc;
    json cfg = atk_config.empty() ? json::object() : json::parse(read_file(atk_config));
    if (!atk_sensitive.empty()) cfg["sensitive"] = atk_sensitive;
    if (!cfg.contains("outlier_targets") && !cfg.contains("random_targets")) {
      cfg["outlier_targets"] = 4;
      cfg["random_targets"] = 5;
    }
    StringHandle out;
    if (atk_kind == "aia") {
      check(tvs_run_aia(ds.p, gen.dump().c_str(), cfg.dump().c_str(), ctx.seed, &out.p));
      json rep = json::parse(out.str());
      const std::string jpath = out_path(ctx, "aia_report.json");
      write_file(jpath, out.str() + "\n");
      std::ostringstream csv;
      csv << "set_index,mab\n";
      const auto& sets = rep.at("per_set_mab");
      for (size_t i = 0; i < sets.size(); ++i) csv << i << ',' << sets[i].get<double>() << '\n';
      const std::string cpath = out_path(ctx, "aia_sets.csv");
      write_file(cpath, csv.str());
      std::cout << "MAB " << rep.at("mab").get<double>() << ", WCAB " << rep.at("wcab").get<double>()
                << " -> " << jpath << "\n";
      write_manifest(ctx, "attack aia", cfg, {atk_data, atk_order, atk_config}, {jpath, cpath});
    } else if (atk_kind == "mia") {
      check(tvs_run_mia(ds.p, gen.dump().c_str(), cfg.dump().c_str(), ctx.seed, &out.p));
      json rep = json::parse(out.str());
      const std::string jpath = out_path(ctx, "mia_report.json");
      write_file(jpath, out.str() + "\n");
      std::ostringstream csv;
      csv << "target_row,privacy_gain,p_guess_in,p_guess_out\n";
      for (const auto& t : rep.at("per_target"))
        csv << t.at("target_row").get<int>() << ',' << t.at("privacy_gain").get<double>() << ','
            << t.at("p_guess_in").get<double>() << ',' << t.at("p_guess_out").get<double>() << '\n';
      const std::string cpath = out_path(ctx, "mia_targets.csv");
      write_file(cpath, csv.str());
      std::cout << "median PG " << rep.at("median_privacy_gain").get<double>() << " -> " << jpath << "\n";
      write_manifest(ctx, "attack mia", cfg, {atk_data, atk_order, atk_config}, {jpath, cpath});
    } else {
      std::cerr << "error: attack kind must be aia or mia\n";
      return TVS_ERR_USAGE;
    }
  } else if (*uti) {
    DatasetHandle train, test;
    check(tvs_dataset_read_csv(uti_train.c_str(), ctx.response.c_str(), &train.p));
    check(tvs_dataset_read_csv(uti_test.c_str(), ctx.response.c_str(), &test.p));
    json fc = {{"seed", ctx.seed}};
    double auc = 0.0;
    check(tvs_utility_auc(train.p, test.p, fc.dump().c_str(), &auc));
    std::cout << "AUC " << auc << "\n";
    json rep = {{"auc", auc}};
    const std::string path = out_path(ctx, "utility.json");
    write_file(path, rep.dump(2) + "\n");
    write_manifest(ctx, "utility", fc, {uti_train, uti_test}, {path});
  } else if (*fid) {
    DatasetHandle real, synth;
    check(tvs_dataset_read_csv(fid_real.c_str(), ctx.response.c_str(), &real.p));
    check(tvs_dataset_read_csv(fid_synth.c_str(), ctx.response.c_str(), &synth.p));
    StringHandle out;
    check(tvs_fidelity(real.p, synth.p, &out.p));
    json rep = json::parse(out.str());
    const std::string path = out_path(ctx, "fidelity.json");
    write_file(path, out.str() + "\n");
    std::cout << "IP_alpha " << rep.at("ip_alpha").get<double>() << ", IR_beta "
              << rep.at("ir_beta").get<double>() << ", authenticity " << rep.at("authenticity").get<double>()
              << " -> " << path << "\n";
    write_manifest(ctx, "fidelity", json::object(), {fid_real, fid_synth}, {path});
  } else if (*swp) {
    DatasetHandle train, test;
    check(tvs_dataset_read_csv(swp_data.c_str(), ctx.response.c_str(), &train.p));
    check(tvs_dataset_read_csv(swp_test.c_str(), ctx.response.c_str(), &test.p));
    json cfg;
    if (!swp_order.empty()) {
      cfg["order"] = json::parse(read_file(swp_order)).at("order");
    } else {
      StringHandle tmp;
      json spec = {{"sensitive", json::array()}, {"threshold", 0.5}};
      check(tvs_find_order(train.p, spec.dump().c_str(), &tmp.p));
      cfg["order"] = json::parse(tmp.str()).at("order");
    }
    cfg["truncations"] = parse_int_list(swp_truncs);
    cfg["privacy"] = swp_privacy;
    cfg["sensitive"] = swp_sensitive;
    cfg["utility_reps"] = swp_reps;
    if (!swp_aia_config.empty()) cfg["aia"] = json::parse(read_file(swp_aia_config));
    if (!swp_mia_config.empty()) cfg["mia"] = json::parse(read_file(swp_mia_config));
    StringHandle out;
    check(tvs_sweep(train.p, test.p, cfg.dump().c_str(), ctx.seed, &out.p));
    json rep = json::parse(out.str());
    const std::string cpath = out_path(ctx, "sweep.csv");
    write_file(cpath, rep.at("csv").get<std::string>());

    std::vector<std::array<std::string, 3>> competitors;
    if (!swp_competitors.empty()) {
      std::istringstream in(read_file(swp_competitors));
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<std::string, 3> row;
        std::stringstream ls(line);
        std::getline(ls, row[0], ',');
        std::getline(ls, row[1], ',');
        std::getline(ls, row[2], ',');
        competitors.push_back(row);
      }
    }
    const std::string spath = out_path(ctx, "sweep.svg");
    write_file(spath, sweep_svg(rep.at("records"), swp_privacy, competitors));
    std::cout << "wrote " << cpath << " and " << spath << "\n";
    write_manifest(ctx, "sweep", cfg, {swp_data, swp_order, swp_test, swp_competitors}, {cpath, spath});
  }
  return 0;
}
