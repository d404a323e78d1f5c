// Copyright 2026 The vpr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// vprctl: experiment front-end over libvpr.
//
//   vprctl synth    --out data/synth --seed 7
//   vprctl train    --set db.path=data/synth --out runs/ms
//   vprctl eval     --set db.path=data/synth --set eval.model=runs/ms/model.ckpt --out runs/ms
//   vprctl reduce   --set reduce.fit=runs/ms/references.vprk --set reduce.apply='["runs/ms/queries.vprk"]'
//   vprctl report   --set report.inputs='["runs/a/report.kv","runs/b/report.kv"]' --out tables

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vpr/vpr.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
  vpr_status status;
  std::string what;
};

void check(vpr_status s, const std::string& context) {
  if (s != VPR_OK) throw Failure{s, context + ": " + vpr_last_error()};
}

// Owning wrappers for the C handles.
template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (ptr) Destroy(ptr);
  }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Config = Handle<vpr_config, vpr_config_destroy>;
using Db = Handle<vpr_db, vpr_db_destroy>;
using Model = Handle<vpr_model, vpr_model_destroy>;
using Descriptors = Handle<vpr_descriptors, vpr_descriptors_destroy>;
using Pca = Handle<vpr_pca, vpr_pca_destroy>;
using Report = Handle<vpr_report, vpr_report_destroy>;

struct CString {
  char* ptr = nullptr;
  ~CString() { vpr_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct Options {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<std::string> sets;
};

std::string get_string(const Config& cfg, const char* key) {
  CString s;
  check(vpr_config_get_string(cfg.get(), key, &s.ptr), key);
  return s.str();
}

std::vector<std::string> get_list(const Config& cfg, const char* key) {
  size_t n = 0;
  check(vpr_config_list_size(cfg.get(), key, &n), key);
  std::vector<std::string> out;
  for (size_t i = 0; i < n; ++i) {
    CString s;
    check(vpr_config_list_item(cfg.get(), key, i, &s.ptr), key);
    out.push_back(s.str());
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Failure{VPR_ERR_IO, "cannot write " + path.string()};
}

// Resolves config, creates the output directory and records the resolved
// config there.
void prepare(const Options& opt, Config& cfg) {
  check(vpr_config_create(cfg.out()), "config");
  if (!opt.config_path.empty()) check(vpr_config_merge_file(cfg.get(), opt.config_path.c_str()), "--config");
  if (opt.seed_given) check(vpr_config_set(cfg.get(), ("seed=" + std::to_string(opt.seed)).c_str()), "--seed");
  for (const auto& s : opt.sets) check(vpr_config_set(cfg.get(), s.c_str()), "--set " + s);
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) throw Failure{VPR_ERR_IO, "cannot create " + opt.out_dir + ": " + ec.message()};
  CString json;
  check(vpr_config_to_json(cfg.get(), &json.ptr), "config");
  write_file(fs::path(opt.out_dir) / "config.json", json.str());
}

// The configured database directory, or a synthetic one when db.path is empty.
void open_db(const Config& cfg, Db& db) {
  const auto path = get_string(cfg, "db.path");
  if (path.empty()) {
    check(vpr_db_synth(cfg.get(), db.out()), "synth");
  } else {
    check(vpr_db_load(path.c_str(), db.out()), "db.path");
  }
}

void print_db_summary(const Db& db, const std::string& dir) {
  size_t places = 0, images = 0;
  check(vpr_db_num_places(db.get(), &places), "db");
  check(vpr_db_num_images(db.get(), &images), "db");
  std::printf("wrote %s: %zu places, %zu images\n", dir.c_str(), places, images);
}

void cmd_synth(const Options& opt) {
  Config cfg;
  prepare(opt, cfg);
  Db db;
  check(vpr_db_synth(cfg.get(), db.out()), "synth");
  check(vpr_db_save(db.get(), opt.out_dir.c_str()), "save");
  print_db_summary(db, opt.out_dir);
}

void cmd_build_db(const Options& opt) {
  Config cfg;
  prepare(opt, cfg);
  Db db;
  check(vpr_db_build(cfg.get(), db.out()), "build-db");
  check(vpr_db_save(db.get(), opt.out_dir.c_str()), "save");
  print_db_summary(db, opt.out_dir);
}

void cmd_train(const Options& opt) {
  Config cfg;
  prepare(opt, cfg);
  Db db;
  open_db(cfg, db);
  const fs::path out = opt.out_dir;
  Model model;
  check(vpr_train(db.get(), cfg.get(), (out / "train_log.csv").c_str(), model.out()), "train");
  check(vpr_model_save(model.get(), cfg.get(), (out / "model.ckpt").c_str()), "save model");
  std::printf("wrote %s\n", (out / "model.ckpt").c_str());
}

void cmd_eval(const Options& opt) {
  Config cfg;
  prepare(opt, cfg);
  const fs::path out = opt.out_dir;
  Descriptors queries, refs;
  const auto qpath = get_string(cfg, "eval.queries"), rpath = get_string(cfg, "eval.references");
  if (!qpath.empty() || !rpath.empty()) {
    if (qpath.empty() || rpath.empty()) {
      throw Failure{VPR_ERR_VALIDATION, "eval.queries and eval.references must be set together"};
    }
    check(vpr_descriptors_load(qpath.c_str(), queries.out()), "eval.queries");
    check(vpr_descriptors_load(rpath.c_str(), refs.out()), "eval.references");
  } else {
    Db db;
    open_db(cfg, db);
    Model model;
    const auto ckpt = get_string(cfg, "eval.model");
    if (ckpt.empty()) {
      check(vpr_model_init(cfg.get(), db.get(), model.out()), "model");
    } else {
      check(vpr_model_load(ckpt.c_str(), model.out()), "eval.model");
    }
    check(vpr_describe_holdout(model.get(), db.get(), cfg.get(), queries.out(), refs.out()), "describe");
    check(vpr_descriptors_save(queries.get(), (out / "queries.vprk").c_str()), "save queries");
    check(vpr_descriptors_save(refs.get(), (out / "references.vprk").c_str()), "save references");
  }
  Report report;
  check(vpr_evaluate(queries.get(), refs.get(), cfg.get(), report.out()), "evaluate");
  auto label = get_string(cfg, "eval.label");
  if (label.empty()) label = fs::path(opt.out_dir).filename().string();
  const auto set_name = get_string(cfg, "eval.set");
  check(vpr_report_save(report.get(), label.c_str(), set_name.c_str(), (out / "report.txt").c_str(),
                        (out / "report.kv").c_str()),
        "save report");
  CString text;
  check(vpr_report_text(report.get(), &text.ptr), "report");
  std::fputs(text.str().c_str(), stdout);
}

void cmd_reduce(const Options& opt) {
  Config cfg;
  prepare(opt, cfg);
  const fs::path out = opt.out_dir;
  const auto fit = get_string(cfg, "reduce.fit");
  if (fit.empty()) throw Failure{VPR_ERR_VALIDATION, "reduce.fit is not set"};
  uint64_t out_dim = 0;
  check(vpr_config_get_uint(cfg.get(), "reduce.out_dim", &out_dim), "reduce.out_dim");
  double eps = 0.0;
  check(vpr_config_get_number(cfg.get(), "reduce.epsilon", &eps), "reduce.epsilon");
  Descriptors training;
  check(vpr_descriptors_load(fit.c_str(), training.out()), "reduce.fit");
  Pca pca;
  check(vpr_pca_fit(training.get(), out_dim, eps, pca.out()), "pca fit");
  check(vpr_pca_save(pca.get(), (out / "pca.vprc").c_str()), "save pca");
  std::printf("wrote %s\n", (out / "pca.vprc").c_str());
  for (const auto& path : get_list(cfg, "reduce.apply")) {
    Descriptors in, reduced;
    check(vpr_descriptors_load(path.c_str(), in.out()), path);
    check(vpr_pca_apply(pca.get(), in.get(), reduced.out()), "pca apply");
    const auto dst = out / (fs::path(path).stem().string() + ".pca" + std::to_string(out_dim) + ".vprk");
    check(vpr_descriptors_save(reduced.get(), dst.c_str()), "save reduced");
    std::printf("wrote %s\n", dst.c_str());
  }
}

void cmd_report(const Options& opt) {
  Config cfg;
  prepare(opt, cfg);
  const auto inputs = get_list(cfg, "report.inputs");
  const auto labels = get_list(cfg, "report.labels");
  if (inputs.empty()) throw Failure{VPR_ERR_VALIDATION, "report.inputs is empty"};
  if (!labels.empty() && labels.size() != inputs.size()) {
    throw Failure{VPR_ERR_VALIDATION, "report.labels must align with report.inputs"};
  }
  std::vector<const char*> paths, names;
  for (const auto& p : inputs) paths.push_back(p.c_str());
  for (const auto& l : labels) names.push_back(l.c_str());
  const fs::path out = opt.out_dir;
  CString text;
  check(vpr_report_table(paths.data(), labels.empty() ? nullptr : names.data(), paths.size(),
                         (out / "table.txt").c_str(), (out / "table.csv").c_str(), &text.ptr),
        "report");
  std::fputs(text.str().c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual place recognition experiments: synthetic data, training, recall@k, PCA"};
  app.set_version_flag("--version", vpr_version());
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "seed (overrides config)")->each([&](const std::string&) { opt.seed_given = true; });
    sub->add_option("--set", opt.sets, "config override key=value (repeatable)");
  };

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Options&);
  };
  const Command commands[] = {
      {"synth", "generate a synthetic place database", cmd_synth},
      {"build-db", "build a database from a manifest CSV", cmd_build_db},
      {"train", "train the aggregation head", cmd_train},
      {"eval", "compute recall@k", cmd_eval},
      {"reduce", "fit and apply PCA whitening", cmd_reduce},
      {"report", "tabulate report files", cmd_report},
  };
  void (*selected)(const Options&) = nullptr;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub);
    sub->callback([&selected, run = c.run] { selected = run; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    selected(opt);
  } catch (const Failure& f) {
    std::fprintf(stderr, "vprctl: %s (%s)\n", f.what.c_str(), vpr_status_string(f.status));
    return static_cast<int>(f.status) == 0 ? 1 : static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "vprctl: %s\n", e.what());
    return 1;
  }
  return 0;
}
