#include "vfn/vfn.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bench/bench.hpp"
#include "cli/run_config.hpp"
#include "common/error.hpp"
#include "data/fasta.hpp"
#include "data/jsonl.hpp"
#include "data/pdb.hpp"
#include "data/synthetic.hpp"
#include "model/checkpoint.hpp"
#include "model/config_io.hpp"
#include "model/network.hpp"
#include "model/train.hpp"
#include "verify/verify.hpp"

struct vfn_model_s {
  vfn::model::Model model;
  std::optional<vfn::model::Checkpoint> resume;
  std::int64_t step = 0;
};

struct vfn_dataset_s {
  std::vector<vfn::data::BackboneStructure> structures;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return VFN_OK;
  } catch (const vfn::Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(VFN_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) std::abort();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string text_or_empty(const char* s) { return s == nullptr ? std::string() : std::string(s); }

nlohmann::json parse_json_text(const std::string& text, const char* what) {
  if (text.empty()) return nlohmann::json();
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    vfn::raise(vfn::ErrorCode::parse_error, std::string(what) + " is not valid JSON");
  }
  return j;
}

void require(bool ok, const char* message) {
  if (!ok) vfn::raise(vfn::ErrorCode::invalid_argument, message);
}

std::vector<vfn::data::BackboneStructure> load_structures(const std::string& path,
                                                          std::string format) {
  namespace fs = std::filesystem;
  require(!path.empty(), "dataset path is empty");
  if (!fs::exists(path)) {
    vfn::raise(vfn::ErrorCode::io_error, "dataset path does not exist: " + path);
  }
  if (format == "auto") {
    if (fs::is_directory(path)) {
      format = "pdb";
    } else if (path.ends_with(".jsonl")) {
      format = "jsonl";
    } else if (path.ends_with(".pdb")) {
      format = "pdb";
    } else {
      vfn::raise(vfn::ErrorCode::invalid_argument,
                 "cannot infer dataset format from path: " + path);
    }
  }
  if (format == "jsonl") return vfn::data::read_jsonl(path);
  if (format == "pdb") {
    if (!fs::is_directory(path)) return {vfn::data::parse_pdb_file(path)};
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pdb") {
        files.push_back(entry.path().string());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      vfn::raise(vfn::ErrorCode::io_error, "no .pdb files under directory: " + path);
    }
    std::vector<vfn::data::BackboneStructure> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(vfn::data::parse_pdb_file(f));
    return out;
  }
  vfn::raise(vfn::ErrorCode::invalid_argument, "unknown dataset format: " + format);
}

std::string fasta_text(const std::string& name, const std::string& letters) {
  std::string out = ">" + name + "\n";
  for (std::size_t i = 0; i < letters.size(); i += 60) {
    out += letters.substr(i, 60);
    out += "\n";
  }
  return out;
}

}  // namespace

extern "C" {

const char* vfn_last_error(void) { return g_last_error.c_str(); }

void vfn_string_free(char* s) { std::free(s); }

int vfn_model_create(const char* model_config_json, uint64_t seed, vfn_model** out) {
  return guarded([&] {
    require(out != nullptr, "out handle is null");
    nlohmann::json j = parse_json_text(text_or_empty(model_config_json), "model config");
    vfn::model::ModelConfig cfg =
        j.is_null() ? vfn::model::ModelConfig{} : vfn::model::config_from_json(j);
    auto* handle = new vfn_model_s{vfn::model::init_model(cfg, seed), std::nullopt, 0};
    *out = handle;
  });
}

int vfn_model_load(const char* checkpoint_path, vfn_model** out) {
  return guarded([&] {
    require(out != nullptr, "out handle is null");
    require(checkpoint_path != nullptr, "checkpoint path is null");
    vfn::model::Checkpoint ck = vfn::model::load_checkpoint(checkpoint_path);
    auto* handle = new vfn_model_s{vfn::model::model_from_checkpoint(ck), std::nullopt, ck.step};
    handle->resume = std::move(ck);
    *out = handle;
  });
}

int vfn_model_save(const vfn_model* m, const char* path) {
  return guarded([&] {
    require(m != nullptr, "model handle is null");
    require(path != nullptr, "checkpoint path is null");
    nlohmann::json echo = m->resume.has_value() ? m->resume->config : nlohmann::json();
    vfn::model::Checkpoint ck = vfn::model::make_checkpoint(m->model, std::move(echo), m->step);
    if (m->resume.has_value()) ck.moments = m->resume->moments;
    vfn::model::save_checkpoint(path, ck);
  });
}

void vfn_model_free(vfn_model* m) { delete m; }

int vfn_model_info(const vfn_model* m, char** json_out) {
  return guarded([&] {
    require(m != nullptr, "model handle is null");
    require(json_out != nullptr, "out string is null");
    nlohmann::json info{{"config", vfn::model::config_to_json(m->model.cfg)},
                        {"step", m->step},
                        {"parameters", m->model.params.total_elements()}};
    *json_out = dup_string(info.dump());
  });
}

int vfn_dataset_open(const char* path, const char* format, const char* manifest_path,
                     const char* split, vfn_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "out handle is null");
    require(path != nullptr, "dataset path is null");
    auto records = load_structures(path, format == nullptr ? "auto" : format);
    const std::string manifest = text_or_empty(manifest_path);
    const std::string which = text_or_empty(split);
    if (manifest.empty()) {
      require(which.empty(), "a split name requires a manifest");
    } else {
      require(!which.empty(), "a manifest requires a split name");
      vfn::data::DatasetSplit split_set = vfn::data::split_dataset(std::move(records), manifest);
      if (which == "train") {
        records = std::move(split_set.train);
      } else if (which == "validation") {
        records = std::move(split_set.validation);
      } else if (which == "test") {
        records = std::move(split_set.test);
      } else {
        vfn::raise(vfn::ErrorCode::invalid_argument, "unknown split name: " + which);
      }
    }
    *out = new vfn_dataset_s{std::move(records)};
  });
}

int vfn_dataset_synthetic(uint64_t seed, int64_t n_proteins, int64_t n_residues,
                          vfn_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "out handle is null");
    require(n_proteins >= 0, "protein count must be nonnegative");
    std::vector<vfn::data::BackboneStructure> records;
    records.reserve(static_cast<std::size_t>(n_proteins));
    for (int64_t i = 0; i < n_proteins; ++i) {
      records.push_back(vfn::data::random_backbone(seed + static_cast<std::uint64_t>(i),
                                                   n_residues,
                                                   "synthetic_" + std::to_string(i)));
    }
    *out = new vfn_dataset_s{std::move(records)};
  });
}

int vfn_dataset_save_jsonl(const vfn_dataset* d, const char* path) {
  return guarded([&] {
    require(d != nullptr, "dataset handle is null");
    require(path != nullptr, "output path is null");
    vfn::data::write_jsonl(path, d->structures);
  });
}

int vfn_dataset_len(const vfn_dataset* d, int64_t* out) {
  return guarded([&] {
    require(d != nullptr, "dataset handle is null");
    require(out != nullptr, "out count is null");
    *out = static_cast<int64_t>(d->structures.size());
  });
}

void vfn_dataset_free(vfn_dataset* d) { delete d; }

int vfn_train_run(vfn_model* m, const vfn_dataset* d, const char* run_config_json,
                  vfn_eval_callback on_eval, void* user, int64_t* final_step) {
  return guarded([&] {
    require(m != nullptr, "model handle is null");
    require(d != nullptr, "dataset handle is null");
    nlohmann::json j = parse_json_text(text_or_empty(run_config_json), "run config");
    vfn::cli::RunConfig rc = vfn::cli::resolve_runconfig(j, nlohmann::json());
    rc.model = m->model.cfg;

    vfn::model::TrainOptions opts;
    opts.batch_size = rc.train.batch_size;
    opts.max_steps = rc.train.max_steps;
    opts.peak_lr = rc.train.peak_lr;
    opts.weight_decay = rc.train.weight_decay;
    opts.warmup_frac = rc.train.warmup_frac;
    opts.seed = rc.train.seed;
    opts.eval_interval = rc.train.eval_interval;
    opts.checkpoint_dir = rc.output.checkpoint_dir;
    opts.log_path = rc.output.log_path;
    opts.config_echo = vfn::cli::runconfig_to_json(rc);

    vfn::model::EvalCallback cb;
    if (on_eval != nullptr) {
      cb = [on_eval, user](const vfn::model::EvalPoint& p) {
        return on_eval(p.step, p.loss, p.perplexity, p.recovery, user) != 0;
      };
    }
    const vfn::model::Checkpoint* resume = m->resume.has_value() ? &*m->resume : nullptr;
    vfn::model::TrainResult result = vfn::model::train(m->model, d->structures, opts, cb, resume);
    m->step = result.final_step;
    m->resume.reset();
    if (final_step != nullptr) *final_step = result.final_step;
  });
}

int vfn_evaluate(const vfn_model* m, const vfn_dataset* d, char** report_json) {
  return guarded([&] {
    require(m != nullptr, "model handle is null");
    require(d != nullptr, "dataset handle is null");
    require(report_json != nullptr, "out string is null");
    if (d->structures.empty()) {
      vfn::raise(vfn::ErrorCode::invalid_argument, "evaluation set is empty");
    }

    double ce_sum = 0.0;
    std::int64_t labeled = 0;
    std::int64_t matched = 0;
    std::int64_t residues = 0;
    std::vector<double> per_protein;
    for (const auto& s : d->structures) {
      vfn::model::GraphInputs in = vfn::model::prepare_inputs(s, m->model.cfg);
      vfn::num::Tensor logits = vfn::model::forward_logits(m->model, in);
      vfn::model::Metrics metrics;
      try {
        metrics = vfn::model::compute_metrics(logits, in.labels);
      } catch (const vfn::Error& e) {
        vfn::raise(e.code(), "evaluating '" + s.name + "': " + e.what());
      }
      ce_sum += std::log(metrics.perplexity) * static_cast<double>(metrics.labeled);
      labeled += metrics.labeled;
      matched += metrics.matched;
      residues += s.size();
      per_protein.push_back(metrics.recovery_percent);
    }

    std::sort(per_protein.begin(), per_protein.end());
    const std::size_t n = per_protein.size();
    const double median = (n % 2 == 1)
                              ? per_protein[n / 2]
                              : 0.5 * (per_protein[n / 2 - 1] + per_protein[n / 2]);
    nlohmann::json report{
        {"perplexity", std::exp(ce_sum / static_cast<double>(labeled))},
        {"recovery",
         {{"median", median},
          {"global", 100.0 * static_cast<double>(matched) / static_cast<double>(labeled)}}},
        {"n_proteins", static_cast<std::int64_t>(n)},
        {"n_residues", residues}};
    *report_json = dup_string(report.dump());
  });
}

int vfn_predict_structure(const vfn_model* m, const char* pdb_path, const char* chain,
                          char** fasta_out, char** logits_json_out) {
  return guarded([&] {
    require(m != nullptr, "model handle is null");
    require(pdb_path != nullptr, "pdb path is null");
    require(fasta_out != nullptr, "out string is null");
    vfn::data::BackboneStructure s =
        vfn::data::parse_pdb_file(pdb_path, text_or_empty(chain));
    vfn::model::Prediction p = vfn::model::predict(m->model, s);
    *fasta_out = dup_string(fasta_text(s.name, vfn::data::sequence_letters(p.predicted)));

    if (logits_json_out != nullptr) {
      const std::int64_t n = p.logits.dim(0);
      nlohmann::json logits = nlohmann::json::array();
      nlohmann::json probs = nlohmann::json::array();
      for (std::int64_t i = 0; i < n; ++i) {
        nlohmann::json lrow = nlohmann::json::array();
        nlohmann::json prow = nlohmann::json::array();
        double hi = p.logits.at(i, 0);
        for (std::int64_t c = 1; c < 20; ++c) hi = std::max(hi, p.logits.at(i, c));
        double z = 0.0;
        for (std::int64_t c = 0; c < 20; ++c) z += std::exp(p.logits.at(i, c) - hi);
        for (std::int64_t c = 0; c < 20; ++c) {
          lrow.push_back(p.logits.at(i, c));
          prow.push_back(std::exp(p.logits.at(i, c) - hi) / z);
        }
        logits.push_back(std::move(lrow));
        probs.push_back(std::move(prow));
      }
      nlohmann::json out{{"name", s.name}, {"logits", logits}, {"probabilities", probs}};
      *logits_json_out = dup_string(out.dump());
    }
  });
}

int vfn_verify_run(const char* level, const char* inject_fault, char** report_out,
                   int* failures_out) {
  return guarded([&] {
    require(report_out != nullptr, "out string is null");
    require(failures_out != nullptr, "out count is null");
    vfn::verify::Level lv = vfn::verify::level_from_string(text_or_empty(level));
    vfn::verify::FaultInjection faults;
    const std::string inject = text_or_empty(inject_fault);
    if (inject == "wb-transpose") {
      faults.transpose_wb = true;
    } else if (!inject.empty()) {
      vfn::raise(vfn::ErrorCode::invalid_argument, "unknown fault injection: " + inject);
    }
    auto results = vfn::verify::run_properties(lv, faults);
    std::ostringstream ss;
    vfn::verify::report(ss, results);
    *report_out = dup_string(ss.str());
    int failures = 0;
    for (const auto& r : results) failures += r.passed ? 0 : 1;
    *failures_out = failures;
  });
}

int vfn_bench_run(const char* layers_csv, const char* sizes_csv, int reps, uint64_t seed,
                  const char* model_config_json, char** csv_out) {
  return guarded([&] {
    require(csv_out != nullptr, "out string is null");
    auto parse_list = [](const std::string& text, const char* what) {
      std::vector<std::int64_t> out;
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          std::size_t used = 0;
          const long long v = std::stoll(item, &used);
          if (used != item.size() || v <= 0) throw std::invalid_argument(item);
          out.push_back(v);
        } catch (const std::exception&) {
          vfn::raise(vfn::ErrorCode::invalid_argument,
                     std::string("bad ") + what + " entry: '" + item + "'");
        }
      }
      if (out.empty()) {
        vfn::raise(vfn::ErrorCode::invalid_argument, std::string(what) + " list is empty");
      }
      return out;
    };
    std::vector<int> layers;
    for (std::int64_t v : parse_list(text_or_empty(layers_csv), "layer count")) {
      layers.push_back(static_cast<int>(v));
    }
    std::vector<std::int64_t> sizes = parse_list(text_or_empty(sizes_csv), "residue count");

    // Compact default width keeps the depth-scaling measurement quick;
    // a config object can widen it.
    vfn::model::ModelConfig base;
    base.d_q = 8;
    base.d_v = 32;
    base.d_e = 16;
    base.heads = 4;
    base.n_rbf = 4;
    base.knn_k = 15;
    nlohmann::json j = parse_json_text(text_or_empty(model_config_json), "model config");
    if (!j.is_null()) base = vfn::model::config_from_json(j);

    auto rows = vfn::bench::run_bench(layers, sizes, reps, seed, base);
    std::ostringstream ss;
    vfn::bench::write_csv(ss, rows);
    *csv_out = dup_string(ss.str());
  });
}

int vfn_runconfig_resolve(const char* file_text, const char* overrides_json, char** resolved_out) {
  return guarded([&] {
    require(resolved_out != nullptr, "out string is null");
    nlohmann::json file = parse_json_text(text_or_empty(file_text), "run config file");
    nlohmann::json overrides = parse_json_text(text_or_empty(overrides_json), "overrides");
    vfn::cli::RunConfig rc = vfn::cli::resolve_runconfig(file, overrides);
    *resolved_out = dup_string(vfn::cli::runconfig_to_json(rc).dump());
  });
}

}  // extern "C"
