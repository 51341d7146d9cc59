// Command-line front end: every model operation goes through the C API
// in vfn/vfn.h; this file only handles flags, files and exit codes.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "vfn/vfn.h"

namespace {

// Config, data and usage problems exit 2; internal or numeric failures
// exit 1.
int exit_code_for(int status) {
  switch (status) {
    case VFN_OK:
      return 0;
    case VFN_ERR_INVALID_ARGUMENT:
    case VFN_ERR_SHAPE_MISMATCH:
    case VFN_ERR_PARSE:
    case VFN_ERR_IO:
      return 2;
    default:
      return 1;
  }
}

int complain(int status) {
  std::cerr << "error: " << vfn_last_error() << "\n";
  return exit_code_for(status);
}

int complain_usage(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return 2;
}

std::string take_string(char* s) {
  std::string out = s == nullptr ? "" : s;
  vfn_string_free(s);
  return out;
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::stringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << text;
  return out.good();
}

struct CommonFlags {
  std::string config;
  std::string checkpoint;
  std::string data;
  std::string out;
  std::string logits;
  std::string level = "fast";
  std::int64_t seed = -1;  // -1: not given
};

int progress_line(int64_t step, double loss, double perplexity, double recovery, void*) {
  std::printf("step %lld  loss %.4f  perplexity %.3f  recovery %.1f%%\n",
              static_cast<long long>(step), loss, perplexity, recovery);
  std::fflush(stdout);
  return 1;
}

int resolve_config(const CommonFlags& flags, nlohmann::json& resolved) {
  std::string file_text;
  if (!flags.config.empty() && !read_file(flags.config, file_text)) {
    return complain_usage("cannot read config file: " + flags.config);
  }
  nlohmann::json overrides = nlohmann::json::object();
  if (flags.seed >= 0) overrides["train"]["seed"] = flags.seed;
  if (!flags.data.empty()) overrides["data"]["train_path"] = flags.data;
  if (!flags.out.empty()) overrides["output"]["checkpoint_dir"] = flags.out;

  char* text = nullptr;
  int status = vfn_runconfig_resolve(file_text.c_str(), overrides.dump().c_str(), &text);
  if (status != VFN_OK) return complain(status);
  resolved = nlohmann::json::parse(take_string(text));
  return 0;
}

int open_dataset(const nlohmann::json& data_section, vfn_dataset** out) {
  const std::string path = data_section.at("train_path").get<std::string>();
  if (path.empty()) {
    return complain_usage("no dataset given: set data.train_path in the config or pass --data");
  }
  const std::string format = data_section.at("format").get<std::string>();
  const std::string manifest = data_section.at("split_manifest").get<std::string>();
  int status = vfn_dataset_open(path.c_str(), format.c_str(),
                                manifest.empty() ? nullptr : manifest.c_str(),
                                manifest.empty() ? nullptr : "train", out);
  return status == VFN_OK ? 0 : complain(status);
}

int cmd_train(const CommonFlags& flags) {
  nlohmann::json resolved;
  if (int rc = resolve_config(flags, resolved); rc != 0) return rc;

  vfn_dataset* data = nullptr;
  if (int rc = open_dataset(resolved.at("data"), &data); rc != 0) return rc;

  vfn_model* model = nullptr;
  int status = VFN_OK;
  if (!flags.checkpoint.empty()) {
    status = vfn_model_load(flags.checkpoint.c_str(), &model);
  } else {
    const auto seed = resolved.at("train").at("seed").get<std::uint64_t>();
    status = vfn_model_create(resolved.at("model").dump().c_str(), seed, &model);
  }
  if (status != VFN_OK) {
    vfn_dataset_free(data);
    return complain(status);
  }

  int64_t final_step = 0;
  status = vfn_train_run(model, data, resolved.dump().c_str(), progress_line, nullptr,
                         &final_step);
  int rc = status == VFN_OK ? 0 : complain(status);
  if (rc == 0) std::printf("trained to step %lld\n", static_cast<long long>(final_step));
  vfn_model_free(model);
  vfn_dataset_free(data);
  return rc;
}

int cmd_eval(const CommonFlags& flags) {
  if (flags.checkpoint.empty()) return complain_usage("eval requires --checkpoint");
  if (flags.data.empty()) return complain_usage("eval requires --data");

  vfn_model* model = nullptr;
  int status = vfn_model_load(flags.checkpoint.c_str(), &model);
  if (status != VFN_OK) return complain(status);

  vfn_dataset* data = nullptr;
  status = vfn_dataset_open(flags.data.c_str(), "auto", nullptr, nullptr, &data);
  if (status != VFN_OK) {
    vfn_model_free(model);
    return complain(status);
  }

  char* report = nullptr;
  status = vfn_evaluate(model, data, &report);
  int rc = status == VFN_OK ? 0 : complain(status);
  if (rc == 0) {
    const std::string text = take_string(report);
    std::printf("%s\n", text.c_str());
    if (!flags.out.empty() && !write_file(flags.out, text + "\n")) {
      rc = complain_usage("cannot write report: " + flags.out);
    }
  }
  vfn_model_free(model);
  vfn_dataset_free(data);
  return rc;
}

int cmd_predict(const CommonFlags& flags) {
  if (flags.checkpoint.empty()) return complain_usage("predict requires --checkpoint");
  if (flags.data.empty()) return complain_usage("predict requires --data with a PDB file");

  vfn_model* model = nullptr;
  int status = vfn_model_load(flags.checkpoint.c_str(), &model);
  if (status != VFN_OK) return complain(status);

  char* fasta = nullptr;
  char* logits = nullptr;
  status = vfn_predict_structure(model, flags.data.c_str(), nullptr, &fasta,
                                 flags.logits.empty() ? nullptr : &logits);
  int rc = status == VFN_OK ? 0 : complain(status);
  if (rc == 0) {
    const std::string fasta_text = take_string(fasta);
    if (flags.out.empty()) {
      std::printf("%s", fasta_text.c_str());
    } else if (!write_file(flags.out, fasta_text)) {
      rc = complain_usage("cannot write FASTA: " + flags.out);
    }
    if (rc == 0 && !flags.logits.empty()) {
      const std::string logits_text = take_string(logits);
      if (!write_file(flags.logits, logits_text + "\n")) {
        rc = complain_usage("cannot write logits: " + flags.logits);
      }
    }
  }
  vfn_model_free(model);
  return rc;
}

int cmd_verify(const CommonFlags& flags, const std::string& inject) {
  char* report = nullptr;
  int failures = 0;
  int status = vfn_verify_run(flags.level.c_str(), inject.empty() ? nullptr : inject.c_str(),
                              &report, &failures);
  if (status != VFN_OK) return complain(status);
  std::printf("%s", take_string(report).c_str());
  return failures == 0 ? 0 : 1;
}

int cmd_bench(const CommonFlags& flags, const std::string& layers, const std::string& sizes,
              int reps) {
  std::string config_text;
  if (!flags.config.empty() && !read_file(flags.config, config_text)) {
    return complain_usage("cannot read config file: " + flags.config);
  }
  if (!config_text.empty()) {
    // Accept either a bare model config or a full run config.
    nlohmann::json parsed = nlohmann::json::parse(config_text, nullptr, false);
    if (parsed.is_object() && parsed.contains("model")) config_text = parsed["model"].dump();
  }
  char* csv = nullptr;
  int status = vfn_bench_run(layers.c_str(), sizes.c_str(), reps,
                             flags.seed >= 0 ? static_cast<std::uint64_t>(flags.seed) : 0,
                             config_text.empty() ? nullptr : config_text.c_str(), &csv);
  if (status != VFN_OK) return complain(status);
  const std::string text = take_string(csv);
  if (flags.out.empty()) {
    std::printf("%s", text.c_str());
    return 0;
  }
  return write_file(flags.out, text) ? 0 : complain_usage("cannot write CSV: " + flags.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vector field network inverse folding at desk scale"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "JSON run config");
    cmd->add_option("--checkpoint", flags.checkpoint, "checkpoint file");
    cmd->add_option("--data", flags.data, "dataset path (JSONL file, PDB file or directory)");
    cmd->add_option("--out", flags.out, "output path");
    cmd->add_option("--seed", flags.seed, "random seed override");
  };

  CLI::App* train = app.add_subcommand("train", "train a model per the run config");
  add_common(train);

  CLI::App* eval = app.add_subcommand("eval", "perplexity and recovery over a dataset");
  add_common(eval);

  CLI::App* predict = app.add_subcommand("predict", "FASTA prediction for one PDB file");
  add_common(predict);
  predict->add_option("--logits", flags.logits, "also dump logits and probabilities as JSON");

  std::string inject;
  CLI::App* verify = app.add_subcommand("verify", "run the property suite");
  add_common(verify);
  verify->add_option("--level", flags.level, "fast or full");
  verify->add_option("--inject-fault", inject, "deliberately corrupt one computation")
      ->group("");  // internal: used to prove the oracles catch defects

  std::string layers = "5,15";
  std::string sizes = "100";
  int reps = 20;
  CLI::App* bench = app.add_subcommand("bench", "forward-pass timing table");
  add_common(bench);
  bench->add_option("layer-counts", layers, "comma-separated layer counts");
  bench->add_option("residue-counts", sizes, "comma-separated residue counts");
  bench->add_option("reps", reps, "timed repetitions per cell");

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) return cmd_train(flags);
  if (eval->parsed()) return cmd_eval(flags);
  if (predict->parsed()) return cmd_predict(flags);
  if (verify->parsed()) return cmd_verify(flags, inject);
  if (bench->parsed()) return cmd_bench(flags, layers, sizes, reps);
  return 2;
}
