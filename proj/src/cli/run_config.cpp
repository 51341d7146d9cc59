#include "cli/run_config.hpp"

#include "common/error.hpp"
#include "model/config_io.hpp"

namespace vfn::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const char* where, std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) raise(ErrorCode::parse_error, std::string("unknown ") + where + " key '" + key + "'");
  }
}

double take_number(const json& j, const char* where, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    raise(ErrorCode::parse_error, std::string(where) + " key '" + key + "' must be a number");
  }
  return j[key].get<double>();
}

std::int64_t take_integer(const json& j, const char* where, const char* key, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    raise(ErrorCode::parse_error, std::string(where) + " key '" + key + "' must be an integer");
  }
  return j[key].get<std::int64_t>();
}

std::string take_string(const json& j, const char* where, const char* key,
                        const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) {
    raise(ErrorCode::parse_error, std::string(where) + " key '" + key + "' must be a string");
  }
  return j[key].get<std::string>();
}

TrainSection train_from_json(const json& j) {
  reject_unknown(j, "train config", {"batch_size", "max_steps", "peak_lr", "weight_decay",
                                     "warmup_frac", "seed", "eval_interval"});
  TrainSection t;
  t.batch_size = static_cast<int>(take_integer(j, "train config", "batch_size", t.batch_size));
  t.max_steps = take_integer(j, "train config", "max_steps", t.max_steps);
  t.peak_lr = take_number(j, "train config", "peak_lr", t.peak_lr);
  t.weight_decay = take_number(j, "train config", "weight_decay", t.weight_decay);
  t.warmup_frac = take_number(j, "train config", "warmup_frac", t.warmup_frac);
  t.seed = static_cast<std::uint64_t>(take_integer(j, "train config", "seed",
                                                   static_cast<std::int64_t>(t.seed)));
  t.eval_interval = take_integer(j, "train config", "eval_interval", t.eval_interval);

  if (t.batch_size < 1) raise(ErrorCode::parse_error, "train config: batch_size must be >= 1");
  if (t.max_steps < 1) raise(ErrorCode::parse_error, "train config: max_steps must be >= 1");
  if (t.eval_interval < 1) raise(ErrorCode::parse_error, "train config: eval_interval must be >= 1");
  if (t.peak_lr <= 0.0) raise(ErrorCode::parse_error, "train config: peak_lr must be positive");
  if (t.weight_decay < 0.0) raise(ErrorCode::parse_error, "train config: weight_decay must be >= 0");
  if (t.warmup_frac < 0.0 || t.warmup_frac >= 1.0) {
    raise(ErrorCode::parse_error, "train config: warmup_frac must lie in [0, 1)");
  }
  return t;
}

DataSection data_from_json(const json& j) {
  reject_unknown(j, "data config", {"train_path", "split_manifest", "format"});
  DataSection d;
  d.train_path = take_string(j, "data config", "train_path", d.train_path);
  d.split_manifest = take_string(j, "data config", "split_manifest", d.split_manifest);
  d.format = take_string(j, "data config", "format", d.format);
  if (d.format != "auto" && d.format != "jsonl" && d.format != "pdb") {
    raise(ErrorCode::parse_error, "data config: format must be auto, jsonl or pdb");
  }
  return d;
}

OutputSection output_from_json(const json& j) {
  reject_unknown(j, "output config", {"checkpoint_dir", "log_path"});
  OutputSection o;
  o.checkpoint_dir = take_string(j, "output config", "checkpoint_dir", o.checkpoint_dir);
  o.log_path = take_string(j, "output config", "log_path", o.log_path);
  return o;
}

void merge_into(json& base, const json& overlay) {
  for (const auto& [key, value] : overlay.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

}  // namespace

RunConfig runconfig_from_json(const json& j) {
  if (!j.is_object()) raise(ErrorCode::parse_error, "run config must be a JSON object");
  reject_unknown(j, "run config", {"model", "train", "data", "output"});
  RunConfig rc;
  if (j.contains("model")) rc.model = model::config_from_json(j["model"]);
  if (j.contains("train")) rc.train = train_from_json(j["train"]);
  if (j.contains("data")) rc.data = data_from_json(j["data"]);
  if (j.contains("output")) rc.output = output_from_json(j["output"]);
  return rc;
}

json runconfig_to_json(const RunConfig& rc) {
  return json{{"model", model::config_to_json(rc.model)},
              {"train",
               {{"batch_size", rc.train.batch_size},
                {"max_steps", rc.train.max_steps},
                {"peak_lr", rc.train.peak_lr},
                {"weight_decay", rc.train.weight_decay},
                {"warmup_frac", rc.train.warmup_frac},
                {"seed", rc.train.seed},
                {"eval_interval", rc.train.eval_interval}}},
              {"data",
               {{"train_path", rc.data.train_path},
                {"split_manifest", rc.data.split_manifest},
                {"format", rc.data.format}}},
              {"output",
               {{"checkpoint_dir", rc.output.checkpoint_dir},
                {"log_path", rc.output.log_path}}}};
}

RunConfig resolve_runconfig(const json& file, const json& overrides) {
  json merged = file.is_null() ? json::object() : file;
  if (!merged.is_object()) raise(ErrorCode::parse_error, "run config must be a JSON object");
  if (!overrides.is_null()) merge_into(merged, overrides);
  return runconfig_from_json(merged);
}

}  // namespace vfn::cli
