#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "grasp/detection.hpp"
#include "grasp/evaluation.hpp"
#include "grasp/synth.hpp"
#include "grasp/training.hpp"

namespace grasp {

/// Flat key = value configuration with dotted namespaces. Every key has a
/// default; files and command-line overrides may only touch known keys, so
/// typos fail loudly. The fully resolved map is echoed into each run
/// directory.
class Config {
 public:
  static Config defaults() {
    Config c;
    auto& v = c.values_;
    v["seed"] = "0";
    v["out.dir"] = "out";
    v["data.dir"] = "";

    v["synth.count"] = "30";
    v["synth.width"] = "160";
    v["synth.height"] = "120";
    v["synth.bars"] = "1";
    v["synth.distractors"] = "2";
    v["synth.noise_sigma"] = "0.02";
    v["synth.relevant"] = "depth,Y,U,V,nX,nY,nZ";
    v["synth.images_per_object"] = "1";

    v["patch.side"] = "24";
    v["patch.scale_cap"] = "2";

    v["train.small.k1"] = "50";
    v["train.small.k2"] = "50";
    v["train.large.k1"] = "200";
    v["train.large.k2"] = "200";
    v["train.optimizer"] = "lbfgs";
    v["train.max_iters"] = "400";
    v["train.tol"] = "1e-6";
    v["train.lambda"] = "3";
    v["train.max_examples"] = "0";
    v["train.reg1.kind"] = "l1";
    v["train.reg1.beta"] = "3e-3";
    v["train.reg1.p"] = "2";
    v["train.reg1.alpha"] = "20";
    v["train.reg1.eps_g"] = "1e-6";
    v["train.reg2.kind"] = "l1";
    v["train.reg2.beta"] = "3e-3";
    v["train.reg2.p"] = "2";
    v["train.reg2.alpha"] = "20";
    v["train.reg2.eps_g"] = "1e-6";

    v["detect.T"] = "100";
    v["detect.angle_step_deg"] = "15";
    v["detect.stride"] = "10";
    v["detect.len_set"] = "16,24,36,54";
    v["detect.wid_set"] = "8,12,18,27";
    v["gripper.min_wid"] = "0";
    v["gripper.max_wid"] = "1e9";
    v["gripper.min_len"] = "0";
    v["gripper.max_len"] = "1e9";

    v["eval.split"] = "image_wise";
    v["eval.folds"] = "5";
    v["eval.point.quarter_diag"] = "true";
    v["eval.point.abs_px"] = "20";
    return c;
  }

  void set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key: " + key);
    it->second = value;
  }

  /// Parses "key = value" lines; '#' starts a comment, blank lines ignored.
  void load_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open config file " + path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r\n");
        auto e = s.find_last_not_of(" \t\r\n");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      std::string t = trim(line);
      if (t.empty()) continue;
      auto eq = t.find('=');
      if (eq == std::string::npos)
        throw DataError("config " + path.string() + ":" + std::to_string(line_no) +
                        ": expected key = value");
      try {
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
      } catch (const UsageError& e) {
        throw DataError("config " + path.string() + ":" + std::to_string(line_no) + ": " +
                        e.what());
      }
    }
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key: " + key);
    return it->second;
  }

  double num(const std::string& key) const {
    const std::string& s = str(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw UsageError("config key " + key + " is not a number: " + s);
    return v;
  }

  int integer(const std::string& key) const { return static_cast<int>(num(key)); }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw UsageError("config key " + key + " is not a boolean: " + s);
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(item);
    return out;
  }

  std::vector<double> num_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : list(key)) {
      char* end = nullptr;
      double v = std::strtod(s.c_str(), &end);
      if (end == s.c_str()) throw UsageError("config key " + key + " has a non-numeric item: " + s);
      out.push_back(v);
    }
    return out;
  }

  void echo(std::ostream& os) const {
    for (const auto& [k, vv] : values_) os << k << " = " << vv << "\n";
  }

 private:
  std::map<std::string, std::string> values_;
};

inline SearchSpace search_space_from(const Config& cfg) {
  SearchSpace s;
  s.angle_step = cfg.num("detect.angle_step_deg") * kPi / 180.0;
  s.position_stride = cfg.num("detect.stride");
  s.len_set = cfg.num_list("detect.len_set");
  s.wid_set = cfg.num_list("detect.wid_set");
  s.gripper.min_wid = cfg.num("gripper.min_wid");
  s.gripper.max_wid = cfg.num("gripper.max_wid");
  s.gripper.min_len = cfg.num("gripper.min_len");
  s.gripper.max_len = cfg.num("gripper.max_len");
  s.validate();
  return s;
}

inline RegConfig reg_config_from(const Config& cfg, const std::string& prefix, double lambda) {
  RegConfig r;
  r.kind = reg_kind_from_string(cfg.str(prefix + ".kind"));
  r.beta = cfg.num(prefix + ".beta");
  r.p = cfg.num(prefix + ".p");
  r.alpha = cfg.num(prefix + ".alpha");
  r.eps_g = cfg.num(prefix + ".eps_g");
  r.lambda = lambda;
  r.validate();
  return r;
}

inline TrainConfig train_config_from(const Config& cfg) {
  TrainConfig t;
  t.lambda = cfg.num("train.lambda");
  t.reg1 = reg_config_from(cfg, "train.reg1", t.lambda);
  t.reg2 = reg_config_from(cfg, "train.reg2", t.lambda);
  t.optimizer = opt_method_from_string(cfg.str("train.optimizer"));
  t.max_iters = cfg.integer("train.max_iters");
  t.tol = cfg.num("train.tol");
  t.seed = static_cast<std::uint64_t>(cfg.num("seed"));
  t.max_examples = cfg.integer("train.max_examples");
  t.mask_scale_cap = cfg.num("patch.scale_cap");
  t.validate();
  return t;
}

inline CascadeSizes cascade_sizes_from(const Config& cfg) {
  CascadeSizes s;
  s.small_k1 = cfg.integer("train.small.k1");
  s.small_k2 = cfg.integer("train.small.k2");
  s.large_k1 = cfg.integer("train.large.k1");
  s.large_k2 = cfg.integer("train.large.k2");
  return s;
}

inline SynthSpec synth_spec_from(const Config& cfg) {
  SynthSpec s;
  s.width = cfg.integer("synth.width");
  s.height = cfg.integer("synth.height");
  s.n_bars = cfg.integer("synth.bars");
  s.n_distractors = cfg.integer("synth.distractors");
  s.noise_sigma = cfg.num("synth.noise_sigma");
  s.relevant.fill(false);
  for (const auto& name : cfg.list("synth.relevant")) {
    bool known = false;
    for (int c = 0; c < kNumChannels; ++c)
      if (name == channel_name(c)) {
        s.relevant[static_cast<std::size_t>(c)] = true;
        known = true;
      }
    if (!known) throw UsageError("synth.relevant: unknown channel " + name);
  }
  return s;
}

inline EvalConfig eval_config_from(const Config& cfg) {
  EvalConfig e;
  e.top_t = static_cast<std::size_t>(cfg.integer("detect.T"));
  e.point_quarter_diag = cfg.flag("eval.point.quarter_diag");
  e.point_dist_px = cfg.num("eval.point.abs_px");
  return e;
}

}  // namespace grasp
