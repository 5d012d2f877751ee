// graspcli: synth / pretrain / train / detect / heatmap / eval pipeline
// driver. Every run resolves a config (defaults < file < --set overrides),
// echoes it into a fresh run directory, and is deterministic given the
// config and seed.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "grasp/config.hpp"
#include "grasp/cornell.hpp"
#include "grasp/detection.hpp"
#include "grasp/evaluation.hpp"
#include "grasp/model_io.hpp"
#include "grasp/render.hpp"
#include "grasp/synth.hpp"
#include "grasp/training.hpp"

namespace fs = std::filesystem;
using namespace grasp;

namespace {

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string run_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_file, "config file (key = value lines)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set train.lambda=1");
  cmd->add_option("--run-dir", opts.run_dir,
                  "write outputs here instead of a fresh timestamped directory");
}

Config resolve_config(const CommonOpts& opts) {
  Config cfg = Config::defaults();
  if (!opts.config_file.empty()) cfg.load_file(opts.config_file);
  for (const auto& kv : opts.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

fs::path make_run_dir(const Config& cfg, const std::string& cmd, const CommonOpts& opts) {
  fs::path dir;
  if (!opts.run_dir.empty()) {
    dir = opts.run_dir;
  } else {
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", std::localtime(&now));
    fs::path base = fs::path(cfg.str("out.dir")) / (cmd + "-" + stamp);
    dir = base;
    for (int n = 1; fs::exists(dir); ++n) dir = base.string() + "-" + std::to_string(n);
  }
  fs::create_directories(dir);
  std::ofstream echo(dir / "config.txt", std::ios::trunc);
  cfg.echo(echo);
  return dir;
}

std::vector<AnnotatedScene> load_scenes(const Config& cfg) {
  const std::string data_dir = cfg.str("data.dir");
  if (!data_dir.empty()) {
    std::vector<std::string> warnings;
    auto scenes = cornell::load_directory(data_dir, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (scenes.empty()) throw DataError("no scenes found in " + data_dir);
    return scenes;
  }
  return synth_dataset(static_cast<std::uint64_t>(cfg.num("seed")), cfg.integer("synth.count"),
                       synth_spec_from(cfg), cfg.integer("synth.images_per_object"));
}

void write_train_log(const fs::path& path, const TrainReport& small, const TrainReport& large) {
  std::ofstream os(path, std::ios::trunc);
  os << "{\"net\":\"small\"}\n";
  small.write_jsonl(os);
  os << "{\"net\":\"large\"}\n";
  large.write_jsonl(os);
}

int cmd_synth(const CommonOpts& opts, const std::string& data_out) {
  Config cfg = resolve_config(opts);
  fs::path run = make_run_dir(cfg, "synth", opts);
  fs::path out = data_out.empty() ? run / "data" : fs::path(data_out);
  auto scenes = synth_dataset(static_cast<std::uint64_t>(cfg.num("seed")),
                              cfg.integer("synth.count"), synth_spec_from(cfg),
                              cfg.integer("synth.images_per_object"));
  cornell::save_dataset(out, scenes);
  std::cout << "wrote " << scenes.size() << " scenes to " << out.string() << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, bool pretrain_only) {
  Config cfg = resolve_config(opts);
  fs::path run = make_run_dir(cfg, pretrain_only ? "pretrain" : "train", opts);
  auto scenes = load_scenes(cfg);
  TrainConfig tc = train_config_from(cfg);
  TrainReport small_rep, large_rep;
  CascadeParams cascade = train_cascade(scenes, cascade_sizes_from(cfg), tc,
                                        cfg.integer("patch.side"), &small_rep, &large_rep,
                                        !pretrain_only);
  save_model(cascade.small, run / "small.model");
  save_model(cascade.large, run / "large.model");
  write_train_log(run / "train_log.jsonl", small_rep, large_rep);
  std::cout << "models written to " << run.string() << "\n";
  return 0;
}

CascadeParams load_cascade(const std::string& models_dir, int expected_input) {
  fs::path dir(models_dir);
  CascadeParams cascade;
  cascade.small = load_model_expecting(dir / "small.model", expected_input);
  cascade.large = load_model_expecting(dir / "large.model", expected_input);
  cascade.check_consistent();
  return cascade;
}

const AnnotatedScene& pick_scene(const std::vector<AnnotatedScene>& scenes, int image_id,
                                 int index) {
  if (image_id >= 0) {
    for (const auto& s : scenes)
      if (s.image_id == image_id) return s;
    throw DataError("no scene with image id " + std::to_string(image_id));
  }
  if (index < 0 || index >= static_cast<int>(scenes.size()))
    throw DataError("scene index " + std::to_string(index) + " out of range (have " +
                    std::to_string(scenes.size()) + " scenes)");
  return scenes[static_cast<std::size_t>(index)];
}

void write_detection_records(const fs::path& path, const DetectionResult& det) {
  std::ofstream os(path, std::ios::trunc);
  os.precision(17);
  os << "{\"row\":\"counters\",\"stage1_evals\":" << det.stage1_evals
     << ",\"stage2_evals\":" << det.stage2_evals << ",\"stage1_sec\":" << det.stage1_sec
     << ",\"stage2_sec\":" << det.stage2_sec << "}\n";
  auto rect_fields = [&os](const ScoredRect& s) {
    os << "\"cx\":" << s.rect.cx << ",\"cy\":" << s.rect.cy << ",\"angle\":" << s.rect.angle
       << ",\"len\":" << s.rect.len << ",\"wid\":" << s.rect.wid << ",\"enum_index\":"
       << s.enum_index << ",\"stage1_score\":" << s.stage1_score << ",\"stage2_score\":"
       << s.stage2_score;
  };
  if (det.best) {
    os << "{\"row\":\"best\",";
    rect_fields(*det.best);
    os << "}\n";
  } else {
    os << "{\"row\":\"no_candidates\"}\n";
  }
  for (const auto& s : det.top_t) {
    os << "{\"row\":\"candidate\",";
    rect_fields(s);
    os << "}\n";
  }
}

int cmd_detect(const CommonOpts& opts, const std::string& models_dir, int image_id, int index,
               bool exhaustive) {
  Config cfg = resolve_config(opts);
  fs::path run = make_run_dir(cfg, "detect", opts);
  auto scenes = load_scenes(cfg);
  const AnnotatedScene& scene = pick_scene(scenes, image_id, index);
  CascadeParams cascade = load_cascade(models_dir, patch_input_size(cfg.integer("patch.side")));
  SearchSpace space = search_space_from(cfg);

  DetectionResult det;
  if (exhaustive) {
    det = detect_exhaustive(cascade.large, scene.image, space);
  } else {
    det = detect_two_stage(cascade, scene.image, space,
                           static_cast<std::size_t>(cfg.integer("detect.T")));
  }
  write_detection_records(run / "detections.jsonl", det);

  ImageU8 overlay = render_rgb(scene.image);
  if (det.best) draw_rect(overlay, det.best->rect);
  write_png(run / "overlay.png", overlay);

  if (det.no_candidates()) {
    std::cout << "no candidates fit the search space\n";
  } else {
    std::cout << "best: center (" << det.best->rect.cx << ", " << det.best->rect.cy
              << ") angle " << det.best->rect.angle << " len " << det.best->rect.len << " wid "
              << det.best->rect.wid << " score " << det.best->stage2_score << "\n";
  }
  std::cout << "outputs in " << run.string() << "\n";
  return 0;
}

int cmd_heatmap(const CommonOpts& opts, const std::string& models_dir, int image_id, int index,
                const std::string& which_net) {
  Config cfg = resolve_config(opts);
  fs::path run = make_run_dir(cfg, "heatmap", opts);
  auto scenes = load_scenes(cfg);
  const AnnotatedScene& scene = pick_scene(scenes, image_id, index);
  CascadeParams cascade = load_cascade(models_dir, patch_input_size(cfg.integer("patch.side")));
  const NetworkParams& net = which_net == "large" ? cascade.large : cascade.small;

  ScoreHeatmap hm = score_heatmap(net, scene.image, search_space_from(cfg));
  write_png(run / "heatmap_left.png", heatmap_to_gray(hm.left, hm.left_has));
  write_png(run / "heatmap_right.png", heatmap_to_gray(hm.right, hm.right_has));
  std::cout << "heatmaps in " << run.string() << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& regs_csv, const std::string& splits_csv,
             bool use_cache) {
  Config cfg = resolve_config(opts);
  fs::path run = make_run_dir(cfg, "eval", opts);
  auto scenes = load_scenes(cfg);
  const int k = cfg.integer("eval.folds");
  SearchSpace space = search_space_from(cfg);
  EvalConfig ec = eval_config_from(cfg);
  const int side = cfg.integer("patch.side");

  std::vector<std::string> regs;
  {
    std::stringstream ss(regs_csv.empty() ? cfg.str("train.reg1.kind") : regs_csv);
    std::string item;
    while (std::getline(ss, item, ',')) regs.push_back(item);
  }
  std::vector<std::string> splits;
  {
    std::stringstream ss(splits_csv.empty() ? cfg.str("eval.split") : splits_csv);
    std::string item;
    while (std::getline(ss, item, ',')) splits.push_back(item);
  }

  fs::path cache_dir = fs::path(cfg.str("out.dir")) / "models";
  std::ofstream table(run / "report.txt", std::ios::trunc);
  std::ofstream records(run / "report.jsonl", std::ios::trunc);

  for (const auto& reg : regs) {
    Config combo = cfg;
    combo.set("train.reg1.kind", reg);
    TrainConfig tc = train_config_from(combo);
    for (const auto& split_name : splits) {
      SplitMode mode = split_mode_from_string(split_name);
      auto folds = split_folds(scenes, mode, k, tc.seed);

      EvalReport report;
      report.split_mode = mode;
      std::ostringstream echo;
      combo.echo(echo);
      report.config_echo = echo.str();

      double rec_sum = 0, point_sum = 0, rect_sum = 0;
      int scenes_sum = 0, rects_sum = 0;
      for (int f = 0; f < k; ++f) {
        std::vector<AnnotatedScene> train_set, test_set;
        for (int g = 0; g < k; ++g)
          for (std::size_t idx : folds[static_cast<std::size_t>(g)])
            (g == f ? test_set : train_set).push_back(scenes[idx]);

        CascadeParams cascade;
        fs::path small_path = cache_dir / (reg + "_" + split_name + "_fold" +
                                           std::to_string(f) + "_small.model");
        fs::path large_path = cache_dir / (reg + "_" + split_name + "_fold" +
                                           std::to_string(f) + "_large.model");
        if (use_cache && fs::exists(small_path) && fs::exists(large_path)) {
          cascade.small = load_model(small_path);
          cascade.large = load_model(large_path);
          std::cout << "fold " << f << ": using cached models\n";
        } else {
          cascade = train_cascade(train_set, cascade_sizes_from(combo), tc, side);
          if (use_cache) {
            fs::create_directories(cache_dir);
            save_model(cascade.small, small_path);
            save_model(cascade.large, large_path);
          }
        }

        EvalRow row = evaluate_scenes(cascade, test_set, space, ec, "fold" + std::to_string(f));
        report.per_fold.push_back(row);
        rec_sum += row.recognition_accuracy * row.num_rects;
        point_sum += row.point_rate * row.num_scenes;
        rect_sum += row.rect_rate * row.num_scenes;
        scenes_sum += row.num_scenes;
        rects_sum += row.num_rects;
      }
      report.overall.name = "overall";
      report.overall.num_scenes = scenes_sum;
      report.overall.num_rects = rects_sum;
      report.overall.recognition_accuracy = rects_sum ? rec_sum / rects_sum : 0.0;
      report.overall.point_rate = scenes_sum ? point_sum / scenes_sum : 0.0;
      report.overall.rect_rate = scenes_sum ? rect_sum / scenes_sum : 0.0;

      table << "== reg1 " << reg << ", split " << split_name << " ==\n";
      report.write_table(table);
      table << "\n";
      records << "{\"row\":\"header\",\"reg\":\"" << reg << "\",\"split\":\"" << split_name
              << "\"}\n";
      report.write_records(records);
    }
  }
  std::cout << "reports in " << run.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RGB-D grasp detection pipeline: feature learning, cascaded "
               "rectangle detection, and evaluation"};
  app.require_subcommand(1);

  CommonOpts synth_opts, pretrain_opts, train_opts, detect_opts, heatmap_opts, eval_opts;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset in the on-disk layout");
  add_common(synth, synth_opts);
  std::string synth_data_out;
  synth->add_option("--data-out", synth_data_out, "dataset directory (default <run>/data)");

  auto* pretrain = app.add_subcommand(
      "pretrain", "unsupervised layerwise pretraining only; saves models without fine-tuning");
  add_common(pretrain, pretrain_opts);

  auto* train = app.add_subcommand("train", "pretrain + fine-tune the small and large networks");
  add_common(train, train_opts);

  auto* detect = app.add_subcommand("detect", "detect the best grasp in one scene");
  add_common(detect, detect_opts);
  std::string detect_models;
  int detect_image_id = -1, detect_index = 0;
  bool detect_exhaustive_flag = false;
  detect->add_option("--models", detect_models, "directory with small.model and large.model")
      ->required();
  detect->add_option("--image-id", detect_image_id, "scene image id (overrides --index)");
  detect->add_option("--index", detect_index, "scene index in load order (default 0)");
  detect->add_flag("--exhaustive", detect_exhaustive_flag,
                   "score every candidate with the large network (no cascade)");

  auto* heatmap = app.add_subcommand(
      "heatmap", "export per-pixel max grasp scores for the left/right gripper plates "
                 "(grayscale; pixels no candidate touches use sentinel shade 0, scores map "
                 "to 1..255)");
  add_common(heatmap, heatmap_opts);
  std::string heatmap_models, heatmap_net = "small";
  int heatmap_image_id = -1, heatmap_index = 0;
  heatmap->add_option("--models", heatmap_models, "directory with small.model and large.model")
      ->required();
  heatmap->add_option("--image-id", heatmap_image_id, "scene image id (overrides --index)");
  heatmap->add_option("--index", heatmap_index, "scene index in load order (default 0)");
  heatmap->add_option("--net", heatmap_net, "which network scores candidates: small|large")
      ->check(CLI::IsMember({"small", "large"}));

  auto* eval = app.add_subcommand("eval", "cross-validated recognition/detection report");
  add_common(eval, eval_opts);
  std::string eval_regs, eval_splits;
  bool eval_cache = false;
  eval->add_option("--regs", eval_regs, "layer-1 regularizer kinds to sweep (comma list)");
  eval->add_option("--splits", eval_splits, "split modes to sweep (comma list)");
  eval->add_flag("--cache", eval_cache, "reuse per-fold models cached under <out.dir>/models");

  try {
    app.parse(argc, argv);
    if (*synth) return cmd_synth(synth_opts, synth_data_out);
    if (*pretrain) return cmd_train(pretrain_opts, true);
    if (*train) return cmd_train(train_opts, false);
    if (*detect)
      return cmd_detect(detect_opts, detect_models, detect_image_id, detect_index,
                        detect_exhaustive_flag);
    if (*heatmap)
      return cmd_heatmap(heatmap_opts, heatmap_models, heatmap_image_id, heatmap_index,
                         heatmap_net);
    if (*eval) return cmd_eval(eval_opts, eval_regs, eval_splits, eval_cache);
    throw UsageError("no subcommand");
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
