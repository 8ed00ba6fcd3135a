// Command-line driver for phantom generation, training, prediction,
// evaluation, ensemble sweeps, and correlation reports.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "segcal/calibration.hpp"
#include "segcal/ensemble.hpp"
#include "segcal/model.hpp"
#include "segcal/rng.hpp"
#include "segcal/seg_metrics.hpp"
#include "segcal/segv_io.hpp"
#include "segcal/stats.hpp"
#include "segcal/synth.hpp"
#include "segcal/uncertainty.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace segcal;

namespace {

bool g_verbose = false;

void note(const std::string& msg) {
  if (g_verbose) std::cerr << msg << '\n';
}

ProbabilityVolume features_as_volume(const FeatureVolume& f) {
  ProbabilityVolume v;
  v.meta = f.meta;
  v.classes = f.channels;
  v.normalized = false;
  v.probs.resize(f.data.size());
  for (std::size_t i = 0; i < f.data.size(); ++i)
    v.probs[i] = std::clamp(float(f.data[i]), 0.0f, 1.0f);
  return v;
}

FeatureVolume volume_as_features(const ProbabilityVolume& v) {
  FeatureVolume f;
  f.meta = v.meta;
  f.channels = v.classes;
  f.data.assign(v.probs.begin(), v.probs.end());
  return f;
}

struct ManifestCase {
  std::string id;
  fs::path features;
  fs::path labels;
  bool shifted = false;
};

struct Manifest {
  std::string preset;
  std::uint64_t seed = 0;
  int classes = 2;
  int in_channels = 1;
  std::vector<ManifestCase> cases;
  fs::path dir;
};

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  json j = json::parse(in);
  Manifest m;
  m.preset = j.at("preset").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.classes = j.at("classes").get<int>();
  m.in_channels = j.at("in_channels").get<int>();
  m.dir = path.parent_path();
  for (const auto& c : j.at("cases")) {
    ManifestCase mc;
    mc.id = c.at("id").get<std::string>();
    mc.features = m.dir / c.at("features").get<std::string>();
    mc.labels = m.dir / c.at("labels").get<std::string>();
    mc.shifted = c.at("shifted").get<bool>();
    m.cases.push_back(std::move(mc));
  }
  return m;
}

FeatureVolume load_features(const ManifestCase& c) {
  auto v = read_volume(c.features);
  auto* p = std::get_if<ProbabilityVolume>(&v);
  if (!p)
    throw std::runtime_error("feature file " + c.features.string() +
                             " is not a probs volume");
  return volume_as_features(*p);
}

LabelVolume load_labels(const ManifestCase& c) {
  auto v = read_volume(c.labels);
  auto* l = std::get_if<LabelVolume>(&v);
  if (!l)
    throw std::runtime_error("label file " + c.labels.string() +
                             " is not a labels volume");
  return *l;
}

int cmd_generate(const std::string& preset, int count, std::uint64_t seed,
                 const fs::path& out_dir) {
  auto cfg = preset_config(preset, seed);
  auto data = generate(cfg, count);
  fs::create_directories(out_dir);

  json manifest;
  manifest["preset"] = preset;
  manifest["seed"] = seed;
  manifest["classes"] = cfg.classes;
  manifest["in_channels"] = cfg.in_channels;
  manifest["cases"] = json::array();
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case_%03d", i);
    std::string feat_name = std::string(id) + "_feat.segv";
    std::string lab_name = std::string(id) + "_lab.segv";
    write_volume(features_as_volume(data[i].first), out_dir / feat_name);
    write_volume(data[i].second, out_dir / lab_name);
    manifest["cases"].push_back({{"id", id},
                                 {"features", feat_name},
                                 {"labels", lab_name},
                                 {"preset", preset},
                                 {"shifted", !cfg.shift.is_identity()}});
  }
  std::ofstream out(out_dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  note("wrote " + std::to_string(count) + " cases to " + out_dir.string());
  return 0;
}

int cmd_train(const fs::path& manifest_path, const std::string& loss_name,
              int members, std::uint64_t seed, const fs::path& out_dir,
              int epochs, double lr, double dropout, int batch_size,
              int val_count, int patience, int plateau_patience) {
  Manifest m = load_manifest(manifest_path);
  Dataset all;
  for (const auto& c : m.cases)
    all.emplace_back(load_features(c), load_labels(c));
  if (val_count <= 0) val_count = std::max<int>(1, int(all.size()) / 5);
  if (val_count >= int(all.size()))
    throw std::runtime_error("val-count leaves no training cases");
  Dataset train_set(all.begin(), all.end() - val_count);
  Dataset val_set(all.end() - val_count, all.end());

  LossConfig loss;
  if (loss_name == "ce") {
    loss.kind = LossKind::CrossEntropy;
    std::vector<const LabelVolume*> labs;
    for (const auto& [f, l] : all) labs.push_back(&l);
    loss.class_weights = inverse_frequency_weights(labs, m.classes);
    loss.weight_mode = WeightMode::InverseFrequency;
  } else {
    loss.kind = LossKind::Dice;
    loss.class_weights.assign(m.classes, 1.0);
    loss.weight_mode = WeightMode::Uniform;
  }

  TrainConfig cfg;
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.lr = lr;
  cfg.batch_size = batch_size;
  cfg.early_stop_patience = patience;
  cfg.plateau_patience = plateau_patience;

  fs::create_directories(out_dir);
  auto results = train_ensemble(members, train_set, val_set, loss, cfg, dropout);
  for (int i = 0; i < members; ++i) {
    char name[48];
    std::snprintf(name, sizeof name, "member_%03d", i);
    save_model(results[i].model, out_dir / (std::string(name) + ".toym"));
    std::ofstream hist(out_dir / (std::string(name) + "_history.csv"));
    hist << history_csv(results[i].history);
    note(std::string(name) + ": best val dice " +
         format_real(results[i].best_val_dice));
  }
  return 0;
}

std::vector<fs::path> checkpoint_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".toym") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty())
    throw std::runtime_error("no .toym checkpoints in " + dir.string());
  return out;
}

int cmd_predict(const fs::path& checkpoints_dir, const fs::path& manifest_path,
                const std::string& mode, int samples, std::uint64_t seed,
                const fs::path& out_dir) {
  Manifest m = load_manifest(manifest_path);
  auto files = checkpoint_files(checkpoints_dir);
  std::vector<ToyModel> models;
  for (const auto& f : files) models.push_back(load_model(f));

  if (mode == "mcdo" && models[0].dropout_p <= 0.0)
    throw std::runtime_error(
        "mcdo mode requires checkpoints trained with dropout_p > 0");

  fs::create_directories(out_dir);
  std::string model_id;
  if (mode == "single")
    model_id = files[0].stem().string();
  else if (mode == "ensemble")
    model_id = "ensemble_" + std::to_string(models.size());
  else
    model_id = "mcdo_" + std::to_string(samples);

  json pred_manifest;
  pred_manifest["mode"] = mode;
  pred_manifest["model_id"] = model_id;
  pred_manifest["samples"] = samples;
  pred_manifest["cases"] = json::object();

  for (const auto& c : m.cases) {
    FeatureVolume x = load_features(c);
    ProbabilityVolume pred;
    if (mode == "single") {
      pred = forward(models[0], x);
    } else if (mode == "ensemble") {
      std::vector<ProbabilityVolume> outs;
      outs.reserve(models.size());
      for (const auto& mdl : models) outs.push_back(forward(mdl, x));
      pred = ensemble_mean(outs);
    } else {
      pred = mc_dropout_mean(models[0], x, samples,
                             substream(seed, {mix64(std::hash<std::string>{}(
                                 c.id))}));
    }
    std::string name = c.id + "_pred.segv";
    write_volume(pred, out_dir / name);
    pred_manifest["cases"][c.id] = name;
  }
  std::ofstream out(out_dir / "predictions.json");
  out << pred_manifest.dump(2) << '\n';
  return 0;
}

struct PredictionSet {
  std::string model_id;
  std::vector<std::pair<std::string, fs::path>> cases;  // ordered by case id
  fs::path dir;
};

PredictionSet load_predictions(const fs::path& dir) {
  std::ifstream in(dir / "predictions.json");
  if (!in)
    throw std::runtime_error("missing predictions.json in " + dir.string());
  json j = json::parse(in);
  PredictionSet ps;
  ps.model_id = j.at("model_id").get<std::string>();
  ps.dir = dir;
  for (const auto& [id, name] : j.at("cases").items())
    ps.cases.emplace_back(id, dir / name.get<std::string>());
  std::sort(ps.cases.begin(), ps.cases.end());
  return ps;
}

int cmd_evaluate(const fs::path& pred_dir, const fs::path& manifest_path,
                 const std::string& region, int bins, const fs::path& out_csv) {
  Manifest m = load_manifest(manifest_path);
  PredictionSet preds = load_predictions(pred_dir);
  const bool use_box = region == "box";

  std::ostringstream csv;
  csv << "case_id,model_id,region,shifted,nll,brier,ece";
  for (int k = 1; k < m.classes; ++k) csv << ",dice_" << k;
  for (int k = 1; k < m.classes; ++k) csv << ",hd95_" << k;
  for (int k = 1; k < m.classes; ++k) csv << ",entropy_" << k;
  csv << '\n';

  json warnings = json::array();
  std::vector<std::pair<double, bool>> pooled_samples;
  std::map<std::string, std::vector<double>> aggregates;

  for (const auto& c : m.cases) {
    auto it = std::find_if(preds.cases.begin(), preds.cases.end(),
                           [&](const auto& p) { return p.first == c.id; });
    if (it == preds.cases.end())
      throw std::runtime_error("missing prediction for case " + c.id);
    auto pv = read_volume(it->second);
    auto* pred = std::get_if<ProbabilityVolume>(&pv);
    if (!pred)
      throw std::runtime_error("prediction is not a probs volume: " +
                               it->second.string());
    LabelVolume truth = load_labels(c);

    std::optional<VoxelMask> mask;
    if (use_box) mask = union_foreground_box(truth);
    const VoxelMask* region_ptr = mask ? &*mask : nullptr;

    double case_nll = nll(*pred, truth, region_ptr);
    double case_brier = brier(*pred, truth, region_ptr);
    auto rel = reliability(*pred, truth, region_ptr, bins);
    LabelVolume hard = argmax_labels(*pred);

    csv << c.id << ',' << preds.model_id << ',' << region << ','
        << (c.shifted ? 1 : 0) << ',' << format_real(case_nll) << ','
        << format_real(case_brier) << ',' << format_real(rel.ece);
    aggregates["nll"].push_back(case_nll);
    aggregates["brier"].push_back(case_brier);
    aggregates["ece"].push_back(rel.ece);

    std::vector<std::string> dice_cells, hd_cells, ent_cells;
    for (int k = 1; k < m.classes; ++k) {
      auto d = dice_coefficient(hard, truth, k);
      if (d) {
        dice_cells.push_back(format_real(*d));
        aggregates["dice"].push_back(*d);
      } else {
        dice_cells.emplace_back();
        warnings.push_back({{"case", c.id},
                            {"class", k},
                            {"metric", "dice"},
                            {"reason", "both segments empty"}});
      }
      auto h = hausdorff95(hard, truth, k);
      if (h) {
        hd_cells.push_back(format_real(*h));
        aggregates["hd95"].push_back(*h);
      } else {
        hd_cells.emplace_back();
        warnings.push_back({{"case", c.id},
                            {"class", k},
                            {"metric", "hd95"},
                            {"reason", "empty segment"}});
      }
      auto u = mean_segment_entropy(*pred, k);
      if (u) {
        ent_cells.push_back(format_real(u->mean_entropy));
        aggregates["mean_entropy"].push_back(u->mean_entropy);
      } else {
        ent_cells.emplace_back();
        warnings.push_back({{"case", c.id},
                            {"class", k},
                            {"metric", "mean_entropy"},
                            {"reason", "empty predicted segment"}});
      }
    }
    for (const auto& cell : dice_cells) csv << ',' << cell;
    for (const auto& cell : hd_cells) csv << ',' << cell;
    for (const auto& cell : ent_cells) csv << ',' << cell;
    csv << '\n';

    // pooled (confidence, correctness) samples for the run-level diagram
    for (std::size_t i = 0; i < pred->size(); ++i) {
      if (mask && !mask->mask[i]) continue;
      const float* vox = pred->voxel(i);
      double s = 0.0;
      for (int k = 0; k < pred->classes; ++k) s += vox[k];
      int best = 0;
      for (int k = 1; k < pred->classes; ++k)
        if (vox[k] > vox[best]) best = k;
      double conf = pred->normalized
                        ? vox[best]
                        : (s < 1e-12 ? 1.0 / pred->classes : vox[best] / s);
      pooled_samples.emplace_back(conf, best == truth.labels[i]);
    }
  }

  fs::create_directories(out_csv.parent_path().empty() ? "."
                                                       : out_csv.parent_path());
  std::ofstream out(out_csv);
  out << csv.str();

  auto stem = out_csv;
  stem.replace_extension();
  {
    auto rep = reliability_from_samples(pooled_samples, bins);
    std::ofstream rel_out(stem.string() + "_reliability.csv");
    rel_out << render_reliability_csv(rep, 0);
  }
  {
    std::ofstream warn_out(stem.string() + "_warnings.json");
    warn_out << warnings.dump(2) << '\n';
  }
  {
    std::ofstream agg_out(stem.string() + "_aggregate.csv");
    agg_out << "metric,n,mean,ci_lo,ci_hi\n";
    BootstrapConfig bcfg;
    bcfg.seed = m.seed;
    for (const auto& [name, vals] : aggregates) {
      if (vals.empty()) continue;
      auto ci = bootstrap_ci(vals, Stat::Mean, bcfg);
      agg_out << name << ',' << vals.size() << ',' << format_real(ci.point)
              << ',' << format_real(ci.lo) << ',' << format_real(ci.hi) << '\n';
    }
  }
  return 0;
}

int cmd_sweep(const fs::path& checkpoints_dir, const fs::path& manifest_path,
              const std::vector<int>& sizes, int repeats,
              const std::string& metric_name, const std::string& region_name,
              std::uint64_t seed, const fs::path& out_csv) {
  Manifest m = load_manifest(manifest_path);
  auto files = checkpoint_files(checkpoints_dir);

  SweepMetric metric;
  if (metric_name == "nll")
    metric = SweepMetric::Nll;
  else if (metric_name == "brier")
    metric = SweepMetric::Brier;
  else if (metric_name == "ece")
    metric = SweepMetric::Ece;
  else
    metric = SweepMetric::Dice;
  SweepRegion region =
      region_name == "box" ? SweepRegion::Box : SweepRegion::Whole;

  std::vector<LabelVolume> truths;
  std::vector<VoxelMask> masks;
  std::vector<FeatureVolume> features;
  for (const auto& c : m.cases) {
    truths.push_back(load_labels(c));
    features.push_back(load_features(c));
    if (region == SweepRegion::Box)
      masks.push_back(union_foreground_box(truths.back()));
  }

  std::vector<std::vector<ProbabilityVolume>> member_preds;
  for (const auto& f : files) {
    ToyModel mdl = load_model(f);
    std::vector<ProbabilityVolume> preds;
    preds.reserve(features.size());
    for (const auto& x : features) preds.push_back(forward(mdl, x));
    member_preds.push_back(std::move(preds));
  }

  EnsembleConfig cfg;
  cfg.subsample_sizes = sizes;
  cfg.repeats = repeats;
  auto rows = m_sweep(member_preds, truths, masks, metric, region, cfg, seed);
  std::ofstream out(out_csv);
  out << sweep_csv(rows);
  return 0;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

int cmd_correlate(const fs::path& records_csv, const fs::path& out_prefix,
                  double clamp_eps) {
  auto rows = read_csv(records_csv);
  if (rows.size() < 2) throw std::runtime_error("records CSV has no data rows");
  const auto& header = rows[0];
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return std::size_t(it - header.begin());
  };
  auto case_col = col("case_id");
  auto shift_col = col("shifted");
  if (!case_col) throw std::runtime_error("records CSV lacks case_id column");

  // every (dice_k, entropy_k) pair with both cells defined contributes
  std::vector<std::pair<double, double>> pairs;
  std::ostringstream scatter;
  scatter << "case_id,mean_entropy,logit_dice,shift_flag\n";
  for (std::size_t k = 1;; ++k) {
    auto dcol = col("dice_" + std::to_string(k));
    auto ecol = col("entropy_" + std::to_string(k));
    if (!dcol || !ecol) break;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (*dcol >= row.size() || *ecol >= row.size()) continue;
      if (row[*dcol].empty() || row[*ecol].empty()) continue;
      double dice = std::stod(row[*dcol]);
      double ent = std::stod(row[*ecol]);
      pairs.emplace_back(ent, dice);
      std::string shift =
          shift_col && *shift_col < row.size() ? row[*shift_col] : "0";
      scatter << row[*case_col] << ',' << format_real(ent) << ','
              << format_real(logit(dice, clamp_eps)) << ',' << shift << '\n';
    }
  }
  auto res = correlate(pairs, clamp_eps);

  std::ofstream out(out_prefix.string() + "_correlation.csv");
  out << "n,r,p_value,slope,intercept,clamp_eps\n";
  out << res.n << ',' << format_real(res.r) << ',' << format_real(res.p_value)
      << ',' << format_real(res.slope) << ',' << format_real(res.intercept)
      << ',' << format_real(clamp_eps) << '\n';
  std::ofstream sc(out_prefix.string() + "_scatter.csv");
  sc << scatter.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration and uncertainty toolkit for probabilistic "
               "segmentations"};
  app.require_subcommand(1);
  app.set_config("--config");

  int threads = 1;
  app.add_option("--threads", threads, "Worker thread cap")
      ->check(CLI::PositiveNumber);
  app.add_flag("--verbose", g_verbose, "Log progress to stderr");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a phantom dataset");
  std::string preset = "medium";
  int count = 10;
  std::uint64_t seed = 0;
  std::string out_dir;
  gen->add_option("--preset", preset, "easy|medium|hard|shifted")->required();
  gen->add_option("--count", count)->check(CLI::PositiveNumber)->required();
  gen->add_option("--seed", seed)->required();
  gen->add_option("--out", out_dir)->required();

  // train
  auto* tr = app.add_subcommand("train", "Train ensemble members");
  std::string manifest, loss_name = "ce", ckpt_dir;
  int members = 1, epochs = 100, batch_size = 5, val_count = 0;
  double lr = 0.005, dropout = 0.0;
  tr->add_option("--manifest", manifest)->required();
  tr->add_option("--loss", loss_name)
      ->check(CLI::IsMember({"ce", "dsc"}))
      ->required();
  tr->add_option("--members", members)->check(CLI::PositiveNumber);
  tr->add_option("--seed", seed)->required();
  tr->add_option("--out", ckpt_dir)->required();
  tr->add_option("--epochs", epochs)->check(CLI::PositiveNumber);
  tr->add_option("--lr", lr)->check(CLI::PositiveNumber);
  tr->add_option("--dropout", dropout)->check(CLI::Range(0.0, 0.999));
  tr->add_option("--batch", batch_size)->check(CLI::PositiveNumber);
  tr->add_option("--val-count", val_count,
                 "Validation cases taken from the tail (default 20%)");
  int patience = 100, plateau_patience = 25;
  tr->add_option("--patience", patience, "Early-stop patience (epochs)")
      ->check(CLI::PositiveNumber);
  tr->add_option("--plateau-patience", plateau_patience,
                 "Epochs without val-Dice gain before halving lr")
      ->check(CLI::PositiveNumber);

  // predict
  auto* pr = app.add_subcommand("predict", "Write prediction volumes");
  std::string mode = "single", pred_out;
  int samples = 50;
  pr->add_option("--checkpoints", ckpt_dir)->required();
  pr->add_option("--manifest", manifest)->required();
  pr->add_option("--mode", mode)
      ->check(CLI::IsMember({"single", "ensemble", "mcdo"}))
      ->required();
  pr->add_option("--samples", samples)->check(CLI::PositiveNumber);
  pr->add_option("--seed", seed)->required();
  pr->add_option("--out", pred_out)->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Per-case metric records");
  std::string region = "whole", out_csv;
  int bins = 10;
  ev->add_option("--predictions", pred_out)->required();
  ev->add_option("--manifest", manifest)->required();
  ev->add_option("--region", region)->check(CLI::IsMember({"whole", "box"}));
  ev->add_option("--bins", bins)->check(CLI::PositiveNumber);
  ev->add_option("--out", out_csv)->required();

  // sweep
  auto* sw = app.add_subcommand("sweep", "Ensemble-size sweep");
  std::vector<int> sizes{1, 2, 5, 10};
  int repeats = 10;
  std::string metric_name = "nll";
  sw->add_option("--checkpoints", ckpt_dir)->required();
  sw->add_option("--manifest", manifest)->required();
  sw->add_option("--sizes", sizes);
  sw->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  sw->add_option("--metric", metric_name)
      ->check(CLI::IsMember({"nll", "brier", "ece", "dice"}));
  sw->add_option("--region", region)->check(CLI::IsMember({"whole", "box"}));
  sw->add_option("--seed", seed)->required();
  sw->add_option("--out", out_csv)->required();

  // correlate
  auto* co = app.add_subcommand("correlate", "Entropy vs logit-Dice analysis");
  std::string records, out_prefix;
  double clamp_eps = 1e-4;
  co->add_option("--records", records)->required();
  co->add_option("--out", out_prefix)->required();
  co->add_option("--clamp-eps", clamp_eps)->check(CLI::Range(1e-12, 0.499));

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_generate(preset, count, seed, out_dir);
    if (*tr)
      return cmd_train(manifest, loss_name, members, seed, ckpt_dir, epochs,
                       lr, dropout, batch_size, val_count, patience,
                       plateau_patience);
    if (*pr)
      return cmd_predict(ckpt_dir, manifest, mode, samples, seed, pred_out);
    if (*ev) return cmd_evaluate(pred_out, manifest, region, bins, out_csv);
    if (*sw)
      return cmd_sweep(ckpt_dir, manifest, sizes, repeats, metric_name, region,
                       seed, out_csv);
    if (*co) return cmd_correlate(records, out_prefix, clamp_eps);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
