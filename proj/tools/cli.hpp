#pragma once

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "emofuse/emofuse.hpp"
#include "emofuse/fusion/gradcheck_suite.hpp"

namespace emofuse::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,       // runtime failure or failed check
  kUsage = 2,         // unparsable command line
  kInconsistent = 3,  // flags parse but contradict each other or the data
  kDataError = 4,     // unreadable or invalid bundle/model/report file
  kNumeric = 5,       // non-finite values during training
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kEncoderLr = 1e-5;
inline constexpr double kDeskLr = 1e-3;

/// Everything a subcommand needs; mirrored by the JSON accepted by --config.
struct RunConfig {
  std::string bundle;
  std::string arch = "symmetric";
  std::string align = "subwords";
  std::string size = "base";
  std::size_t d_model = 0;  // 0: take from the size preset
  std::size_t heads = 0;
  std::optional<double> lr;  // unset: kEncoderLr at preset widths, kDeskLr below
  std::size_t batch_size = 8;
  std::size_t epochs = 50;
  double clip = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t folds_seed = 0;
  std::size_t k = 5;
  std::string precision = "f32";
  std::string out;
  std::string sizes = "base,large";
};

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(FormatErrc::io_error, "cannot write " + path);
  f << text;
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError(FormatErrc::io_error, "cannot open " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::malformed_manifest, path + ": " + e.what());
  }
}

// Fills options the user did not pass on the command line from --config.
inline void apply_config_file(const CLI::App& app, const std::string& path,
                              RunConfig& rc) {
  const auto j = read_json(path);
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (j.contains(key) && app.get_option(flag)->count() == 0) {
      field = j[key].get<std::decay_t<decltype(field)>>();
    }
  };
  try {
    take("bundle", "--bundle", rc.bundle);
    take("arch", "--arch", rc.arch);
    take("align", "--align", rc.align);
    take("size", "--size", rc.size);
    take("d_model", "--d-model", rc.d_model);
    take("heads", "--heads", rc.heads);
    if (j.contains("lr") && app.get_option("--lr")->count() == 0) {
      rc.lr = j["lr"].get<double>();
    }
    take("batch_size", "--batch-size", rc.batch_size);
    take("epochs", "--epochs", rc.epochs);
    take("clip", "--clip", rc.clip);
    take("seed", "--seed", rc.seed);
    take("folds_seed", "--folds-seed", rc.folds_seed);
    take("k", "--k", rc.k);
    take("precision", "--precision", rc.precision);
    take("out", "--out", rc.out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// A bundle narrower or wider than the size preset (the desk-scale synthetic
// data is 32 wide) sets d_model unless --d-model is given.
inline ModelConfig resolve_model(const RunConfig& rc, Architecture arch,
                                 AlignmentMethod align, ModelSize size,
                                 std::size_t bundle_width = 0) {
  ModelConfig c = ModelConfig::preset(arch, size, align);
  std::size_t width = rc.d_model;
  if (width == 0 && bundle_width != 0 && bundle_width != c.d_model) {
    width = bundle_width;
  }
  if (width != 0) {
    c.d_model = width;
    // explicit widths keep the Base/Large head ratio: Large doubles the heads
    const std::size_t base_heads = rc.heads != 0 ? rc.heads : 4;
    c.n_heads = size == ModelSize::Large ? 2 * base_heads : base_heads;
  } else if (rc.heads != 0) {
    c.n_heads = rc.heads;
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline double resolve_lr(const RunConfig& rc, const ModelConfig& c) {
  if (rc.lr) return *rc.lr;
  const auto preset = ModelConfig::preset(c.architecture, c.size);
  return c.d_model == preset.d_model ? kEncoderLr : kDeskLr;
}

template <typename T>
void require_bundle_width(const ModelConfig& c,
                          std::span<const SegmentRecord> records) {
  try {
    check_widths<T>(c, records);
  } catch (const ShapeError& e) {
    throw ConfigError(std::string(e.what()) +
                      " (pass --d-model to match the bundle)");
  }
}

inline std::string fusion_label(Architecture a) {
  switch (a) {
    case Architecture::UnimodalPara: return "Unimodal paralinguistic";
    case Architecture::UnimodalSem: return "Unimodal semantic";
    case Architecture::Score: return "Score";
    case Architecture::Concatenation: return "Concatenation";
    case Architecture::ParaCrossAttn: return "Paralinguistic cross-attention";
    case Architecture::SemCrossAttn: return "Semantic cross-attention";
    case Architecture::SymmetricCrossAttn: return "Symmetric cross-attention";
  }
  return "?";
}

inline std::string format_params(std::size_t n) {
  char buf[32];
  if (n >= 1000000) {
    std::snprintf(buf, sizeof buf, "%.0f M", static_cast<double>(n) / 1e6);
  } else if (n >= 1000) {
    std::snprintf(buf, sizeof buf, "%.0f K", static_cast<double>(n) / 1e3);
  } else {
    std::snprintf(buf, sizeof buf, "%zu", n);
  }
  return buf;
}

struct CellResult {
  nlohmann::json report;
  std::vector<nlohmann::json> history;
};

// Trains one configuration on one fold or on every fold.
template <typename T>
CellResult train_cell(const ModelConfig& cfg, const Hyper& hyper,
                      std::span<const SegmentRecord> records,
                      const FoldPlan& plan, std::optional<std::size_t> only_fold,
                      const std::string& model_dir) {
  require_bundle_width<T>(cfg, records);
  const auto examples = build_examples<T>(records, cfg);
  CellResult cell;
  cell.report = {{"config", config_to_json(cfg)},
                 {"fusion", fusion_label(cfg.architecture)},
                 {"param_count", count_params(cfg)},
                 {"hyper", hyper_to_json(hyper)}};
  std::vector<Metrics> tests;
  nlohmann::json folds = nlohmann::json::array();
  for (std::size_t f = 0; f < plan.folds.size(); ++f) {
    if (only_fold && *only_fold != f) continue;
    auto r = train_fold<T>(cfg, hyper, std::span<const Example<T>>(examples),
                           plan.folds[f], f);
    for (const auto& e : r.history) {
      auto line = epoch_to_json(e);
      line["fold"] = f;
      line["architecture"] = to_string(cfg.architecture);
      line["alignment"] = to_string(cfg.alignment);
      line["size"] = to_string(cfg.size);
      cell.history.push_back(std::move(line));
    }
    if (!model_dir.empty()) {
      const std::string name =
          only_fold ? "model.bin" : "model.fold" + std::to_string(f) + ".bin";
      save_model(r.best_model, std::filesystem::path(model_dir) / name);
    }
    folds.push_back(fold_to_json(r));
    tests.push_back(std::move(r.test_metrics));
  }
  cell.report["folds"] = folds;
  if (!only_fold) {
    cell.report["combined"] = combined_to_json(std::span<const Metrics>(tests));
  }
  return cell;
}

struct GridCell {
  Architecture arch;
  AlignmentMethod align;
  ModelSize size;
};

// Score and Concatenation per size; every cross-attention fusion per
// alignment and size.
inline std::vector<GridCell> experiment_grid(const std::vector<ModelSize>& sizes) {
  std::vector<GridCell> cells;
  for (auto a : {Architecture::Score, Architecture::Concatenation}) {
    for (auto s : sizes) cells.push_back({a, AlignmentMethod::Subwords, s});
  }
  for (auto a : {Architecture::ParaCrossAttn, Architecture::SemCrossAttn,
                 Architecture::SymmetricCrossAttn}) {
    for (auto al : {AlignmentMethod::Subwords, AlignmentMethod::Characters}) {
      for (auto s : sizes) cells.push_back({a, al, s});
    }
  }
  return cells;
}

inline std::vector<ModelSize> parse_sizes(const std::string& list) {
  std::vector<ModelSize> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_size(item));
  }
  if (out.empty()) throw ConfigError("--sizes is empty");
  return out;
}

template <typename T>
int run_train(const RunConfig& rc, std::optional<std::size_t> fold,
              bool all_folds, bool grid, std::ostream& out) {
  if (rc.bundle.empty()) throw ConfigError("--bundle is required");
  if (rc.out.empty()) throw ConfigError("--out is required");
  if (static_cast<int>(fold.has_value()) + all_folds + grid > 1) {
    throw ConfigError("--fold, --all-folds and --grid are mutually exclusive");
  }
  const auto records = read_bundle(rc.bundle);
  if (records.empty()) throw ConfigError("bundle has no segments");
  FoldPlan plan;
  try {
    plan = make_folds(std::span<const SegmentRecord>(records), rc.k, rc.folds_seed);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!all_folds && !grid && !fold) fold = 0;
  if (fold && *fold >= plan.folds.size()) {
    throw ConfigError("--fold " + std::to_string(*fold) + " out of range");
  }
  auto make_hyper = [&](const ModelConfig& cfg) {
    Hyper h{resolve_lr(rc, cfg), rc.batch_size, rc.epochs, rc.clip, rc.seed};
    try {
      h.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return h;
  };
  std::filesystem::create_directories(rc.out);

  nlohmann::json report;
  std::vector<nlohmann::json> history;
  const std::span<const SegmentRecord> view(records);
  const std::size_t width = records.front().h_p.cols();
  const nlohmann::json bundle_info = {{"segments", records.size()},
                                      {"d_p", records.front().h_p.cols()},
                                      {"d_s", records.front().h_s.cols()},
                                      {"k", plan.k},
                                      {"folds_seed", plan.seed}};
  if (grid) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : experiment_grid(parse_sizes(rc.sizes))) {
      const auto cfg = resolve_model(rc, c.arch, c.align, c.size, width);
      auto cell = train_cell<T>(cfg, make_hyper(cfg), view, plan, std::nullopt, "");
      out << fusion_label(c.arch) << " / " << to_string(c.align) << " / "
          << to_string(c.size) << ": UA "
          << cell.report["combined"]["ua"].template get<double>() << "\n";
      cells.push_back(std::move(cell.report));
      for (auto& h : cell.history) history.push_back(std::move(h));
    }
    report = {{"bundle", bundle_info}, {"grid", cells}};
  } else {
    const auto cfg = resolve_model(rc, parse_architecture(rc.arch),
                                   parse_alignment(rc.align), parse_size(rc.size),
                                   width);
    auto cell = train_cell<T>(cfg, make_hyper(cfg), view, plan,
                              all_folds ? std::nullopt : fold, rc.out);
    report = std::move(cell.report);
    report["bundle"] = bundle_info;
    history = std::move(cell.history);
    const auto& summary = all_folds ? report["combined"] : report["folds"][0]["test"];
    out << "UA " << summary["ua"].template get<double>() << "\n";
  }
  report["precision"] = rc.precision;
  write_file_atomic(std::filesystem::path(rc.out) / "report.json",
                    report.dump(2) + "\n");
  std::string lines;
  for (const auto& h : history) lines += h.dump() + "\n";
  write_file_atomic(std::filesystem::path(rc.out) / "history.jsonl", lines);
  return kOk;
}

inline nlohmann::json matrix_json(const Matrix<float>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<float>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

// One text row per result block, in the column layout of the result tables.
inline void render_report(const nlohmann::json& report, std::ostream& out) {
  struct Row {
    std::vector<std::string> cells;
  };
  std::vector<Row> rows;
  rows.push_back({{"Fusion", "Alignment", "Config.", "Train. p.", "ANG", "FEA",
                   "NEU", "POS", "Total"}});
  auto add_row = [&](const nlohmann::json& cell) {
    const auto cfg = config_from_json(cell.at("config"));
    const auto& metrics = cell.contains("combined") ? cell.at("combined")
                                                    : cell.at("folds").at(0).at("test");
    Row r;
    r.cells.push_back(fusion_label(cfg.architecture));
    r.cells.push_back(uses_attention(cfg.architecture)
                          ? "#" + std::string(to_string(cfg.alignment))
                          : "-");
    std::string size(to_string(cfg.size));
    size[0] = static_cast<char>(std::toupper(size[0]));
    r.cells.push_back(size);
    r.cells.push_back(format_params(cell.at("param_count").get<std::size_t>()));
    for (const auto& v : metrics.at("row_percent")) {
      char buf[32];
      if (v.is_null()) {
        std::snprintf(buf, sizeof buf, "-");
      } else {
        std::snprintf(buf, sizeof buf, "%.1f", v.get<double>());
      }
      r.cells.push_back(buf);
    }
    rows.push_back(std::move(r));
  };
  if (report.contains("grid")) {
    for (const auto& cell : report.at("grid")) add_row(cell);
  } else {
    add_row(report);
  }
  std::vector<std::size_t> widths(rows.front().cells.size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
      widths[i] = std::max(widths[i], r.cells[i].size());
    }
  }
  auto print = [&](const Row& r) {
    for (std::size_t i = 0; i < r.cells.size(); ++i) {
      if (i > 0) out << "  ";
      if (i < 4) {
        out << std::left << std::setw(static_cast<int>(widths[i])) << r.cells[i];
      } else {
        out << std::right << std::setw(static_cast<int>(widths[i])) << r.cells[i];
      }
    }
    out << "\n";
  };
  print(rows.front());
  std::size_t total = 0;
  for (auto w : widths) total += w + 2;
  out << std::string(total - 2, '-') << "\n";
  for (std::size_t i = 1; i < rows.size(); ++i) print(rows[i]);
}

}  // namespace detail

/// Entry point of the `emofuse` tool. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Multimodal late-fusion training over paralinguistic and "
               "semantic embeddings"};
  app.require_subcommand(1);
  RunConfig rc;

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic EMOB bundle");
  std::string preset = "partial";
  std::string spec_file;
  std::size_t width = 32, per_class = 200;
  double sigma = 0.5;
  std::uint64_t synth_seed = 7;
  synth->add_option("--preset", preset, "partial | corpus-scale")
      ->check(CLI::IsMember({"partial", "corpus-scale"}));
  synth->add_option("--spec", spec_file, "JSON generator spec (overrides preset)");
  synth->add_option("--width", width, "Embedding width of both modalities");
  synth->add_option("--per-class", per_class, "Segments per class");
  synth->add_option("--sigma", sigma, "Per-row noise standard deviation");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", rc.out, "Output bundle path")->required();

  // folds
  auto* folds = app.add_subcommand("folds", "Emit a speaker-disjoint fold plan");
  folds->add_option("--bundle", rc.bundle)->required();
  folds->add_option("--k", rc.k, "Number of folds");
  folds->add_option("--seed", rc.folds_seed, "Speaker shuffle seed");
  folds->add_option("--out", rc.out, "Output JSON path (default stdout)");

  // train
  auto* train = app.add_subcommand("train", "Train one fold, all folds or the grid");
  std::string config_file;
  std::optional<std::size_t> fold;
  bool all_folds = false, grid = false;
  train->add_option("--config", config_file, "JSON run config");
  train->add_option("--bundle", rc.bundle);
  train->add_option("--arch", rc.arch)
      ->check(CLI::IsMember({"unimodal-para", "unimodal-sem", "score", "concat",
                             "para", "sem", "symmetric"}));
  train->add_option("--align", rc.align)->check(CLI::IsMember({"subwords", "characters"}));
  train->add_option("--size", rc.size)->check(CLI::IsMember({"base", "large"}));
  train->add_option("--d-model", rc.d_model, "Override the preset width");
  train->add_option("--heads", rc.heads, "Override the preset head count");
  train->add_option("--lr", rc.lr, "Adam step size (default 1e-5, or 1e-3 below preset width)");
  train->add_option("--batch-size", rc.batch_size);
  train->add_option("--epochs", rc.epochs);
  train->add_option("--clip", rc.clip, "Global gradient-norm bound");
  train->add_option("--seed", rc.seed);
  train->add_option("--folds-seed", rc.folds_seed);
  train->add_option("--k", rc.k, "Number of folds");
  train->add_option("--precision", rc.precision)->check(CLI::IsMember({"f32", "f64"}));
  train->add_option("--fold", fold, "Train a single fold");
  train->add_flag("--all-folds", all_folds, "Train every fold and pool results");
  train->add_flag("--grid", grid, "Run the architecture x alignment x size grid");
  train->add_option("--sizes", rc.sizes, "Sizes for --grid, comma separated");
  train->add_option("--out", rc.out, "Output directory");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a saved model on a split");
  std::string model_path, split = "test";
  std::size_t eval_fold = 0;
  eval->add_option("--model", model_path)->required();
  eval->add_option("--bundle", rc.bundle)->required();
  eval->add_option("--split", split)->check(CLI::IsMember({"train", "validation", "test", "all"}));
  eval->add_option("--fold", eval_fold);
  eval->add_option("--folds-seed", rc.folds_seed);
  eval->add_option("--k", rc.k);
  eval->add_option("--out", rc.out, "Output JSON path (default stdout)");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every architecture");
  GradCheckCase gcase;
  double tol = 1e-4;
  gc->add_option("--d-model", gcase.d_model);
  gc->add_option("--heads", gcase.n_heads);
  gc->add_option("--subwords", gcase.n_subwords);
  gc->add_option("--frames", gcase.n_frames);
  gc->add_option("--seed", gcase.seed);
  gc->add_option("--tol", tol, "Maximum relative error");

  // align
  auto* al = app.add_subcommand("align", "Dump the aligned H_p of one segment");
  std::string segment;
  al->add_option("--bundle", rc.bundle)->required();
  al->add_option("--segment", segment)->required();
  al->add_option("--out", rc.out, "Output JSON path (default stdout)");

  // report
  auto* rep = app.add_subcommand("report", "Render report.json as a text table");
  std::string report_path;
  rep->add_option("--in", report_path, "report.json path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  auto emit = [&](const nlohmann::json& j) {
    if (rc.out.empty()) {
      out << j.dump(2) << "\n";
    } else {
      write_file_atomic(rc.out, j.dump(2) + "\n");
    }
  };

  try {
    if (synth->parsed()) {
      SynthSpec spec;
      if (!spec_file.empty()) {
        spec = detail::read_json(spec_file).get<SynthSpec>();
        if (synth->get_option("--seed")->count() > 0) spec.seed = synth_seed;
      } else {
        spec = preset == "corpus-scale" ? corpus_scale_preset(width)
                                       : partial_information_preset(width, per_class, sigma);
        if (preset == "corpus-scale") spec.sigma = sigma;
        spec.seed = synth_seed;
      }
      const auto records = synth_generate(spec);
      write_bundle(std::span<const SegmentRecord>(records), rc.out);
      out << "wrote " << records.size() << " segments to " << rc.out << "\n";
      return kOk;
    }
    if (folds->parsed()) {
      const auto records = read_bundle(rc.bundle);
      FoldPlan plan;
      try {
        plan = make_folds(std::span<const SegmentRecord>(records), rc.k, rc.folds_seed);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      emit(plan_to_json(plan));
      return kOk;
    }
    if (train->parsed()) {
      if (!config_file.empty()) detail::apply_config_file(*train, config_file, rc);
      if (rc.precision == "f64") {
        return detail::run_train<double>(rc, fold, all_folds, grid, out);
      }
      if (rc.precision != "f32") throw ConfigError("precision must be f32 or f64");
      return detail::run_train<float>(rc, fold, all_folds, grid, out);
    }
    if (eval->parsed()) {
      const auto model = load_model(model_path);
      const auto records = read_bundle(rc.bundle);
      detail::require_bundle_width<float>(model.config, std::span<const SegmentRecord>(records));
      const auto examples =
          build_examples<float>(std::span<const SegmentRecord>(records), model.config);
      std::vector<std::string> ids;
      if (split == "all") {
        for (const auto& r : records) ids.push_back(r.id);
      } else {
        FoldPlan plan;
        try {
          plan = make_folds(std::span<const SegmentRecord>(records), rc.k, rc.folds_seed);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
        if (eval_fold >= plan.folds.size()) throw ConfigError("--fold out of range");
        const auto& f = plan.folds[eval_fold];
        ids = split == "train" ? f.train : split == "validation" ? f.validation : f.test;
      }
      const auto selected = select_examples(std::span<const Example<float>>(examples),
                                            std::span<const std::string>(ids));
      auto j = metrics_to_json(
          evaluate(model, std::span<const Example<float>* const>(selected)));
      j["split"] = split;
      j["config"] = config_to_json(model.config);
      emit(j);
      return kOk;
    }
    if (gc->parsed()) {
      bool ok = true;
      for (auto a : kAllArchitectures) {
        const std::vector<AlignmentMethod> aligns =
            uses_attention(a) ? std::vector{AlignmentMethod::Subwords, AlignmentMethod::Characters}
                              : std::vector{AlignmentMethod::Subwords};
        for (auto m : aligns) {
          GradCheckCase c = gcase;
          c.architecture = a;
          c.alignment = m;
          const auto r = run_gradcheck(c);
          const bool pass = r.max_rel_error <= tol;
          ok = ok && pass;
          char line[160];
          std::snprintf(line, sizeof line, "%-4s %-14s %-10s max_rel_err=%.3e\n",
                        pass ? "PASS" : "FAIL", std::string(to_string(a)).c_str(),
                        std::string(to_string(m)).c_str(), r.max_rel_error);
          out << line;
        }
      }
      return ok ? kOk : kFailure;
    }
    if (al->parsed()) {
      const auto records = read_bundle(rc.bundle);
      auto it = std::find_if(records.begin(), records.end(),
                             [&](const SegmentRecord& r) { return r.id == segment; });
      if (it == records.end()) throw ConfigError("no segment " + segment);
      const std::span<const std::uint32_t> chars(it->char_lengths);
      nlohmann::json j = {
          {"id", it->id},
          {"n_frames", it->n_frames()},
          {"n_subwords", it->n_subwords()},
          {"char_lengths", it->char_lengths},
          {"subwords", detail::matrix_json(align_subwords(it->h_p, it->n_subwords()))},
          {"characters", detail::matrix_json(align_characters(it->h_p, chars))},
      };
      if (it->n_frames() >= it->n_subwords()) {
        j["subword_groups"] = subword_group_sizes(it->n_frames(), it->n_subwords());
        j["character_groups"] = character_group_sizes(it->n_frames(), chars);
      }
      emit(j);
      return kOk;
    }
    if (rep->parsed()) {
      detail::render_report(detail::read_json(report_path), out);
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "inconsistent configuration: " << e.what() << "\n";
    return kInconsistent;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace emofuse::cli
