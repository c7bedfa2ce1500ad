#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <thread>

#include "deepir/baselines.hpp"
#include "deepir/error.hpp"
#include "deepir/image_io.hpp"
#include "deepir/pipeline.hpp"
#include "deepir/weights.hpp"

namespace deepir::cli {

namespace {

using json = nlohmann::json;

const std::map<std::string, Axis> kAxisNames{{"cols", Axis::Columns}, {"rows", Axis::Rows}};
const std::map<std::string, Optimizer> kOptimizerNames{{"lbfgs", Optimizer::Lbfgs},
                                                       {"gd", Optimizer::GradientDescent}};
const std::map<std::string, InversionInit> kInitNames{{"urs", InversionInit::UrsResized},
                                                      {"random", InversionInit::RandomUniform}};

void check_epsilon(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ArgumentError("epsilon must be in (0,1]");
}

int extent_along(const Image& img, Axis axis) { return axis == Axis::Columns ? img.width() : img.height(); }

json scores_json(const Scores& s) { return {{"frr", s.frr}, {"fd", s.fd}}; }

/// DEEPIR_THREADS if set to a positive integer, otherwise the hardware count.
unsigned thread_cap() {
  if (const char* env = std::getenv("DEEPIR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path.string());
  os << doc.dump(2) << '\n';
  if (!os) throw Error("cannot write " + path.string());
}

struct PipelineFlags {
  std::vector<double> alphas{0.7, 0.8, 0.9};
  std::string op = "urs";
  int iterations = 200;
  double tolerance = 1e-5;
  Optimizer optimizer = Optimizer::Lbfgs;
  InversionInit init = InversionInit::UrsResized;
  int pm_iterations = 5;
  bool no_normalize = false;
  bool project_nonneg = false;
  bool search_resampled = false;
  std::optional<double> stage_timeout;

  void add_to(CLI::App& cmd, bool with_operator) {
    cmd.add_option("--alpha", alphas, "Fusion weights for levels 1,2,3")->delimiter(',')->expected(3);
    if (with_operator)
      cmd.add_option("--operator", op, "Feature-space resizing operator")
          ->check(CLI::IsMember({"urs", "scl", "cr", "sc", "colrm"}));
    cmd.add_option("--iterations", iterations, "Maximum inversion iterations per level")->check(CLI::PositiveNumber);
    cmd.add_option("--tolerance", tolerance, "Relative loss decrease that stops inversion");
    cmd.add_option("--optimizer", optimizer, "Inversion optimizer")
        ->transform(CLI::CheckedTransformer(kOptimizerNames, CLI::ignore_case));
    cmd.add_option("--init", init, "Inversion starting point")
        ->transform(CLI::CheckedTransformer(kInitNames, CLI::ignore_case));
    cmd.add_option("--patchmatch-iterations", pm_iterations, "PatchMatch rounds per level")
        ->check(CLI::NonNegativeNumber);
    cmd.add_flag("--no-normalize", no_normalize, "Match raw rather than L2-normalized features");
    cmd.add_flag("--project-nonneg", project_nonneg, "Clamp inversion iterates to be non-negative");
    cmd.add_flag("--search-resampled", search_resampled,
                 "Find the resampled-feature field by PatchMatch instead of the operator's index map");
    cmd.add_option("--stage-timeout", stage_timeout, "Abort when a pipeline stage takes longer (seconds)");
  }

  RetargetConfig config(double epsilon, Axis axis, std::uint64_t seed) const {
    RetargetConfig cfg;
    cfg.epsilon = epsilon;
    cfg.axis = axis;
    std::copy(alphas.begin(), alphas.end(), cfg.alphas.begin());
    cfg.seed = seed;
    cfg.op = *parse_operator(op);
    cfg.inversion.max_iterations = iterations;
    cfg.inversion.tolerance = tolerance;
    cfg.inversion.optimizer = optimizer;
    cfg.inversion.init = init;
    cfg.inversion.project_nonneg = project_nonneg;
    cfg.patchmatch_iterations = pm_iterations;
    cfg.normalize_features = !no_normalize;
    cfg.search_resampled = search_resampled;
    cfg.stage_timeout_seconds = stage_timeout;
    return cfg;
  }
};

struct RetargetCommand {
  std::filesystem::path input, weights, output;
  double epsilon = 0.0;
  Axis axis = Axis::Columns;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> dump_dir, report;
  bool no_metrics = false;
  PipelineFlags flags;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("retarget", "Retarget an image with the feature-space pipeline");
    cmd->add_option("--input", input, "Input PNG or JPEG")->required();
    cmd->add_option("--weights", weights, "Backbone weights (DIRW)")->required();
    cmd->add_option("--epsilon", epsilon, "Retargeting ratio in (0,1]")->required();
    cmd->add_option("--axis", axis, "Axis to shrink")->transform(CLI::CheckedTransformer(kAxisNames));
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--dump-intermediate", dump_dir, "Directory for per-level features, fields and loss traces");
    cmd->add_option("--report", report, "Write metrics and stage timings as JSON");
    cmd->add_flag("--no-metrics", no_metrics, "Skip FRR/FD scoring");
    cmd->add_option("--output", output, "Output PNG")->required();
    flags.add_to(*cmd, true);
    cmd->callback([this] { run(); });
  }

  void run() const {
    RetargetConfig cfg = flags.config(epsilon, axis, seed);
    cfg.dump_dir = dump_dir;
    cfg.compute_metrics = report.has_value() && !no_metrics;
    cfg.validate();
    const Image img = read_image(input);
    const WeightsBundle w = load_weights(weights);
    const RetargetResult result = retarget(img, w, cfg);
    write_png(output, result.image);
    if (report) {
      json timings = json::object();
      for (const auto& t : result.timings) timings[t.stage] = t.millis;
      write_json(*report, {{"height", result.image.height()},
                           {"width", result.image.width()},
                           {"metrics", scores_json(result.metrics)},
                           {"timings_ms", timings}});
    }
  }
};

struct BaselineCommand {
  std::string method;
  std::filesystem::path input, output;
  double epsilon = 0.0;
  Axis axis = Axis::Columns;
  std::optional<int> crop_offset;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("baseline", "Retarget an image with a pixel-space baseline");
    cmd->add_option("--method", method, "Baseline operator")
        ->required()
        ->check(CLI::IsMember({"scl", "cr", "sc", "colrm"}));
    cmd->add_option("--epsilon", epsilon, "Retargeting ratio in (0,1]")->required();
    cmd->add_option("--input", input, "Input PNG or JPEG")->required();
    cmd->add_option("--output", output, "Output PNG")->required();
    cmd->add_option("--axis", axis, "Axis to shrink")->transform(CLI::CheckedTransformer(kAxisNames));
    cmd->add_option("--crop-offset", crop_offset, "Manual crop window start (cr only)");
    cmd->callback([this] { run(); });
  }

  void run() const {
    check_epsilon(epsilon);
    if (crop_offset && method != "cr") throw ArgumentError("--crop-offset applies to --method cr only");
    const Image img = read_image(input);
    const int target = retargeted_extent(epsilon, extent_along(img, axis));
    if (target < 1) throw ArgumentError("epsilon leaves no columns");
    Image out;
    if (method == "scl") out = scl(img, target, axis).result;
    else if (method == "cr") out = crop(img, target, axis, crop_offset).result;
    else if (method == "sc") out = seam_carve(img, target, axis).result;
    else out = column_removal(img, target, axis).result;
    write_png(output, out);
  }
};

struct MetricsCommand {
  std::filesystem::path original, retargeted, weights;

  void attach(CLI::App& app, std::ostream& out) {
    auto* cmd = app.add_subcommand("metrics", "Score a retargeted image against its original");
    cmd->add_option("--original", original, "Original image")->required();
    cmd->add_option("--retargeted", retargeted, "Retargeted image")->required();
    cmd->add_option("--weights", weights, "Backbone weights (DIRW)")->required();
    cmd->callback([this, &out] { out << scores_json(run()).dump() << '\n'; });
  }

  Scores run() const {
    const Image a = read_image(original);
    const Image b = read_image(retargeted);
    const WeightsBundle w = load_weights(weights);
    if (std::min(b.height(), b.width()) < kMinImageExtent)
      throw ArgumentError("retargeted image is smaller than " + std::to_string(kMinImageExtent) + " px");
    return evaluate(a, b, w);
  }
};

struct CompareCommand {
  std::filesystem::path input, weights, out_dir;
  double epsilon = 0.0;
  Axis axis = Axis::Columns;
  std::uint64_t seed = 0;
  PipelineFlags flags;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("compare", "Run the pipeline with every feature operator and score the results");
    cmd->add_option("--input", input, "Input PNG or JPEG")->required();
    cmd->add_option("--epsilon", epsilon, "Retargeting ratio in (0,1]")->required();
    cmd->add_option("--weights", weights, "Backbone weights (DIRW)")->required();
    cmd->add_option("--out-dir", out_dir, "Directory for outputs, grid.png and scores.json")->required();
    cmd->add_option("--axis", axis, "Axis to shrink")->transform(CLI::CheckedTransformer(kAxisNames));
    cmd->add_option("--seed", seed, "Random seed");
    flags.add_to(*cmd, false);
    cmd->callback([this] { run(); });
  }

  struct Outcome {
    Image image;
    Scores scores;
    long long millis = 0;
  };

  void run() const {
    RetargetConfig base = flags.config(epsilon, axis, seed);
    base.validate();
    const Image img = read_image(input);
    const WeightsBundle w = load_weights(weights);
    std::filesystem::create_directories(out_dir);

    auto job = [&](FeatureOperator op) {
      RetargetConfig cfg = base;
      cfg.op = op;
      const auto start = std::chrono::steady_clock::now();
      RetargetResult r = retarget(img, w, cfg);
      const auto elapsed = std::chrono::steady_clock::now() - start;
      return Outcome{std::move(r.image), r.metrics,
                     std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count()};
    };

    constexpr std::size_t n = std::size(kAllFeatureOperators);
    std::vector<Outcome> outcomes(n);
    const std::size_t batch = std::min<std::size_t>(thread_cap(), n);
    for (std::size_t first = 0; first < n; first += batch) {
      std::vector<std::future<Outcome>> running;
      for (std::size_t k = first; k < std::min(n, first + batch); ++k)
        running.push_back(std::async(batch > 1 ? std::launch::async : std::launch::deferred, job,
                                     kAllFeatureOperators[k]));
      for (std::size_t k = 0; k < running.size(); ++k) outcomes[first + k] = running[k].get();
    }

    json scores = json::object();
    std::vector<Image> panels{img};
    for (std::size_t k = 0; k < n; ++k) {
      const std::string name(operator_name(kAllFeatureOperators[k]));
      write_png(out_dir / (name + ".png"), outcomes[k].image);
      scores[name] = {{"frr", outcomes[k].scores.frr}, {"fd", outcomes[k].scores.fd}, {"millis", outcomes[k].millis}};
      panels.push_back(outcomes[k].image);
    }
    write_png(out_dir / "grid.png", hstack(panels));
    write_json(out_dir / "scores.json", scores);
  }
};

struct MakeWeightsCommand {
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int divisor = 1;

  void attach(CLI::App& app) {
    auto* cmd = app.add_subcommand("make-weights", "Write randomly initialized backbone weights (DIRW)");
    cmd->add_option("--out", out, "Output DIRW path")->required();
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--width-divisor", divisor, "Divide every layer width by this power of two");
    cmd->callback([this] { save_weights(out, make_random_weights(seed, divisor)); });
  }
};

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app("Content-aware image retargeting in deep feature space", "deepir");
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI file");

  RetargetCommand retarget_cmd;
  BaselineCommand baseline_cmd;
  MetricsCommand metrics_cmd;
  CompareCommand compare_cmd;
  MakeWeightsCommand make_weights_cmd;
  retarget_cmd.attach(app);
  baseline_cmd.attach(app);
  metrics_cmd.attach(app, out);
  compare_cmd.attach(app);
  make_weights_cmd.attach(app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name

  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // Subcommand callbacks run inside parse; their errors surface below.
    err << "deepir: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << "deepir: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "deepir: " << e.what() << '\n';
    return kExitProcessing;
  }
  return kExitOk;
}

}  // namespace deepir::cli
