#include "chartlab/cli.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "chartlab/formats.hpp"
#include "chartlab/geodesic.hpp"
#include "chartlab/manifold.hpp"
#include "chartlab/neural.hpp"
#include "chartlab/parallel.hpp"
#include "chartlab/synth.hpp"

namespace chartlab {
namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { Int, Real, Text, Flag };

struct OptionSpec {
  std::string name;  // long flag without dashes, also the config-file key
  Kind kind;
  Json fallback;     // null: no default
  std::string help;
};

// Options shared by several subcommands.
const OptionSpec kWindow[] = {
    {"tau-min", Kind::Int, nullptr, "first time tap (1-based); default 1"},
    {"tau-max", Kind::Int, nullptr, "last time tap (1-based); default N_sub"},
};
const OptionSpec kKeep = {"keep-arrays", Kind::Text, nullptr, "comma-separated 1-based arrays to keep"};
const OptionSpec kEmbed[] = {
    {"method", Kind::Text, "isomap", "mds, isomap, sammon or tsne"},
    {"iterations", Kind::Int, nullptr, "optimizer iterations"},
    {"learning-rate", Kind::Real, nullptr, "step size (method default when omitted)"},
    {"momentum", Kind::Real, nullptr, "optimizer momentum"},
    {"perplexity", Kind::Real, nullptr, "t-SNE perplexity"},
    {"tolerance", Kind::Real, nullptr, "relative stopping tolerance"},
    {"early-exaggeration", Kind::Flag, false, "t-SNE early exaggeration"},
};

std::vector<OptionSpec> options_for(const std::string& cmd) {
  std::vector<OptionSpec> o;
  auto add = [&](std::initializer_list<OptionSpec> list) { o.insert(o.end(), list); };
  auto add_window = [&] { o.insert(o.end(), std::begin(kWindow), std::end(kWindow)); };
  auto add_embed = [&] { o.insert(o.end(), std::begin(kEmbed), std::end(kEmbed)); };
  auto add_dissim = [&] {
    add({{"metric", Kind::Text, "adp", "euc, time, cira, cs, adp, dl or fuse"},
         {"gamma", Kind::Text, "12", "fuse scale in units per second, or auto"},
         {"t-thresh", Kind::Real, 2.0, "time threshold for gamma calibration, seconds"},
         {"model", Kind::Text, nullptr, "learned dissimilarity model (CCNN1) for metric dl"}});
    add_window();
    o.push_back(kKeep);
  };
  if (cmd == "synth") {
    add({{"scene", Kind::Text, nullptr, "scene JSON; default desk scene"},
         {"trajectory", Kind::Text, nullptr, "trajectory JSON; default desk trajectory"},
         {"seed", Kind::Int, nullptr, "overrides the scene and trajectory seeds"},
         {"out", Kind::Text, nullptr, "output dataset (CCDS1)"}});
  } else if (cmd == "dissim") {
    add({{"in", Kind::Text, nullptr, "input dataset (CCDS1)"}, {"out", Kind::Text, nullptr, "output matrix (CCDM1)"}});
    add_dissim();
  } else if (cmd == "geodesic") {
    add({{"in", Kind::Text, nullptr, "input matrix (CCDM1)"},
         {"out", Kind::Text, nullptr, "output matrix (CCDM1)"},
         {"k", Kind::Int, 20, "neighbors per node"},
         {"repair", Kind::Flag, false, "join disconnected components"}});
  } else if (cmd == "chart") {
    add({{"in", Kind::Text, nullptr, "input matrix (CCDM1)"},
         {"out", Kind::Text, nullptr, "output chart (CCCH1)"},
         {"k", Kind::Int, 20, "Isomap neighbors when the input is not geodesic"},
         {"seed", Kind::Int, 0, "initialization seed"}});
    add_embed();
  } else if (cmd == "train") {
    add({{"data", Kind::Text, nullptr, "training dataset (CCDS1)"},
         {"matrix", Kind::Text, nullptr, "dissimilarity matrix (CCDM1) for siamese and triplet"},
         {"loss", Kind::Text, "siamese", "siamese, triplet or dissimilarity"},
         {"out", Kind::Text, nullptr, "output model (CCNN1)"},
         {"chart-out", Kind::Text, nullptr, "also write the chart of the training set (CCCH1)"},
         {"hidden", Kind::Text, nullptr, "comma-separated hidden layer sizes"},
         {"no-batch-norm", Kind::Flag, false, "disable batch normalization"},
         {"epochs", Kind::Int, nullptr, "training epochs"},
         {"batch-size", Kind::Int, nullptr, "samples per batch"},
         {"learning-rate", Kind::Real, nullptr, "Adam step size"},
         {"seed", Kind::Int, 0, "seed for initialization and sampling"},
         {"margin", Kind::Real, nullptr, "triplet margin"},
         {"q-start", Kind::Real, nullptr, "initial triplet quantile"},
         {"q-end", Kind::Real, nullptr, "final triplet quantile"},
         {"alpha", Kind::Real, nullptr, "dissimilarity model: pair time limit, seconds"},
         {"beta", Kind::Real, nullptr, "dissimilarity model: loss offset, seconds"}});
    add_window();
    o.push_back(kKeep);
  } else if (cmd == "eval") {
    add({{"data", Kind::Text, nullptr, "dataset with ground-truth positions (CCDS1)"},
         {"chart", Kind::Text, nullptr, "chart to evaluate (CCCH1)"},
         {"matrix", Kind::Text, nullptr, "dissimilarity matrix to evaluate (CCDM1)"},
         {"K", Kind::Int, 0, "neighborhood size; 0 selects round(0.05 L)"},
         {"out", Kind::Text, nullptr, "report JSON"},
         {"table", Kind::Text, nullptr, "report table (text)"}});
  } else if (cmd == "plot") {
    add({{"data", Kind::Text, nullptr, "dataset with ground-truth positions (CCDS1)"},
         {"chart", Kind::Text, nullptr, "chart (CCCH1)"},
         {"out", Kind::Text, nullptr, "output SVG"}});
  } else if (cmd == "pipeline") {
    add({{"out-dir", Kind::Text, "chartlab-out", "directory for all artifacts"},
         {"data", Kind::Text, nullptr, "use this dataset instead of synthesizing one"},
         {"scene", Kind::Text, nullptr, "scene JSON; default desk scene"},
         {"trajectory", Kind::Text, nullptr, "trajectory JSON; default desk trajectory"},
         {"seed", Kind::Int, 0, "embedding seed"},
         {"synth-seed", Kind::Int, nullptr, "overrides the scene and trajectory seeds"},
         {"k", Kind::Int, 20, "neighbors per node"},
         {"repair", Kind::Flag, false, "join disconnected components"},
         {"K", Kind::Int, 0, "evaluation neighborhood size; 0 selects round(0.05 L)"}});
    add_dissim();
    add_embed();
  }
  return o;
}

const std::vector<std::string> kCommands = {"synth", "dissim", "geodesic", "chart", "train", "eval", "plot", "pipeline"};

const std::map<std::string, std::string> kCommandHelp = {
    {"synth", "generate a synthetic CSI dataset"},
    {"dissim", "compute a pairwise dissimilarity matrix"},
    {"geodesic", "lift a matrix to k-NN shortest-path distances"},
    {"chart", "embed a matrix into a 2-D channel chart"},
    {"train", "train a chart function or a learned dissimilarity"},
    {"eval", "score a chart or matrix against ground truth"},
    {"plot", "render chart and ground truth as SVG"},
    {"pipeline", "synth, dissim, geodesic, chart, eval and plot in one run"},
};

Json preset(const std::string& name) {
  if (name != "paper-desk") throw UsageError("unknown preset '" + name + "' (available: paper-desk)");
  const TapWindow w = default_tap_window(SceneSpec::desk());
  return {{"metric", "fuse"}, {"gamma", "auto"}, {"t-thresh", 2.0}, {"tau-min", w.tau_min}, {"tau-max", w.tau_max},
          {"k", 20},          {"repair", true},  {"method", "isomap"}};
}

Json coerce(const OptionSpec& spec, const Json& v) {
  const std::string where = "option --" + spec.name;
  switch (spec.kind) {
    case Kind::Flag:
      if (v.is_boolean()) return v;
      throw UsageError(where + " expects true or false");
    case Kind::Text:
      if (v.is_string()) return v;
      if (v.is_number()) return v.dump();
      throw UsageError(where + " expects a string");
    case Kind::Int:
      if (v.is_number_integer()) return v;
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        long long n = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec == std::errc() && end == s.data() + s.size()) return n;
      }
      throw UsageError(where + " expects an integer");
    case Kind::Real:
      if (v.is_number()) return v.get<double>();
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        try {
          std::size_t used = 0;
          const double d = std::stod(s, &used);
          if (used == s.size()) return d;
        } catch (const std::exception&) {
        }
      }
      throw UsageError(where + " expects a number");
  }
  return v;
}

// Effective settings: defaults, then preset, then config file, then flags.
struct Settings {
  Json v = Json::object();

  bool has(const std::string& k) const { return v.contains(k) && !v[k].is_null(); }
  std::string text(const std::string& k) const { return v.at(k).get<std::string>(); }
  long long integer(const std::string& k) const { return v.at(k).get<long long>(); }
  double real(const std::string& k) const { return v.at(k).get<double>(); }
  bool flag(const std::string& k) const { return has(k) && v.at(k).get<bool>(); }
  std::string path(const std::string& k) const {
    if (!has(k)) throw UsageError("missing required option --" + k);
    return text(k);
  }
};

std::vector<int> parse_list(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) {
    int n = 0;
    const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
    if (tok.empty() || ec != std::errc() || end != tok.data() + tok.size())
      throw UsageError(what + " must be a comma-separated list of integers");
    out.push_back(n);
  }
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

Json read_json(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw DataError("cannot open " + p.string());
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::trunc);
  if (!f) throw DataError("cannot open " + p.string() + " for writing");
  f << s;
}

CsiDataset load_dataset(const Settings& s, const std::string& key) {
  CsiDataset ds = read_dataset(s.path(key));
  if (s.has("keep-arrays")) {
    std::vector<int> keep = parse_list(s.text("keep-arrays"), "--keep-arrays");
    for (int& b : keep) {
      if (b < 1 || b > ds.arrays())
        throw std::invalid_argument("--keep-arrays entry " + std::to_string(b) + " is outside 1.." +
                                    std::to_string(ds.arrays()));
      b -= 1;
    }
    ds = drop_arrays(ds, keep);
  }
  return ds;
}

TapWindow window_of(const Settings& s, Index taps) {
  TapWindow w{1, static_cast<int>(taps)};
  if (s.has("tau-min")) w.tau_min = static_cast<int>(s.integer("tau-min"));
  if (s.has("tau-max")) w.tau_max = static_cast<int>(s.integer("tau-max"));
  w.validate(taps);
  return w;
}

Json window_json(const TapWindow& w) { return {{"tau_min", w.tau_min}, {"tau_max", w.tau_max}}; }

// Each step reads and writes files only, so the pipeline and the individual
// subcommands run exactly the same code.

Json step_synth(const Settings& s) {
  SceneSpec scene = s.has("scene") ? scene_from_json(read_json(s.text("scene"))) : SceneSpec::desk();
  TrajectorySpec traj =
      s.has("trajectory") ? trajectory_from_json(read_json(s.text("trajectory"))) : TrajectorySpec::desk();
  if (s.has("seed")) scene.seed = traj.seed = static_cast<std::uint64_t>(s.integer("seed"));
  const CsiDataset ds = synthesize_csi(scene, generate_trajectory(traj));
  write_dataset(s.path("out"), ds);
  return {{"L", ds.size()},
          {"arrays", ds.arrays()},
          {"antennas", ds.antennas()},
          {"subcarriers", ds.subcarriers()},
          {"diameter", scene.diameter()},
          {"tap_window", window_json(default_tap_window(scene))}};
}

Json step_dissim(const Settings& s) {
  const CsiDataset ds = load_dataset(s, "in");
  Metric metric;
  try {
    metric = parse_metric(s.text("metric"));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  PairwiseParams p;
  p.window = window_of(s, ds.subcarriers());
  p.fuse.t_thresh = s.real("t-thresh");
  Json log = {{"window", window_json(p.window)}};
  std::unique_ptr<Mlp> model;
  if (metric == Metric::Dl) {
    model = std::make_unique<Mlp>(read_model(s.path("model")));
    p.dl_model = model.get();
  }

  DissimilarityMatrix D;
  if (metric == Metric::Fuse) {
    const DissimilarityMatrix adp = pairwise_matrix(ds, Metric::Adp, p);
    const DissimilarityMatrix time = pairwise_matrix(ds, Metric::Time, p);
    const std::string g = s.text("gamma");
    if (g == "auto") {
      const GammaCalibration cal = calibrate_gamma(ds, adp, p.fuse.t_thresh);
      p.fuse.gamma = cal.gamma;
      log["calibration"] = {{"pairs", cal.pairs},
                            {"bin_width", cal.bin_width},
                            {"low_mode", cal.low_mode},
                            {"high_mode", cal.high_mode},
                            {"valley", cal.valley}};
    } else {
      p.fuse.gamma = coerce({"gamma", Kind::Real, nullptr, ""}, g).get<double>();
      if (!(p.fuse.gamma > 0)) throw UsageError("--gamma must be positive or auto");
    }
    log["gamma"] = p.fuse.gamma;
    D = fuse_matrices(adp, time, p.fuse);
  } else {
    D = pairwise_matrix(ds, metric, p);
  }
  Json params = {{"window", window_json(p.window)}};
  if (metric == Metric::Fuse) params["gamma"] = p.fuse.gamma;
  if (s.has("keep-arrays")) params["keep_arrays"] = s.text("keep-arrays");
  write_matrix(s.path("out"), D, params);
  log["metric_tag"] = D.tag.str();
  log["L"] = D.size();
  return log;
}

Json step_geodesic(const Settings& s) {
  const DissimilarityMatrix D = read_matrix(s.path("in"));
  const Index k = s.integer("k");
  const KnnGraph g0 = build_knn_graph(D, k);
  const auto sizes = component_sizes(g0);
  const DissimilarityMatrix G = geodesic(D, {k, s.flag("repair")});
  write_matrix(s.path("out"), G, {{"k", k}, {"repair", s.flag("repair")}});
  return {{"metric_tag", G.tag.str()}, {"L", G.size()}, {"k", k}, {"components", sizes.size()}};
}

EmbedConfig embed_config(const Settings& s, const std::string& method) {
  EmbedConfig cfg;
  try {
    cfg = default_embed_config(method);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (s.has("iterations")) cfg.iterations = static_cast<int>(s.integer("iterations"));
  if (s.has("learning-rate")) cfg.learning_rate = s.real("learning-rate");
  if (s.has("momentum")) cfg.momentum = s.real("momentum");
  if (s.has("perplexity")) cfg.perplexity = s.real("perplexity");
  if (s.has("tolerance")) cfg.tolerance = s.real("tolerance");
  cfg.early_exaggeration = s.flag("early-exaggeration");
  cfg.seed = static_cast<std::uint64_t>(s.integer("seed"));
  return cfg;
}

Json step_chart(const Settings& s) {
  const DissimilarityMatrix D = read_matrix(s.path("in"));
  const std::string method = s.text("method");
  const ChannelChart chart = embed(method, D, embed_config(s, method), s.integer("k"));
  write_chart(s.path("out"), chart);
  return {{"method", chart.method},
          {"metric_tag", chart.metric_tag},
          {"accepted_steps", chart.objective_trace.empty() ? 0 : chart.objective_trace.size() - 1},
          {"objective", chart.objective_trace.empty() ? Json(nullptr) : Json(chart.objective_trace.back())},
          {"warnings", chart.warnings}};
}

Json step_train(const Settings& s) {
  const CsiDataset ds = load_dataset(s, "data");
  const std::string loss = s.text("loss");
  const TapWindow w = window_of(s, ds.subcarriers());
  std::vector<Index> hidden;
  if (s.has("hidden"))
    for (int h : parse_list(s.text("hidden"), "--hidden")) hidden.push_back(h);

  TrainResult result;
  if (loss == "siamese" || loss == "triplet") {
    ChartTrainConfig cfg;
    cfg.window = w;
    if (!hidden.empty()) cfg.hidden = hidden;
    cfg.batch_norm = !s.flag("no-batch-norm");
    if (s.has("epochs")) cfg.epochs = static_cast<int>(s.integer("epochs"));
    if (s.has("batch-size")) cfg.batch_size = s.integer("batch-size");
    if (s.has("learning-rate")) cfg.learning_rate = s.real("learning-rate");
    if (s.has("margin")) cfg.margin = s.real("margin");
    if (s.has("q-start")) cfg.q_start = s.real("q-start");
    if (s.has("q-end")) cfg.q_end = s.real("q-end");
    cfg.seed = static_cast<std::uint64_t>(s.integer("seed"));
    const DissimilarityMatrix D = read_matrix(s.path("matrix"));
    result = loss == "siamese" ? train_siamese(ds, D, cfg) : train_triplet(ds, D, cfg);
  } else if (loss == "dissimilarity") {
    DlTrainConfig cfg;
    cfg.window = w;
    if (!hidden.empty()) cfg.hidden = hidden;
    cfg.batch_norm = !s.flag("no-batch-norm");
    if (s.has("epochs")) cfg.epochs = static_cast<int>(s.integer("epochs"));
    if (s.has("batch-size")) cfg.batch_size = s.integer("batch-size");
    if (s.has("learning-rate")) cfg.learning_rate = s.real("learning-rate");
    if (s.has("alpha")) cfg.alpha = s.real("alpha");
    if (s.has("beta")) cfg.beta = s.real("beta");
    cfg.seed = static_cast<std::uint64_t>(s.integer("seed"));
    result = train_dissimilarity_model(ds, cfg);
  } else {
    throw UsageError("--loss must be siamese, triplet or dissimilarity");
  }
  write_model(s.path("out"), result.model);
  if (s.has("chart-out")) {
    if (loss == "dissimilarity") throw UsageError("--chart-out needs a chart model (siamese or triplet)");
    write_chart(s.text("chart-out"), predict_chart(result.model, ds));
  }
  return {{"loss", loss}, {"parameters", result.model.parameter_count()}, {"epoch_loss", result.epoch_loss}};
}

Json step_eval(const Settings& s) {
  const Points2 truth = read_dataset(s.path("data")).positions();
  if (s.has("chart") == s.has("matrix")) throw UsageError("eval needs exactly one of --chart and --matrix");
  const Index K = s.integer("K");
  const EvalReport r = s.has("chart") ? evaluate_chart(truth, read_chart(s.text("chart")), K)
                                      : evaluate_matrix(truth, read_matrix(s.text("matrix")), K);
  const Json j = r.to_json();
  if (s.has("out")) write_text(s.text("out"), j.dump(2) + "\n");
  if (s.has("table")) write_text(s.text("table"), report_tables({r}));
  Json log = j;
  log.erase("error_cdf");
  return log;
}

Json step_plot(const Settings& s) {
  const Points2 truth = read_dataset(s.path("data")).positions();
  plot_chart(read_chart(s.path("chart")), truth, s.path("out"));
  return {{"points", truth.rows()}};
}

Json step_pipeline(const Settings& s) {
  const fs::path dir = s.text("out-dir");
  fs::create_directories(dir);
  auto with = [&](Json extra) {
    Settings t = s;
    for (auto& [k, v] : extra.items()) t.v[k] = v;
    return t;
  };
  const std::string data = s.has("data") ? s.text("data") : (dir / "dataset.ccds").string();
  Json log;
  if (!s.has("data")) {
    log["synth"] = step_synth(with({{"out", data}, {"seed", s.has("synth-seed") ? s.v["synth-seed"] : Json(nullptr)}}));
  }
  const std::string m = (dir / "dissimilarity.ccdm").string(), g = (dir / "geodesic.ccdm").string();
  const std::string c = (dir / "chart.ccch").string();
  log["dissim"] = step_dissim(with({{"in", data}, {"out", m}}));
  log["geodesic"] = step_geodesic(with({{"in", m}, {"out", g}}));
  log["chart"] = step_chart(with({{"in", g}, {"out", c}}));
  log["eval"] = step_eval(with({{"data", data},
                                {"chart", c},
                                {"matrix", nullptr},
                                {"out", (dir / "eval.json").string()},
                                {"table", (dir / "table.txt").string()}}));
  log["plot"] = step_plot(with({{"data", data}, {"chart", c}, {"out", (dir / "chart.svg").string()}}));
  return log;
}

Json dispatch(const std::string& cmd, const Settings& s) {
  if (cmd == "synth") return step_synth(s);
  if (cmd == "dissim") return step_dissim(s);
  if (cmd == "geodesic") return step_geodesic(s);
  if (cmd == "chart") return step_chart(s);
  if (cmd == "train") return step_train(s);
  if (cmd == "eval") return step_eval(s);
  if (cmd == "plot") return step_plot(s);
  return step_pipeline(s);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Channel charting toolkit", "chartlab"};
  app.require_subcommand(1);
  int threads = 0;
  std::string config_path, preset_name;
  app.add_option("--threads", threads, "worker threads (default CHARTLAB_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--config", config_path, "JSON settings keyed by long option name");
  app.add_option("--preset", preset_name, "named defaults: paper-desk");

  std::map<std::string, std::vector<OptionSpec>> specs;
  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, CLI::Option*>> handles;
  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd, kCommandHelp.at(cmd));
    sub->fallthrough();
    specs[cmd] = options_for(cmd);
    for (const auto& spec : specs[cmd]) {
      std::string help = spec.help;
      if (!spec.fallback.is_null() && spec.kind != Kind::Flag)
        help += " [" + (spec.fallback.is_string() ? spec.fallback.get<std::string>() : spec.fallback.dump()) + "]";
      handles[cmd][spec.name] = spec.kind == Kind::Flag ? sub->add_flag("--" + spec.name)->description(help)
                                                        : sub->add_option("--" + spec.name, raw[cmd][spec.name], help);
    }
  }

  auto usage = [&](const std::string& msg) {
    err << "chartlab: error: " << msg << "\n" << app.help();
    return 1;
  };

  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage(e.what());
  }

  std::string cmd;
  for (const auto* sub : app.get_subcommands()) cmd = sub->get_name();
  try {
    Settings s;
    std::map<std::string, const OptionSpec*> known;
    for (const auto& spec : specs[cmd]) {
      known[spec.name] = &spec;
      if (!spec.fallback.is_null()) s.v[spec.name] = spec.fallback;
    }
    if (!preset_name.empty()) {
      const Json bundle = preset(preset_name);
      for (auto& [k, v] : bundle.items())
        if (known.count(k)) s.v[k] = v;
    }
    if (!config_path.empty()) {
      Json cfg;
      try {
        cfg = read_json(config_path);
      } catch (const DataError& e) {
        throw UsageError(std::string("config: ") + e.what());
      }
      if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
      for (auto& [k, v] : cfg.items()) {
        if (!known.count(k)) throw UsageError("config key '" + k + "' is not an option of " + cmd);
        s.v[k] = coerce(*known[k], v);
      }
    }
    for (const auto& spec : specs[cmd]) {
      if (handles[cmd][spec.name]->count() == 0) continue;
      s.v[spec.name] = spec.kind == Kind::Flag ? Json(true) : coerce(spec, raw[cmd][spec.name]);
    }
    if (threads > 0) set_thread_count(threads);

    Json log = {{"command", cmd}, {"threads", thread_count()}};
    log["config"] = s.v;
    log["results"] = dispatch(cmd, s);
    out << log.dump() << "\n";
    return 0;
  } catch (const UsageError& e) {
    return usage(e.what());
  } catch (const NumericalError& e) {
    err << "chartlab: numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "chartlab: data error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace chartlab
