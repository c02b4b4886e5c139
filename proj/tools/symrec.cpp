// Command-line front end: pipeline stages, one-off classification, the HTTP
// worker and a few inspection helpers.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "symrec/symrec.hpp"

namespace fs = std::filesystem;
using namespace symrec;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool reference_mode = false;
  unsigned threads = 0;
  std::string root;
  std::string equivalences;
  bool quiet = false;
};

void print_warnings(const Diagnostics& diag, bool quiet) {
  if (quiet) return;
  for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
}

RunOptions run_options(const GlobalOptions& g) {
  RunOptions o;
  o.seed = g.seed;
  o.reference_mode = g.reference_mode;
  o.threads = g.threads;
  if (!g.equivalences.empty()) o.equivalences = g.equivalences;
  return o;
}

ExperimentConfig load_config(const GlobalOptions& g) {
  if (g.config.empty()) throw ConfigError("--config is required for this command");
  return parse_config(g.config, project_root(g.root.empty() ? std::nullopt : std::optional<fs::path>(g.root)));
}

void print_report(const ErrorReport& r) {
  std::printf("TOP1  %6.2f %%\nTOP3  %6.2f %%\nMER   %6.2f %%\ncases %zu\n", 100 * r.top1, 100 * r.top3, 100 * r.mer,
              r.cases);
}

// Rows from smallest y (top of the writing area) downwards.
std::string text_grid(const Recording& rec, int n) {
  const auto grid = bitmap(rec, n);
  std::string out;
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) out += grid[static_cast<std::size_t>(row * n + col)] > 0 ? "##" : "  ";
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online handwritten symbol recognition toolkit"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("-c,--config", g.config, "experiment file or stage info.yml");
  app.add_option("--seed", g.seed, "override the configured seed");
  app.add_flag("--reference-mode", g.reference_mode, "single-threaded, bit-reproducible run");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
  app.add_option("--root", g.root, "project root for data-source paths (default: $SYMREC_ROOT or the working directory)");
  app.add_option("--equivalences", g.equivalences, "CSV of equivalent symbol commands for MER");
  app.add_flag("-q,--quiet", g.quiet, "suppress warnings");

  auto* preprocess = app.add_subcommand("preprocess", "apply the preprocessing queue to the raw recordings");
  auto* featurize = app.add_subcommand("featurize", "split the data and write feature caches");
  auto* train = app.add_subcommand("train", "train a model from the feature caches");
  auto* evaluate = app.add_subcommand("evaluate", "report TOP1, TOP3 and MER on the test split");
  auto* run = app.add_subcommand("run", "all four stages in order");

  auto* classify = app.add_subcommand("classify", "classify one recording file");
  std::string classify_file, classify_model;
  std::size_t classify_k = 10;
  classify->add_option("file", classify_file, "recording JSON, or - for stdin")->required();
  classify->add_option("-m,--model", classify_model, "model.json")->required();
  classify->add_option("-k", classify_k, "number of hypotheses")->check(CLI::Range(1, 1000));

  auto* serve = app.add_subcommand("serve", "run the HTTP classification worker");
  std::string host = "127.0.0.1", serve_model, static_dir;
  int port = 5000;
  std::size_t max_body = 1 << 20;
  serve->add_option("--host", host, "listen address");
  serve->add_option("-p,--port", port, "listen port")->check(CLI::Range(0, 65535));
  serve->add_option("-m,--model", serve_model, "model.json to serve");
  serve->add_option("--static", static_dir, "directory served under /");
  serve->add_option("--max-body", max_body, "largest accepted request body in bytes");

  auto* view = app.add_subcommand("view", "print a recording as a text grid");
  std::int64_t view_id = 0;
  std::string view_data;
  int view_size = 24;
  bool view_raw = false;
  view->add_option("id", view_id, "recording id")->required();
  view->add_option("--data", view_data, "recordings directory (default: from --config)");
  view->add_option("--size", view_size, "grid size")->check(CLI::Range(2, 200));
  view->add_flag("--raw", view_raw, "skip the configured preprocessing queue");

  auto* synth = app.add_subcommand("synth", "write a generated five-symbol dataset");
  std::string synth_out;
  SyntheticOptions synth_opt;
  synth->add_option("out", synth_out, "output directory")->required();
  synth->add_option("--per-class", synth_opt.per_class, "recordings per symbol")->check(CLI::PositiveNumber);
  synth->add_option("--synth-seed", synth_opt.seed, "generator seed");

  auto* outliers = app.add_subcommand("outliers", "rank recordings of one symbol by warping distance to the others");
  std::string outlier_data, outlier_symbol;
  std::size_t outlier_top = 10;
  outliers->add_option("--data", outlier_data, "recordings directory")->required();
  outliers->add_option("--symbol", outlier_symbol, "symbol command")->required();
  outliers->add_option("--top", outlier_top, "entries to print");

  CLI11_PARSE(app, argc, argv);

  Diagnostics diag;
  try {
    if (preprocess->parsed()) {
      run_preprocess_stage(load_config(g), run_options(g), &diag);
    } else if (featurize->parsed()) {
      run_featurize_stage(load_config(g), run_options(g), &diag);
    } else if (train->parsed()) {
      run_train_stage(load_config(g), run_options(g), &diag);
    } else if (evaluate->parsed()) {
      print_report(run_evaluate_stage(load_config(g), run_options(g), &diag));
    } else if (run->parsed()) {
      print_report(run_all_stages(load_config(g), run_options(g), &diag));
    } else if (classify->parsed()) {
      const auto model = Classifier::load(classify_model);
      const std::string text =
          classify_file == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {}) : detail::read_file(classify_file);
      const auto result = model.classify(parse_recording(text), classify_k, &diag);
      for (const auto& p : result)
        std::printf("%-8d %-24s %.6f\n", p.symbol,
                    model.symbols().contains(p.symbol) ? model.symbols().command(p.symbol).c_str() : "?", p.probability);
    } else if (serve->parsed()) {
      ServiceConfig cfg;
      if (!serve_model.empty()) cfg.model_path = serve_model;
      if (!static_dir.empty()) cfg.static_dir = static_dir;
      cfg.max_body_bytes = max_body;
      ClassificationService svc(cfg);
      if (cfg.model_path) {
        try {
          svc.load_model();
        } catch (const Error& e) {
          std::cerr << "warning: " << e.what() << "; serving degraded until POST /reload succeeds\n";
        }
      }
      httplib::Server server;
      svc.mount(server);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
      if (bound < 0) throw ConfigError("cannot listen on " + host + ":" + std::to_string(port));
      std::cerr << "listening on http://" << host << ":" << bound << "\n";
      server.listen_after_bind();
    } else if (view->parsed()) {
      std::optional<ExperimentConfig> cfg;
      if (!g.config.empty()) cfg = load_config(g);
      fs::path dir = view_data;
      if (dir.empty()) {
        if (!cfg) throw ConfigError("view needs --data or --config");
        dir = cfg->raw_dir;
      }
      const auto data = load_recordings(dir, &diag);
      const Recording* found = nullptr;
      for (const auto& r : data.recordings)
        if (r.id == view_id) found = &r;
      if (!found) throw ValueError("no recording with id " + std::to_string(view_id) + " in " + dir.string());
      Recording rec = *found;
      if (!view_raw && cfg && cfg->preprocessing) rec = apply_queue(rec, cfg->preprocessing->queue, &diag);
      std::size_t points = 0;
      for (const auto& s : rec.strokes) points += s.size();
      std::printf("recording %lld: %s, %zu strokes, %zu points\n", static_cast<long long>(view_id),
                  rec.label ? data.symbols.command(*rec.label).c_str() : "(unlabeled)", rec.strokes.size(), points);
      std::fputs(text_grid(rec, view_size).c_str(), stdout);
    } else if (synth->parsed()) {
      const auto data = synthetic_dataset(synth_opt);
      save_recordings(synth_out, data);
      std::printf("wrote %zu recordings of %zu symbols to %s\n", data.recordings.size(), data.symbols.size(),
                  synth_out.c_str());
    } else if (outliers->parsed()) {
      const auto data = load_recordings(outlier_data, &diag);
      const auto id = data.symbols.find(outlier_symbol);
      if (!id) throw ValueError("unknown symbol " + outlier_symbol);
      std::vector<Recording> recs;
      for (const auto& r : data.recordings)
        if (r.label == *id) recs.push_back(r);
      const auto ranking = rank_outliers(recs);
      for (std::size_t i = 0; i < std::min(outlier_top, ranking.ranked.size()); ++i)
        std::printf("%lld %.6g\n", static_cast<long long>(recs[ranking.ranked[i].index].id.value_or(0)),
                    ranking.ranked[i].score);
    }
  } catch (const StageError& e) {
    print_warnings(diag, g.quiet);
    std::cerr << "error in stage " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    print_warnings(diag, g.quiet);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  print_warnings(diag, g.quiet);
  return 0;
}
