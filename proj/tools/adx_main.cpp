// adx: knowledge-base tooling, evaluation simulator, server and terminal.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "adx/engine/simulate.hpp"
#include "adx/kernels/kernels.hpp"
#include "adx/knowledge/builder.hpp"
#include "adx/server/http_api.hpp"
#include "adx/smslink/otp.hpp"
#include "adx/terminal/http_api.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw adx::IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_kb_summary(const adx::knowledge::KnowledgeBase& kb, std::ostream& os) {
  const double cells = static_cast<double>(kb.diseases().size() * kb.findings().size());
  os << "diseases: " << kb.diseases().size() << "\n"
     << "findings: " << kb.findings().size() << "\n"
     << "matrix entries: " << kb.matrix().entries.size() << " (density " << std::fixed
     << std::setprecision(4) << (cells > 0 ? kb.matrix().entries.size() / cells : 0.0) << ")\n";
}

void print_sim_table(const adx::engine::SimReport& r, std::ostream& os) {
  os << std::fixed << std::setprecision(4);
  os << "policy          " << adx::engine::to_string(r.policy) << "\n"
     << "trials          " << r.trials << "\n"
     << "question budget " << r.question_budget << "\n"
     << "seed            " << r.seed << "\n"
     << "top-1 accuracy  " << r.top1_acc << "\n"
     << "top-5 accuracy  " << r.top5_acc << "\n"
     << "mean questions  " << r.mean_questions << "\n"
     << "rank histogram\n";
  for (const auto& [rank, count] : r.rank_histogram())
    os << "  " << std::setw(8) << std::left << rank << std::right << count << "\n";
}

void wait_for_signal_setup() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adx: adaptive diagnosis toolkit"};
  app.require_subcommand(1);

  // kb
  auto* kb_cmd = app.add_subcommand("kb", "Knowledge-base tools");
  kb_cmd->require_subcommand(1);

  std::string corpus, vocab, out;
  double alpha = adx::knowledge::kDefaultSmoothing;
  int window = adx::knowledge::kDefaultWindow;
  std::int64_t kb_version = 1;
  auto* build = kb_cmd->add_subcommand("build", "Build a knowledge base from a corpus");
  build->add_option("--corpus", corpus, "Plain-text corpus")->required()->check(CLI::ExistingFile);
  build->add_option("--vocab", vocab, "Catalog of findings and diseases (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  build->add_option("--out", out, "Output knowledge-base file")->required();
  build->add_option("--alpha", alpha, "Laplace smoothing")->check(CLI::NonNegativeNumber);
  build->add_option("--window", window, "Co-occurrence window in tokens")
      ->check(CLI::Range(1, 1 << 30));
  build->add_option("--kb-version", kb_version, "Version stamped into the output");

  adx::knowledge::SyntheticOptions synth_opts;
  std::string synth_out;
  auto* synth = kb_cmd->add_subcommand("synth", "Generate a synthetic knowledge base");
  synth->add_option("--out", synth_out, "Output knowledge-base file")->required();
  synth->add_option("--diseases", synth_opts.diseases)->check(CLI::Range(1, 100000));
  synth->add_option("--findings", synth_opts.findings)->check(CLI::Range(1, 100000));
  synth->add_option("--density", synth_opts.density)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", synth_opts.seed);

  std::string info_path;
  auto* info = kb_cmd->add_subcommand("info", "Validate a knowledge base and print a summary");
  info->add_option("--kb", info_path)->required()->check(CLI::ExistingFile);

  // simulate
  std::string sim_kb, policy = "max_ig", isa;
  adx::engine::SimOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Evaluate a question policy on synthetic patients");
  simulate->add_option("--kb", sim_kb)->required()->check(CLI::ExistingFile);
  simulate->add_option("--policy", policy)
      ->check(CLI::IsMember({"max_ig", "balanced_split", "random"}));
  simulate->add_option("--trials", sim.trials)->check(CLI::Range(1, 100000000));
  simulate->add_option("--budget", sim.budget)->check(CLI::Range(0, 1000000));
  simulate->add_option("--noise", sim.noise)->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--posterior-stop", sim.posterior_stop)->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--entropy-stop", sim.entropy_stop)->check(CLI::NonNegativeNumber);
  simulate->add_option("--top-k", sim.top_k)->check(CLI::Range(1, 1000));
  simulate->add_option("--isa", isa, "Force a kernel variant")->check(CLI::IsMember({"scalar", "avx2"}));

  // serve / terminal
  std::string serve_config, terminal_config;
  int port_override = -1;
  auto* serve = app.add_subcommand("serve", "Run the central server");
  serve->add_option("--config", serve_config)->required()->check(CLI::ExistingFile);
  serve->add_option("--port", port_override, "Override the configured port")
      ->check(CLI::Range(0, 65535));

  std::string sync_mode;
  auto* terminal = app.add_subcommand("terminal", "Run the terminal agent");
  terminal->add_option("--config", terminal_config)->required()->check(CLI::ExistingFile);
  terminal->add_option("--port", port_override, "Override the configured port")
      ->check(CLI::Range(0, 65535));
  terminal->add_option("--sync-mode", sync_mode)->check(CLI::IsMember({"auto", "http", "sms"}));

  // crypto
  auto* crypto = app.add_subcommand("crypto", "Pad management");
  crypto->require_subcommand(1);
  std::size_t pad_bytes = 0;
  std::string pad_out, pad_id = "pad1";
  auto* padgen = crypto->add_subcommand("pad-gen", "Write a matching terminal/server pad pair");
  padgen->add_option("--bytes", pad_bytes)->required()->check(CLI::Range(std::size_t{2}, std::size_t{1} << 32));
  padgen->add_option("--out", pad_out)->required();
  padgen->add_option("--pad-id", pad_id);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*build) {
      const auto catalog =
          adx::knowledge::parse_catalog(nlohmann::json::parse(read_file(vocab)));
      const auto kb =
          adx::knowledge::build_knowledge_base(catalog, read_file(corpus), window, alpha, kb_version);
      adx::knowledge::save_knowledge_base(kb, out);
      std::cout << "wrote " << out << "\n";
      print_kb_summary(kb, std::cout);
    } else if (*synth) {
      const auto kb = adx::knowledge::make_synthetic_kb(synth_opts);
      adx::knowledge::save_knowledge_base(kb, synth_out);
      std::cout << "wrote " << synth_out << "\n";
      print_kb_summary(kb, std::cout);
    } else if (*info) {
      print_kb_summary(adx::knowledge::load_knowledge_base(info_path), std::cout);
    } else if (*simulate) {
      if (!isa.empty())
        adx::kernels::set_active_isa(isa == "avx2" ? adx::kernels::Isa::avx2
                                                   : adx::kernels::Isa::scalar);
      sim.policy = *adx::engine::parse_policy(policy);
      sim.validate();
      const auto kb = adx::knowledge::load_knowledge_base(sim_kb);
      const adx::engine::ScoringModel model(std::make_shared<const adx::learner::ModelParams>(
          adx::learner::ModelParams::from_knowledge_base(kb)));
      const auto report = adx::engine::simulate(kb, model, sim);
      std::cout << adx::engine::to_json(report).dump(2) << "\n";
      print_sim_table(report, std::cerr);
    } else if (*serve) {
      auto config = adx::server::ServerConfig::load(serve_config);
      if (port_override >= 0) config.port = port_override;
      wait_for_signal_setup();
      adx::server::run_server(config, g_stop, [&](int port) {
        std::cerr << "server listening on " << config.host << ":" << port << "\n";
      });
    } else if (*terminal) {
      auto config = adx::terminal::TerminalConfig::load(terminal_config);
      if (port_override >= 0) config.port = port_override;
      if (sync_mode == "http") config.mode = adx::terminal::SyncMode::http;
      if (sync_mode == "sms") config.mode = adx::terminal::SyncMode::sms;
      if (sync_mode == "auto") config.mode = adx::terminal::SyncMode::automatic;
      wait_for_signal_setup();
      adx::terminal::run_terminal(config, g_stop, [&](int port) {
        std::cerr << "terminal listening on " << config.host << ":" << port << "\n";
      });
    } else if (*padgen) {
      adx::smslink::generate_pad_pair(pad_out, pad_id, pad_bytes);
      std::cout << "wrote " << pad_bytes << "-byte pad '" << pad_id << "' to " << pad_out
                << "/terminal and " << pad_out << "/server\n";
    }
  } catch (const adx::server::ConfigFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const adx::terminal::ConfigFileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const adx::engine::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
