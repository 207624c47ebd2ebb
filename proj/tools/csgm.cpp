#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "csgm/csgm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

csgm::Amount parse_units(const std::string& text) { return csgm::parse_amount(text); }

// Flat key = value config, '#' comments, mirroring GenConfig fields.
csgm::GenConfig load_gen_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw csgm::ParseError("cannot open " + path);
  csgm::GenConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw csgm::ParseError("line " + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "num_accounts")
        config.num_accounts = std::stoull(value);
      else if (key == "background_edges")
        config.background_edges = std::stoull(value);
      else if (key == "num_groups")
        config.num_groups = static_cast<std::uint32_t>(std::stoul(value));
      else if (key == "fan_width_min")
        config.fan_width_min = static_cast<std::uint32_t>(std::stoul(value));
      else if (key == "fan_width_max")
        config.fan_width_max = static_cast<std::uint32_t>(std::stoul(value));
      else if (key == "layering_depth_min")
        config.layering_depth_min = static_cast<std::uint32_t>(std::stoul(value));
      else if (key == "layering_depth_max")
        config.layering_depth_max = static_cast<std::uint32_t>(std::stoul(value));
      else if (key == "party_balance")
        config.party_balance = std::stod(value);
      else if (key == "amount_mu")
        config.amount_mu = std::stod(value);
      else if (key == "amount_sigma")
        config.amount_sigma = std::stod(value);
      else if (key == "planted_amount_min")
        config.planted_amount_min = parse_units(value);
      else if (key == "noise_fraction")
        config.noise_fraction = std::stod(value);
      else if (key == "seed")
        config.seed = std::stoull(value);
      else
        throw csgm::ParseError("unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw csgm::ParseError("line " + std::to_string(line_no) + ": bad value for " + key);
    }
  }
  return config;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw csgm::ParseError("cannot write " + path);
  out << text;
}

csgm::InstitutionView load_view(csgm::PartyId party, const std::string& path,
                                csgm::Amount min_amount) {
  auto g = csgm::load_graph(path);
  g = csgm::aggregate_edges(g);
  g = csgm::filter_small_transactions(g, min_amount);
  return csgm::make_view(party, std::move(g));
}

int cmd_gen(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
  csgm::GenConfig config =
      config_path.empty() ? csgm::GenConfig{} : load_gen_config(config_path);
  if (seed) config.seed = *seed;
  const csgm::LabeledDataset ds = csgm::generate(config);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  csgm::write_graph(ds.full, (dir / "full.csv").string());
  csgm::write_graph(ds.view_a.graph, (dir / "view_a.csv").string());
  csgm::write_graph(ds.view_b.graph, (dir / "view_b.csv").string());
  csgm::write_assignment(ds.assignment, (dir / "assignment.csv").string());

  std::unordered_map<csgm::AccountId, csgm::LabelEntry> labels;
  for (const auto& [id, label] : ds.labels) labels[id] = {label, -1};
  for (std::size_t gi = 0; gi < ds.groups.size(); ++gi)
    for (csgm::AccountId member : ds.groups[gi].members)
      labels[member].group_id = static_cast<std::int64_t>(gi);
  csgm::write_labels(labels, (dir / "labels.csv").string());

  json groups = json::array();
  for (std::size_t gi = 0; gi < ds.groups.size(); ++gi) {
    const auto& g = ds.groups[gi];
    groups.push_back({{"group_id", gi},
                      {"source", g.source},
                      {"destination", g.destination},
                      {"members", g.members}});
  }
  write_text((dir / "groups.json").string(), groups.dump(2) + "\n");

  std::cout << "generated " << ds.full.num_nodes() << " accounts, " << ds.full.num_edges()
            << " transactions, " << ds.groups.size() << " planted groups -> " << out_dir
            << "\n";
  return 0;
}

int cmd_run(const std::string& view_a_path, const std::string& view_b_path,
            const std::string& mode, double tau, std::uint64_t seed, std::uint32_t num_hashes,
            std::uint32_t band_rows, std::uint64_t filter_bits, std::uint32_t probe_hashes,
            std::uint32_t max_depth, std::uint32_t min_set_size, const std::string& min_amount,
            const std::string& out_path, const std::string& verdicts_path) {
  csgm::SessionConfig config;
  config.mode = mode == "prob" ? csgm::DetectMode::prob : csgm::DetectMode::sim;
  if (band_rows == 0) band_rows = config.mode == csgm::DetectMode::prob ? 5 : 2;
  config.minhash = csgm::MinHashParams(num_hashes, band_rows, seed);
  config.tau = tau;
  config.filter_bits = filter_bits;
  config.probe_hashes = probe_hashes;
  config.max_depth = max_depth;
  config.min_set_size = min_set_size;

  const csgm::Amount min_cents = parse_units(min_amount);
  const auto view_a = load_view(csgm::PartyId::A, view_a_path, min_cents);
  const auto view_b = load_view(csgm::PartyId::B, view_b_path, min_cents);

  const auto started = std::chrono::steady_clock::now();
  const csgm::SessionTranscript transcript = csgm::run_session(view_a, view_b, config);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  write_text(out_path, csgm::transcript_json(transcript, /*include_timings=*/true).dump(2) + "\n");

  if (!verdicts_path.empty()) {
    std::string lines;
    auto dump_side = [&](const std::vector<csgm::SetVerdict>& verdicts) {
      for (const auto& v : verdicts) {
        json entry{{"anchor", v.anchor}, {"hit", v.hit}, {"l", v.matched_bands},
                   {"K", v.num_bands}};
        if (v.estimated_similarity)
          entry["est_sim"] = *v.estimated_similarity;
        else
          entry["est_sim"] = nullptr;
        lines += entry.dump();
        lines += '\n';
      }
    };
    dump_side(transcript.report_a.scatter_verdicts);
    dump_side(transcript.report_a.gather_verdicts);
    dump_side(transcript.report_b.scatter_verdicts);
    dump_side(transcript.report_b.gather_verdicts);
    write_text(verdicts_path, lines);
  }

  std::cout << "session complete in " << elapsed << " s: " << transcript.groups.size()
            << " groups, " << transcript.total_bytes() << " bytes exchanged -> " << out_path
            << "\n";
  return 0;
}

int cmd_sgm(const std::string& graph_path, double threshold, std::size_t min_group_size,
            const std::string& min_amount, const std::string& out_path) {
  auto g = csgm::load_graph(graph_path);
  g = csgm::aggregate_edges(g);
  g = csgm::filter_small_transactions(g, parse_units(min_amount));
  const auto detections = csgm::run_sgm_all_sources(g, threshold, min_group_size);

  json out = json::array();
  for (const auto& d : detections) {
    json flagged = json::array();
    for (const auto& f : d.flagged) flagged.push_back({{"node", f.node}, {"ratio", f.ratio}});
    out.push_back({{"source", d.source}, {"flagged", std::move(flagged)}});
  }
  write_text(out_path, out.dump(2) + "\n");
  std::cout << detections.size() << " detections -> " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& session_path, const std::string& labels_path,
             const std::string& out_path) {
  std::ifstream in(session_path);
  if (!in) throw csgm::ParseError("cannot open " + session_path);
  json session;
  in >> session;

  std::unordered_set<csgm::AccountId> predicted;
  std::unordered_map<csgm::AccountId, double> scores;
  auto bump = [&](csgm::AccountId id, double s) {
    auto [it, inserted] = scores.emplace(id, s);
    if (!inserted && s > it->second) it->second = s;
  };

  for (const auto& group : session.at("groups")) {
    const double similarity =
        group.at("similarity").is_null() ? 1.0 : group.at("similarity").get<double>();
    auto add = [&](csgm::AccountId id) {
      predicted.insert(id);
      bump(id, similarity);
    };
    add(group.at("source").get<csgm::AccountId>());
    if (!group.at("dest").is_null()) add(group.at("dest").get<csgm::AccountId>());
    for (const auto& m : group.at("members_source_side")) add(m.get<csgm::AccountId>());
    for (const auto& m : group.at("members_dest_side")) add(m.get<csgm::AccountId>());
  }

  bool have_scores = false;
  for (const auto& [party, sides] : session.at("verdicts").items()) {
    for (const auto& [side, verdicts] : sides.items()) {
      for (const auto& v : verdicts) {
        if (v.at("est_sim").is_null()) continue;
        have_scores = true;
        bump(v.at("anchor").get<csgm::AccountId>(), v.at("est_sim").get<double>());
      }
    }
  }

  const auto labels = csgm::load_labels(labels_path);
  const csgm::MetricsReport report =
      csgm::score(predicted, labels, have_scores ? &scores : nullptr);

  json out{{"accuracy", report.accuracy},
           {"precision", report.precision},
           {"recall", report.recall},
           {"f1", report.f1},
           {"confusion",
            {{"tp", report.true_positives},
             {"fp", report.false_positives},
             {"tn", report.true_negatives},
             {"fn", report.false_negatives}}},
           {"groups_hit", report.groups_hit},
           {"groups_total", report.groups_total}};
  if (report.auc)
    out["auc"] = *report.auc;
  else
    out["auc"] = nullptr;
  write_text(out_path, out.dump(2) + "\n");

  std::cout << "accuracy=" << report.accuracy << " precision=" << report.precision
            << " recall=" << report.recall << " f1=" << report.f1;
  if (report.auc) std::cout << " auc=" << *report.auc;
  std::cout << " groups=" << report.groups_hit << "/" << report.groups_total << "\n";
  return 0;
}

struct DiagParams {
  std::string view_path;
  std::string direction = "scatter";
  std::uint32_t num_hashes = 100;
  std::uint32_t band_rows = 2;
  std::uint64_t seed = 0;
  std::uint32_t max_depth = 6;
  std::uint32_t min_set_size = 5;
  std::string min_amount = "100";
  std::string out_path;
};

csgm::SetFamily diag_family(const DiagParams& p) {
  const auto view = load_view(csgm::PartyId::A, p.view_path, parse_units(p.min_amount));
  const auto direction =
      p.direction == "gather" ? csgm::Direction::gather : csgm::Direction::scatter;
  return csgm::discover_family(view, direction, p.max_depth, p.min_set_size);
}

int cmd_band_hist(const DiagParams& p) {
  const auto family = diag_family(p);
  const auto histogram =
      csgm::band_repetition_histogram(family, csgm::MinHashParams(p.num_hashes, p.band_rows, p.seed));
  json out = json::object();
  for (const auto& [repeat, count] : histogram) out[std::to_string(repeat)] = count;
  write_text(p.out_path, out.dump(2) + "\n");
  std::cout << family.sets.size() << " sets -> " << p.out_path << "\n";
  return 0;
}

int cmd_family_dump(const DiagParams& p) {
  const auto family = diag_family(p);
  std::string lines;
  for (const auto& set : family.sets) {
    json edges = json::array();
    for (const auto& e : set.edges) edges.push_back({e.src, e.dst});
    lines += json{{"anchor", set.anchor},
                  {"dir", csgm::direction_name(set.direction)},
                  {"edges", std::move(edges)}}
                 .dump();
    lines += '\n';
  }
  write_text(p.out_path, lines);
  std::cout << family.sets.size() << " sets -> " << p.out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative scatter-gather mining over two-institution transaction graphs"};
  app.require_subcommand(1);

  // gen
  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled dataset");
  gen->add_option("--config", gen_config, "key = value config file");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "override the config seed");

  // run
  std::string run_view_a, run_view_b, run_mode = "sim", run_min_amount = "100";
  std::string run_out = "session.json", run_verdicts;
  double run_tau = 0.2;
  std::uint64_t run_seed = 42, run_filter_bits = 500000;
  std::uint32_t run_num_hashes = 100, run_band_rows = 0, run_probe_hashes = 7;
  std::uint32_t run_max_depth = 6, run_min_set_size = 5;
  auto* run = app.add_subcommand("run", "Run the two-party detection session");
  run->add_option("--view-a", run_view_a, "party A graph CSV")->required();
  run->add_option("--view-b", run_view_b, "party B graph CSV")->required();
  run->add_option("--mode", run_mode, "prob or sim")
      ->check(CLI::IsMember({"prob", "sim"}))
      ->capture_default_str();
  run->add_option("--tau", run_tau, "similarity threshold (sim mode)")->capture_default_str();
  run->add_option("--seed", run_seed, "shared MinHash seed")->capture_default_str();
  run->add_option("--num-hashes", run_num_hashes, "MinHash functions")->capture_default_str();
  run->add_option("--band-rows", run_band_rows, "rows per band (0 = mode default: sim 2, prob 5)");
  run->add_option("--filter-bits", run_filter_bits, "Bloom filter bits")->capture_default_str();
  run->add_option("--probe-hashes", run_probe_hashes, "Bloom probe hashes")->capture_default_str();
  run->add_option("--max-depth", run_max_depth, "BFS depth bound")->capture_default_str();
  run->add_option("--min-set-size", run_min_set_size, "minimum set size")->capture_default_str();
  run->add_option("--min-amount", run_min_amount, "filter threshold, currency units")
      ->capture_default_str();
  run->add_option("--out", run_out, "session transcript JSON")->capture_default_str();
  run->add_option("--verdicts-out", run_verdicts, "optional verdict JSONL dump");

  // sgm
  std::string sgm_graph, sgm_min_amount = "100", sgm_out = "sgm_report.json";
  double sgm_threshold = 0.4;
  std::size_t sgm_min_group = 2;
  auto* sgm = app.add_subcommand("sgm", "Centralized scatter-gather mining baseline");
  sgm->add_option("--graph", sgm_graph, "full graph CSV")->required();
  sgm->add_option("--threshold", sgm_threshold, "marked-inflow ratio threshold")
      ->capture_default_str();
  sgm->add_option("--min-group-size", sgm_min_group, "minimum flagged nodes per detection")
      ->capture_default_str();
  sgm->add_option("--min-amount", sgm_min_amount, "filter threshold, currency units")
      ->capture_default_str();
  sgm->add_option("--out", sgm_out, "detection report JSON")->capture_default_str();

  // eval
  std::string eval_session, eval_labels, eval_out = "metrics.json";
  auto* eval = app.add_subcommand("eval", "Score a session transcript against labels");
  eval->add_option("--session", eval_session, "session JSON from run")->required();
  eval->add_option("--labels", eval_labels, "labels CSV")->required();
  eval->add_option("--out", eval_out, "metrics JSON")->capture_default_str();

  // diag
  auto* diag = app.add_subcommand("diag", "Diagnostics");
  diag->require_subcommand(1);
  DiagParams hist_params, family_params;
  auto add_diag_options = [](CLI::App* cmd, DiagParams& p) {
    cmd->add_option("--view", p.view_path, "view graph CSV")->required();
    cmd->add_option("--direction", p.direction, "scatter or gather")
        ->check(CLI::IsMember({"scatter", "gather"}))
        ->capture_default_str();
    cmd->add_option("--num-hashes", p.num_hashes)->capture_default_str();
    cmd->add_option("--band-rows", p.band_rows)->capture_default_str();
    cmd->add_option("--seed", p.seed)->capture_default_str();
    cmd->add_option("--max-depth", p.max_depth)->capture_default_str();
    cmd->add_option("--min-set-size", p.min_set_size)->capture_default_str();
    cmd->add_option("--min-amount", p.min_amount)->capture_default_str();
    cmd->add_option("--out", p.out_path, "output path")->required();
  };
  auto* band_hist = diag->add_subcommand("band-hist", "Band-fingerprint repetition histogram");
  add_diag_options(band_hist, hist_params);
  auto* family_dump = diag->add_subcommand("family", "Dump a discovered set family as JSONL");
  add_diag_options(family_dump, family_params);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(gen_config, gen_out, gen_seed);
    if (run->parsed())
      return cmd_run(run_view_a, run_view_b, run_mode, run_tau, run_seed, run_num_hashes,
                     run_band_rows, run_filter_bits, run_probe_hashes, run_max_depth,
                     run_min_set_size, run_min_amount, run_out, run_verdicts);
    if (sgm->parsed())
      return cmd_sgm(sgm_graph, sgm_threshold, sgm_min_group, sgm_min_amount, sgm_out);
    if (eval->parsed()) return cmd_eval(eval_session, eval_labels, eval_out);
    if (diag->parsed()) {
      if (band_hist->parsed()) return cmd_band_hist(hist_params);
      if (family_dump->parsed()) return cmd_family_dump(family_params);
    }
  } catch (const csgm::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
