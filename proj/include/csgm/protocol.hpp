#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "csgm/bloom.hpp"
#include "csgm/detection.hpp"
#include "csgm/graph.hpp"
#include "csgm/minhash.hpp"
#include "csgm/set_discovery.hpp"
#include "csgm/wire.hpp"

namespace csgm {

// Everything both parties must agree on before exchanging banks.
struct SessionConfig {
  MinHashParams minhash;
  DetectMode mode = DetectMode::sim;
  double tau = 0.2;
  std::uint64_t filter_bits = 500000;
  std::uint32_t probe_hashes = 7;
  std::uint32_t max_depth = 6;
  std::uint32_t min_set_size = 5;
};

enum class MessageKind : std::uint8_t { handshake = 0, bank_scatter = 1, bank_gather = 2, revelation = 3 };

inline const char* message_kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::handshake: return "handshake";
    case MessageKind::bank_scatter: return "bank_scatter";
    case MessageKind::bank_gather: return "bank_gather";
    case MessageKind::revelation: return "revelation";
  }
  return "?";
}

struct MessageRecord {
  PartyId sender = PartyId::A;
  MessageKind kind = MessageKind::handshake;
  std::uint64_t bytes = 0;
};

// One hit's disclosure: the band fingerprints that matched, nothing else.
// The anchor is the revealing party's local knowledge and never enters the
// wire payload.
struct RevealedMatch {
  PartyId party = PartyId::A;
  AccountId anchor = 0;
  Direction direction = Direction::scatter;
  std::vector<std::pair<std::uint32_t, Fingerprint>> fingerprints;
};

struct DetectedGroup {
  PartyId source_party = PartyId::A;
  AccountId source = 0;
  PartyId dest_party = PartyId::B;
  std::optional<AccountId> dest;  // empty when revelation resolved nothing
  std::vector<AccountId> members_source_side;
  std::vector<AccountId> members_dest_side;
  std::optional<double> similarity;
};

// Wall-clock seconds per pipeline stage, keyed by the reporting names
// "Set Discovery", "Minhash", "Inserting", "Membership Testing".
struct StageTimings {
  double set_discovery = 0.0;
  double minhash = 0.0;
  double inserting = 0.0;
  double membership_testing = 0.0;

  double total() const { return set_discovery + minhash + inserting + membership_testing; }
};

struct PartyReport {
  std::vector<SetVerdict> scatter_verdicts;  // own scatter sets vs peer gather bank
  std::vector<SetVerdict> gather_verdicts;   // own gather sets vs peer scatter bank
  StageTimings timings;
  std::uint64_t bytes_sent = 0;
};

struct SessionTranscript {
  SessionConfig config;
  std::vector<MessageRecord> messages;
  PartyReport report_a;
  PartyReport report_b;
  std::vector<RevealedMatch> revealed_matches;
  std::vector<DetectedGroup> groups;

  std::uint64_t total_bytes() const {
    std::uint64_t sum = 0;
    for (const auto& m : messages) sum += m.bytes;
    return sum;
  }
};

inline constexpr std::uint16_t kHandshakeWireVersion = 1;

// Handshake payload: "CSGH" | version u16 | num_hashes u32 | band_rows u32 |
// seed u64 | filter_bits u64 | probe_hashes u16 | max_depth u32 |
// min_set_size u32 | mode u8 | tau nano-units u64.
inline std::vector<std::uint8_t> serialize_handshake(const SessionConfig& config) {
  std::vector<std::uint8_t> out;
  for (char c : {'C', 'S', 'G', 'H'}) out.push_back(static_cast<std::uint8_t>(c));
  wire::put_u16(out, kHandshakeWireVersion);
  wire::put_u32(out, config.minhash.num_hashes);
  wire::put_u32(out, config.minhash.band_rows);
  wire::put_u64(out, config.minhash.seed);
  wire::put_u64(out, config.filter_bits);
  wire::put_u16(out, static_cast<std::uint16_t>(config.probe_hashes));
  wire::put_u32(out, config.max_depth);
  wire::put_u32(out, config.min_set_size);
  wire::put_u8(out, static_cast<std::uint8_t>(config.mode));
  wire::put_u64(out, static_cast<std::uint64_t>(std::llround(config.tau * 1e9)));
  return out;
}

struct FingerprintIndexKey {
  std::uint32_t band = 0;
  Fingerprint fp;
  bool operator==(const FingerprintIndexKey&) const = default;
};

struct FingerprintIndexKeyHash {
  std::size_t operator()(const FingerprintIndexKey& k) const {
    return FingerprintHash{}(k.fp) ^ (static_cast<std::size_t>(k.band) * 0x9e3779b97f4a7c15ULL);
  }
};

// band-fingerprint -> anchors owning it, for one family.
using FingerprintIndex =
    std::unordered_map<FingerprintIndexKey, std::vector<AccountId>, FingerprintIndexKeyHash>;

inline FingerprintIndex build_fingerprint_index(const SetFamily& family,
                                                const std::vector<BandedSignature>& sigs) {
  FingerprintIndex index;
  for (std::size_t i = 0; i < family.sets.size(); ++i)
    for (std::uint32_t k = 0; k < sigs[i].bands.size(); ++k)
      index[{k, sigs[i].bands[k]}].push_back(family.sets[i].anchor);
  return index;
}

namespace detail {

class StageClock {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - mark_).count();
    mark_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point mark_ = std::chrono::steady_clock::now();
};

struct PartyPipeline {
  PartyId id = PartyId::A;
  const InstitutionView* view = nullptr;
  SetFamily fam_scatter, fam_gather;
  std::vector<BandedSignature> sigs_scatter, sigs_gather;
  std::vector<std::uint8_t> bank_scatter_bytes, bank_gather_bytes;
  FingerprintIndex index_scatter, index_gather;
  StageTimings timings;

  void prepare(const SessionConfig& config) {
    StageClock clock;
    fam_scatter = discover_family(*view, Direction::scatter, config.max_depth, config.min_set_size);
    fam_gather = discover_family(*view, Direction::gather, config.max_depth, config.min_set_size);
    timings.set_discovery = clock.lap();

    sigs_scatter = band_family(fam_scatter, config.minhash);
    sigs_gather = band_family(fam_gather, config.minhash);
    timings.minhash = clock.lap();

    bank_scatter_bytes = serialize(build_bank(sigs_scatter, config.minhash, config.filter_bits,
                                              config.probe_hashes));
    bank_gather_bytes = serialize(build_bank(sigs_gather, config.minhash, config.filter_bits,
                                             config.probe_hashes));
    timings.inserting = clock.lap();

    index_scatter = build_fingerprint_index(fam_scatter, sigs_scatter);
    index_gather = build_fingerprint_index(fam_gather, sigs_gather);
  }
};

struct HitRecord {
  Direction direction = Direction::scatter;  // which of the detecting party's families hit
  std::size_t set_index = 0;
  std::vector<std::uint32_t> matched;
  std::optional<double> similarity;
};

// Runs the configured detector for one family against a received bank,
// keeping the matched band indices of each hit for the revelation step.
inline std::pair<std::vector<SetVerdict>, std::vector<HitRecord>> detect_against(
    const SetFamily& family, const std::vector<BandedSignature>& sigs, const BloomBank& bank,
    const SessionConfig& config, Direction direction) {
  check_bank_params(bank, config.minhash);
  std::vector<SetVerdict> verdicts(family.sets.size());
  std::vector<std::vector<std::uint32_t>> matched_per_set(family.sets.size());
  parallel_for(family.sets.size(), [&](std::size_t i) {
    const AccountId anchor = family.sets[i].anchor;
    if (config.mode == DetectMode::prob) {
      verdicts[i] = is_similar_prob(sigs[i], anchor, bank, config.minhash);
      matched_per_set[i] = matched_band_indices(sigs[i], bank, /*early_exit=*/true);
    } else {
      verdicts[i] = is_similar_sim(sigs[i], anchor, bank, config.minhash, config.tau);
      matched_per_set[i] = matched_band_indices(sigs[i], bank, /*early_exit=*/false);
    }
  });
  std::vector<HitRecord> hits;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (!verdicts[i].hit) continue;
    HitRecord hit;
    hit.direction = direction;
    hit.set_index = i;
    hit.matched = matched_per_set[i];
    hit.similarity = verdicts[i].estimated_similarity;
    hits.push_back(std::move(hit));
  }
  return {std::move(verdicts), std::move(hits)};
}

// Revelation payload: n_entries u32, then per entry: orientation u8
// (0 = the revealing party's scatter-side hit), fp count u16, and per
// fingerprint: band u16 followed by the 16 digest bytes. No account ids.
inline std::vector<std::uint8_t> serialize_revelation(
    const std::vector<std::pair<Direction, std::vector<std::pair<std::uint32_t, Fingerprint>>>>&
        entries) {
  std::vector<std::uint8_t> out;
  wire::put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [direction, fps] : entries) {
    wire::put_u8(out, static_cast<std::uint8_t>(direction));
    wire::put_u16(out, static_cast<std::uint16_t>(fps.size()));
    for (const auto& [band, fp] : fps) {
      wire::put_u16(out, static_cast<std::uint16_t>(band));
      out.insert(out.end(), fp.bytes.begin(), fp.bytes.end());
    }
  }
  return out;
}

}  // namespace detail

// Looks up revealed fingerprints in a local fingerprint index; every anchor
// owning one of the fingerprints is a candidate opposite end node.
inline std::vector<AccountId> resolve_match(
    const std::vector<std::pair<std::uint32_t, Fingerprint>>& revealed_fps,
    const FingerprintIndex& own_index) {
  std::vector<AccountId> anchors;
  for (const auto& [band, fp] : revealed_fps) {
    auto it = own_index.find({band, fp});
    if (it != own_index.end())
      anchors.insert(anchors.end(), it->second.begin(), it->second.end());
  }
  std::sort(anchors.begin(), anchors.end());
  anchors.erase(std::unique(anchors.begin(), anchors.end()), anchors.end());
  return anchors;
}

// Runs the full two-party exchange in process over the byte-exact message
// formats: handshake, bank exchange (both set orientations, both
// directions), detection, revelation of matched fingerprints, resolution,
// and local tracing of intermediate members.
inline SessionTranscript run_session(const InstitutionView& view_a, const SessionConfig& config_a,
                                     const InstitutionView& view_b, const SessionConfig& config_b) {
  SessionTranscript transcript;
  transcript.config = config_a;

  const auto handshake_a = serialize_handshake(config_a);
  const auto handshake_b = serialize_handshake(config_b);
  transcript.messages.push_back({PartyId::A, MessageKind::handshake, handshake_a.size()});
  transcript.messages.push_back({PartyId::B, MessageKind::handshake, handshake_b.size()});
  if (handshake_a != handshake_b)
    throw ProtocolError("handshake mismatch: sessions configured with different parameters");
  const SessionConfig& config = config_a;

  detail::PartyPipeline a, b;
  a.id = PartyId::A;
  a.view = &view_a;
  b.id = PartyId::B;
  b.view = &view_b;
  a.prepare(config);
  b.prepare(config);

  transcript.messages.push_back({PartyId::A, MessageKind::bank_scatter, a.bank_scatter_bytes.size()});
  transcript.messages.push_back({PartyId::A, MessageKind::bank_gather, a.bank_gather_bytes.size()});
  transcript.messages.push_back({PartyId::B, MessageKind::bank_scatter, b.bank_scatter_bytes.size()});
  transcript.messages.push_back({PartyId::B, MessageKind::bank_gather, b.bank_gather_bytes.size()});

  // Each party decodes the peer banks and tests its own sets against the
  // opposite orientation: local scatter vs peer gather and vice versa.
  const BloomBank bank_scatter_a = deserialize(a.bank_scatter_bytes);
  const BloomBank bank_gather_a = deserialize(a.bank_gather_bytes);
  const BloomBank bank_scatter_b = deserialize(b.bank_scatter_bytes);
  const BloomBank bank_gather_b = deserialize(b.bank_gather_bytes);

  detail::StageClock clock_a;
  auto [verdicts_sa, hits_sa] =
      detail::detect_against(a.fam_scatter, a.sigs_scatter, bank_gather_b, config, Direction::scatter);
  auto [verdicts_ga, hits_ga] =
      detail::detect_against(a.fam_gather, a.sigs_gather, bank_scatter_b, config, Direction::gather);
  a.timings.membership_testing = clock_a.lap();

  detail::StageClock clock_b;
  auto [verdicts_sb, hits_sb] =
      detail::detect_against(b.fam_scatter, b.sigs_scatter, bank_gather_a, config, Direction::scatter);
  auto [verdicts_gb, hits_gb] =
      detail::detect_against(b.fam_gather, b.sigs_gather, bank_scatter_a, config, Direction::gather);
  b.timings.membership_testing = clock_b.lap();

  transcript.report_a.scatter_verdicts = std::move(verdicts_sa);
  transcript.report_a.gather_verdicts = std::move(verdicts_ga);
  transcript.report_b.scatter_verdicts = std::move(verdicts_sb);
  transcript.report_b.gather_verdicts = std::move(verdicts_gb);

  // Revelation: each party disclosing the matched band fingerprints of its
  // hits. One message each direction even when there are no hits.
  struct PendingHit {
    PartyId party = PartyId::A;
    Direction direction = Direction::scatter;
    AccountId anchor = 0;
    std::vector<std::pair<std::uint32_t, Fingerprint>> fps;
    std::optional<double> similarity;
  };
  std::vector<PendingHit> pending;

  auto reveal_party = [&](const detail::PartyPipeline& party,
                          const std::vector<detail::HitRecord>& scatter_hits,
                          const std::vector<detail::HitRecord>& gather_hits) {
    std::vector<std::pair<Direction, std::vector<std::pair<std::uint32_t, Fingerprint>>>> entries;
    auto add = [&](const detail::HitRecord& hit) {
      const SetFamily& family =
          hit.direction == Direction::scatter ? party.fam_scatter : party.fam_gather;
      const auto& sigs =
          hit.direction == Direction::scatter ? party.sigs_scatter : party.sigs_gather;
      PendingHit item;
      item.party = party.id;
      item.direction = hit.direction;
      item.anchor = family.sets[hit.set_index].anchor;
      item.similarity = hit.similarity;
      for (std::uint32_t k : hit.matched)
        item.fps.emplace_back(k, sigs[hit.set_index].bands[k]);
      entries.emplace_back(hit.direction, item.fps);
      transcript.revealed_matches.push_back({item.party, item.anchor, item.direction, item.fps});
      pending.push_back(std::move(item));
    };
    for (const auto& hit : scatter_hits) add(hit);
    for (const auto& hit : gather_hits) add(hit);
    const auto payload = detail::serialize_revelation(entries);
    transcript.messages.push_back({party.id, MessageKind::revelation, payload.size()});
  };
  reveal_party(a, hits_sa, hits_ga);
  reveal_party(b, hits_sb, hits_gb);

  // Resolution and group assembly. A scatter-side hit names a candidate
  // source whose destination is resolved from the peer's gather index; a
  // gather-side hit names a destination whose source is resolved from the
  // peer's scatter index.
  struct GroupKey {
    PartyId source_party;
    AccountId source;
    bool resolved;
    AccountId dest;
    auto operator<=>(const GroupKey&) const = default;
  };
  std::map<GroupKey, DetectedGroup> groups;

  auto record_group = [&](PartyId source_party, AccountId source, PartyId dest_party,
                          std::optional<AccountId> dest, std::optional<double> similarity) {
    const GroupKey key{source_party, source, dest.has_value(), dest.value_or(0)};
    auto it = groups.find(key);
    if (it == groups.end()) {
      DetectedGroup group;
      group.source_party = source_party;
      group.source = source;
      group.dest_party = dest_party;
      group.dest = dest;
      group.similarity = similarity;
      groups.emplace(key, std::move(group));
    } else if (similarity &&
               (!it->second.similarity || *similarity > *it->second.similarity)) {
      it->second.similarity = similarity;
    }
  };

  for (const auto& hit : pending) {
    const detail::PartyPipeline& peer = hit.party == PartyId::A ? b : a;
    if (hit.direction == Direction::scatter) {
      const auto resolved = resolve_match(hit.fps, peer.index_gather);
      if (resolved.empty()) {
        record_group(hit.party, hit.anchor, peer.id, std::nullopt, hit.similarity);
      } else {
        for (AccountId dest : resolved)
          record_group(hit.party, hit.anchor, peer.id, dest, hit.similarity);
      }
    } else {
      // The hit anchor is a destination; resolved anchors are sources on the
      // peer side. An unresolved source cannot be reported as a group.
      for (AccountId source : resolve_match(hit.fps, peer.index_scatter))
        record_group(peer.id, source, hit.party, hit.anchor, hit.similarity);
    }
  }

  // Intermediate-node tracing, local to each side.
  auto find_set = [](const SetFamily& family, AccountId anchor) -> const CrossEdgeSet* {
    const auto it = std::lower_bound(
        family.sets.begin(), family.sets.end(), anchor,
        [](const CrossEdgeSet& set, AccountId value) { return set.anchor < value; });
    return (it != family.sets.end() && it->anchor == anchor) ? &*it : nullptr;
  };
  for (auto& [key, group] : groups) {
    const detail::PartyPipeline& source_side = group.source_party == PartyId::A ? a : b;
    const detail::PartyPipeline& dest_side = group.source_party == PartyId::A ? b : a;
    if (const CrossEdgeSet* set = find_set(source_side.fam_scatter, group.source))
      group.members_source_side = trace_members(*source_side.view, group.source,
                                                Direction::scatter, set->edges, config.max_depth);
    if (group.dest) {
      if (const CrossEdgeSet* set = find_set(dest_side.fam_gather, *group.dest))
        group.members_dest_side = trace_members(*dest_side.view, *group.dest, Direction::gather,
                                                set->edges, config.max_depth);
    }
  }

  transcript.groups.reserve(groups.size());
  for (auto& [key, group] : groups) transcript.groups.push_back(std::move(group));

  for (const auto& m : transcript.messages) {
    (m.sender == PartyId::A ? transcript.report_a : transcript.report_b).bytes_sent += m.bytes;
  }
  transcript.report_a.timings = a.timings;
  transcript.report_b.timings = b.timings;
  return transcript;
}

inline SessionTranscript run_session(const InstitutionView& view_a, const InstitutionView& view_b,
                                     const SessionConfig& config) {
  return run_session(view_a, config, view_b, config);
}

// Per-party transfer totals, per-message breakdown, and stage timings under
// the reporting stage names.
inline nlohmann::json communication_report(const SessionTranscript& transcript) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : transcript.messages)
    messages.push_back({{"sender", std::string(1, party_letter(m.sender))},
                        {"kind", message_kind_name(m.kind)},
                        {"bytes", m.bytes}});

  auto party_report = [](const PartyReport& report) {
    return nlohmann::json{
        {"bytes_sent", report.bytes_sent},
        {"stages_seconds",
         {{"Set Discovery", report.timings.set_discovery},
          {"Minhash", report.timings.minhash},
          {"Inserting", report.timings.inserting},
          {"Membership Testing", report.timings.membership_testing}}},
        {"stage_total_seconds", report.timings.total()}};
  };

  return nlohmann::json{{"total_bytes", transcript.total_bytes()},
                        {"messages", messages},
                        {"parties",
                         {{"A", party_report(transcript.report_a)},
                          {"B", party_report(transcript.report_b)}}}};
}

namespace detail {

inline nlohmann::json verdicts_json(const std::vector<SetVerdict>& verdicts) {
  nlohmann::json out = nlohmann::json::array();
  for (const SetVerdict& v : verdicts) {
    nlohmann::json entry{{"anchor", v.anchor},
                         {"hit", v.hit},
                         {"l", v.matched_bands},
                         {"K", v.num_bands}};
    if (v.estimated_similarity)
      entry["est_sim"] = *v.estimated_similarity;
    else
      entry["est_sim"] = nullptr;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace detail

// Canonical transcript dump. Deterministic for fixed inputs and seed; wall
// clock enters only through the optional report section.
inline nlohmann::json transcript_json(const SessionTranscript& transcript,
                                      bool include_timings = false) {
  const SessionConfig& config = transcript.config;
  nlohmann::json doc;
  doc["config"] = {{"num_hashes", config.minhash.num_hashes},
                   {"band_rows", config.minhash.band_rows},
                   {"num_bands", config.minhash.num_bands()},
                   {"seed", config.minhash.seed},
                   {"mode", config.mode == DetectMode::prob ? "prob" : "sim"},
                   {"tau", config.tau},
                   {"filter_bits", config.filter_bits},
                   {"probe_hashes", config.probe_hashes},
                   {"max_depth", config.max_depth},
                   {"min_set_size", config.min_set_size}};

  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : transcript.messages)
    messages.push_back({{"sender", std::string(1, party_letter(m.sender))},
                        {"kind", message_kind_name(m.kind)},
                        {"bytes", m.bytes}});
  doc["messages"] = std::move(messages);

  doc["verdicts"] = {{"A",
                      {{"scatter", detail::verdicts_json(transcript.report_a.scatter_verdicts)},
                       {"gather", detail::verdicts_json(transcript.report_a.gather_verdicts)}}},
                     {"B",
                      {{"scatter", detail::verdicts_json(transcript.report_b.scatter_verdicts)},
                       {"gather", detail::verdicts_json(transcript.report_b.gather_verdicts)}}}};

  nlohmann::json revealed = nlohmann::json::array();
  for (const auto& r : transcript.revealed_matches) {
    nlohmann::json fps = nlohmann::json::array();
    for (const auto& [band, fp] : r.fingerprints)
      fps.push_back({{"band", band}, {"fp", fp.hex()}});
    revealed.push_back({{"party", std::string(1, party_letter(r.party))},
                        {"anchor", r.anchor},
                        {"direction", direction_name(r.direction)},
                        {"fingerprints", std::move(fps)}});
  }
  doc["revealed_matches"] = std::move(revealed);

  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : transcript.groups) {
    nlohmann::json entry{{"source_party", std::string(1, party_letter(g.source_party))},
                         {"source", g.source},
                         {"dest_party", std::string(1, party_letter(g.dest_party))},
                         {"members_source_side", g.members_source_side},
                         {"members_dest_side", g.members_dest_side}};
    if (g.dest)
      entry["dest"] = *g.dest;
    else
      entry["dest"] = nullptr;
    if (g.similarity)
      entry["similarity"] = *g.similarity;
    else
      entry["similarity"] = nullptr;
    groups.push_back(std::move(entry));
  }
  doc["groups"] = std::move(groups);

  if (include_timings) doc["report"] = communication_report(transcript);
  return doc;
}

}  // namespace csgm
