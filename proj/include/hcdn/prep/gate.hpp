#pragma once

#include <string>

#include "hcdn/errors.hpp"
#include "hcdn/pair.hpp"
#include "hcdn/prep/alignment.hpp"
#include "hcdn/prep/features.hpp"
#include "hcdn/prep/matching.hpp"
#include "hcdn/prep/warp.hpp"

namespace hcdn {

enum class Verdict { GoodMatch, Rejected };
enum class RejectReason { None, TooFewMatches, ExcessBlank, AlignmentFailed };

inline const char* verdict_name(Verdict v) {
  return v == Verdict::GoodMatch ? "GoodMatch" : "Rejected";
}

inline const char* reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "None";
    case RejectReason::TooFewMatches: return "TooFewMatches";
    case RejectReason::ExcessBlank: return "ExcessBlank";
    case RejectReason::AlignmentFailed: return "AlignmentFailed";
  }
  return "None";
}

struct GateParams {
  double ratio_threshold = 0.7;
  double blank_max = 0.20;
  int min_matches = 8;
  SiftParams sift;
  ConsensusParams consensus;
};

struct GateReport {
  Verdict verdict = Verdict::Rejected;
  RejectReason reason = RejectReason::None;
  int match_count = 0;
  double blank_ratio = 0.0;
  bool has_transform = false;
  RigidTransform transform;
};

/// Pair filter: SIFT → ratio-test matching → robust rigid alignment →
/// warp + blank gate. Only on GoodMatch is the pair's good image replaced by
/// its aligned version; the poor image is never touched. Component failures
/// surface as Rejected verdicts, not exceptions.
inline GateReport gate_pair(HousekeepingPair& pair, const GateParams& params = {}) {
  GateReport report;

  const KeypointSet kp_poor = extract_local_features(pair.poor, params.sift);
  const KeypointSet kp_good = extract_local_features(pair.good, params.sift);
  const MatchSet matches = match_features(kp_poor, kp_good, params.ratio_threshold);
  report.match_count = static_cast<int>(matches.size());
  if (report.match_count < params.min_matches) {
    report.verdict = Verdict::Rejected;
    report.reason = RejectReason::TooFewMatches;
    return report;
  }

  RigidTransform t;
  try {
    t = estimate_alignment(matches, kp_poor, kp_good, params.consensus);
  } catch (const Error&) {
    report.verdict = Verdict::Rejected;
    report.reason = RejectReason::AlignmentFailed;
    return report;
  }
  report.has_transform = true;
  report.transform = t;

  WarpResult warped = warp_good_image(pair.good, t, pair.poor.height, pair.poor.width);
  report.blank_ratio = warped.blank_ratio;
  if (warped.blank_ratio >= params.blank_max) {
    report.verdict = Verdict::Rejected;
    report.reason = RejectReason::ExcessBlank;
    return report;
  }

  pair.good = std::move(warped.image);
  report.verdict = Verdict::GoodMatch;
  report.reason = RejectReason::None;
  return report;
}

}  // namespace hcdn
