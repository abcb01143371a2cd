#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hcdn/image.hpp"

namespace hcdn {

/// Pixel-level confusion counts; a commutative monoid under merge.
struct ConfusionCounts {
  long long tp = 0, fp = 0, fn = 0, tn = 0;

  long long total() const { return tp + fp + fn + tn; }

  ConfusionCounts& merge(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }

  friend ConfusionCounts operator+(ConfusionCounts a, const ConfusionCounts& b) {
    return a.merge(b);
  }

  bool operator==(const ConfusionCounts&) const = default;
};

/// No-change metrics come from the class-role swap: tp<->tn, fp<->fn.
inline ConfusionCounts swap_classes(const ConfusionCounts& c) {
  return {c.tn, c.fn, c.fp, c.tp};
}

inline ConfusionCounts accumulate_confusion(const BinaryMask& pred, const BinaryMask& target,
                                            ConfusionCounts acc = {}) {
  if (pred.height != target.height || pred.width != target.width)
    raise(ErrorCode::ShapeMismatch, "confusion: prediction/target shapes differ");
  for (std::size_t i = 0; i < pred.values.size(); ++i) {
    const bool p = pred.values[i] != 0;
    const bool t = target.values[i] != 0;
    if (p && t) ++acc.tp;
    else if (p && !t) ++acc.fp;
    else if (!p && t) ++acc.fn;
    else ++acc.tn;
  }
  return acc;
}

struct ClassMetrics {
  double precision = 0.0, recall = 0.0, f1 = 0.0, iou = 0.0, acc = 0.0;
  bool zero_division = false;  // some ratio hit the 0/0 -> 0 convention
};

/// Eqs. 11-15 with the documented 0/0 -> 0 convention.
inline ClassMetrics compute_metrics(const ConfusionCounts& c) {
  if (c.total() == 0) raise(ErrorCode::EmptyConfusion, "compute_metrics: no pixels accumulated");
  ClassMetrics m;
  auto ratio = [&m](long long num, long long den) {
    if (den == 0) {
      m.zero_division = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1 = 0.0;
    m.zero_division = true;
  }
  m.iou = ratio(c.tp, c.tp + c.fp + c.fn);
  m.acc = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  return m;
}

struct MetricsReport {
  ClassMetrics change, nochange;
  double aacc = 0.0, m_fscore = 0.0, m_precision = 0.0, m_recall = 0.0, m_iou = 0.0;
  bool zero_division = false;
};

inline MetricsReport mean_metrics(const ClassMetrics& change, const ClassMetrics& nochange) {
  MetricsReport r;
  r.change = change;
  r.nochange = nochange;
  r.aacc = change.acc;  // identical for either class role
  r.m_fscore = (change.f1 + nochange.f1) / 2.0;
  r.m_precision = (change.precision + nochange.precision) / 2.0;
  r.m_recall = (change.recall + nochange.recall) / 2.0;
  r.m_iou = (change.iou + nochange.iou) / 2.0;
  r.zero_division = change.zero_division || nochange.zero_division;
  return r;
}

inline MetricsReport full_report(const ConfusionCounts& c) {
  return mean_metrics(compute_metrics(c), compute_metrics(swap_classes(c)));
}

namespace detail {
inline double percent2(double v) { return std::round(v * 10000.0) / 100.0; }
}  // namespace detail

/// Tables 2-3 field schema; all values percentages with 2 decimals.
inline nlohmann::json metrics_report_to_json(const MetricsReport& r) {
  auto cls = [](const ClassMetrics& m) {
    nlohmann::json j;
    j["precision"] = detail::percent2(m.precision);
    j["recall"] = detail::percent2(m.recall);
    j["f1"] = detail::percent2(m.f1);
    j["iou"] = detail::percent2(m.iou);
    j["acc"] = detail::percent2(m.acc);
    return j;
  };
  nlohmann::json j;
  j["aACC"] = detail::percent2(r.aacc);
  j["mFscore"] = detail::percent2(r.m_fscore);
  j["mPrecision"] = detail::percent2(r.m_precision);
  j["mRecall"] = detail::percent2(r.m_recall);
  j["mIoU"] = detail::percent2(r.m_iou);
  j["change"] = cls(r.change);
  j["nochange"] = cls(r.nochange);
  j["zero_division"] = r.zero_division;
  return j;
}

inline void save_metrics_report(const std::filesystem::path& path, const MetricsReport& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot write metrics report: " + path.string());
  out << metrics_report_to_json(r).dump(2) << "\n";
}

}  // namespace hcdn
