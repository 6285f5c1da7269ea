#pragma once

// Confusion matrices for validating detections against an independent
// reference (e.g. traceroutes from a separate measurement system), with the
// strict/loose labeling policies.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "peninsula/csv.hpp"
#include "peninsula/error.hpp"
#include "peninsula/model.hpp"

namespace peninsula {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }

  std::optional<double> precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  std::optional<double> recall() const {
    if (tp + fn == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fn);
  }
  std::optional<double> f1() const {
    auto p = precision();
    auto r = recall();
    if (!p || !r || *p + *r == 0.0) return std::nullopt;
    return 2.0 * *p * *r / (*p + *r);
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

enum class ReferenceClass { Conflicting, AllDown, AllUp };

inline std::string_view to_string(ReferenceClass c) {
  switch (c) {
    case ReferenceClass::Conflicting: return "conflicting";
    case ReferenceClass::AllDown: return "all_down";
    case ReferenceClass::AllUp: return "all_up";
  }
  return "?";
}

inline std::optional<ReferenceClass> parse_reference_class(std::string_view s) {
  for (auto c : {ReferenceClass::Conflicting, ReferenceClass::AllDown, ReferenceClass::AllUp}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

// One detection span paired with what the reference saw during it. `count`
// lets tabulated inputs carry multiplicities.
struct Comparison {
  BlockId block;
  std::int64_t start_t = 0;
  std::int64_t end_t = 0;  // inclusive
  std::uint32_t sites_up = 0;
  std::uint32_t n_valid = 0;
  ReferenceClass reference = ReferenceClass::AllUp;
  std::uint32_t reference_observations = 0;
  std::uint64_t count = 1;
};

enum class LabelPolicy { Strict, Loose };

struct ConfusionOptions {
  LabelPolicy policy = LabelPolicy::Strict;
  std::uint32_t min_reference_observations = 3;
};

enum class Label { TruePositive, TrueNegative, FalsePositive, FalseNegative, Excluded };

// Detection is the prediction, the reference is truth:
//  * detected peninsula, reference mixed or all down         -> TP
//  * detected peninsula, reference all up                    -> FP
//      (loose: excluded when exactly one valid VP was down)
//  * detected all down, reference all down                   -> TN
//  * detected all down, reference reaches the block at all   -> FN
//  * detected all up                                         -> TN
// Comparisons with too few reference observations are excluded.
inline Label label(const Comparison& c, const ConfusionOptions& opts) {
  if (c.reference_observations < opts.min_reference_observations) return Label::Excluded;
  if (c.n_valid == 0 || c.sites_up > c.n_valid) return Label::Excluded;
  const bool peninsula = c.sites_up > 0 && c.sites_up < c.n_valid;
  if (peninsula) {
    if (c.reference != ReferenceClass::AllUp) return Label::TruePositive;
    if (opts.policy == LabelPolicy::Loose && c.sites_up + 1 == c.n_valid) return Label::Excluded;
    return Label::FalsePositive;
  }
  if (c.sites_up == 0) {
    return c.reference == ReferenceClass::AllDown ? Label::TrueNegative : Label::FalseNegative;
  }
  return Label::TrueNegative;
}

inline ConfusionMatrix confusion_matrix(std::span<const Comparison> comparisons, const ConfusionOptions& opts = {}) {
  std::vector<const Comparison*> order;
  for (const auto& c : comparisons) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](auto* x, auto* y) {
    return x->block != y->block ? x->block < y->block : x->start_t < y->start_t;
  });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->block == order[i - 1]->block && order[i]->start_t <= order[i - 1]->end_t) {
      throw InputError("overlapping reference spans for block " + order[i]->block.to_string());
    }
  }
  ConfusionMatrix cm;
  for (const auto& c : comparisons) {
    switch (label(c, opts)) {
      case Label::TruePositive: cm.tp += c.count; break;
      case Label::TrueNegative: cm.tn += c.count; break;
      case Label::FalsePositive: cm.fp += c.count; break;
      case Label::FalseNegative: cm.fn += c.count; break;
      case Label::Excluded: break;
    }
  }
  return cm;
}

// Pairs each block event with the reference traces toward that block taken
// inside the event's time span. Success counts as reached; Unreachable and
// Loop as not reached; Gap traces are ignored. Up-set sizes stand in for
// sites up.
inline std::vector<Comparison> label_comparisons(std::span<const Event> events,
                                                 std::span<const TracerouteRecord> traces, const RoundConfig& rounds,
                                                 std::uint32_t vp_count) {
  std::vector<const TracerouteRecord*> sorted;
  for (const auto& t : traces) {
    if (t.outcome != TraceOutcome::Gap) sorted.push_back(&t);
  }
  auto key = [](const TracerouteRecord* t) { return std::pair{BlockId::containing(t->target), t->t}; };
  std::sort(sorted.begin(), sorted.end(), [&](auto* a, auto* b) { return key(a) < key(b); });
  std::vector<Comparison> out;
  for (const auto& e : events) {
    if (e.kind != EventKind::Peninsula && e.kind != EventKind::Outage && e.kind != EventKind::AllUp) continue;
    Comparison c;
    c.block = e.block;
    c.start_t = rounds.start_of(e.start_round);
    c.end_t = rounds.end_of(e.end_round) - 1;
    c.n_valid = vp_count;
    c.sites_up = e.kind == EventKind::Outage ? 0 : static_cast<std::uint32_t>(e.up_signature.size());
    if (e.kind == EventKind::AllUp) c.sites_up = vp_count;
    auto lo = std::lower_bound(sorted.begin(), sorted.end(), std::pair{e.block, c.start_t},
                               [&](auto* t, const auto& k) { return key(t) < k; });
    std::uint32_t reached = 0, failed = 0;
    for (auto it = lo; it != sorted.end() && key(*it) <= std::pair{e.block, c.end_t}; ++it) {
      ((*it)->outcome == TraceOutcome::Success ? reached : failed)++;
    }
    c.reference_observations = reached + failed;
    if (failed == 0) {
      c.reference = ReferenceClass::AllUp;
    } else if (reached == 0) {
      c.reference = ReferenceClass::AllDown;
    } else {
      c.reference = ReferenceClass::Conflicting;
    }
    out.push_back(c);
  }
  return out;
}

inline const std::vector<std::string>& comparison_columns() {
  static const std::vector<std::string> cols{"block",    "start",     "end",   "sites_up",
                                             "n_valid",  "reference", "reference_observations", "count"};
  return cols;
}

inline std::vector<Comparison> read_comparisons(std::istream& in) {
  std::vector<Comparison> out;
  csv::Reader reader(in, comparison_columns());
  while (auto row = reader.next()) {
    auto& f = *row;
    Comparison c;
    auto block = BlockId::parse(f[0]);
    auto start = csv::parse_int<std::int64_t>(f[1]);
    auto end = csv::parse_int<std::int64_t>(f[2]);
    auto up = csv::parse_int<std::uint32_t>(f[3]);
    auto valid = csv::parse_int<std::uint32_t>(f[4]);
    auto ref = parse_reference_class(f[5]);
    auto obs = csv::parse_int<std::uint32_t>(f[6]);
    auto count = csv::parse_int<std::uint64_t>(f[7]);
    if (!block || !start || !end || !up || !valid || !ref || !obs || !count) {
      throw ParseError(reader.line(), "malformed comparison row");
    }
    c.block = *block;
    c.start_t = *start;
    c.end_t = *end;
    c.sites_up = *up;
    c.n_valid = *valid;
    c.reference = *ref;
    c.reference_observations = *obs;
    c.count = *count;
    out.push_back(c);
  }
  return out;
}

}  // namespace peninsula
