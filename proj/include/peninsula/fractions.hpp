#pragma once

// Block-time fractions, their convergence as VPs are added, the
// equivalence test between disjoint VP subsets, and pairwise VP similarity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "peninsula/error.hpp"
#include "peninsula/model.hpp"
#include "peninsula/parallel.hpp"

namespace peninsula {

// Fractions of valid block-time (cells with at least one valid observer).
struct BlockTimeFractions {
  std::uint64_t all_up = 0;
  std::uint64_t all_down = 0;
  std::uint64_t disagree = 0;

  std::uint64_t denominator() const { return all_up + all_down + disagree; }
  double f_all_up() const { return ratio(all_up); }
  double f_all_down() const { return ratio(all_down); }
  double f_disagree() const { return ratio(disagree); }

  BlockTimeFractions& operator+=(const BlockTimeFractions& o) {
    all_up += o.all_up;
    all_down += o.all_down;
    disagree += o.disagree;
    return *this;
  }

 private:
  double ratio(std::uint64_t n) const {
    auto d = denominator();
    return d == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d);
  }
};

// Recomputes every verdict from the raw states of `subset` (all VPs when
// empty). NoData cells are excluded from the denominator.
inline BlockTimeFractions block_time_fractions(const RoundMatrix& m, std::span<const std::size_t> subset = {}) {
  BlockTimeFractions f;
  for (std::size_t b = 0; b < m.blocks().size(); ++b) {
    for (std::size_t r = 0; r < m.rounds(); ++r) {
      auto row = m.row(b, r);
      auto rc = subset.empty() ? classify_round(row) : classify_round(row, subset);
      switch (rc.kind) {
        case VerdictKind::AllUp: ++f.all_up; break;
        case VerdictKind::AllDown: ++f.all_down; break;
        case VerdictKind::Disagreement: ++f.disagree; break;
        case VerdictKind::NoData: break;
      }
    }
  }
  return f;
}

// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > n) return out;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    out.push_back(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

struct ConvergenceConfig {
  // Cap on subsets evaluated per size. Unset means exhaustive for up to six
  // VPs and 64 sampled subsets per size beyond that.
  std::optional<std::size_t> max_per_size;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct SubsetFractions {
  std::vector<std::size_t> subset;
  BlockTimeFractions fractions;
};

// One BlockTimeFractions per evaluated subset, for sizes 1..n, ordered by
// size then lexicographically by member indices.
inline std::vector<SubsetFractions> convergence_curve(const RoundMatrix& m, const ConvergenceConfig& cfg = {}) {
  const auto n = m.vp_count();
  const std::size_t cap = cfg.max_per_size.value_or(n <= 6 ? std::numeric_limits<std::size_t>::max() : 64);
  std::vector<std::vector<std::size_t>> subsets;
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t k = 1; k <= n; ++k) {
    auto all = combinations(n, k);
    if (all.size() > cap) {
      std::shuffle(all.begin(), all.end(), rng);
      all.resize(cap);
      std::sort(all.begin(), all.end());
    }
    subsets.insert(subsets.end(), all.begin(), all.end());
  }
  std::vector<SubsetFractions> out(subsets.size());
  parallel_for(subsets.size(), cfg.jobs, [&](std::size_t i) {
    out[i] = SubsetFractions{subsets[i], block_time_fractions(m, subsets[i])};
  });
  return out;
}

struct ConvergencePoint {
  std::size_t size = 0;
  std::size_t samples = 0;
  double mean_all_up = 0.0;
  double mean_all_down = 0.0;
  double mean_disagree = 0.0;
};

inline std::vector<ConvergencePoint> mean_by_size(std::span<const SubsetFractions> curve) {
  std::vector<ConvergencePoint> out;
  for (const auto& s : curve) {
    if (out.empty() || out.back().size != s.subset.size()) out.push_back({s.subset.size(), 0, 0, 0, 0});
    auto& p = out.back();
    ++p.samples;
    p.mean_all_up += s.fractions.f_all_up();
    p.mean_all_down += s.fractions.f_all_down();
    p.mean_disagree += s.fractions.f_disagree();
  }
  for (auto& p : out) {
    p.mean_all_up /= static_cast<double>(p.samples);
    p.mean_all_down /= static_cast<double>(p.samples);
    p.mean_disagree /= static_cast<double>(p.samples);
  }
  return out;
}

struct TTestResult {
  double mean = 0.0;
  double t = 0.0;
  std::size_t df = 0;
  double critical = 0.0;
  bool reject = false;
};

// Two-sided one-sample Student t-test of H0: mean(samples) == 0.
inline TTestResult one_sample_t_test(std::span<const double> samples, double confidence = 0.9975) {
  if (samples.size() < 2) throw InputError("t-test needs at least two samples");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InputError("confidence must be in (0, 1)");
  TTestResult r;
  const double n = static_cast<double>(samples.size());
  r.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - r.mean) * (x - r.mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  r.df = samples.size() - 1;
  boost::math::students_t dist(static_cast<double>(r.df));
  r.critical = boost::math::quantile(dist, 1.0 - (1.0 - confidence) / 2.0);
  if (sd == 0.0) {
    r.t = r.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.mean);
  } else {
    r.t = r.mean / (sd / std::sqrt(n));
  }
  r.reject = std::abs(r.t) > r.critical;
  return r;
}

struct SubsetPairTest {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  TTestResult test;
};

// For every pair of disjoint subsets, tests whether the per-period
// differences of their f_disagree values have zero mean.
// `values[s][p]` is f_disagree of subsets[s] in period p.
inline std::vector<SubsetPairTest> equivalence_from_fractions(const std::vector<std::vector<std::size_t>>& subsets,
                                                              const std::vector<std::vector<double>>& values,
                                                              double confidence = 0.9975) {
  if (values.size() != subsets.size()) throw InputError("one value series per subset required");
  std::vector<SubsetPairTest> out;
  for (std::size_t a = 0; a < subsets.size(); ++a) {
    for (std::size_t b = a + 1; b < subsets.size(); ++b) {
      std::set<std::size_t> sa(subsets[a].begin(), subsets[a].end());
      bool disjoint = std::none_of(subsets[b].begin(), subsets[b].end(), [&](std::size_t v) { return sa.count(v); });
      if (!disjoint) continue;
      if (values[a].size() != values[b].size()) throw InputError("period counts differ between subsets");
      std::vector<double> diffs(values[a].size());
      for (std::size_t p = 0; p < diffs.size(); ++p) diffs[p] = values[a][p] - values[b][p];
      out.push_back({subsets[a], subsets[b], one_sample_t_test(diffs, confidence)});
    }
  }
  return out;
}

// Periods are separate matrices over the same VP list (e.g. quarters).
inline std::vector<SubsetPairTest> subset_equivalence_test(std::span<const RoundMatrix> periods, std::size_t size = 3,
                                                           double confidence = 0.9975) {
  if (periods.size() < 2) throw InputError("subset equivalence test needs at least two periods");
  for (const auto& p : periods) {
    if (p.vps() != periods.front().vps()) throw InputError("all periods must share the same vantage points");
  }
  auto subsets = combinations(periods.front().vp_count(), size);
  std::vector<std::vector<double>> values(subsets.size(), std::vector<double>(periods.size()));
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    for (std::size_t p = 0; p < periods.size(); ++p) {
      values[s][p] = block_time_fractions(periods[p], subsets[s]).f_disagree();
    }
  }
  return equivalence_from_fractions(subsets, values, confidence);
}

struct SimilarityScore {
  std::size_t a = 0;
  std::size_t b = 0;
  std::uint64_t p1 = 0;  // pair both up, every other valid VP down
  std::uint64_t p0 = 0;  // pair both down, every other valid VP up
  std::uint64_t d_star = 0;  // pair members disagree with each other
  std::optional<double> s;
};

// Only cells where both members of the pair are valid and some disagreement
// involves them are counted.
inline SimilarityScore similarity(const RoundMatrix& m, std::size_t a, std::size_t b) {
  if (m.vp_count() < 3) throw InputError("similarity needs at least three vantage points");
  if (a == b) throw InputError("similarity needs two distinct vantage points");
  if (a >= m.vp_count() || b >= m.vp_count()) throw InputError("vantage point index out of range");
  SimilarityScore out;
  out.a = a;
  out.b = b;
  for (std::size_t blk = 0; blk < m.blocks().size(); ++blk) {
    for (std::size_t r = 0; r < m.rounds(); ++r) {
      auto row = m.row(blk, r);
      const auto sa = row[a];
      const auto sb = row[b];
      if (sa == ReachState::Unknown || sb == ReachState::Unknown) continue;
      if (sa != sb) {
        ++out.d_star;
        continue;
      }
      std::size_t others = 0;
      bool all_opposite = true;
      for (std::size_t v = 0; v < row.size(); ++v) {
        if (v == a || v == b || row[v] == ReachState::Unknown) continue;
        ++others;
        if (row[v] == sa) {
          all_opposite = false;
          break;
        }
      }
      if (others == 0 || !all_opposite) continue;
      if (sa == ReachState::Up) {
        ++out.p1;
      } else {
        ++out.p0;
      }
    }
  }
  const auto agree = out.p1 + out.p0;
  if (agree + out.d_star > 0) out.s = static_cast<double>(agree) / static_cast<double>(agree + out.d_star);
  return out;
}

inline std::vector<SimilarityScore> similarity_matrix(const RoundMatrix& m, unsigned jobs = 1) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < m.vp_count(); ++a) {
    for (std::size_t b = a + 1; b < m.vp_count(); ++b) pairs.emplace_back(a, b);
  }
  std::vector<SimilarityScore> out(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t i) { out[i] = similarity(m, pairs[i].first, pairs[i].second); });
  return out;
}

}  // namespace peninsula
