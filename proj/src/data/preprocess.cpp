#include "tarml/data/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "tarml/error.hpp"
#include "tarml/rng.hpp"

namespace tarml::data {

ScalingSpec fit_scaling(const Dataset& d) {
  const FeatureSchema observed = d.observed_schema();
  ScalingSpec s;
  s.fingerprint = d.schema.fingerprint();
  for (std::size_t c = 0; c < kColumnCount; ++c) {
    const auto& col = observed.column(c);
    if (d.empty() || !(col.bounds.max > col.bounds.min)) {
      throw Error("constant column \"" + col.name + "\" cannot be normalized");
    }
    s.columns.push_back(col.bounds);
  }
  return s;
}

namespace {

void check_matches(const Dataset& d, const ScalingSpec& s) {
  if (s.columns.size() != kColumnCount || s.fingerprint != d.schema.fingerprint()) {
    throw SchemaError("scaling spec does not match the dataset schema (" +
                      std::to_string(s.columns.size()) + " columns, expected " +
                      std::to_string(kColumnCount) + ")");
  }
}

}  // namespace

Dataset apply_scaling(const Dataset& d, const ScalingSpec& s) {
  check_matches(d, s);
  Dataset out = d;
  for (auto& r : out.rows) {
    for (std::size_t c = 0; c < kColumnCount; ++c) r.value(c) = s.to_unit(c, r.value(c));
  }
  return out;
}

std::pair<Dataset, ScalingSpec> normalize(const Dataset& d) {
  ScalingSpec s = fit_scaling(d);
  return {apply_scaling(d, s), std::move(s)};
}

Dataset denormalize(const Dataset& d, const ScalingSpec& s) {
  check_matches(d, s);
  Dataset out = d;
  for (auto& r : out.rows) {
    for (std::size_t c = 0; c < kColumnCount; ++c) r.value(c) = s.from_unit(c, r.value(c));
  }
  return out;
}

OutlierPolicy parse_outlier_policy(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::optional<double> arg;
  if (colon != std::string::npos) {
    try {
      std::size_t used = 0;
      arg = std::stod(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error("bad outlier policy argument in \"" + text + "\"");
    }
  }
  if (name == "none" && !arg) return NoOutlierPolicy{};
  if (name == "iqr") return IqrPolicy{arg.value_or(1.5)};
  if (name == "zscore") return ZScorePolicy{arg.value_or(3.0)};
  throw Error("unknown outlier policy \"" + text + "\" (expected none, iqr[:m], zscore[:t])");
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::string RemovalReport::to_text() const {
  std::ostringstream out;
  out.precision(17);
  for (const auto& t : triggers) {
    out << "row " << t.row << " removed: " << t.column << " = " << format_number(t.value)
        << " outside [" << format_number(t.lo) << ", " << format_number(t.hi) << "]\n";
  }
  return out.str();
}

namespace {

// One fence pass over the rows listed in `alive`; returns the violations.
template <typename FenceFn>
std::vector<Removal> fence_pass(const Dataset& d, const std::vector<std::size_t>& alive, FenceFn fence) {
  std::vector<Removal> hits;
  for (std::size_t t = 0; t < kTargetCount; ++t) {
    const std::size_t c = kFeatureCount + t;
    std::vector<double> values;
    values.reserve(alive.size());
    for (std::size_t i : alive) values.push_back(d.rows[i].value(c));
    const auto [lo, hi] = fence(values);
    for (std::size_t i : alive) {
      const double v = d.rows[i].value(c);
      if (v < lo || v > hi) hits.push_back({i, d.schema.column(c).name, v, lo, hi});
    }
  }
  return hits;
}

}  // namespace

std::pair<Dataset, RemovalReport> remove_outliers(const Dataset& d, const OutlierPolicy& policy) {
  std::vector<std::size_t> alive(d.size());
  std::iota(alive.begin(), alive.end(), std::size_t{0});
  RemovalReport report;

  auto drop = [&](const std::vector<Removal>& hits) {
    std::set<std::size_t> rows;
    for (const auto& h : hits) rows.insert(h.row);
    std::erase_if(alive, [&](std::size_t i) { return rows.contains(i); });
    report.triggers.insert(report.triggers.end(), hits.begin(), hits.end());
    report.removed_rows.insert(report.removed_rows.end(), rows.begin(), rows.end());
  };

  if (const auto* iqr = std::get_if<IqrPolicy>(&policy)) {
    if (!(iqr->multiplier > 0.0)) throw Error("iqr multiplier must be positive");
    drop(fence_pass(d, alive, [m = iqr->multiplier](const std::vector<double>& v) {
      const double q1 = quantile(v, 0.25);
      const double q3 = quantile(v, 0.75);
      return std::pair{q1 - m * (q3 - q1), q3 + m * (q3 - q1)};
    }));
  } else if (const auto* z = std::get_if<ZScorePolicy>(&policy)) {
    if (!(z->threshold > 0.0)) throw Error("zscore threshold must be positive");
    for (;;) {
      auto hits = fence_pass(d, alive, [t = z->threshold](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        return std::pair{mean - t * sd, mean + t * sd};
      });
      if (hits.empty()) break;
      drop(hits);
      if (alive.empty()) throw Error("zscore policy removes every row");
    }
    std::sort(report.removed_rows.begin(), report.removed_rows.end());
  }

  return {d.subset(alive), std::move(report)};
}

std::size_t FoldPlan::total() const {
  std::size_t n = 0;
  for (const auto& f : folds) n += f.size();
  return n;
}

std::vector<std::size_t> FoldPlan::complement(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < folds.size(); ++g) {
    if (g != f) out.insert(out.end(), folds[g].begin(), folds[g].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error("fold count must be at least 2 (got " + std::to_string(k) + ")");
  if (k > n) {
    throw Error("fold count " + std::to_string(k) + " exceeds row count " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  FoldPlan plan{k, seed, {}};
  std::size_t begin = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    plan.folds.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(begin),
                            order.begin() + static_cast<std::ptrdiff_t>(begin + size));
    begin += size;
  }
  return plan;
}

}  // namespace tarml::data
