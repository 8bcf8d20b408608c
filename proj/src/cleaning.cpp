#include "lobfeat/cleaning.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "lobfeat/error.hpp"

namespace lobfeat {

FilterParams FilterParams::defaults(TickSize tick) {
  FilterParams p;
  p.gamma = 2.0 * static_cast<double>(tick.value());
  return p;
}

void FilterParams::validate() const {
  if (k < 4 || k % 2 != 0) throw DomainError("filter: k must be even and >= 4");
  if (!(alpha_sd > 0.0)) throw DomainError("filter: alpha must be positive");
  if (!(gamma > 0.0)) throw DomainError("filter: gamma must be positive");
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5))
    throw DomainError("filter: trim fraction must be in [0, 0.5)");
}

void FilterParams::validate(TickSize tick) const {
  validate();
  if (gamma < static_cast<double>(tick.value()))
    throw DomainError("filter: gamma must be at least one tick");
}

std::vector<MessageEvent> filter_session_bounds(std::span<const MessageEvent> events,
                                                std::int64_t open, std::int64_t close,
                                                SessionFilterReport* report) {
  if (open >= close) throw DomainError("session bounds: open must precede close");
  SessionFilterReport r;
  r.input = events.size();
  std::vector<MessageEvent> out;
  out.reserve(events.size());
  for (const auto& ev : events) {
    if (ev.timestamp < open || ev.timestamp > close) {
      ++r.outside_session;
    } else if (ev.price <= 0) {
      ++r.zero_price;
    } else {
      out.push_back(ev);
    }
  }
  r.kept = out.size();
  if (report) *report = r;
  return out;
}

OutlierResult outlier_filter(std::span<const double> prices, const FilterParams& params,
                             kernels::Backend backend) {
  params.validate();
  const auto k = static_cast<std::size_t>(params.k);
  if (prices.size() <= k)
    throw DomainError("outlier filter: series of length " + std::to_string(prices.size()) +
                      " is shorter than k + 1 = " + std::to_string(k + 1));

  std::vector<kernels::NeighborhoodStat> stats(prices.size());
  kernels::neighborhood_stats(backend, prices, k, params.trim_fraction, stats);

  OutlierResult res;
  res.kept.assign(prices.size(), 1);
  res.report.input = prices.size();
  res.report.params = params;
  for (std::size_t i = 0; i < prices.size(); ++i) {
    const double threshold = params.alpha_sd * stats[i].sd + params.gamma;
    if (std::abs(prices[i] - stats[i].mean) >= threshold) {
      res.kept[i] = 0;
      res.report.removals.push_back({i, prices[i], stats[i].mean, stats[i].sd, threshold});
    }
  }
  res.report.removed = res.report.removals.size();
  return res;
}

void write_removal_summary(std::ostream& out, const OutlierReport& r) {
  out << "outlier filter: k=" << r.params.k << " alpha_sd=" << r.params.alpha_sd
      << " gamma=" << r.params.gamma << " trim_fraction=" << r.params.trim_fraction << '\n'
      << "  observations: " << r.input << '\n'
      << "  removed:      " << r.removed << '\n';
  if (!r.removals.empty()) {
    out << "  indices:";
    for (const auto& rem : r.removals) out << ' ' << rem.index;
    out << '\n';
  }
}

void write_removal_csv(std::ostream& out, const OutlierReport& r) {
  out << "index,value,neighborhood_mean,neighborhood_sd,threshold\n";
  out << std::setprecision(17);
  for (const auto& rem : r.removals)
    out << rem.index << ',' << rem.value << ',' << rem.neighborhood_mean << ','
        << rem.neighborhood_sd << ',' << rem.threshold << '\n';
}

}  // namespace lobfeat
