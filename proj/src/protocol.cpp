#include "lobfeat/protocol.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "lobfeat/error.hpp"

namespace lobfeat {

std::vector<std::pair<std::size_t, std::size_t>> windows(std::size_t n_events,
                                                         const WindowSpec& spec) {
  spec.validate();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (n_events < spec.length) return out;
  out.reserve((n_events - spec.length) / spec.stride + 1);
  for (std::size_t s = 0; s + spec.length <= n_events; s += spec.stride)
    out.emplace_back(s, s + spec.length);
  return out;
}

std::optional<LabelP1> label_protocol1(std::span<const Rational> mids, std::size_t at) {
  if (at >= mids.size()) throw DomainError("protocol I label: index out of range");
  for (std::size_t j = 1; at + j < mids.size(); ++j) {
    const Rational& next = mids[at + j];
    if (next != mids[at])
      return LabelP1{next > mids[at] ? Direction::Up : Direction::Down, j};
  }
  return std::nullopt;
}

std::optional<Movement> label_protocol2(std::span<const Rational> mids, std::size_t at,
                                        const LabelP2Params& params) {
  if (at >= mids.size()) throw DomainError("protocol II label: index out of range");
  if (params.horizon == 0) throw DomainError("protocol II label: horizon must be positive");
  if (params.alpha < Rational(0)) throw DomainError("protocol II label: alpha must be >= 0");
  if (at + params.horizon >= mids.size()) return std::nullopt;
  Rational sum(0);
  for (std::size_t i = 1; i <= params.horizon; ++i) sum = sum + mids[at + i];
  const Rational ratio =
      sum / (Rational(static_cast<std::int64_t>(params.horizon)) * mids[at]);
  if (ratio > Rational(1) + params.alpha) return Movement::Up;
  if (ratio < Rational(1) - params.alpha) return Movement::Down;
  return Movement::Stationary;
}

std::size_t horizon_bin(std::size_t horizon, std::span<const std::size_t> limits) {
  if (limits.empty()) throw DomainError("horizon bins: no limits");
  if (!std::is_sorted(limits.begin(), limits.end()) ||
      std::adjacent_find(limits.begin(), limits.end()) != limits.end())
    throw DomainError("horizon bins: limits must be strictly increasing");
  if (horizon < limits.front()) throw DomainError("horizon bins: below the first limit");
  const auto it = std::upper_bound(limits.begin(), limits.end(), horizon);
  return static_cast<std::size_t>(it - limits.begin()) - 1;
}

std::vector<std::size_t> undersample(std::span<const int> labels, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) throw DomainError("undersample: need at least two classes");
  std::size_t minority = labels.size();
  for (const auto& [cls, idx] : by_class) minority = std::min(minority, idx.size());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> keep;
  keep.reserve(minority * by_class.size());
  for (auto& [cls, idx] : by_class) {
    if (idx.size() > minority) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(minority);
    }
    keep.insert(keep.end(), idx.begin(), idx.end());
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

MinMaxParams minmax_fit(const Matrix& train) {
  if (train.rows() == 0) throw DomainError("MinMax: empty training matrix");
  MinMaxParams p;
  const std::size_t cols = train.cols();
  p.min.assign(cols, 0.0);
  p.max.assign(cols, 0.0);
  p.constant.assign(cols, 0);
  for (std::size_t c = 0; c < cols; ++c) {
    double lo = train.at(0, c), hi = lo;
    for (std::size_t r = 1; r < train.rows(); ++r) {
      lo = std::min(lo, train.at(r, c));
      hi = std::max(hi, train.at(r, c));
    }
    p.min[c] = lo;
    p.max[c] = hi;
    p.constant[c] = lo == hi ? 1 : 0;
  }
  return p;
}

MinMaxApplied minmax_apply(const MinMaxParams& params,
                           const std::vector<std::string>& fitted_columns,
                           const Matrix& data) {
  if (data.columns != fitted_columns)
    throw DomainError("MinMax: column set differs from the fitted columns");
  MinMaxApplied out;
  out.normalized.columns = data.columns;
  out.normalized.values.resize(data.values.size());
  for (std::size_t r = 0; r < data.rows(); ++r)
    for (std::size_t c = 0; c < data.cols(); ++c) {
      double v = 0.0;
      if (!params.constant[c]) v = (data.at(r, c) - params.min[c]) / (params.max[c] - params.min[c]);
      if (v < 0.0 || v > 1.0) ++out.out_of_range;
      out.normalized.at(r, c) = v;
    }
  return out;
}

MinMaxResult minmax_fit_apply(const Matrix& train, const Matrix& apply_to) {
  MinMaxResult res;
  res.params = minmax_fit(train);
  auto applied = minmax_apply(res.params, train.columns, apply_to);
  res.normalized = std::move(applied.normalized);
  res.out_of_range = applied.out_of_range;
  return res;
}

}  // namespace lobfeat
