#include "fixquant/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fixquant {

namespace {

constexpr double kFeasTol = 1e-9;  // relative slack on constraint checks

// Inverse linear SQNR of one step at bit-width beta under Eq. kappa*beta.
double step_lambda(double kappa, double beta) {
  return std::pow(10.0, -kappa * beta / 10.0);
}

struct Workspace {
  const AllocationProblem& problem;
  std::vector<StepBounds> bounds;
  std::vector<bool> fixed;  // min == max

  explicit Workspace(const AllocationProblem& p) : problem(p) {
    bounds = p.bounds.empty() ? std::vector<StepBounds>(p.steps.size(),
                                                        StepBounds{})
                              : p.bounds;
    fixed.resize(p.steps.size());
    for (std::size_t i = 0; i < bounds.size(); ++i) {
      fixed[i] = bounds[i].min_bits == bounds[i].max_bits;
    }
  }

  double lambda_at(std::size_t i, double beta) const {
    return step_lambda(problem.kappa, beta);
    (void)i;
  }

  double total_lambda(std::span<const double> betas) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
      sum += step_lambda(problem.kappa, betas[i]);
    }
    return sum;
  }

  double total_cost(std::span<const int> betas) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < betas.size(); ++i) {
      sum += problem.steps[i].rho * betas[i];
    }
    return sum;
  }

  SqnrDb compose_at(std::span<const int> betas) const {
    std::vector<SqnrDb> parts;
    parts.reserve(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) {
      parts.push_back(predict_sqnr_db(betas[i], problem.kappa));
    }
    return compose_sqnr(parts);
  }
};

[[noreturn]] void raise_sqnr_infeasible(const Workspace& ws, double target_db) {
  // Name the bound that binds: the step contributing the most noise when
  // everything sits at its upper bound.
  std::size_t worst = 0;
  double worst_lambda = -1.0;
  double reachable = 0.0;
  for (std::size_t i = 0; i < ws.bounds.size(); ++i) {
    const double l = step_lambda(ws.problem.kappa, ws.bounds[i].max_bits);
    reachable += l;
    if (l > worst_lambda) {
      worst_lambda = l;
      worst = i;
    }
  }
  raise(errc::infeasible,
        "min output SQNR " + std::to_string(target_db) +
            " dB unreachable: all steps at their max bits reach " +
            std::to_string(-10.0 * std::log10(reachable)) +
            " dB; binding bound: max_bits=" +
            std::to_string(ws.bounds[worst].max_bits) + " at step '" +
            ws.problem.steps[worst].label + "'");
}

// Continuous water-filling for the min-SQNR problem. Parameterized by the
// water level m: free steps sit at beta(m) = (10/kappa)*log10(m/rho_i),
// clamped to their bounds; m is driven until the composed noise meets the
// budget, then the free set is polished in closed form so that
// rho_i * gamma_i is constant to machine precision.
std::vector<double> continuous_min_sqnr(const Workspace& ws, double target_db) {
  const auto& steps = ws.problem.steps;
  const double kappa = ws.problem.kappa;
  const double budget = std::pow(10.0, -target_db / 10.0);
  const std::size_t n = steps.size();

  std::vector<double> betas(n);
  auto betas_at = [&](double log10_m) {
    for (std::size_t i = 0; i < n; ++i) {
      double b;
      if (steps[i].rho <= 0.0) {
        b = static_cast<double>(ws.bounds[i].max_bits);
      } else {
        b = (10.0 / kappa) * (log10_m - std::log10(steps[i].rho));
      }
      betas[i] = std::clamp(b, static_cast<double>(ws.bounds[i].min_bits),
                            static_cast<double>(ws.bounds[i].max_bits));
    }
  };

  // Feasibility at the upper bounds.
  double min_noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    min_noise += step_lambda(kappa, ws.bounds[i].max_bits);
  }
  if (min_noise > budget * (1.0 + kFeasTol)) {
    raise_sqnr_infeasible(ws, target_db);
  }

  // If the lower bounds already satisfy the constraint, they are optimal.
  double lo_noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lo_noise += step_lambda(kappa, ws.bounds[i].min_bits);
  }
  if (lo_noise <= budget) {
    for (std::size_t i = 0; i < n; ++i) {
      betas[i] = static_cast<double>(ws.bounds[i].min_bits);
    }
    return betas;
  }

  // Bisection on log10(m); total noise is monotone decreasing in m.
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (steps[i].rho <= 0.0) continue;
    const double l = std::log10(steps[i].rho) + kappa * ws.bounds[i].min_bits / 10.0;
    const double h = std::log10(steps[i].rho) + kappa * ws.bounds[i].max_bits / 10.0;
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  if (!std::isfinite(lo)) {  // every step pinned or zero-rho
    betas_at(0.0);
    return betas;
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    betas_at(mid);
    if (ws.total_lambda(betas) > budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  betas_at(hi);

  // Closed-form polish on the free set.
  double pinned_lambda = 0.0;
  double free_rho = 0.0;
  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo_b = ws.bounds[i].min_bits;
    const double hi_b = ws.bounds[i].max_bits;
    if (steps[i].rho > 0.0 && betas[i] > lo_b + 1e-7 && betas[i] < hi_b - 1e-7) {
      free_idx.push_back(i);
      free_rho += steps[i].rho;
    } else {
      pinned_lambda += step_lambda(kappa, betas[i]);
    }
  }
  const double free_budget = budget - pinned_lambda;
  if (!free_idx.empty() && free_budget > 0.0) {
    const double k_const = free_rho / free_budget;  // rho_i * gamma_i = K
    for (std::size_t i : free_idx) {
      betas[i] = (10.0 / kappa) * std::log10(k_const / steps[i].rho);
    }
  }
  return betas;
}

// Continuous solution for the max-cost problem: same water-filling form,
// with the level driven until the cost budget is spent.
std::vector<double> continuous_max_cost(const Workspace& ws, double cost_budget) {
  const auto& steps = ws.problem.steps;
  const double kappa = ws.problem.kappa;
  const std::size_t n = steps.size();

  double min_cost = 0.0;
  double max_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    min_cost += steps[i].rho * ws.bounds[i].min_bits;
    max_cost += steps[i].rho * ws.bounds[i].max_bits;
  }
  if (min_cost > cost_budget * (1.0 + kFeasTol)) {
    raise(errc::infeasible,
          "cost budget " + std::to_string(cost_budget) +
              " bits unreachable: lower bounds alone cost " +
              std::to_string(min_cost) + " bits");
  }

  std::vector<double> betas(n);
  auto betas_at = [&](double log10_m) {
    for (std::size_t i = 0; i < n; ++i) {
      double b;
      if (steps[i].rho <= 0.0) {
        b = static_cast<double>(ws.bounds[i].max_bits);
      } else {
        b = (10.0 / kappa) * (log10_m - std::log10(steps[i].rho));
      }
      betas[i] = std::clamp(b, static_cast<double>(ws.bounds[i].min_bits),
                            static_cast<double>(ws.bounds[i].max_bits));
    }
  };
  auto cost_at = [&]() {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += steps[i].rho * betas[i];
    return c;
  };

  if (max_cost <= cost_budget) {
    for (std::size_t i = 0; i < n; ++i) {
      betas[i] = static_cast<double>(ws.bounds[i].max_bits);
    }
    return betas;
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (steps[i].rho <= 0.0) continue;
    lo = std::min(lo, std::log10(steps[i].rho) + kappa * ws.bounds[i].min_bits / 10.0);
    hi = std::max(hi, std::log10(steps[i].rho) + kappa * ws.bounds[i].max_bits / 10.0);
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    betas_at(mid);
    if (cost_at() > cost_budget) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  betas_at(lo);

  // Closed-form polish: spend the remaining budget exactly on the free set.
  double pinned_cost = 0.0;
  double free_rho = 0.0;
  double free_rho_log = 0.0;
  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo_b = ws.bounds[i].min_bits;
    const double hi_b = ws.bounds[i].max_bits;
    if (steps[i].rho > 0.0 && betas[i] > lo_b + 1e-7 && betas[i] < hi_b - 1e-7) {
      free_idx.push_back(i);
      free_rho += steps[i].rho;
      free_rho_log += steps[i].rho * std::log10(steps[i].rho);
    } else {
      pinned_cost += steps[i].rho * betas[i];
    }
  }
  if (!free_idx.empty()) {
    const double remaining = cost_budget - pinned_cost;
    const double level =
        (remaining * ws.problem.kappa / 10.0 + free_rho_log) / free_rho;
    for (std::size_t i : free_idx) {
      betas[i] = (10.0 / kappa) * (level - std::log10(steps[i].rho));
    }
  }
  return betas;
}

std::vector<int> round_min_sqnr(const Workspace& ws,
                                std::span<const double> continuous,
                                double target_db) {
  const std::size_t n = continuous.size();
  const double budget = std::pow(10.0, -target_db / 10.0) * (1.0 + kFeasTol);
  std::vector<int> bits(n);
  for (std::size_t i = 0; i < n; ++i) {
    bits[i] = static_cast<int>(std::ceil(continuous[i] - 1e-9));
    bits[i] = std::clamp(bits[i], ws.bounds[i].min_bits, ws.bounds[i].max_bits);
  }
  // Greedy repair: shed bits from the most expensive steps while the
  // constraint still holds.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ws.problem.steps[a].rho > ws.problem.steps[b].rho;
  });
  double noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    noise += step_lambda(ws.problem.kappa, bits[i]);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i : order) {
      if (bits[i] <= ws.bounds[i].min_bits) continue;
      const double delta = step_lambda(ws.problem.kappa, bits[i] - 1) -
                           step_lambda(ws.problem.kappa, bits[i]);
      if (noise + delta <= budget) {
        bits[i] -= 1;
        noise += delta;
        changed = true;
      }
    }
  }
  return bits;
}

std::vector<int> round_max_cost(const Workspace& ws,
                                std::span<const double> continuous,
                                double cost_budget) {
  const std::size_t n = continuous.size();
  std::vector<int> bits(n);
  for (std::size_t i = 0; i < n; ++i) {
    bits[i] = static_cast<int>(std::floor(continuous[i] + 1e-9));
    bits[i] = std::clamp(bits[i], ws.bounds[i].min_bits, ws.bounds[i].max_bits);
  }
  double cost = ws.total_cost(bits);
  // Greedy: spend leftover budget where it buys the most noise reduction
  // per cost unit. Zero-cost steps are already at their upper bounds.
  while (true) {
    double best_gain = 0.0;
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (bits[i] >= ws.bounds[i].max_bits) continue;
      if (ws.problem.steps[i].rho <= 0.0) continue;
      if (cost + ws.problem.steps[i].rho > cost_budget * (1.0 + kFeasTol)) continue;
      const double gain = (step_lambda(ws.problem.kappa, bits[i]) -
                           step_lambda(ws.problem.kappa, bits[i] + 1)) /
                          ws.problem.steps[i].rho;
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best == n) break;
    bits[best] += 1;
    cost += ws.problem.steps[best].rho;
  }
  return bits;
}

BitAllocation finish_allocation(const Workspace& ws,
                                std::vector<double> continuous,
                                std::vector<int> bits) {
  BitAllocation alloc;
  alloc.continuous_bits = std::move(continuous);
  alloc.integer_bits = std::move(bits);
  alloc.total_cost_bits = ws.total_cost(alloc.integer_bits);
  alloc.predicted_output = ws.compose_at(alloc.integer_bits);
  return alloc;
}

}  // namespace

void AllocationProblem::validate() const {
  if (steps.empty()) raise(errc::input, "allocation problem has no steps");
  if (!(kappa > 0.0)) raise(errc::range, "allocation problem: kappa <= 0");
  if (!bounds.empty() && bounds.size() != steps.size()) {
    raise(errc::input, "bounds count does not match step count");
  }
  const auto& b = bounds;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const StepBounds sb = b.empty() ? StepBounds{} : b[i];
    if (sb.min_bits < 1 || sb.max_bits > 32 || sb.min_bits > sb.max_bits) {
      raise(errc::range, "bad bounds for step '" + steps[i].label + "'");
    }
    if (steps[i].rho < 0.0) {
      raise(errc::input, "negative rho for step '" + steps[i].label + "'");
    }
    const bool participates = sb.min_bits != sb.max_bits;
    if (participates && steps[i].rho == 0.0 &&
        std::holds_alternative<MaxTotalCost>(constraint)) {
      // Free zero-cost steps are fine for SQNR targets (they get max bits)
      // but make a cost budget meaningless.
      raise(errc::input, "free step '" + steps[i].label + "' has zero cost");
    }
  }
  if (const auto* sqnr = std::get_if<MinOutputSqnr>(&constraint)) {
    if (!std::isfinite(sqnr->target.db)) {
      raise(errc::range, "min output SQNR target must be finite");
    }
  } else if (const auto* cost = std::get_if<MaxTotalCost>(&constraint)) {
    if (!(cost->bits >= 0.0)) raise(errc::range, "negative cost budget");
  }
}

BitAllocation solve_waterfilling(const AllocationProblem& problem) {
  problem.validate();
  Workspace ws(problem);
  if (const auto* sqnr = std::get_if<MinOutputSqnr>(&problem.constraint)) {
    auto continuous = continuous_min_sqnr(ws, sqnr->target.db);
    auto bits = round_min_sqnr(ws, continuous, sqnr->target.db);
    return finish_allocation(ws, std::move(continuous), std::move(bits));
  }
  const auto& cost = std::get<MaxTotalCost>(problem.constraint);
  auto continuous = continuous_max_cost(ws, cost.bits);
  auto bits = round_max_cost(ws, continuous, cost.bits);
  return finish_allocation(ws, std::move(continuous), std::move(bits));
}

BitAllocation equal_allocate(const AllocationProblem& problem) {
  problem.validate();
  Workspace ws(problem);
  const std::size_t n = problem.steps.size();

  int lo = 1, hi = 32;
  bool any_free = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (ws.fixed[i]) continue;
    any_free = true;
    lo = std::max(lo, ws.bounds[i].min_bits);
    hi = std::min(hi, ws.bounds[i].max_bits);
  }
  if (any_free && lo > hi) {
    raise(errc::infeasible, "equal policy: step bounds have empty intersection");
  }

  auto fill = [&](int b) {
    std::vector<int> bits(n);
    for (std::size_t i = 0; i < n; ++i) {
      bits[i] = ws.fixed[i] ? ws.bounds[i].min_bits : b;
    }
    return bits;
  };

  if (const auto* sqnr = std::get_if<MinOutputSqnr>(&problem.constraint)) {
    const double budget =
        std::pow(10.0, -sqnr->target.db / 10.0) * (1.0 + kFeasTol);
    for (int b = any_free ? lo : 1; b <= (any_free ? hi : 1); ++b) {
      auto bits = fill(b);
      double noise = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        noise += step_lambda(problem.kappa, bits[i]);
      }
      if (noise <= budget) {
        std::vector<double> continuous(bits.begin(), bits.end());
        return finish_allocation(ws, std::move(continuous), std::move(bits));
      }
    }
    raise_sqnr_infeasible(ws, sqnr->target.db);
  }
  const auto& cost = std::get<MaxTotalCost>(problem.constraint);
  std::vector<int> best;
  for (int b = any_free ? lo : 1; b <= (any_free ? hi : 1); ++b) {
    auto bits = fill(b);
    if (ws.total_cost(bits) <= cost.bits * (1.0 + kFeasTol)) {
      best = std::move(bits);
    } else {
      break;
    }
  }
  if (best.empty()) {
    raise(errc::infeasible, "equal policy: cost budget below the lower bounds");
  }
  std::vector<double> continuous(best.begin(), best.end());
  return finish_allocation(ws, std::move(continuous), std::move(best));
}

std::vector<int> relative_bitwidths(std::span<const double> rhos, double kappa) {
  if (rhos.empty()) raise(errc::input, "relative_bitwidths: no cost weights");
  if (!(kappa > 0.0)) raise(errc::range, "relative_bitwidths: kappa <= 0");
  for (double r : rhos) {
    if (!(r > 0.0)) raise(errc::range, "relative_bitwidths: nonpositive rho");
  }
  std::vector<int> offsets;
  offsets.reserve(rhos.size());
  for (double r : rhos) {
    const double x = 10.0 * std::log10(rhos[0] / r) / kappa;
    // Nearest integer, ties toward zero.
    double rounded = std::round(x);
    if (std::abs(x - std::trunc(x)) == 0.5) rounded = std::trunc(x);
    offsets.push_back(static_cast<int>(rounded));
  }
  return offsets;
}

BitAllocation exhaustive_allocate(const AllocationProblem& problem,
                                  StepBounds beta_range) {
  problem.validate();
  Workspace ws(problem);
  const std::size_t n = problem.steps.size();
  if (beta_range.min_bits > beta_range.max_bits) {
    raise(errc::range, "exhaustive_allocate: empty beta range");
  }

  // Enumeration range per step: beta_range intersected with the step's own
  // bounds; fully pinned steps are not enumerated.
  std::vector<StepBounds> ranges(n);
  std::size_t enumerated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ws.fixed[i]) {
      ranges[i] = ws.bounds[i];
      continue;
    }
    ranges[i].min_bits = std::max(beta_range.min_bits, ws.bounds[i].min_bits);
    ranges[i].max_bits = std::min(beta_range.max_bits, ws.bounds[i].max_bits);
    if (ranges[i].min_bits > ranges[i].max_bits) {
      raise(errc::range, "exhaustive_allocate: empty range for step '" +
                             problem.steps[i].label + "'");
    }
    ++enumerated;
  }
  if (enumerated > 8 || beta_range.max_bits - beta_range.min_bits > 12) {
    raise(errc::guard,
          "exhaustive_allocate: guard exceeded (steps <= 8, width <= 12)");
  }

  const bool sqnr_mode = std::holds_alternative<MinOutputSqnr>(problem.constraint);
  const double budget =
      sqnr_mode
          ? std::pow(10.0,
                     -std::get<MinOutputSqnr>(problem.constraint).target.db / 10.0) *
                (1.0 + kFeasTol)
          : std::get<MaxTotalCost>(problem.constraint).bits * (1.0 + kFeasTol);

  // Suffix bounds for pruning.
  std::vector<double> min_cost_suffix(n + 1, 0.0);
  std::vector<double> min_noise_suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    min_cost_suffix[i] =
        min_cost_suffix[i + 1] + problem.steps[i].rho * ranges[i].min_bits;
    min_noise_suffix[i] =
        min_noise_suffix[i + 1] + step_lambda(problem.kappa, ranges[i].max_bits);
  }

  std::vector<int> current(n), best;
  double best_cost = std::numeric_limits<double>::infinity();
  double best_noise = std::numeric_limits<double>::infinity();

  auto dfs = [&](auto&& self, std::size_t i, double cost, double noise) -> void {
    if (sqnr_mode) {
      if (cost + min_cost_suffix[i] >= best_cost) return;
      if (noise + min_noise_suffix[i] > budget) return;
    } else {
      if (cost + min_cost_suffix[i] > budget) return;
      if (noise + min_noise_suffix[i] >= best_noise) return;
    }
    if (i == n) {
      if (sqnr_mode) {
        if (noise <= budget && cost < best_cost) {
          best_cost = cost;
          best = current;
        }
      } else {
        if (noise < best_noise) {
          best_noise = noise;
          best = current;
        }
      }
      return;
    }
    for (int b = ranges[i].min_bits; b <= ranges[i].max_bits; ++b) {
      current[i] = b;
      self(self, i + 1, cost + problem.steps[i].rho * b,
           noise + step_lambda(problem.kappa, b));
    }
  };
  dfs(dfs, 0, 0.0, 0.0);

  if (best.empty()) {
    if (sqnr_mode) {
      raise_sqnr_infeasible(ws, std::get<MinOutputSqnr>(problem.constraint).target.db);
    }
    raise(errc::infeasible, "exhaustive_allocate: cost budget unreachable");
  }
  std::vector<double> continuous(best.begin(), best.end());
  return finish_allocation(ws, std::move(continuous), std::move(best));
}

std::vector<SweepRow> sweep_tradeoff(const AllocationProblem& problem_template,
                                     std::span<const SqnrDb> sqnr_targets) {
  for (std::size_t i = 1; i < sqnr_targets.size(); ++i) {
    if (sqnr_targets[i].db < sqnr_targets[i - 1].db) {
      raise(errc::input, "sweep_tradeoff: targets must ascend");
    }
  }
  std::vector<SweepRow> rows;
  rows.reserve(sqnr_targets.size());
  for (const SqnrDb& target : sqnr_targets) {
    AllocationProblem problem = problem_template;
    problem.constraint = MinOutputSqnr{target};
    SweepRow row;
    row.target = target;
    try {
      const BitAllocation opt = solve_waterfilling(problem);
      const BitAllocation eq = equal_allocate(problem);
      row.feasible = true;
      row.optimized_cost_bits = opt.total_cost_bits;
      row.optimized_sqnr = opt.predicted_output;
      row.equal_cost_bits = eq.total_cost_bits;
      row.equal_sqnr = eq.predicted_output;
    } catch (const Error& e) {
      if (e.code() != errc::infeasible) throw;
      row.feasible = false;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fixquant
