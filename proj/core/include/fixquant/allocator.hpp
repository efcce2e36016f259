#pragma once

#include <span>
#include <variant>
#include <vector>

#include "fixquant/sqnr_model.hpp"

namespace fixquant {

struct StepBounds {
  int min_bits = 2;
  int max_bits = 16;
};

struct MinOutputSqnr {
  SqnrDb target;
};

struct MaxTotalCost {
  double bits;  // bound on sum(rho_i * beta_i)
};

// Cross-layer bit allocation problem. Exactly one constraint is active.
// Steps with equal lower and upper bounds are pinned: they contribute to the
// composed SQNR (and to cost when rho > 0) but are not optimized.
struct AllocationProblem {
  std::vector<QuantStep> steps;  // rho used as cost weight; bitwidth ignored
  double kappa = 3.0;
  std::variant<MinOutputSqnr, MaxTotalCost> constraint{MinOutputSqnr{SqnrDb{20.0}}};
  std::vector<StepBounds> bounds;  // one per step; empty selects [2, 16]

  void validate() const;
};

struct BitAllocation {
  std::vector<double> continuous_bits;
  std::vector<int> integer_bits;
  double total_cost_bits = 0.0;  // sum(rho_i * integer beta_i)
  SqnrDb predicted_output;       // composed over all steps at integer widths
};

// Closed-form water-filling solution: the continuous optimum satisfies
// rho_i * gamma_i = constant over free steps, with the active constraint met
// with equality; bound violations are pinned and the remainder re-solved.
// The integer allocation rounds the continuous solution up and then greedily
// removes bits (largest rho first) while the constraint still holds.
// errc::infeasible when the bounds make the constraint unreachable.
BitAllocation solve_waterfilling(const AllocationProblem& problem);

// Smallest uniform integer bit-width meeting the constraint, applied to all
// free steps (pinned steps keep their pinned width).
BitAllocation equal_allocate(const AllocationProblem& problem);

// Optimal bit-width offsets relative to the first step:
// round(10*log10(rho_0 / rho_i) / kappa), nearest integer, ties toward zero.
std::vector<int> relative_bitwidths(std::span<const double> rhos, double kappa);

// Exhaustive integer search over [beta_range.min_bits, beta_range.max_bits]^n.
// Returns the cheapest feasible assignment (ties: lexicographically
// smallest). Guarded to <= 8 steps and range width <= 12 (errc::guard).
BitAllocation exhaustive_allocate(const AllocationProblem& problem,
                                  StepBounds beta_range);

struct SweepRow {
  SqnrDb target;
  bool feasible = false;
  double optimized_cost_bits = 0.0;
  SqnrDb optimized_sqnr;
  double equal_cost_bits = 0.0;
  SqnrDb equal_sqnr;
};

// Cost/SQNR trade-off of the optimized policy against the equal-bit-width
// policy across ascending SQNR targets. Infeasible targets are flagged, not
// dropped.
std::vector<SweepRow> sweep_tradeoff(const AllocationProblem& problem_template,
                                     std::span<const SqnrDb> sqnr_targets);

}  // namespace fixquant
