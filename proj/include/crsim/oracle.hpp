#pragma once

// Brute-force ground truth for tiny instances. exact_expected_welfare
// enumerates every joint channel/sensing realization and averages the
// policy's scored welfare; exhaustive_optimal maximizes over all valid
// per-information-state decisions by plain backward induction. Both are
// independent of the production DP code path and exist to certify it.

#include "crsim/model.hpp"

#include <functional>

namespace crsim {

// A deterministic scheduling policy: given the slot, the outstanding
// request ids, the observed-idle T1 channel mask and the sensed-idle T2
// channel mask, produce the slot's assignment.
using Policy = std::function<SlotAssignment(const Instance&, int t, const std::vector<int>& outstanding,
                                            std::uint32_t observed_idle_t1, std::uint32_t sensed_idle_t2)>;

class EnumerationBudgetError : public std::runtime_error {
public:
    EnumerationBudgetError(double size, double budget)
        : std::runtime_error("realization enumeration too large: " + std::to_string(size) +
                             " joint realizations exceed budget " + std::to_string(budget)),
          size_estimate(size) {}
    double size_estimate;
};

// Expected welfare of `policy`, summed over every joint realization of the
// T1 states and the T2 (state, sensed) pairs across all slots, weighted by
// its exact probability. Throws EnumerationBudgetError when
// (2^|T1| * 4^|T2|)^H exceeds `budget`.
double exact_expected_welfare(const Instance& inst, const Policy& policy, double budget = 2e7);

// Sum of all joint realization probabilities (== 1); exposed for tests.
double total_realization_probability(const Instance& inst, double budget = 2e7);

// Maximum expected welfare over every deterministic mapping from reachable
// (t, outstanding, observed-idle, sensed-idle) information states to valid
// assignments. Hard guard: H <= 3, |T1|+|T2| <= 2, N <= 3.
double exhaustive_optimal(const Instance& inst);

}  // namespace crsim
