#pragma once

// Optimal offline scheduler: backward induction over (slot, outstanding
// request subset) computes the maximum expected welfare-to-go, then the
// real-time pass replays the memoized policy against a sampled path.
//
// Table construction reads only the t+1 layer while filling layer t, so
// distinct subsets within one layer could be computed concurrently; the
// layer boundary is the only synchronization contract. Runs against a
// finished table are read-only and independent per path.

#include "crsim/model.hpp"

#include <iosfwd>

namespace crsim {

class BudgetError : public std::runtime_error {
public:
    BudgetError(double size, double budget)
        : std::runtime_error("state space too large: " + std::to_string(size) +
                             " exceeds budget " + std::to_string(budget)),
          state_space_size(size),
          budget_limit(budget) {}
    double state_space_size;
    double budget_limit;
};

// One slot decision conditioned on (outstanding set, observed-idle T1 set,
// sensed-idle T2 set): the maximizing assignment and its conditional
// expected welfare-to-go.
struct StepDecision {
    SlotAssignment assignment;
    double value = 0;
};

// Memoized expected-welfare-to-go values F(D, t) for t = 1..H+1 and every
// D inside the slot's active set.
class DpTable {
public:
    static constexpr double kDefaultBudget = 1e9;

    // Runs the backward induction. Throws BudgetError when the guard
    // H * 2^|T1| * 3^|T2| * 2^r exceeds `budget` (r = max simultaneously
    // active requests). Accumulation order is fixed (ascending subset
    // rank), so repeated builds are bit-identical.
    static DpTable build(const Instance& inst, double budget = kDefaultBudget);

    // F(D, t). Extra bits outside the slot's active set are ignored
    // (lookup key is D intersected with the active mask). t may be H+1.
    double value(int t, Mask outstanding) const;

    // F at the initial state: all requests arriving in slot 1.
    double root_value() const { return value(1, inst_.active_mask(1)); }

    const Instance& instance() const { return inst_; }

    // Inspection dump, one `t,mask,F` row per stored value.
    void dump_csv(std::ostream& os) const;

private:
    friend StepDecision step_value(const DpTable& table, int t, Mask outstanding,
                                   std::uint32_t observed_idle_t1, std::uint32_t sensed_idle_t2);

    struct Layer {
        Mask active = 0;
        std::vector<Mask> compressed_bit;  // request id -> bit within this layer's rank
        std::vector<double> values;        // indexed by compressed rank of D
    };

    Mask rank_of(int t, Mask subset) const;  // subset must lie within the layer's active mask

    Instance inst_;
    std::vector<Layer> layers_;  // index t-1, for t = 1..H+1
};

// Realized welfare of one slot's assignment given the observed-idle T1 set,
// the sensed-idle T2 set and the subset of those that are truly idle:
// value for channels in observed-idle-T1 or truly-idle-T2, -penalty for
// sensed-idle-but-busy T2. Throws if the assignment uses channels outside
// (observed_idle_t1, sensed_idle_t2) or true_idle_t2 is not a subset of
// sensed_idle_t2.
double immediate_welfare(const Instance& inst, const SlotAssignment& assignment,
                         std::uint32_t observed_idle_t1, std::uint32_t sensed_idle_t2,
                         std::uint32_t true_idle_t2);

// The slot optimization: maximizes conditional expected welfare-to-go over
// all valid assignments, with the assignment fixed before true T2 states
// are revealed. Requires the table to hold layer t+1. Requests that fail
// p0(k)*w >= Q*(1-p0(k)) are never paired with channel k. Ties resolve to
// fewer T2 assignments, then the lexicographically smallest
// (request, channel) pair list, making the decision deterministic.
StepDecision step_value(const DpTable& table, int t, Mask outstanding,
                        std::uint32_t observed_idle_t1, std::uint32_t sensed_idle_t2);

// Replays the optimal policy against a sampled path: per slot, reads the
// realized channel sets, applies the maximizing assignment, resolves
// service vs collision from the true states, and carries unserved requests
// forward until their windows close.
RunResult run_offline(const DpTable& table, const SamplePath& path);

}  // namespace crsim
