#include "crsim/oracle.hpp"

#include <cmath>

namespace crsim {

namespace {

// Per-slot joint realization of channel states: observed-idle T1 mask,
// sensed-idle T2 mask, truly-idle T2 mask, and the probability.
struct SlotRealization {
    std::uint32_t idle_t1 = 0;
    std::uint32_t sensed_idle_t2 = 0;
    std::uint32_t true_idle_t2 = 0;
    double prob = 1.0;
};

std::vector<SlotRealization> enumerate_slot_realizations(const Instance& inst) {
    const int n1 = static_cast<int>(inst.t1.size());
    const int n2 = static_cast<int>(inst.t2.size());
    std::vector<SlotRealization> out;
    const std::uint64_t combos = (std::uint64_t{1} << n1) * (std::uint64_t{1} << (2 * n2));
    out.reserve(combos);
    for (std::uint64_t code = 0; code < combos; ++code) {
        SlotRealization r;
        std::uint64_t c = code;
        for (int i = 0; i < n1; ++i) {
            const bool idle = c & 1;
            c >>= 1;
            r.prob *= idle ? inst.t1[i].idle_prob : 1.0 - inst.t1[i].idle_prob;
            if (idle) r.idle_t1 |= std::uint32_t{1} << i;
        }
        for (int k = 0; k < n2; ++k) {
            const bool idle = c & 1;
            const bool sensed_idle = c & 2;
            c >>= 2;
            const T2Channel& ch = inst.t2[k];
            double p;
            if (idle && sensed_idle) p = ch.idle_prob * (1.0 - ch.false_alarm);
            else if (idle) p = ch.idle_prob * ch.false_alarm;
            else if (sensed_idle) p = (1.0 - ch.idle_prob) * ch.misdetect;
            else p = (1.0 - ch.idle_prob) * (1.0 - ch.misdetect);
            r.prob *= p;
            if (idle) r.true_idle_t2 |= std::uint32_t{1} << k;
            if (sensed_idle) r.sensed_idle_t2 |= std::uint32_t{1} << k;
        }
        if (r.prob > 0.0) out.push_back(r);
    }
    return out;
}

void check_enumeration_budget(const Instance& inst, double budget) {
    const double per_slot = std::ldexp(1.0, static_cast<int>(inst.t1.size())) *
                            std::ldexp(1.0, 2 * static_cast<int>(inst.t2.size()));
    const double total = std::pow(per_slot, std::max(inst.horizon, 1));
    if (total > budget) throw EnumerationBudgetError(total, budget);
}

void check_assignment(const Instance& inst, const SlotAssignment& a, Mask outstanding,
                      std::uint32_t idle_t1, std::uint32_t sensed_idle_t2) {
    std::uint32_t used_t1 = 0, used_t2 = 0;
    Mask seen = 0;
    for (const auto& [req, ch] : a.pairs) {
        if (req < 0 || req >= static_cast<int>(inst.requests.size()) || !(outstanding >> req & 1)) {
            throw std::invalid_argument("policy assigned a request that is not outstanding");
        }
        if (seen >> req & 1) throw std::invalid_argument("policy assigned a request twice");
        seen |= Mask{1} << req;
        const std::uint32_t bit = std::uint32_t{1} << ch.index;
        if (ch.kind == ChannelRef::Kind::kT1) {
            if (!(idle_t1 & bit) || (used_t1 & bit)) {
                throw std::invalid_argument("policy assigned an unavailable T1 channel");
            }
            used_t1 |= bit;
        } else {
            if (!(sensed_idle_t2 & bit) || (used_t2 & bit)) {
                throw std::invalid_argument("policy assigned an unavailable T2 channel");
            }
            used_t2 |= bit;
        }
    }
}

}  // namespace

double exact_expected_welfare(const Instance& inst, const Policy& policy, double budget) {
    check_enumeration_budget(inst, budget);
    const std::vector<SlotRealization> slot_reals = enumerate_slot_realizations(inst);

    double total = 0;
    // Depth-first walk over the realization tree, carrying the served set,
    // accumulated welfare, and path probability.
    struct Frame {
        int t;
        Mask served;
        double welfare;
        double prob;
    };
    std::vector<Frame> stack;
    stack.push_back({1, 0, 0.0, 1.0});
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        if (f.t > inst.horizon) {
            total += f.prob * f.welfare;
            continue;
        }
        const Mask active = inst.active_mask(f.t);
        for (const SlotRealization& r : slot_reals) {
            const Mask outstanding = active & ~f.served;
            std::vector<int> ids;
            for (int i = 0; i < static_cast<int>(inst.requests.size()); ++i) {
                if (outstanding >> i & 1) ids.push_back(i);
            }
            SlotAssignment a = policy(inst, f.t, ids, r.idle_t1, r.sensed_idle_t2);
            check_assignment(inst, a, outstanding, r.idle_t1, r.sensed_idle_t2);
            Mask served = f.served;
            double welfare = f.welfare;
            for (const auto& [req, ch] : a.pairs) {
                if (ch.kind == ChannelRef::Kind::kT1) {
                    served |= Mask{1} << req;
                    welfare += inst.requests[req].value;
                } else if (r.true_idle_t2 >> ch.index & 1) {
                    served |= Mask{1} << req;
                    welfare += inst.requests[req].value;
                } else {
                    welfare -= inst.penalty;
                }
            }
            stack.push_back({f.t + 1, served, welfare, f.prob * r.prob});
        }
    }
    return total;
}

double total_realization_probability(const Instance& inst, double budget) {
    check_enumeration_budget(inst, budget);
    const std::vector<SlotRealization> slot_reals = enumerate_slot_realizations(inst);
    double per_slot = 0;
    for (const SlotRealization& r : slot_reals) per_slot += r.prob;
    double total = 1;
    for (int t = 1; t <= inst.horizon; ++t) total *= per_slot;
    return total;
}

namespace {

struct ExhaustiveSolver {
    const Instance& inst;
    std::vector<T2Stats> stats;
    std::map<std::pair<int, Mask>, double> memo;

    explicit ExhaustiveSolver(const Instance& i) : inst(i), stats(i.all_stats()) {}

    // Enumerates every injective map from `ids` into the available channels
    // (no pruning) and returns the best conditional expected value.
    double best_assignment_value(int t, Mask served, const std::vector<int>& ids,
                                 std::uint32_t idle_t1, std::uint32_t sensed_idle_t2) {
        std::vector<std::pair<int, ChannelRef>> chosen;
        double best = -std::numeric_limits<double>::infinity();
        enumerate(t, served, ids, 0, idle_t1, sensed_idle_t2, chosen, best);
        return best;
    }

    void enumerate(int t, Mask served, const std::vector<int>& ids, std::size_t pos,
                   std::uint32_t free_t1, std::uint32_t free_t2,
                   std::vector<std::pair<int, ChannelRef>>& chosen, double& best) {
        if (pos == ids.size()) {
            best = std::max(best, evaluate(t, served, chosen));
            return;
        }
        enumerate(t, served, ids, pos + 1, free_t1, free_t2, chosen, best);  // leave unassigned
        for (int i = 0; i < static_cast<int>(inst.t1.size()); ++i) {
            if (!(free_t1 >> i & 1)) continue;
            chosen.push_back({ids[pos], ChannelRef{ChannelRef::Kind::kT1, i}});
            enumerate(t, served, ids, pos + 1, free_t1 & ~(std::uint32_t{1} << i), free_t2, chosen, best);
            chosen.pop_back();
        }
        for (int k = 0; k < static_cast<int>(inst.t2.size()); ++k) {
            if (!(free_t2 >> k & 1)) continue;
            chosen.push_back({ids[pos], ChannelRef{ChannelRef::Kind::kT2, k}});
            enumerate(t, served, ids, pos + 1, free_t1, free_t2 & ~(std::uint32_t{1} << k), chosen, best);
            chosen.pop_back();
        }
    }

    // Expected immediate welfare plus continuation, summed over all joint
    // true-state outcomes of the assigned sensed-idle channels.
    double evaluate(int t, Mask served, const std::vector<std::pair<int, ChannelRef>>& chosen) {
        std::vector<std::pair<int, int>> risky;  // (request, t2 index)
        Mask sure_served = 0;
        double sure_value = 0;
        for (const auto& [req, ch] : chosen) {
            if (ch.kind == ChannelRef::Kind::kT1) {
                sure_served |= Mask{1} << req;
                sure_value += inst.requests[req].value;
            } else {
                risky.push_back({req, ch.index});
            }
        }
        double value = 0;
        const std::size_t outcomes = std::size_t{1} << risky.size();
        for (std::size_t oc = 0; oc < outcomes; ++oc) {
            double prob = 1;
            double immediate = sure_value;
            Mask newly_served = sure_served;
            for (std::size_t j = 0; j < risky.size(); ++j) {
                const auto& [req, k] = risky[j];
                const double p0 = stats[k].idle_given_sensed;
                if (oc >> j & 1) {
                    prob *= p0;
                    immediate += inst.requests[req].value;
                    newly_served |= Mask{1} << req;
                } else {
                    prob *= 1.0 - p0;
                    immediate -= inst.penalty;
                }
            }
            if (prob == 0.0) continue;
            value += prob * (immediate + solve(t + 1, served | newly_served));
        }
        return value;
    }

    double solve(int t, Mask served) {
        if (t > inst.horizon) return 0;
        const auto key = std::make_pair(t, served);
        if (auto it = memo.find(key); it != memo.end()) return it->second;

        const Mask outstanding = inst.active_mask(t) & ~served;
        std::vector<int> ids;
        for (int i = 0; i < static_cast<int>(inst.requests.size()); ++i) {
            if (outstanding >> i & 1) ids.push_back(i);
        }

        double value = 0;
        const int n1 = static_cast<int>(inst.t1.size());
        const int n2 = static_cast<int>(inst.t2.size());
        for (std::uint32_t gamma = 0; gamma < (std::uint32_t{1} << n1); ++gamma) {
            double pg = 1;
            for (int i = 0; i < n1; ++i) {
                pg *= (gamma >> i & 1) ? inst.t1[i].idle_prob : 1.0 - inst.t1[i].idle_prob;
            }
            if (pg == 0.0) continue;
            for (std::uint32_t sensed = 0; sensed < (std::uint32_t{1} << n2); ++sensed) {
                double ps = 1;
                for (int k = 0; k < n2; ++k) {
                    ps *= (sensed >> k & 1) ? stats[k].sensed_idle_prob
                                            : 1.0 - stats[k].sensed_idle_prob;
                }
                if (ps == 0.0) continue;
                value += pg * ps * best_assignment_value(t, served, ids, gamma, sensed);
            }
        }
        memo[key] = value;
        return value;
    }
};

}  // namespace

double exhaustive_optimal(const Instance& inst) {
    if (inst.horizon > 3 || inst.channel_count() > 2 || inst.requests.size() > 3) {
        throw std::invalid_argument(
            "exhaustive_optimal guard: requires H <= 3, |T1|+|T2| <= 2, N <= 3");
    }
    ExhaustiveSolver solver(inst);
    return solver.solve(1, 0);
}

}  // namespace crsim
