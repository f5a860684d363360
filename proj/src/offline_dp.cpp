#include "crsim/offline_dp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <ostream>

namespace crsim {

namespace detail {

// Per-instance precomputation shared by table construction and slot
// decisions. T2 channels are grouped into classes of identical
// idle-given-sensed probability: the slot optimum depends on a sensed-idle
// set only through how many channels of each class it holds, which is what
// lets the assignment search collapse for homogeneous channels.
struct DpContext {
    int n1 = 0;
    int n2 = 0;
    int n_req = 0;
    std::vector<double> class_p0;    // idle-given-sensed per class
    std::vector<int> class_of;       // T2 channel -> class
    int n_class = 0;
    std::vector<std::uint32_t> eligible;  // request -> class bitmask passing the
                                          // p0*w >= Q*(1-p0) profitability screen
    std::vector<double> value;            // request valuations
    std::vector<double> sensed_set_weight;    // S -> prod pI / (1-pI)
    std::vector<double> observed_set_weight;  // Gamma -> prod pi1 / (1-pi1)
    std::vector<int> signature_of;            // S -> signature id
    std::vector<std::vector<std::uint8_t>> signature_counts;  // signature -> per-class count
    int n_signature = 0;

    explicit DpContext(const Instance& inst) {
        n1 = static_cast<int>(inst.t1.size());
        n2 = static_cast<int>(inst.t2.size());
        n_req = static_cast<int>(inst.requests.size());
        const std::vector<T2Stats> stats = inst.all_stats();

        class_of.resize(n2);
        for (int k = 0; k < n2; ++k) {
            const double p0 = stats[k].idle_given_sensed;
            int c = -1;
            for (int j = 0; j < n_class; ++j) {
                if (class_p0[j] == p0) { c = j; break; }
            }
            if (c < 0) {
                c = n_class++;
                class_p0.push_back(p0);
            }
            class_of[k] = c;
        }

        value.resize(n_req);
        eligible.resize(n_req);
        for (int i = 0; i < n_req; ++i) {
            value[i] = inst.requests[i].value;
            std::uint32_t m = 0;
            for (int c = 0; c < n_class; ++c) {
                if (class_p0[c] * value[i] >= inst.penalty * (1.0 - class_p0[c])) {
                    m |= std::uint32_t{1} << c;
                }
            }
            eligible[i] = m;
        }

        sensed_set_weight.resize(std::size_t{1} << n2);
        for (std::uint32_t s = 0; s < sensed_set_weight.size(); ++s) {
            double p = 1;
            for (int k = 0; k < n2; ++k) {
                p *= (s >> k & 1) ? stats[k].sensed_idle_prob : 1.0 - stats[k].sensed_idle_prob;
            }
            sensed_set_weight[s] = p;
        }
        observed_set_weight.resize(std::size_t{1} << n1);
        for (std::uint32_t g = 0; g < observed_set_weight.size(); ++g) {
            double p = 1;
            for (int i = 0; i < n1; ++i) {
                p *= (g >> i & 1) ? inst.t1[i].idle_prob : 1.0 - inst.t1[i].idle_prob;
            }
            observed_set_weight[g] = p;
        }

        signature_of.resize(std::size_t{1} << n2);
        std::map<std::vector<std::uint8_t>, int> sig_ids;
        for (std::uint32_t s = 0; s < signature_of.size(); ++s) {
            std::vector<std::uint8_t> counts(n_class, 0);
            for (int k = 0; k < n2; ++k) {
                if (s >> k & 1) counts[class_of[k]]++;
            }
            auto [it, inserted] = sig_ids.try_emplace(counts, n_signature);
            if (inserted) {
                signature_counts.push_back(counts);
                ++n_signature;
            }
            signature_of[s] = it->second;
        }
    }
};

}  // namespace detail

namespace {

using detail::DpContext;

// Read-only view of the t+1 layer used for continuation lookups.
struct NextView {
    Mask active = 0;
    Mask arrivals = 0;  // requests with arrival == t+1
    const std::vector<Mask>* compressed_bit = nullptr;
    const std::vector<double>* values = nullptr;

    double continuation(Mask remaining) const {
        Mask m = (remaining | arrivals) & active;
        Mask rank = 0;
        while (m) {
            rank |= (*compressed_bit)[std::countr_zero(m)];
            m &= m - 1;
        }
        return (*values)[rank];
    }
};

// Branch-and-evaluate search over one slot's assignments: each outstanding
// request is left out, put on an interchangeable observed-idle T1 channel,
// or put on a sensed-idle T2 channel of some class it is eligible for.
// Leaves evaluate the conditional expectation over the true states of the
// assigned T2 channels (subsets in ascending rank order, so results are
// bit-reproducible).
struct SlotOptimizer {
    const DpContext* ctx = nullptr;
    double penalty = 0;
    NextView next;

    Mask outstanding = 0;
    std::vector<int> ids;
    int t1_left = 0;
    int class_left_total = 0;
    std::vector<int> class_left;

    // Concrete channel indices, used only when an assignment is wanted.
    bool want_assignment = false;
    std::vector<int> t1_indices;
    std::vector<std::vector<int>> class_indices;
    int t1_used = 0;
    std::vector<int> class_used;

    std::vector<std::pair<int, ChannelRef>> pairs;
    Mask safe_mask = 0;
    double safe_value = 0;
    struct Risky {
        int req;
        double p0;
    };
    std::vector<Risky> risky;

    double best_value = 0;
    int best_t2_count = 0;
    std::vector<std::pair<int, ChannelRef>> best_pairs;

    void reset(Mask outstanding_mask, int t1_slots, const std::vector<std::uint8_t>& class_counts) {
        outstanding = outstanding_mask;
        ids.clear();
        for (Mask m = outstanding_mask; m; m &= m - 1) ids.push_back(std::countr_zero(m));
        t1_left = t1_slots;
        class_left.assign(ctx->n_class, 0);
        class_left_total = 0;
        for (int c = 0; c < ctx->n_class; ++c) {
            class_left[c] = class_counts[c];
            class_left_total += class_counts[c];
        }
        t1_used = 0;
        class_used.assign(ctx->n_class, 0);
        pairs.clear();
        safe_mask = 0;
        safe_value = 0;
        risky.clear();
        best_value = -std::numeric_limits<double>::infinity();
        best_t2_count = 0;
        best_pairs.clear();
    }

    double run() {
        descend(0);
        return best_value;
    }

    void descend(std::size_t pos) {
        if (pos == ids.size() || (t1_left == 0 && class_left_total == 0)) {
            evaluate_leaf();
            return;
        }
        descend(pos + 1);  // leave this request unassigned
        const int req = ids[pos];
        if (t1_left > 0) {
            --t1_left;
            if (want_assignment) {
                pairs.push_back({req, ChannelRef{ChannelRef::Kind::kT1, t1_indices[t1_used]}});
                ++t1_used;
            }
            safe_mask |= Mask{1} << req;
            safe_value += ctx->value[req];
            descend(pos + 1);
            safe_value -= ctx->value[req];
            safe_mask &= ~(Mask{1} << req);
            if (want_assignment) {
                pairs.pop_back();
                --t1_used;
            }
            ++t1_left;
        }
        for (int c = 0; c < ctx->n_class; ++c) {
            if (class_left[c] == 0 || !(ctx->eligible[req] >> c & 1)) continue;
            --class_left[c];
            --class_left_total;
            if (want_assignment) {
                pairs.push_back({req, ChannelRef{ChannelRef::Kind::kT2, class_indices[c][class_used[c]]}});
                ++class_used[c];
            }
            risky.push_back({req, ctx->class_p0[c]});
            descend(pos + 1);
            risky.pop_back();
            if (want_assignment) {
                --class_used[c];
                pairs.pop_back();
            }
            ++class_left[c];
            ++class_left_total;
        }
    }

    void evaluate_leaf() {
        const std::size_t m = risky.size();
        double total = 0;
        for (std::uint32_t v = 0; v < (std::uint32_t{1} << m); ++v) {
            double prob = 1;
            double immediate = safe_value;
            Mask served = safe_mask;
            for (std::size_t j = 0; j < m; ++j) {
                if (v >> j & 1) {
                    prob *= risky[j].p0;
                    immediate += ctx->value[risky[j].req];
                    served |= Mask{1} << risky[j].req;
                } else {
                    prob *= 1.0 - risky[j].p0;
                    immediate -= penalty;
                }
            }
            total += prob * (immediate + next.continuation(outstanding & ~served));
        }
        consider(total);
    }

    void consider(double candidate) {
        if (candidate > best_value) {
            take(candidate);
            return;
        }
        if (!want_assignment || candidate != best_value) return;
        const int t2_count = static_cast<int>(risky.size());
        if (t2_count < best_t2_count ||
            (t2_count == best_t2_count &&
             std::lexicographical_compare(pairs.begin(), pairs.end(), best_pairs.begin(),
                                          best_pairs.end()))) {
            take(candidate);
        }
    }

    void take(double candidate) {
        best_value = candidate;
        best_t2_count = static_cast<int>(risky.size());
        if (want_assignment) best_pairs = pairs;
    }
};

double check_budget(const Instance& inst, double budget) {
    const int r = inst.max_outstanding();
    const double size = static_cast<double>(inst.horizon) *
                        std::ldexp(1.0, static_cast<int>(inst.t1.size())) *
                        std::pow(3.0, static_cast<double>(inst.t2.size())) * std::ldexp(1.0, r);
    if (size > budget) throw BudgetError(size, budget);
    return size;
}

// F(D,t): expectation of the slot optimum over sensed-idle and observed-idle
// sets, with the optimum cached per (|Gamma|, class signature of S).
double state_value(const DpContext& ctx, Mask outstanding, const NextView& next,
                   SlotOptimizer& opt, std::vector<double>& cache) {
    cache.assign(static_cast<std::size_t>(ctx.n1 + 1) * ctx.n_signature,
                 std::numeric_limits<double>::quiet_NaN());
    double total = 0;
    for (std::uint32_t s = 0; s < (std::uint32_t{1} << ctx.n2); ++s) {
        const double ws = ctx.sensed_set_weight[s];
        if (ws == 0.0) continue;
        const int sig = ctx.signature_of[s];
        for (std::uint32_t g = 0; g < (std::uint32_t{1} << ctx.n1); ++g) {
            const double wg = ctx.observed_set_weight[g];
            if (wg == 0.0) continue;
            const int n_idle = std::popcount(g);
            double& slot = cache[static_cast<std::size_t>(n_idle) * ctx.n_signature + sig];
            if (std::isnan(slot)) {
                opt.reset(outstanding, n_idle, ctx.signature_counts[sig]);
                slot = opt.run();
            }
            total += ws * wg * slot;
        }
    }
    return total;
}

}  // namespace

DpTable DpTable::build(const Instance& inst, double budget) {
    inst.validate();
    check_budget(inst, budget);

    DpTable table;
    table.inst_ = inst;
    const int horizon = inst.horizon;
    const int n_req = static_cast<int>(inst.requests.size());
    table.layers_.resize(horizon + 1);

    // Layer for t = H+1: no active requests, F == 0.
    Layer& last = table.layers_[horizon];
    last.active = 0;
    last.compressed_bit.assign(n_req, 0);
    last.values.assign(1, 0.0);

    const DpContext ctx(inst);
    SlotOptimizer opt;
    opt.ctx = &ctx;
    opt.penalty = inst.penalty;
    opt.want_assignment = false;
    std::vector<double> cache;

    for (int t = horizon; t >= 1; --t) {
        Layer& layer = table.layers_[t - 1];
        layer.active = inst.active_mask(t);
        layer.compressed_bit.assign(n_req, 0);
        std::vector<int> positions;
        for (Mask m = layer.active; m; m &= m - 1) {
            const int b = std::countr_zero(m);
            layer.compressed_bit[b] = Mask{1} << positions.size();
            positions.push_back(b);
        }

        const Layer& next_layer = table.layers_[t];
        NextView next{next_layer.active, inst.arrivals_mask(t + 1), &next_layer.compressed_bit,
                      &next_layer.values};
        opt.next = next;

        layer.values.resize(std::size_t{1} << positions.size());
        for (Mask rank = 0; rank < layer.values.size(); ++rank) {
            Mask subset = 0;
            for (std::size_t j = 0; j < positions.size(); ++j) {
                if (rank >> j & 1) subset |= Mask{1} << positions[j];
            }
            layer.values[rank] = state_value(ctx, subset, next, opt, cache);
        }
    }
    return table;
}

Mask DpTable::rank_of(int t, Mask subset) const {
    const Layer& layer = layers_[t - 1];
    Mask rank = 0;
    for (Mask m = subset; m; m &= m - 1) rank |= layer.compressed_bit[std::countr_zero(m)];
    return rank;
}

double DpTable::value(int t, Mask outstanding) const {
    if (t < 1 || t > inst_.horizon + 1) throw std::invalid_argument("slot out of range");
    const Layer& layer = layers_[t - 1];
    return layer.values[rank_of(t, outstanding & layer.active)];
}

void DpTable::dump_csv(std::ostream& os) const {
    os << "t,mask,F\n";
    for (int t = 1; t <= inst_.horizon + 1; ++t) {
        const Layer& layer = layers_[t - 1];
        std::vector<int> positions;
        for (Mask m = layer.active; m; m &= m - 1) positions.push_back(std::countr_zero(m));
        for (Mask rank = 0; rank < layer.values.size(); ++rank) {
            Mask subset = 0;
            for (std::size_t j = 0; j < positions.size(); ++j) {
                if (rank >> j & 1) subset |= Mask{1} << positions[j];
            }
            os << t << ',' << subset << ',' << layer.values[rank] << '\n';
        }
    }
}

double immediate_welfare(const Instance& inst, const SlotAssignment& assignment,
                         std::uint32_t observed_idle_t1, std::uint32_t sensed_idle_t2,
                         std::uint32_t true_idle_t2) {
    if ((true_idle_t2 & ~sensed_idle_t2) != 0) {
        throw std::invalid_argument("true-idle set must lie within the sensed-idle set");
    }
    double welfare = 0;
    for (const auto& [req, ch] : assignment.pairs) {
        const std::uint32_t bit = std::uint32_t{1} << ch.index;
        if (ch.kind == ChannelRef::Kind::kT1) {
            if (!(observed_idle_t1 & bit)) {
                throw std::invalid_argument("assignment uses a T1 channel not observed idle");
            }
            welfare += inst.requests[req].value;
        } else {
            if (!(sensed_idle_t2 & bit)) {
                throw std::invalid_argument("assignment uses a T2 channel not sensed idle");
            }
            welfare += (true_idle_t2 & bit) ? inst.requests[req].value : -inst.penalty;
        }
    }
    return welfare;
}

StepDecision step_value(const DpTable& table, int t, Mask outstanding,
                        std::uint32_t observed_idle_t1, std::uint32_t sensed_idle_t2) {
    const Instance& inst = table.inst_;
    if (t < 1 || t > inst.horizon) throw std::invalid_argument("slot out of range");
    const DpContext ctx(inst);

    const DpTable::Layer& next_layer = table.layers_[t];
    NextView next{next_layer.active, inst.arrivals_mask(t + 1), &next_layer.compressed_bit,
                  &next_layer.values};

    SlotOptimizer opt;
    opt.ctx = &ctx;
    opt.penalty = inst.penalty;
    opt.next = next;
    opt.want_assignment = true;
    opt.t1_indices.clear();
    for (std::uint32_t m = observed_idle_t1; m; m &= m - 1) {
        opt.t1_indices.push_back(std::countr_zero(m));
    }
    opt.class_indices.assign(ctx.n_class, {});
    std::vector<std::uint8_t> counts(ctx.n_class, 0);
    for (std::uint32_t m = sensed_idle_t2; m; m &= m - 1) {
        const int k = std::countr_zero(m);
        opt.class_indices[ctx.class_of[k]].push_back(k);
        counts[ctx.class_of[k]]++;
    }

    opt.reset(outstanding & inst.active_mask(t), static_cast<int>(opt.t1_indices.size()), counts);
    StepDecision decision;
    decision.value = opt.run();
    decision.assignment.pairs = opt.best_pairs;
    return decision;
}

RunResult run_offline(const DpTable& table, const SamplePath& path) {
    const Instance& inst = table.instance();
    if (path.horizon != inst.horizon || path.n_t1 != static_cast<int>(inst.t1.size()) ||
        path.n_t2 != static_cast<int>(inst.t2.size())) {
        throw std::invalid_argument("sample path does not match the table's instance");
    }
    RunResult result;
    result.slots.reserve(inst.horizon);
    Mask outstanding = inst.active_mask(1);
    for (int t = 1; t <= inst.horizon; ++t) {
        const StepDecision decision =
            step_value(table, t, outstanding, path.observed_idle_t1(t), path.sensed_idle_t2(t));
        result.slots.push_back(decision.assignment);
        Mask served = 0;
        for (const auto& [req, ch] : decision.assignment.pairs) {
            if (ch.kind == ChannelRef::Kind::kT1 || path.t2_idle(t, ch.index)) {
                served |= Mask{1} << req;
            }
        }
        outstanding = ((outstanding & ~served) | inst.arrivals_mask(t + 1)) & inst.active_mask(t + 1);
    }
    result.outcome = score_outcome(inst, path, result.slots);
    return result;
}

}  // namespace crsim
