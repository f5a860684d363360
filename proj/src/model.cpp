#include "crsim/model.hpp"

#include "crsim/rng.hpp"

#include <algorithm>
#include <cmath>

namespace crsim {

namespace {

constexpr double kProbSlack = 1e-12;

double checked_prob(double p, const char* what) {
    if (!(p >= -kProbSlack && p <= 1.0 + kProbSlack)) {
        throw std::invalid_argument(std::string(what) + " must lie in [0,1], got " +
                                    std::to_string(p));
    }
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace

T2Stats derive_stats(const T2Channel& ch, double penalty) {
    const double idle = checked_prob(ch.idle_prob, "T2 idle probability");
    const double pf = checked_prob(ch.false_alarm, "false-alarm probability");
    const double pm = checked_prob(ch.misdetect, "misdetection probability");
    if (penalty < 0) throw std::invalid_argument("penalty must be nonnegative");

    T2Stats s;
    s.sensed_idle_prob = idle * (1.0 - pf) + (1.0 - idle) * pm;
    if (s.sensed_idle_prob <= 0.0) {
        // Sensing never reports idle: the channel is never allocatable.
        s.sensed_idle_prob = 0.0;
        s.idle_given_sensed = 0.0;
        s.expected_cost = std::numeric_limits<double>::infinity();
        s.sensed_idle_possible = false;
        return s;
    }
    s.sensed_idle_possible = true;
    s.idle_given_sensed = idle * (1.0 - pf) / s.sensed_idle_prob;
    if (s.idle_given_sensed > 0.0) {
        s.expected_cost = penalty * (1.0 - s.idle_given_sensed) / s.idle_given_sensed;
    } else {
        s.expected_cost = std::numeric_limits<double>::infinity();
    }
    return s;
}

void Instance::validate() const {
    if (requests.size() > static_cast<std::size_t>(kMaxRequests)) {
        throw std::invalid_argument("too many requests for bitmask encoding");
    }
    if (penalty < 0) throw std::invalid_argument("penalty must be nonnegative");
    if (horizon < 0) throw std::invalid_argument("horizon must be nonnegative");
    for (std::size_t i = 0; i < requests.size(); ++i) {
        const Request& r = requests[i];
        if (r.id != static_cast<int>(i)) {
            throw std::invalid_argument("request ids must equal their positions");
        }
        if (r.arrival < 1) throw std::invalid_argument("request arrival must be >= 1");
        if (r.arrival > r.deadline) {
            throw std::invalid_argument("request arrival must not exceed its deadline");
        }
        if (!(r.value >= 0)) throw std::invalid_argument("request valuation must be >= 0");
        if (r.deadline > horizon) {
            throw std::invalid_argument("horizon must cover every request deadline");
        }
    }
    for (const T1Channel& c : t1) checked_prob(c.idle_prob, "T1 idle probability");
    for (const T2Channel& c : t2) derive_stats(c, penalty);  // validates fields
}

std::vector<T2Stats> Instance::all_stats() const {
    std::vector<T2Stats> out;
    out.reserve(t2.size());
    for (const T2Channel& c : t2) out.push_back(derive_stats(c, penalty));
    return out;
}

Mask Instance::active_mask(int t) const {
    Mask m = 0;
    for (const Request& r : requests) {
        if (active_at(r, t)) m |= Mask{1} << r.id;
    }
    return m;
}

Mask Instance::arrivals_mask(int t) const {
    Mask m = 0;
    for (const Request& r : requests) {
        if (r.arrival == t) m |= Mask{1} << r.id;
    }
    return m;
}

int Instance::max_outstanding() const {
    int best = 0;
    for (int t = 1; t <= horizon; ++t) {
        best = std::max(best, __builtin_popcount(active_mask(t)));
    }
    return best;
}

std::uint32_t SamplePath::observed_idle_t1(int t) const {
    std::uint32_t m = 0;
    for (int i = 0; i < n_t1; ++i) {
        if (t1_idle(t, i)) m |= std::uint32_t{1} << i;
    }
    return m;
}

std::uint32_t SamplePath::sensed_idle_t2(int t) const {
    std::uint32_t m = 0;
    for (int k = 0; k < n_t2; ++k) {
        if (t2_sensed_idle(t, k)) m |= std::uint32_t{1} << k;
    }
    return m;
}

SamplePath sample_path(const Instance& inst, std::uint64_t seed) {
    SamplePath p;
    p.horizon = inst.horizon;
    p.n_t1 = static_cast<int>(inst.t1.size());
    p.n_t2 = static_cast<int>(inst.t2.size());
    p.t1_busy.assign(static_cast<std::size_t>(p.horizon) * p.n_t1, 0);
    p.t2_busy.assign(static_cast<std::size_t>(p.horizon) * p.n_t2, 0);
    p.t2_sensed_busy.assign(static_cast<std::size_t>(p.horizon) * p.n_t2, 0);

    rng::Stream rnd(seed);
    for (int t = 1; t <= p.horizon; ++t) {
        for (int i = 0; i < p.n_t1; ++i) {
            const bool idle = rnd.bernoulli(inst.t1[i].idle_prob);
            p.t1_busy[static_cast<std::size_t>(t - 1) * p.n_t1 + i] = idle ? 0 : 1;
        }
        for (int k = 0; k < p.n_t2; ++k) {
            const bool idle = rnd.bernoulli(inst.t2[k].idle_prob);
            const bool sensed_idle =
                idle ? !rnd.bernoulli(inst.t2[k].false_alarm) : rnd.bernoulli(inst.t2[k].misdetect);
            p.t2_busy[static_cast<std::size_t>(t - 1) * p.n_t2 + k] = idle ? 0 : 1;
            p.t2_sensed_busy[static_cast<std::size_t>(t - 1) * p.n_t2 + k] = sensed_idle ? 0 : 1;
        }
    }
    return p;
}

std::vector<int> active_set(const Instance& inst, int t, Mask served) {
    std::vector<int> ids;
    for (const Request& r : inst.requests) {
        if (inst.active_at(r, t) && !(served >> r.id & 1)) ids.push_back(r.id);
    }
    return ids;
}

Outcome score_outcome(const Instance& inst, const SamplePath& path,
                      const std::vector<SlotAssignment>& slots) {
    if (static_cast<int>(slots.size()) > inst.horizon) {
        throw std::invalid_argument("more slot assignments than slots");
    }
    Outcome out;
    double served_value = 0;
    for (std::size_t si = 0; si < slots.size(); ++si) {
        const int t = static_cast<int>(si) + 1;
        std::uint32_t used_t1 = 0;
        std::uint32_t used_t2 = 0;
        Mask seen = 0;
        for (const auto& [req, ch] : slots[si].pairs) {
            if (req < 0 || req >= static_cast<int>(inst.requests.size())) {
                throw std::invalid_argument("assignment names an unknown request");
            }
            if (seen >> req & 1) {
                throw std::invalid_argument("request assigned twice in one slot");
            }
            seen |= Mask{1} << req;
            if (out.served.count(req)) {
                throw std::invalid_argument("assignment of an already-served request");
            }
            if (ch.kind == ChannelRef::Kind::kT1) {
                if (ch.index < 0 || ch.index >= path.n_t1) {
                    throw std::invalid_argument("assignment names an unknown T1 channel");
                }
                if (used_t1 >> ch.index & 1) {
                    throw std::invalid_argument("T1 channel assigned twice in one slot");
                }
                used_t1 |= std::uint32_t{1} << ch.index;
                if (!path.t1_idle(t, ch.index)) {
                    throw std::invalid_argument("assignment to a busy-observed T1 channel");
                }
                out.served[req] = ServedRecord{t, ch};
                served_value += inst.requests[req].value;
            } else {
                if (ch.index < 0 || ch.index >= path.n_t2) {
                    throw std::invalid_argument("assignment names an unknown T2 channel");
                }
                if (used_t2 >> ch.index & 1) {
                    throw std::invalid_argument("T2 channel assigned twice in one slot");
                }
                used_t2 |= std::uint32_t{1} << ch.index;
                if (!path.t2_sensed_idle(t, ch.index)) {
                    throw std::invalid_argument("assignment to a sensed-busy T2 channel");
                }
                if (path.t2_idle(t, ch.index)) {
                    out.served[req] = ServedRecord{t, ch};
                    served_value += inst.requests[req].value;
                } else {
                    out.collisions.push_back(CollisionRecord{t, ch.index, req});
                }
            }
        }
    }
    out.welfare = served_value - inst.penalty * static_cast<double>(out.collisions.size());
    return out;
}

}  // namespace crsim
