#pragma once

// Domain types shared by every scheduler in the simulator: spectrum
// requests, the two channel classes (operator-observed and sense-before-use),
// derived sensing statistics, sampled channel-state paths, per-slot
// assignments, and the welfare/revenue ledger.
//
// All types are immutable after construction and every operation here is a
// pure function of its inputs, so they are safe to use from concurrent
// workers without synchronization.

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace crsim {

// Request subsets are bitmasks over request ids (id == index in
// Instance::requests, enforced by Instance::validate()).
using Mask = std::uint32_t;
constexpr int kMaxRequests = 31;

// One time-frequency-chunk demand. Serviceable in the window
// [arrival, deadline) by default; see DeadlinePolicy.
struct Request {
    int id = 0;        // position in the instance, also submission order
    int arrival = 1;   // earliest service slot, >= 1
    int deadline = 1;  // window bound, >= arrival
    double value = 0;  // nonnegative valuation, added to welfare when served
};

// The recursion removes a request from the outstanding set "when d_i = t+1",
// i.e. the window is half-open, while the service constraint sums through
// the deadline slot. Exclusive follows the outstanding-set rule (the
// default); inclusive is kept switchable for sensitivity checks.
enum class DeadlinePolicy { kExclusive, kInclusive };

// Channel whose true per-slot state the operator observes directly.
struct T1Channel {
    double idle_prob = 0;  // probability the channel is idle in a slot
};

// Channel that must be sensed before use; sensing errs both ways.
struct T2Channel {
    double idle_prob = 0;    // probability the channel is truly idle
    double false_alarm = 0;  // P(sensed busy | truly idle)
    double misdetect = 0;    // P(sensed idle | truly busy)
};

// Statistics derived from a T2Channel and the collision penalty.
struct T2Stats {
    double sensed_idle_prob = 0;   // P(sensed idle)
    double idle_given_sensed = 0;  // P(truly idle | sensed idle); 0 when undefined
    double expected_cost = 0;      // penalty * (1-p)/p with p = idle_given_sensed;
                                   // +inf when the channel can never serve profitably
    bool sensed_idle_possible = false;  // false iff sensed_idle_prob == 0, in which
                                        // case idle_given_sensed is undefined and the
                                        // channel is never allocatable
};

// sensed_idle_prob = idle*(1-false_alarm) + (1-idle)*misdetect
// idle_given_sensed = idle*(1-false_alarm) / sensed_idle_prob
// expected_cost     = penalty*(1-p0)/p0, the expected collision cost paid per
//                     request actually served on the channel.
T2Stats derive_stats(const T2Channel& ch, double penalty);

struct ChannelRef {
    enum class Kind : std::uint8_t { kT1 = 0, kT2 = 1 };
    Kind kind = Kind::kT1;
    int index = 0;  // position within the instance's t1 or t2 list

    friend bool operator==(const ChannelRef& a, const ChannelRef& b) {
        return a.kind == b.kind && a.index == b.index;
    }
    friend bool operator<(const ChannelRef& a, const ChannelRef& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.index < b.index;
    }
};

// One slot's allocation: request -> channel, injective both ways.
struct SlotAssignment {
    std::vector<std::pair<int, ChannelRef>> pairs;  // (request id, channel)

    bool empty() const { return pairs.empty(); }
    std::size_t size() const { return pairs.size(); }
};

// A full scheduling problem. `requests[i].id == i` is required so request
// subsets can be encoded as bitmasks.
struct Instance {
    std::vector<Request> requests;
    std::vector<T1Channel> t1;
    std::vector<T2Channel> t2;
    double penalty = 0;  // charged once per (slot, T2 channel) collision
    int horizon = 0;     // slots are numbered 1..horizon
    DeadlinePolicy deadline_policy = DeadlinePolicy::kExclusive;

    // Throws std::invalid_argument on any broken invariant: probabilities
    // outside [0,1] (1e-12 slack), arrival < 1 or > deadline, negative
    // valuations or penalty, ids != positions, horizon < max deadline,
    // or more requests than the bitmask width.
    void validate() const;

    int channel_count() const { return static_cast<int>(t1.size() + t2.size()); }

    T2Stats stats(int k) const { return derive_stats(t2[k], penalty); }
    std::vector<T2Stats> all_stats() const;

    // First slot at which the request is no longer serviceable.
    int window_end(const Request& r) const {
        return deadline_policy == DeadlinePolicy::kExclusive ? r.deadline : r.deadline + 1;
    }
    bool active_at(const Request& r, int t) const {
        return r.arrival <= t && t < window_end(r);
    }

    Mask active_mask(int t) const;
    Mask arrivals_mask(int t) const;  // requests with arrival == t

    // Max number of simultaneously active requests over slots 1..horizon.
    int max_outstanding() const;
};

// Materialized per-slot channel states: true states for both channel
// classes plus the sensed states for T2. Slots are 1-based.
struct SamplePath {
    int horizon = 0;
    int n_t1 = 0;
    int n_t2 = 0;
    std::vector<std::uint8_t> t1_busy;         // horizon * n_t1
    std::vector<std::uint8_t> t2_busy;         // horizon * n_t2
    std::vector<std::uint8_t> t2_sensed_busy;  // horizon * n_t2

    bool t1_idle(int t, int i) const { return !t1_busy[static_cast<std::size_t>(t - 1) * n_t1 + i]; }
    bool t2_idle(int t, int k) const { return !t2_busy[static_cast<std::size_t>(t - 1) * n_t2 + k]; }
    bool t2_sensed_idle(int t, int k) const {
        return !t2_sensed_busy[static_cast<std::size_t>(t - 1) * n_t2 + k];
    }

    std::uint32_t observed_idle_t1(int t) const;  // channel bitmask
    std::uint32_t sensed_idle_t2(int t) const;    // channel bitmask
};

// Draws one path: each channel idle i.i.d. per slot with its idle
// probability; T2 sensed states drawn conditionally on the true state.
// Deterministic for a given seed (fixed draw order: per slot, T1 channels
// in index order, then per T2 channel the state draw then the sensing draw).
SamplePath sample_path(const Instance& inst, std::uint64_t seed);

// Ids active at t (arrival <= t < window end), excluding already-served ones.
std::vector<int> active_set(const Instance& inst, int t, Mask served = 0);

struct ServedRecord {
    int slot = 0;
    ChannelRef channel;
};

struct CollisionRecord {
    int slot = 0;
    int t2_index = 0;
    int request = 0;
};

// Per-run ledger. welfare = sum of served valuations - penalty * collisions;
// revenue = sum of payments - penalty * collisions (auction runs only).
struct Outcome {
    std::map<int, ServedRecord> served;
    std::vector<CollisionRecord> collisions;
    double welfare = 0;
    std::map<int, double> payments;
    double revenue = 0;
    bool has_payments = false;
};

// Replays per-slot assignments against a path and produces the ledger.
// A T1 assignment always serves; a T2 assignment serves iff the channel is
// truly idle, otherwise it counts one collision and the request stays
// unserved. Throws std::invalid_argument on contract violations: channel
// not observed idle (T1) / not sensed idle (T2), duplicate request or
// channel within a slot, assignment of an already-served request, or ids
// out of range.
Outcome score_outcome(const Instance& inst, const SamplePath& path,
                      const std::vector<SlotAssignment>& slots);

// Outcome of one scheduler run plus the per-slot assignment trace (the
// auction replays need the trace).
struct RunResult {
    Outcome outcome;
    std::vector<SlotAssignment> slots;  // index t-1 holds slot t
};

}  // namespace crsim
