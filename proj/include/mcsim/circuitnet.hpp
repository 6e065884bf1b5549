#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "mcsim/parallel.hpp"

// Circuit-switched loss network on a complete graph: every unordered node
// pair is joined by one link carrying a fixed number of trunks.  A call
// between n1 and n2 seizes one trunk on the direct link when one is idle;
// otherwise a routing policy may carry it over a two-link path through a via
// node (seizing one trunk on each leg), or the call is blocked and lost.
//
// Routing policies for the overflow case:
//  * LBA  (least busy alternative): choose the via maximizing
//        min(idle(n1, via), idle(via, n2));
//    the call is blocked when even the best via has a leg with no idle trunk.
//  * ALBA (aggregated least busy alternative): links are binned into load
//    classes by occupancy fraction; a two-link path's class is the smaller of
//    its legs' classes; choose the via of smallest path class among vias with
//    an idle trunk on both legs; blocked when no via is usable.
//
// Ties always break toward the smallest via node index, so an incrementally
// maintained structure can be audited decision-for-decision against a fresh
// scan.  Each policy ships with two interchangeable evaluators: a lazy scan
// over all vias at call time, and an anticipatory per-pair index maintained
// under trunk changes.  They return the same via for every query and differ
// only in bookkeeping cost, which the update counters expose.

namespace mcsim::circuitnet {

enum class Policy { LBA, ALBA };
enum class Eval { Lazy, Anticipatory };

// Occupancy-fraction boundaries partitioning [0, 1] into K load classes:
// class i covers fractions in [g_{i-1}, g_i) with implicit g_0 = 0 and
// g_K = 1; completely full links (fraction exactly 1) belong to class K, and
// zero-capacity links count as full.  Constructed from the interior
// boundaries g_1 < ... < g_{K-1}, all strictly inside (0, 1).
class LoadClassScheme {
public:
    LoadClassScheme() = default;  // single class: every link is class 1
    explicit LoadClassScheme(std::vector<double> boundaries);

    int classes() const { return static_cast<int>(bounds_.size()) + 1; }
    int load_class(int occupied, int capacity) const;
    const std::vector<double>& boundaries() const { return bounds_; }

private:
    std::vector<double> bounds_;
};

// Complete graph on `nodes` switching nodes with a trunk ledger per link and
// a registry of carried calls, so every seized trunk is freed by exactly the
// call that seized it.  Occupancy can never leave [0, capacity].
class Network {
public:
    Network(int nodes, int capacity);
    Network(int nodes, std::vector<int> capacities);

    int nodes() const { return n_; }
    int links() const { return static_cast<int>(cap_.size()); }

    static int link_count(int nodes);
    // Canonical id of the undirected link {a, b}; a != b, both in range.
    static int link_index(int nodes, int a, int b);
    // Inverse of link_index: the endpoints (x, y) with x < y.
    static std::pair<int, int> link_nodes(int nodes, int link);

    int link_of(int a, int b) const { return link_index(n_, a, b); }
    int capacity(int link) const { return cap_.at(static_cast<std::size_t>(link)); }
    int occupied(int link) const { return occ_.at(static_cast<std::size_t>(link)); }
    int idle(int link) const { return capacity(link) - occupied(link); }
    int idle_between(int a, int b) const { return idle(link_of(a, b)); }

    struct PathRecord {
        int n1 = 0, n2 = 0;  // normalized n1 < n2
        int via = -1;        // -1: direct
    };

    // Seize one trunk on every link of the path (direct when via == -1, else
    // the two legs through `via`), registering the call; returns its handle.
    // Seizing a trunk on a full link halts.
    std::uint64_t seize(int n1, int n2, int via);
    // Free the trunks of a previously seized call.  Unknown handles halt.
    void release(std::uint64_t call);
    const PathRecord* find_call(std::uint64_t call) const;

    std::uint64_t active_calls() const { return calls_.size(); }
    // Total trunks in use; always equals the sum of active calls' path lengths.
    std::uint64_t trunks_in_use() const { return trunks_; }
    const std::vector<int>& occupancy() const { return occ_; }

private:
    int n_ = 0;
    std::vector<int> cap_;
    std::vector<int> occ_;
    std::vector<std::pair<std::uint64_t, PathRecord>> calls_;  // sorted by id
    std::uint64_t next_id_ = 1;
    std::uint64_t trunks_ = 0;
};

// Decision cores shared by the lazy scans and by engines that read occupancy
// from their own snapshots.  `idle` is any callable (a, b) -> idle trunks;
// `link_class` any callable (a, b) -> load class.  Both visit vias in
// ascending node order and keep only strict improvements, which realizes the
// smallest-index tie-break.  They return -1 when every alternative is dry.
template <class IdleFn>
int lba_pick(int nodes, int n1, int n2, IdleFn&& idle) {
    int best = -1;
    int best_idle = 0;
    for (int v = 0; v < nodes; ++v) {
        if (v == n1 || v == n2) continue;
        const int m = std::min(idle(n1, v), idle(v, n2));
        if (m > best_idle) {
            best_idle = m;
            best = v;
        }
    }
    return best;
}

template <class IdleFn, class ClassFn>
int alba_pick(int nodes, int n1, int n2, IdleFn&& idle, ClassFn&& link_class) {
    int best = -1;
    int best_class = 0;
    for (int v = 0; v < nodes; ++v) {
        if (v == n1 || v == n2) continue;
        if (idle(n1, v) <= 0 || idle(v, n2) <= 0) continue;
        const int c = std::min(link_class(n1, v), link_class(v, n2));
        if (best < 0 || c < best_class) {
            best_class = c;
            best = v;
        }
    }
    return best;
}

// Lazy via selection on the live network (the overflow case; neither checks
// the direct link).  Returns the via node or -1 when the call is blocked.
int lba_select_via(const Network& net, int n1, int n2);
int alba_select_via(const Network& net, const LoadClassScheme& scheme, int n1, int n2);

// Anticipatory LBA structure: for every node pair, the vias ordered by
// descending min-idle (ties toward the smaller via), so the best alternative
// is read off the front without scanning.  Every trunk change on link (a, b)
// re-ranks the 2*(nodes-2) entries that use (a, b) as a leg; updates() counts
// entries touched.
class LbaViaIndex {
public:
    explicit LbaViaIndex(const Network& net);

    // Best via for an n1-n2 overflow call, or -1 when blocked.
    int best_via(int n1, int n2) const;
    // Must be called after every occupancy change of the link {a, b}.
    void link_changed(const Network& net, int a, int b);
    std::uint64_t updates() const { return updates_; }

private:
    void rank(const Network& net, int x, int y, int via);

    int n_ = 0;
    std::vector<std::set<std::pair<int, int>>> order_;  // per pair: (-min_idle, via)
    std::vector<std::vector<int>> key_;                 // per pair: min_idle by via
    std::uint64_t updates_ = 0;
};

// Anticipatory ALBA structure: for every node pair, one bucket of vias per
// path class, kept exact under load-class transitions.  Trunk changes that
// leave the link inside its class band cost nothing; a boundary crossing
// re-buckets the 2*(nodes-2) entries using that link as a leg.  Whether a
// via currently has idle trunks on both legs is checked against the live
// network at query time, so full links need no bucket maintenance either.
class AlbaViaIndex {
public:
    AlbaViaIndex(const Network& net, LoadClassScheme scheme);

    // Best via for an n1-n2 overflow call, or -1 when blocked.
    int best_via(const Network& net, int n1, int n2) const;
    // Must be called after every occupancy change of the link {a, b}.
    void link_changed(const Network& net, int a, int b);

    std::uint64_t updates() const { return updates_; }          // entries re-bucketed
    std::uint64_t key_changes() const { return key_changes_; }  // class transitions
    const LoadClassScheme& scheme() const { return scheme_; }

private:
    void bucket(int x, int y, int via);

    int n_ = 0;
    LoadClassScheme scheme_;
    std::vector<int> cls_;                            // per link: current class
    std::vector<std::vector<std::set<int>>> bucket_;  // per pair, per class-1: vias
    std::vector<std::vector<int>> slot_;              // per pair: class by via
    std::uint64_t updates_ = 0;
    std::uint64_t key_changes_ = 0;
};

// Direct-first placement: seize a direct trunk when idle, otherwise consult
// the policy's lazy scan for a via; blocked calls change nothing.
struct PlaceOutcome {
    bool carried = false;
    int via = -1;            // -1: direct (meaningful when carried)
    std::uint64_t call = 0;  // valid when carried
};
PlaceOutcome place_call(Network& net, int n1, int n2, Policy policy,
                        const LoadClassScheme& scheme);
void release_call(Network& net, std::uint64_t call);

// ---------------------------------------------------------------------------
// Traffic simulation
// ---------------------------------------------------------------------------

// Every node pair receives calls at `arrival_rate` with exponential holding
// times of mean `mean_holding`.  Draw k of pair p is a pure function of
// (seed, p, k), so independent engines reproduce one another's arrivals and
// holding times exactly.
struct TrafficConfig {
    int nodes = 10;
    int capacity = 10;          // trunks per link
    double arrival_rate = 1.0;  // per node pair
    double mean_holding = 1.0;
    Policy policy = Policy::LBA;
    LoadClassScheme scheme{std::vector<double>{0.8, 0.9}};  // ALBA classes
    Eval eval = Eval::Lazy;
    std::uint64_t seed = 1;
};

inline constexpr int kDirect = -1;
inline constexpr int kBlocked = -2;

struct Decision {
    double time = 0;
    int pair = 0;        // link id of the endpoints
    int via = kBlocked;  // via node, kDirect, or kBlocked
};
inline bool operator==(const Decision& a, const Decision& b) {
    return a.time == b.time && a.pair == b.pair && a.via == b.via;
}

// Link-event payloads pack what happened on the event's link into one word
// so engines can be compared event-for-event:
//   bits  0..15  occupancy of the link after the event
//   bits 16..17  kind
//   bits 18..31  via node + 1 (Via: chosen via; Trunk: owning call's via; 0 none)
//   bits 32..47  endpoint pair of the owning call + 1 (Trunk; 0 none)
//   bit  48      Trunk subtype: 0 seize, 1 release
// Decision kinds (Direct/Blocked/Via) land on the endpoint pair's own link;
// Trunk events record each single-trunk change on a via leg or a release.
enum class EventKind { Direct = 0, Blocked = 1, Via = 2, Trunk = 3 };
std::uint64_t pack_event(EventKind kind, int occupancy_after, int via, int owner_pair,
                         bool release);
EventKind event_kind(std::uint64_t payload);
int event_occupancy(std::uint64_t payload);
int event_via(std::uint64_t payload);         // -1 when none
int event_owner_pair(std::uint64_t payload);  // -1 when none
bool event_is_release(std::uint64_t payload);

struct RunResult {
    std::uint64_t offered = 0;
    std::uint64_t blocked = 0;
    std::uint64_t carried_direct = 0;
    std::uint64_t carried_via = 0;
    std::vector<std::uint64_t> offered_per_pair;
    std::vector<std::uint64_t> blocked_per_pair;
    double blocking_fraction = 0;  // blocked / offered, 0 when nothing offered

    std::vector<Decision> decisions;                 // one per arrival, in order
    std::vector<parallel::RelaxEvent> link_events;   // full trace, processing order
    std::vector<int> final_occupancy;
    std::uint64_t active_at_end = 0;

    std::uint64_t trunk_changes = 0;      // single-trunk occupancy changes
    std::uint64_t via_queries = 0;        // overflow decisions
    std::uint64_t scan_visits = 0;        // lazy: vias inspected
    std::uint64_t index_updates = 0;      // anticipatory: entries re-ranked/bucketed
    std::uint64_t index_key_changes = 0;  // anticipatory ALBA: class transitions
};

// Sequential reference engine: processes arrivals and releases in time order
// on a live Network, evaluating the policy on the committed state at each
// arrival instant.  Events strictly before `horizon` are simulated.
RunResult run_network(const TrafficConfig& cfg, double horizon);

// Synchronous-relaxation engine over the same traffic: components are the
// links and the relaxed quantities their event trajectories.  Every pass
// re-simulates the call sequence reading non-owned link occupancies from the
// previous pass; at the fixed point every decision matches the sequential
// engine, making blocking counts and the event trace identical to it.
struct RelaxRunResult {
    parallel::RelaxResult relax;
    std::uint64_t offered = 0;
    std::uint64_t blocked = 0;
    std::vector<std::uint64_t> offered_per_pair;
    std::vector<std::uint64_t> blocked_per_pair;
    std::vector<int> final_occupancy;
    // Dependency edges (cause, dependent) of each committed strip, indexed
    // into that strip's slice of relax.events; count_levels of a strip bounds
    // the iterations the relaxation needed for it.
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> strip_dependencies;
};
RelaxRunResult run_network_syncrelax(const TrafficConfig& cfg, double horizon, double dt,
                                     int workers, std::uint64_t iteration_cap = 0);

}  // namespace mcsim::circuitnet
