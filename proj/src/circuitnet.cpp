#include "mcsim/circuitnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "mcsim/event_core.hpp"
#include "mcsim/random.hpp"

namespace mcsim::circuitnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Payload field limits (see pack_event in the header).
constexpr int kMaxOccupancy = 0xffff;
constexpr int kMaxVia = 0x3fff - 1;
constexpr int kMaxOwnerPair = 0xffff - 1;

void check_config(const TrafficConfig& cfg) {
    if (cfg.nodes < 2 || cfg.nodes > 360)
        throw std::invalid_argument("TrafficConfig: nodes must be in [2, 360]");
    if (cfg.capacity < 0 || cfg.capacity > kMaxOccupancy)
        throw std::invalid_argument("TrafficConfig: capacity must be in [0, 65535]");
    if (!(cfg.arrival_rate >= 0) || !std::isfinite(cfg.arrival_rate))
        throw std::invalid_argument("TrafficConfig: arrival rate must be finite and >= 0");
    if (!(cfg.mean_holding > 0) || !std::isfinite(cfg.mean_holding))
        throw std::invalid_argument("TrafficConfig: mean holding time must be positive");
}

void check_horizon(double horizon) {
    if (!(horizon >= 0) || !std::isfinite(horizon))
        throw std::invalid_argument("horizon must be finite and >= 0");
}

// Arrival k of pair p happens gap(p, k) after arrival k-1 (or after time 0);
// the call holds its trunks for hold(p, k).  Both are pure in (seed, p, k).
double arrival_gap(const TrafficConfig& cfg, int pair, std::uint64_t k) {
    return RandomStream::keyed(cfg.seed, 2 * static_cast<std::uint64_t>(pair), k)
        .exp(cfg.arrival_rate);
}

double holding_time(const TrafficConfig& cfg, int pair, std::uint64_t k) {
    return RandomStream::keyed(cfg.seed, 2 * static_cast<std::uint64_t>(pair) + 1, k)
        .exp(1.0 / cfg.mean_holding);
}

}  // namespace

// ---------------------------------------------------------------------------
// LoadClassScheme
// ---------------------------------------------------------------------------

LoadClassScheme::LoadClassScheme(std::vector<double> boundaries) : bounds_(std::move(boundaries)) {
    double prev = 0.0;
    for (double b : bounds_) {
        if (!std::isfinite(b) || !(b > prev) || !(b < 1.0))
            throw std::invalid_argument(
                "LoadClassScheme: boundaries must be strictly increasing inside (0, 1)");
        prev = b;
    }
}

int LoadClassScheme::load_class(int occupied, int capacity) const {
    if (capacity < 0 || occupied < 0 || occupied > capacity)
        throw std::invalid_argument("load_class: occupancy outside [0, capacity]");
    if (capacity == 0 || occupied == capacity) return classes();  // full
    const double g = static_cast<double>(occupied) / static_cast<double>(capacity);
    int cls = 1;
    for (double b : bounds_) {
        if (g >= b)
            ++cls;
        else
            break;
    }
    return cls;
}

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

int Network::link_count(int nodes) {
    if (nodes < 2) throw std::invalid_argument("Network: need at least 2 nodes");
    return nodes * (nodes - 1) / 2;
}

int Network::link_index(int nodes, int a, int b) {
    if (a < 0 || b < 0 || a >= nodes || b >= nodes)
        throw std::invalid_argument("link_index: node out of range");
    if (a == b) throw std::invalid_argument("link_index: a link joins two distinct nodes");
    if (a > b) std::swap(a, b);
    return a * nodes - a * (a + 1) / 2 + (b - a - 1);
}

std::pair<int, int> Network::link_nodes(int nodes, int link) {
    if (link < 0 || link >= link_count(nodes))
        throw std::invalid_argument("link_nodes: link out of range");
    int a = 0;
    int rest = link;
    while (rest >= nodes - 1 - a) {
        rest -= nodes - 1 - a;
        ++a;
    }
    return {a, a + 1 + rest};
}

Network::Network(int nodes, int capacity)
    : Network(nodes, std::vector<int>(static_cast<std::size_t>(link_count(nodes)), capacity)) {}

Network::Network(int nodes, std::vector<int> capacities) : n_(nodes), cap_(std::move(capacities)) {
    if (static_cast<int>(cap_.size()) != link_count(nodes))
        throw std::invalid_argument("Network: need one capacity per link");
    for (int c : cap_) {
        if (c < 0 || c > kMaxOccupancy)
            throw std::invalid_argument("Network: capacities must be in [0, 65535]");
    }
    occ_.assign(cap_.size(), 0);
}

std::uint64_t Network::seize(int n1, int n2, int via) {
    if (n1 < 0 || n2 < 0 || n1 >= n_ || n2 >= n_ || n1 == n2)
        throw std::invalid_argument("seize: endpoints must be two distinct nodes");
    if (n1 > n2) std::swap(n1, n2);
    if (via != -1 && (via < 0 || via >= n_ || via == n1 || via == n2))
        throw std::invalid_argument("seize: via must be -1 or a third node");

    std::vector<int> path;
    if (via < 0) {
        path.push_back(link_of(n1, n2));
    } else {
        path.push_back(link_of(n1, via));
        path.push_back(link_of(via, n2));
    }
    for (int l : path) {
        if (idle(l) <= 0) throw std::logic_error("seize: no idle trunk on a path link");
    }
    for (int l : path) ++occ_[static_cast<std::size_t>(l)];
    trunks_ += path.size();

    const std::uint64_t id = next_id_++;
    calls_.emplace_back(id, PathRecord{n1, n2, via});
    return id;
}

void Network::release(std::uint64_t call) {
    auto it = std::lower_bound(calls_.begin(), calls_.end(), call,
                               [](const auto& entry, std::uint64_t id) { return entry.first < id; });
    if (it == calls_.end() || it->first != call)
        throw std::logic_error("release: unknown call handle");
    const PathRecord rec = it->second;
    calls_.erase(it);

    std::vector<int> path;
    if (rec.via < 0) {
        path.push_back(link_of(rec.n1, rec.n2));
    } else {
        path.push_back(link_of(rec.n1, rec.via));
        path.push_back(link_of(rec.via, rec.n2));
    }
    for (int l : path) --occ_[static_cast<std::size_t>(l)];
    trunks_ -= path.size();
}

const Network::PathRecord* Network::find_call(std::uint64_t call) const {
    auto it = std::lower_bound(calls_.begin(), calls_.end(), call,
                               [](const auto& entry, std::uint64_t id) { return entry.first < id; });
    return (it != calls_.end() && it->first == call) ? &it->second : nullptr;
}

// ---------------------------------------------------------------------------
// Lazy via selection
// ---------------------------------------------------------------------------

int lba_select_via(const Network& net, int n1, int n2) {
    return lba_pick(net.nodes(), n1, n2,
                    [&](int a, int b) { return net.idle_between(a, b); });
}

int alba_select_via(const Network& net, const LoadClassScheme& scheme, int n1, int n2) {
    return alba_pick(
        net.nodes(), n1, n2, [&](int a, int b) { return net.idle_between(a, b); },
        [&](int a, int b) {
            const int l = net.link_of(a, b);
            return scheme.load_class(net.occupied(l), net.capacity(l));
        });
}

// ---------------------------------------------------------------------------
// Anticipatory indexes
// ---------------------------------------------------------------------------

LbaViaIndex::LbaViaIndex(const Network& net) : n_(net.nodes()) {
    const int L = net.links();
    order_.resize(static_cast<std::size_t>(L));
    key_.assign(static_cast<std::size_t>(L), std::vector<int>(static_cast<std::size_t>(n_), -1));
    for (int l = 0; l < L; ++l) {
        const auto [x, y] = Network::link_nodes(n_, l);
        for (int v = 0; v < n_; ++v) {
            if (v == x || v == y) continue;
            const int m = std::min(net.idle_between(x, v), net.idle_between(v, y));
            key_[static_cast<std::size_t>(l)][static_cast<std::size_t>(v)] = m;
            order_[static_cast<std::size_t>(l)].insert({-m, v});
        }
    }
}

int LbaViaIndex::best_via(int n1, int n2) const {
    const auto& set = order_[static_cast<std::size_t>(Network::link_index(n_, n1, n2))];
    if (set.empty()) return -1;  // two-node network: no vias exist
    const auto [neg_idle, via] = *set.begin();
    return (-neg_idle > 0) ? via : -1;
}

void LbaViaIndex::rank(const Network& net, int x, int y, int via) {
    const auto pid = static_cast<std::size_t>(Network::link_index(n_, x, y));
    const int m = std::min(net.idle_between(x, via), net.idle_between(via, y));
    int& stored = key_[pid][static_cast<std::size_t>(via)];
    ++updates_;
    if (m == stored) return;
    order_[pid].erase({-stored, via});
    order_[pid].insert({-m, via});
    stored = m;
}

void LbaViaIndex::link_changed(const Network& net, int a, int b) {
    if (a > b) std::swap(a, b);
    for (int y = 0; y < n_; ++y) {
        if (y == a || y == b) continue;
        rank(net, b, y, a);  // pairs using (a, b) as the leg through via a
        rank(net, a, y, b);  // pairs using (a, b) as the leg through via b
    }
}

AlbaViaIndex::AlbaViaIndex(const Network& net, LoadClassScheme scheme)
    : n_(net.nodes()), scheme_(std::move(scheme)) {
    const int L = net.links();
    cls_.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l)
        cls_[static_cast<std::size_t>(l)] = scheme_.load_class(net.occupied(l), net.capacity(l));
    bucket_.assign(static_cast<std::size_t>(L),
                   std::vector<std::set<int>>(static_cast<std::size_t>(scheme_.classes())));
    slot_.assign(static_cast<std::size_t>(L), std::vector<int>(static_cast<std::size_t>(n_), 0));
    for (int l = 0; l < L; ++l) {
        const auto [x, y] = Network::link_nodes(n_, l);
        for (int v = 0; v < n_; ++v) {
            if (v == x || v == y) continue;
            bucket(x, y, v);
        }
    }
}

void AlbaViaIndex::bucket(int x, int y, int via) {
    const auto pid = static_cast<std::size_t>(Network::link_index(n_, x, y));
    const int c1 = cls_[static_cast<std::size_t>(Network::link_index(n_, x, via))];
    const int c2 = cls_[static_cast<std::size_t>(Network::link_index(n_, via, y))];
    const int pc = std::min(c1, c2);
    int& stored = slot_[pid][static_cast<std::size_t>(via)];
    if (stored == pc) return;
    if (stored > 0) bucket_[pid][static_cast<std::size_t>(stored - 1)].erase(via);
    bucket_[pid][static_cast<std::size_t>(pc - 1)].insert(via);
    stored = pc;
}

int AlbaViaIndex::best_via(const Network& net, int n1, int n2) const {
    const auto pid = static_cast<std::size_t>(Network::link_index(n_, n1, n2));
    for (const auto& set : bucket_[pid]) {
        for (int v : set) {
            if (net.idle_between(n1, v) > 0 && net.idle_between(v, n2) > 0) return v;
        }
    }
    return -1;
}

void AlbaViaIndex::link_changed(const Network& net, int a, int b) {
    if (a > b) std::swap(a, b);
    const auto l = static_cast<std::size_t>(Network::link_index(n_, a, b));
    const int ncls = scheme_.load_class(net.occupied(static_cast<int>(l)),
                                        net.capacity(static_cast<int>(l)));
    if (ncls == cls_[l]) return;  // inside the class band: nothing to maintain
    ++key_changes_;
    cls_[l] = ncls;
    for (int y = 0; y < n_; ++y) {
        if (y == a || y == b) continue;
        ++updates_;
        bucket(b, y, a);
        ++updates_;
        bucket(a, y, b);
    }
}

// ---------------------------------------------------------------------------
// Call placement
// ---------------------------------------------------------------------------

PlaceOutcome place_call(Network& net, int n1, int n2, Policy policy,
                        const LoadClassScheme& scheme) {
    if (n1 < 0 || n2 < 0 || n1 >= net.nodes() || n2 >= net.nodes() || n1 == n2)
        throw std::invalid_argument("place_call: endpoints must be two distinct nodes");
    PlaceOutcome out;
    if (net.idle_between(n1, n2) > 0) {
        out.carried = true;
        out.via = -1;
        out.call = net.seize(n1, n2, -1);
        return out;
    }
    const int via = policy == Policy::LBA ? lba_select_via(net, n1, n2)
                                          : alba_select_via(net, scheme, n1, n2);
    if (via < 0) return out;  // blocked: nothing changes
    out.carried = true;
    out.via = via;
    out.call = net.seize(n1, n2, via);
    return out;
}

void release_call(Network& net, std::uint64_t call) { net.release(call); }

// ---------------------------------------------------------------------------
// Event payloads
// ---------------------------------------------------------------------------

std::uint64_t pack_event(EventKind kind, int occupancy_after, int via, int owner_pair,
                         bool release) {
    if (occupancy_after < 0 || occupancy_after > kMaxOccupancy)
        throw std::logic_error("pack_event: occupancy out of range");
    if (via < -1 || via > kMaxVia) throw std::logic_error("pack_event: via out of range");
    if (owner_pair < -1 || owner_pair > kMaxOwnerPair)
        throw std::logic_error("pack_event: owner pair out of range");
    return static_cast<std::uint64_t>(occupancy_after) |
           (static_cast<std::uint64_t>(static_cast<int>(kind)) << 16) |
           (static_cast<std::uint64_t>(via + 1) << 18) |
           (static_cast<std::uint64_t>(owner_pair + 1) << 32) |
           (static_cast<std::uint64_t>(release ? 1 : 0) << 48);
}

EventKind event_kind(std::uint64_t payload) {
    return static_cast<EventKind>((payload >> 16) & 0x3);
}
int event_occupancy(std::uint64_t payload) { return static_cast<int>(payload & 0xffff); }
int event_via(std::uint64_t payload) { return static_cast<int>((payload >> 18) & 0x3fff) - 1; }
int event_owner_pair(std::uint64_t payload) {
    return static_cast<int>((payload >> 32) & 0xffff) - 1;
}
bool event_is_release(std::uint64_t payload) { return ((payload >> 48) & 0x1) != 0; }

// ---------------------------------------------------------------------------
// Sequential reference engine
// ---------------------------------------------------------------------------

RunResult run_network(const TrafficConfig& cfg, double horizon) {
    check_config(cfg);
    check_horizon(horizon);

    const int n = cfg.nodes;
    const int L = Network::link_count(n);
    Network net(n, cfg.capacity);

    const bool anticipatory = cfg.eval == Eval::Anticipatory;
    std::unique_ptr<LbaViaIndex> lba_ix;
    std::unique_ptr<AlbaViaIndex> alba_ix;
    if (anticipatory) {
        if (cfg.policy == Policy::LBA)
            lba_ix = std::make_unique<LbaViaIndex>(net);
        else
            alba_ix = std::make_unique<AlbaViaIndex>(net, cfg.scheme);
    }

    RunResult res;
    res.offered_per_pair.assign(static_cast<std::size_t>(L), 0);
    res.blocked_per_pair.assign(static_cast<std::size_t>(L), 0);

    IndexedMinHeap<double> arrivals(L);
    std::vector<std::uint64_t> next_k(static_cast<std::size_t>(L), 0);
    if (cfg.arrival_rate > 0) {
        for (int p = 0; p < L; ++p) arrivals.set(p, arrival_gap(cfg, p, 0));
    }
    std::multiset<std::pair<double, std::uint64_t>> releases;  // (time, call handle)

    auto notify = [&](int a, int b) {
        ++res.trunk_changes;
        if (lba_ix) lba_ix->link_changed(net, a, b);
        if (alba_ix) alba_ix->link_changed(net, a, b);
    };
    auto emit = [&](double t, int link, std::uint64_t payload) {
        res.link_events.push_back({t, link, payload});
    };

    while (true) {
        const double ta = arrivals.empty() ? kInf : arrivals.min().second;
        const double tr = releases.empty() ? kInf : releases.begin()->first;
        const double t = std::min(ta, tr);
        if (!(t < horizon)) break;

        if (tr <= ta) {
            const std::uint64_t id = releases.begin()->second;
            releases.erase(releases.begin());
            const Network::PathRecord rec = *net.find_call(id);
            net.release(id);
            const int pair = net.link_of(rec.n1, rec.n2);
            if (rec.via < 0) {
                emit(t, pair, pack_event(EventKind::Trunk, net.occupied(pair), -1, pair, true));
                notify(rec.n1, rec.n2);
            } else {
                const int l1 = net.link_of(rec.n1, rec.via);
                const int l2 = net.link_of(rec.via, rec.n2);
                emit(t, l1, pack_event(EventKind::Trunk, net.occupied(l1), rec.via, pair, true));
                emit(t, l2, pack_event(EventKind::Trunk, net.occupied(l2), rec.via, pair, true));
                notify(rec.n1, rec.via);
                notify(rec.via, rec.n2);
            }
            continue;
        }

        const int p = arrivals.min().first;
        const std::uint64_t k = next_k[static_cast<std::size_t>(p)];
        next_k[static_cast<std::size_t>(p)] = k + 1;
        arrivals.set(p, t + arrival_gap(cfg, p, k + 1));
        const auto [n1, n2] = Network::link_nodes(n, p);

        ++res.offered;
        ++res.offered_per_pair[static_cast<std::size_t>(p)];

        int choice;
        if (net.idle_between(n1, n2) > 0) {
            choice = kDirect;
        } else {
            ++res.via_queries;
            int via;
            if (!anticipatory) {
                res.scan_visits += static_cast<std::uint64_t>(n - 2);
                via = cfg.policy == Policy::LBA ? lba_select_via(net, n1, n2)
                                                : alba_select_via(net, cfg.scheme, n1, n2);
            } else {
                via = cfg.policy == Policy::LBA ? lba_ix->best_via(n1, n2)
                                                : alba_ix->best_via(net, n1, n2);
            }
            choice = via < 0 ? kBlocked : via;
        }
        res.decisions.push_back({t, p, choice});

        if (choice == kBlocked) {
            ++res.blocked;
            ++res.blocked_per_pair[static_cast<std::size_t>(p)];
            emit(t, p, pack_event(EventKind::Blocked, net.occupied(p), -1, -1, false));
            continue;
        }

        const std::uint64_t id = net.seize(n1, n2, choice == kDirect ? -1 : choice);
        releases.insert({t + holding_time(cfg, p, k), id});
        if (choice == kDirect) {
            ++res.carried_direct;
            emit(t, p, pack_event(EventKind::Direct, net.occupied(p), -1, -1, false));
            notify(n1, n2);
        } else {
            ++res.carried_via;
            const int l1 = net.link_of(n1, choice);
            const int l2 = net.link_of(choice, n2);
            emit(t, p, pack_event(EventKind::Via, net.occupied(p), choice, -1, false));
            emit(t, l1, pack_event(EventKind::Trunk, net.occupied(l1), choice, p, false));
            emit(t, l2, pack_event(EventKind::Trunk, net.occupied(l2), choice, p, false));
            notify(n1, choice);
            notify(choice, n2);
        }
    }

    if (lba_ix) res.index_updates = lba_ix->updates();
    if (alba_ix) {
        res.index_updates = alba_ix->updates();
        res.index_key_changes = alba_ix->key_changes();
    }
    res.final_occupancy = net.occupancy();
    res.active_at_end = net.active_calls();
    res.blocking_fraction =
        res.offered ? static_cast<double>(res.blocked) / static_cast<double>(res.offered) : 0.0;
    return res;
}

// ---------------------------------------------------------------------------
// Synchronous-relaxation engine
// ---------------------------------------------------------------------------

namespace {

struct ActiveCall {
    double release = 0;
    int pair = 0;
    int via = -1;
};

struct RelaxState {
    std::vector<int> occ;
    std::vector<double> last_arr;
    std::vector<std::uint64_t> next_k;
    std::vector<ActiveCall> active;
};

// Dependency bookkeeping for a committed strip: edges run from a cause event
// to the event that read or extended its effect.
struct DepSink {
    std::vector<int> last_ev;  // per link: most recent event index, -1 none
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

    void edge(int from, int to) {
        if (from >= 0)
            edges.emplace_back(static_cast<std::uint32_t>(from), static_cast<std::uint32_t>(to));
    }
};

// Components are the links of the network; a pass re-simulates the whole call
// sequence over [t0, t1), evolving owned links exactly and reading the others
// from the previous pass's trajectories.  Only owned links emit events, so at
// the fixed point the union over a partition is the sequential trace.
class LinkTrajectoryModel final : public parallel::RelaxModel {
public:
    explicit LinkTrajectoryModel(const TrafficConfig& cfg)
        : cfg_(cfg), n_(cfg.nodes), L_(Network::link_count(cfg.nodes)) {
        st_.occ.assign(static_cast<std::size_t>(L_), 0);
        st_.last_arr.assign(static_cast<std::size_t>(L_), 0.0);
        st_.next_k.assign(static_cast<std::size_t>(L_), 0);
        offered_per_pair_.assign(static_cast<std::size_t>(L_), 0);
        blocked_per_pair_.assign(static_cast<std::size_t>(L_), 0);
    }

    int component_count() const override { return L_; }

    std::vector<parallel::RelaxEvent> generate(
        int first, int last, double t0, double t1,
        const std::vector<std::vector<parallel::RelaxEvent>>& assumed) const override {
        RelaxState st = st_;
        std::vector<parallel::RelaxEvent> out;
        sweep(
            st, t0, t1, [&](int l) { return l >= first && l < last; }, &assumed, out, nullptr);
        return out;
    }

    void commit(double t0, double t1, const std::vector<parallel::RelaxEvent>& strip) override {
        RelaxState st = st_;
        std::vector<parallel::RelaxEvent> out;
        DepSink sink{std::vector<int>(static_cast<std::size_t>(L_), -1), {}};
        sweep(
            st, t0, t1, [](int) { return true; }, nullptr, out, &sink);

        // The committed strip is sorted by (time, component); replaying it
        // from the committed state must reproduce it exactly.
        std::vector<std::uint32_t> order(out.size());
        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            if (out[a].time != out[b].time) return out[a].time < out[b].time;
            return out[a].component < out[b].component;
        });
        if (out.size() != strip.size())
            throw std::logic_error("relaxation strip does not replay from committed state");
        std::vector<std::uint32_t> pos(out.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            pos[order[i]] = static_cast<std::uint32_t>(i);
            if (!(out[order[i]] == strip[i]))
                throw std::logic_error("relaxation strip does not replay from committed state");
        }

        auto deps = std::move(sink.edges);
        for (auto& e : deps) {
            e.first = pos[e.first];
            e.second = pos[e.second];
        }
        strip_dependencies_.push_back(std::move(deps));

        for (const auto& e : strip) {
            const EventKind kind = event_kind(e.payload);
            if (kind == EventKind::Trunk) continue;
            ++offered_;
            ++offered_per_pair_[static_cast<std::size_t>(e.component)];
            if (kind == EventKind::Blocked) {
                ++blocked_;
                ++blocked_per_pair_[static_cast<std::size_t>(e.component)];
            }
        }
        st_ = std::move(st);
    }

    TrafficConfig cfg_;
    int n_;
    int L_;
    RelaxState st_;
    std::uint64_t offered_ = 0;
    std::uint64_t blocked_ = 0;
    std::vector<std::uint64_t> offered_per_pair_;
    std::vector<std::uint64_t> blocked_per_pair_;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> strip_dependencies_;

private:
    template <class OwnedFn>
    void sweep(RelaxState& st, double /*t0*/, double t1, OwnedFn owned,
               const std::vector<std::vector<parallel::RelaxEvent>>* assumed,
               std::vector<parallel::RelaxEvent>& out, DepSink* deps) const {
        const int cap = cfg_.capacity;

        // Occupancy of a link as visible to a decision at time t: owned links
        // evolve exactly in st.occ; the rest replay the previous pass's
        // trajectory STRICTLY before t.  Events at exactly t must stay
        // invisible — a via carry writes its leg seizes at the decision's own
        // timestamp, and reading them back would let a decision observe its
        // own effects from the previous pass.
        auto occ_of = [&](int l, double t) -> int {
            if (owned(l)) return st.occ[static_cast<std::size_t>(l)];
            const auto& ev = (*assumed)[static_cast<std::size_t>(l)];
            auto it = std::lower_bound(
                ev.begin(), ev.end(), t,
                [](const parallel::RelaxEvent& e, double lhs) { return e.time < lhs; });
            if (it == ev.begin()) return st.occ[static_cast<std::size_t>(l)];
            return event_occupancy(std::prev(it)->payload);
        };
        auto emit = [&](double t, int link, std::uint64_t payload) -> int {
            out.push_back({t, link, payload});
            return static_cast<int>(out.size()) - 1;
        };

        struct SweepActive {
            double release;
            int pair;
            int via;
            int place_ev;
        };
        std::vector<SweepActive> acts;
        acts.reserve(st.active.size());
        for (const auto& a : st.active) acts.push_back({a.release, a.pair, a.via, -1});
        std::multiset<std::pair<double, int>> relq;  // (release time, index into acts)
        for (int i = 0; i < static_cast<int>(acts.size()); ++i) {
            if (acts[static_cast<std::size_t>(i)].release < t1)
                relq.insert({acts[static_cast<std::size_t>(i)].release, i});
        }

        IndexedMinHeap<double> arrivals(L_);
        if (cfg_.arrival_rate > 0) {
            for (int p = 0; p < L_; ++p) {
                arrivals.set(p, st.last_arr[static_cast<std::size_t>(p)] +
                                    arrival_gap(cfg_, p, st.next_k[static_cast<std::size_t>(p)]));
            }
        }

        auto alloc_leg = [&](int l, double t, int via, int pair, int dec_ev) {
            if (!owned(l)) return;
            int& o = st.occ[static_cast<std::size_t>(l)];
            if (o >= cap) throw std::logic_error("relax sweep: seize beyond capacity");
            ++o;
            const int ev = emit(t, l, pack_event(EventKind::Trunk, o, via, pair, false));
            if (deps) {
                deps->edge(dec_ev, ev);
                deps->edge(deps->last_ev[static_cast<std::size_t>(l)], ev);
                deps->last_ev[static_cast<std::size_t>(l)] = ev;
            }
        };
        auto free_leg = [&](int l, double t, int via, int pair, int place_ev) {
            if (!owned(l)) return;
            int& o = st.occ[static_cast<std::size_t>(l)];
            if (o <= 0) throw std::logic_error("relax sweep: release below zero");
            --o;
            const int ev = emit(t, l, pack_event(EventKind::Trunk, o, via, pair, true));
            if (deps) {
                deps->edge(place_ev, ev);
                deps->edge(deps->last_ev[static_cast<std::size_t>(l)], ev);
                deps->last_ev[static_cast<std::size_t>(l)] = ev;
            }
        };

        while (true) {
            const double ta = arrivals.empty() ? kInf : arrivals.min().second;
            const double tr = relq.empty() ? kInf : relq.begin()->first;
            const double t = std::min(ta, tr);
            if (!(t < t1)) break;

            if (tr <= ta) {
                const int idx = relq.begin()->second;
                relq.erase(relq.begin());
                const SweepActive& a = acts[static_cast<std::size_t>(idx)];
                const auto [n1, n2] = Network::link_nodes(n_, a.pair);
                if (a.via < 0) {
                    free_leg(a.pair, t, -1, a.pair, a.place_ev);
                } else {
                    free_leg(Network::link_index(n_, n1, a.via), t, a.via, a.pair, a.place_ev);
                    free_leg(Network::link_index(n_, a.via, n2), t, a.via, a.pair, a.place_ev);
                }
                continue;
            }

            const int p = arrivals.min().first;
            const std::uint64_t k = st.next_k[static_cast<std::size_t>(p)];
            st.next_k[static_cast<std::size_t>(p)] = k + 1;
            st.last_arr[static_cast<std::size_t>(p)] = t;
            arrivals.set(p, t + arrival_gap(cfg_, p, k + 1));
            const auto [n1, n2] = Network::link_nodes(n_, p);

            bool scanned = false;
            int choice;
            if (cap - occ_of(p, t) > 0) {
                choice = kDirect;
            } else {
                scanned = true;
                auto idle_fn = [&](int a, int b) {
                    return cap - occ_of(Network::link_index(n_, a, b), t);
                };
                int via;
                if (cfg_.policy == Policy::LBA) {
                    via = lba_pick(n_, n1, n2, idle_fn);
                } else {
                    via = alba_pick(n_, n1, n2, idle_fn, [&](int a, int b) {
                        return cfg_.scheme.load_class(occ_of(Network::link_index(n_, a, b), t),
                                                      cap);
                    });
                }
                choice = via < 0 ? kBlocked : via;
            }

            int dec_ev = -1;
            if (owned(p)) {
                EventKind kind = EventKind::Via;
                if (choice == kDirect) kind = EventKind::Direct;
                if (choice == kBlocked) kind = EventKind::Blocked;
                if (choice == kDirect) {
                    int& o = st.occ[static_cast<std::size_t>(p)];
                    if (o >= cap) throw std::logic_error("relax sweep: seize beyond capacity");
                    ++o;
                }
                dec_ev = emit(t, p,
                              pack_event(kind, st.occ[static_cast<std::size_t>(p)],
                                         choice >= 0 ? choice : -1, -1, false));
                if (deps) {
                    deps->edge(deps->last_ev[static_cast<std::size_t>(p)], dec_ev);
                    if (scanned) {
                        for (int v = 0; v < n_; ++v) {
                            if (v == n1 || v == n2) continue;
                            deps->edge(
                                deps->last_ev[static_cast<std::size_t>(Network::link_index(n_, n1, v))],
                                dec_ev);
                            deps->edge(
                                deps->last_ev[static_cast<std::size_t>(Network::link_index(n_, v, n2))],
                                dec_ev);
                        }
                    }
                    deps->last_ev[static_cast<std::size_t>(p)] = dec_ev;
                }
            }

            if (choice == kBlocked) continue;

            const double trel = t + holding_time(cfg_, p, k);
            if (choice >= 0) {
                alloc_leg(Network::link_index(n_, n1, choice), t, choice, p, dec_ev);
                alloc_leg(Network::link_index(n_, choice, n2), t, choice, p, dec_ev);
            }
            acts.push_back({trel, p, choice == kDirect ? -1 : choice, dec_ev});
            if (trel < t1) relq.insert({trel, static_cast<int>(acts.size()) - 1});
        }

        st.active.clear();
        for (const auto& a : acts) {
            if (a.release >= t1) st.active.push_back({a.release, a.pair, a.via});
        }
    }
};

}  // namespace

RelaxRunResult run_network_syncrelax(const TrafficConfig& cfg, double horizon, double dt,
                                     int workers, std::uint64_t iteration_cap) {
    check_config(cfg);
    check_horizon(horizon);
    LinkTrajectoryModel model(cfg);
    RelaxRunResult res;
    res.relax = parallel::syncrelax_run(model, horizon, dt, workers, iteration_cap);
    res.offered = model.offered_;
    res.blocked = model.blocked_;
    res.offered_per_pair = std::move(model.offered_per_pair_);
    res.blocked_per_pair = std::move(model.blocked_per_pair_);
    res.final_occupancy = std::move(model.st_.occ);
    res.strip_dependencies = std::move(model.strip_dependencies_);
    return res;
}

}  // namespace mcsim::circuitnet
