#include "mcsim/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mcsim/event_core.hpp"
#include "mcsim/random.hpp"

namespace mcsim::parallel {

namespace {

constexpr std::uint64_t kArrivalTag = 0xCA0710055EEDF00Dull;

// Waiting gap k of a component's Poisson clock: a pure function of the run
// seed, the component, and k, so every engine reproduces the same arrivals.
double arrival_gap(std::uint64_t arr_seed, int i, std::uint64_t k, double rate) {
    RandomStream s = RandomStream::keyed(arr_seed, static_cast<std::uint64_t>(i), k);
    return exp_from_uniform(s.uniform01(), rate);
}

// Declared read sets, sorted, with bounds checked.
std::vector<std::vector<int>> declared_sets(CautiousModel& model) {
    int n = model.component_count();
    std::vector<std::vector<int>> decl(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto nb = model.neighbors(i);
        for (int j : nb)
            if (j < 0 || j >= n || j == i)
                throw std::invalid_argument("cautious: neighbor list names a bad component");
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        decl[static_cast<std::size_t>(i)] = std::move(nb);
    }
    return decl;
}

// Symmetric closure of the read relation: if i reads j, neither may fire
// while the other could be mid-update, so both wait on each other.
std::vector<std::vector<int>> closure_sets(const std::vector<std::vector<int>>& decl) {
    auto clos = decl;
    for (std::size_t i = 0; i < decl.size(); ++i)
        for (int j : decl[i]) clos[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
    for (auto& v : clos) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return clos;
}

// Lexicographic (time, component) firing order: may i fire at t while j's
// published clock reads pj?
bool passed(double pj, double t, int j, int i) { return pj > t || (pj == t && j > i); }

void sort_committed(std::vector<CommittedEvent>& ev) {
    std::sort(ev.begin(), ev.end(), [](const CommittedEvent& a, const CommittedEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.component < b.component;
    });
}

} // namespace

void NeighborGuard::check(int component) const {
    if (component == self_) return;
    if (std::binary_search(nbrs_.begin(), nbrs_.end(), component)) return;
    throw std::logic_error("cautious: update read component " + std::to_string(component) +
                           " not declared as a neighbor of " + std::to_string(self_));
}

bool same_events(const CautiousResult& a, const CautiousResult& b) {
    if (a.events.size() != b.events.size()) return false;
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        const auto& x = a.events[i];
        const auto& y = b.events[i];
        if (x.time != y.time || x.component != y.component || x.index != y.index) return false;
    }
    return true;
}

CautiousResult cautious_run(CautiousModel& model, double horizon, int workers,
                            std::uint64_t seed) {
    if (workers < 1) throw std::invalid_argument("cautious: worker count must be positive");
    int n = model.component_count();
    CautiousResult out;
    if (n == 0) return out;

    auto decl = declared_sets(model);
    auto clos = closure_sets(decl);
    std::uint64_t arr_seed = mix64(seed ^ kArrivalTag);

    std::vector<std::atomic<double>> clock(static_cast<std::size_t>(n));
    std::vector<std::uint64_t> kidx(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i)
        clock[static_cast<std::size_t>(i)].store(arrival_gap(arr_seed, i, 0, model.rate(i)),
                                                 std::memory_order_relaxed);

    int nworkers = std::min(workers, n);
    std::vector<std::vector<CommittedEvent>> local(static_cast<std::size_t>(nworkers));
    std::atomic<bool> abort{false};
    std::mutex err_mx;
    std::exception_ptr err;

    auto run_block = [&](int w) {
        int lo = static_cast<int>(static_cast<long long>(w) * n / nworkers);
        int hi = static_cast<int>(static_cast<long long>(w + 1) * n / nworkers);
        try {
            IndexedMinHeap<double> pending(hi - lo);
            for (int i = lo; i < hi; ++i)
                pending.set(i - lo, clock[static_cast<std::size_t>(i)].load(std::memory_order_relaxed));
            while (!pending.empty()) {
                auto [slot, t] = pending.min();
                int i = lo + slot;
                if (t > horizon) {
                    pending.erase(slot); // clock already published beyond horizon
                    continue;
                }
                for (int j : clos[static_cast<std::size_t>(i)]) {
                    for (;;) {
                        double pj = clock[static_cast<std::size_t>(j)].load(std::memory_order_acquire);
                        if (passed(pj, t, j, i)) break;
                        if (abort.load(std::memory_order_relaxed)) return;
                        std::this_thread::yield();
                    }
                }
                NeighborGuard guard(i, decl[static_cast<std::size_t>(i)]);
                std::uint64_t k = kidx[static_cast<std::size_t>(i)];
                model.apply(i, k, t, guard);
                local[static_cast<std::size_t>(w)].push_back({t, i, k, 0});
                kidx[static_cast<std::size_t>(i)] = k + 1;
                double tn = t + arrival_gap(arr_seed, i, k + 1, model.rate(i));
                // Publish only after the update is complete: a neighbor that
                // sees the new clock must also see the new state.
                clock[static_cast<std::size_t>(i)].store(tn, std::memory_order_release);
                pending.set(slot, tn);
            }
        } catch (...) {
            {
                std::lock_guard<std::mutex> lk(err_mx);
                if (!err) err = std::current_exception();
            }
            abort.store(true, std::memory_order_relaxed);
        }
    };

    if (nworkers == 1) {
        run_block(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(nworkers));
        for (int w = 0; w < nworkers; ++w) threads.emplace_back(run_block, w);
        for (auto& th : threads) th.join();
    }
    if (err) std::rethrow_exception(err);

    for (auto& l : local)
        out.events.insert(out.events.end(), l.begin(), l.end());
    sort_committed(out.events);
    return out;
}

CautiousResult lockstep_emulate(CautiousModel& model, double horizon, std::uint64_t seed) {
    int n = model.component_count();
    CautiousResult out;
    if (n == 0) return out;

    auto decl = declared_sets(model);
    auto clos = closure_sets(decl);
    std::uint64_t arr_seed = mix64(seed ^ kArrivalTag);

    std::vector<double> next(static_cast<std::size_t>(n));
    std::vector<std::uint64_t> kidx(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] = arrival_gap(arr_seed, i, 0, model.rate(i));

    std::vector<int> fire;
    for (;;) {
        bool any = false;
        for (int i = 0; i < n && !any; ++i) any = next[static_cast<std::size_t>(i)] <= horizon;
        if (!any) break;
        ++out.cycles;

        fire.clear();
        for (int i = 0; i < n; ++i) {
            double t = next[static_cast<std::size_t>(i)];
            if (t > horizon) continue;
            bool ok = true;
            for (int j : clos[static_cast<std::size_t>(i)])
                ok = ok && passed(next[static_cast<std::size_t>(j)], t, j, i);
            if (ok) fire.push_back(i);
        }
        for (int i : fire) {
            double t = next[static_cast<std::size_t>(i)];
            NeighborGuard guard(i, decl[static_cast<std::size_t>(i)]);
            std::uint64_t k = kidx[static_cast<std::size_t>(i)];
            model.apply(i, k, t, guard);
            out.events.push_back({t, i, k, out.cycles});
            kidx[static_cast<std::size_t>(i)] = k + 1;
            next[static_cast<std::size_t>(i)] = t + arrival_gap(arr_seed, i, k + 1, model.rate(i));
        }
        out.nonwaiting.push_back(static_cast<double>(fire.size()) / static_cast<double>(n));
    }
    sort_committed(out.events);
    return out;
}

// ---------------------------------------------------------------------------
// Synchronous relaxation
// ---------------------------------------------------------------------------

bool operator==(const RelaxEvent& a, const RelaxEvent& b) {
    return a.time == b.time && a.component == b.component && a.payload == b.payload;
}

namespace {

std::uint64_t ceil_log2_u64(std::uint64_t v) {
    std::uint64_t l = 0;
    while ((1ull << l) < v) ++l;
    return l;
}

} // namespace

RelaxResult syncrelax_run(RelaxModel& model, double horizon, double dt, int workers,
                          std::uint64_t iteration_cap) {
    if (!(dt > 0)) throw std::invalid_argument("syncrelax: step width must be positive");
    if (workers < 1) throw std::invalid_argument("syncrelax: worker count must be positive");
    int n = model.component_count();
    RelaxResult out;
    if (n == 0) return out;
    std::uint64_t cap = iteration_cap ? iteration_cap
                                      : 10 * ceil_log2_u64(static_cast<std::uint64_t>(n)) + 16;

    int parts = std::min(workers, n);
    auto part_lo = [&](int p) { return static_cast<int>(static_cast<long long>(p) * n / parts); };

    std::vector<std::vector<RelaxEvent>> assumed(static_cast<std::size_t>(n));
    std::vector<std::vector<RelaxEvent>> cur(static_cast<std::size_t>(parts));
    std::vector<std::vector<RelaxEvent>> fresh(static_cast<std::size_t>(parts));

    double t0 = 0;
    while (t0 < horizon) {
        double t1 = std::min(t0 + dt, horizon);
        for (auto& a : assumed) a.clear();
        for (auto& c : cur) c.clear();
        std::uint64_t iters = 0;

        for (;;) {
            std::exception_ptr gen_err;
#pragma omp parallel for num_threads(parts) schedule(static)
            for (int p = 0; p < parts; ++p) {
                try {
                    fresh[static_cast<std::size_t>(p)] =
                        model.generate(part_lo(p), part_lo(p + 1), t0, t1, assumed);
                } catch (...) {
#pragma omp critical
                    if (!gen_err) gen_err = std::current_exception();
                }
            }
            if (gen_err) std::rethrow_exception(gen_err);

            if (fresh == cur) break; // confirming pass: nothing changed
            ++iters;
            if (iters > cap) {
                std::ostringstream msg;
                msg << "syncrelax: step [" << t0 << ", " << t1 << ") still changing after "
                    << cap << " passes; suspected livelock or nondeterministic generation";
                throw std::runtime_error(msg.str());
            }
            cur.swap(fresh);
            for (auto& a : assumed) a.clear();
            for (const auto& block : cur)
                for (const RelaxEvent& e : block)
                    assumed[static_cast<std::size_t>(e.component)].push_back(e);
        }

        std::vector<RelaxEvent> strip;
        for (const auto& block : cur) strip.insert(strip.end(), block.begin(), block.end());
        std::sort(strip.begin(), strip.end(), [](const RelaxEvent& a, const RelaxEvent& b) {
            if (a.time != b.time) return a.time < b.time;
            return a.component < b.component;
        });
        model.commit(t0, t1, strip);

        out.steps.push_back({t0, t1, iters, strip.size()});
        out.max_iterations = std::max(out.max_iterations, iters);
        out.events.insert(out.events.end(), strip.begin(), strip.end());
        t0 = t1;
    }
    return out;
}

std::uint64_t count_levels(std::size_t n_events,
                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
    if (n_events == 0) return 0;
    std::vector<std::vector<std::uint32_t>> adj(n_events);
    std::vector<std::uint32_t> indeg(n_events, 0);
    for (auto [u, v] : edges) {
        if (u >= n_events || v >= n_events)
            throw std::invalid_argument("count_levels: edge names a missing event");
        adj[u].push_back(v);
        ++indeg[v];
    }
    std::vector<std::uint64_t> level(n_events, 1);
    std::queue<std::uint32_t> ready;
    for (std::uint32_t v = 0; v < n_events; ++v)
        if (indeg[v] == 0) ready.push(v);
    std::size_t seen = 0;
    std::uint64_t depth = 0;
    while (!ready.empty()) {
        std::uint32_t u = ready.front();
        ready.pop();
        ++seen;
        depth = std::max(depth, level[u]);
        for (std::uint32_t v : adj[u]) {
            level[v] = std::max(level[v], level[u] + 1);
            if (--indeg[v] == 0) ready.push(v);
        }
    }
    if (seen != n_events)
        throw std::invalid_argument("count_levels: dependency graph is cyclic");
    return depth;
}

// ---------------------------------------------------------------------------
// Workloads
// ---------------------------------------------------------------------------

DepositionRing::DepositionRing(const deposition::DepositionConfig& cfg, std::uint64_t seed)
    : store_(cfg.length, cfg.sectors),
      seed_(mix64(seed ^ 0xD2B05171011AB5EDull)),
      log_(static_cast<std::size_t>(cfg.sectors)) {}

std::vector<int> DepositionRing::neighbors(int i) const {
    int s = store_.sectors();
    if (s == 1) return {};
    if (s == 2) return {1 - i};
    return {(i + s - 1) % s, (i + 1) % s};
}

void DepositionRing::apply(int i, std::uint64_t k, double t, const NeighborGuard& guard) {
    int s = store_.sectors();
    guard.check(i);
    if (s > 1) {
        guard.check((i + 1) % s);
        guard.check((i + s - 1) % s);
    }
    double width = store_.length() / s;
    double u = RandomStream::keyed(seed_, static_cast<std::uint64_t>(i), k).uniform01();
    double x = (static_cast<double>(i) + u) * width;
    // Rounding must never push the disk into a sector this component does
    // not own.
    while (store_.sector_of(x) > i) x = std::nextafter(x, 0.0);
    while (store_.sector_of(x) < i) x = std::nextafter(x, store_.length());
    deposition::Particle p{k, x, store_.landing_height(x)};
    store_.add(p);
    log_[static_cast<std::size_t>(i)].push_back({t, p});
}

deposition::Trajectory DepositionRing::merged(const CautiousResult& run) const {
    deposition::Trajectory traj;
    traj.length = store_.length();
    std::vector<std::size_t> cursor(log_.size(), 0);
    traj.particles.reserve(run.events.size());
    traj.times.reserve(run.events.size());
    for (const CommittedEvent& e : run.events) {
        auto c = static_cast<std::size_t>(e.component);
        if (cursor[c] >= log_[c].size())
            throw std::logic_error("deposition ring: event log shorter than commit list");
        const Drop& d = log_[c][cursor[c]++];
        deposition::Particle p = d.p;
        p.m = traj.particles.size();
        traj.particles.push_back(p);
        traj.times.push_back(d.time);
    }
    return traj;
}

// --- DecoupledStreams ---

DecoupledStreams::DecoupledStreams(int n, double rate, std::uint64_t seed)
    : n_(n), rate_(rate), seed_(mix64(seed ^ 0xDEC0051ABEA7F1F0ull)),
      last_time_(static_cast<std::size_t>(n), 0.0),
      next_index_(static_cast<std::size_t>(n), 0) {
    if (n <= 0) throw std::invalid_argument("decoupled: need at least one component");
    if (!(rate > 0)) throw std::invalid_argument("decoupled: rate must be positive");
}

std::vector<RelaxEvent> DecoupledStreams::generate(
    int first, int last, double, double t1,
    const std::vector<std::vector<RelaxEvent>>&) const {
    std::vector<RelaxEvent> out;
    for (int i = first; i < last; ++i) {
        double t = last_time_[static_cast<std::size_t>(i)];
        std::uint64_t k = next_index_[static_cast<std::size_t>(i)];
        for (;;) {
            t += exp_from_uniform(
                RandomStream::keyed(seed_, static_cast<std::uint64_t>(i), k).uniform01(), rate_);
            if (t >= t1) break;
            out.push_back({t, i, mix64(seed_ + static_cast<std::uint64_t>(i) * 0x9E3779B97F4A7C15ull + k)});
            ++k;
        }
    }
    std::sort(out.begin(), out.end(), [](const RelaxEvent& a, const RelaxEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.component < b.component;
    });
    return out;
}

void DecoupledStreams::commit(double, double, const std::vector<RelaxEvent>& strip) {
    for (const RelaxEvent& e : strip) {
        last_time_[static_cast<std::size_t>(e.component)] = e.time;
        ++next_index_[static_cast<std::size_t>(e.component)];
    }
}

// --- ChainRelay ---

ChainRelay::ChainRelay(int n, double hop_dt, std::uint64_t seed)
    : n_(n), hop_dt_(hop_dt), seed_(mix64(seed ^ 0xC4A1917E1A7F00D5ull)),
      last_payload_(mix64(seed_)) {
    if (n <= 0) throw std::invalid_argument("chain: need at least one component");
    if (!(hop_dt > 0)) throw std::invalid_argument("chain: hop cadence must be positive");
}

std::uint64_t ChainRelay::payload_at(std::uint64_t hop, std::uint64_t prev_payload) const {
    return mix64(seed_ ^ mix64(prev_payload + hop * 0xBF58476D1CE4E5B9ull));
}

std::uint64_t ChainRelay::hops_inside(double t0, double t1) const {
    std::uint64_t count = 0;
    // Hop h fires at (h + 1) * hop_dt; count those inside [t0, t1).
    auto h0 = static_cast<std::uint64_t>(std::max(0.0, std::ceil(t0 / hop_dt_ - 1.0)));
    for (std::uint64_t h = h0;; ++h) {
        double t = (static_cast<double>(h) + 1.0) * hop_dt_;
        if (t >= t1) break;
        if (t >= t0) ++count;
    }
    return count;
}

std::vector<RelaxEvent> ChainRelay::generate(
    int first, int last, double /*t0*/, double t1,
    const std::vector<std::vector<RelaxEvent>>& assumed) const {
    std::vector<RelaxEvent> out;
    std::vector<std::uint64_t> pass_payload; // hops computed this pass, by offset
    for (std::uint64_t h = next_hop_;; ++h) {
        double t = (static_cast<double>(h) + 1.0) * hop_dt_;
        if (t >= t1) break;
        int c = static_cast<int>(h % static_cast<std::uint64_t>(n_));
        std::uint64_t prev;
        if (h == next_hop_) {
            prev = last_payload_; // committed predecessor
        } else {
            int pc = static_cast<int>((h - 1) % static_cast<std::uint64_t>(n_));
            if (pc >= first && pc < last) {
                prev = pass_payload[h - 1 - next_hop_]; // same pass, joint
            } else {
                prev = 0; // empty-trajectory assumption
                double pt = static_cast<double>(h) * hop_dt_;
                for (const RelaxEvent& e : assumed[static_cast<std::size_t>(pc)])
                    if (e.time == pt) prev = e.payload;
            }
        }
        std::uint64_t v = payload_at(h, prev);
        pass_payload.push_back(v);
        if (c >= first && c < last) out.push_back({t, c, v});
    }
    return out;
}

void ChainRelay::commit(double, double, const std::vector<RelaxEvent>& strip) {
    for (const RelaxEvent& e : strip) {
        last_payload_ = e.payload;
        ++next_hop_;
    }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>>
ChainRelay::strip_dependencies(const std::vector<RelaxEvent>& strip) const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    for (std::uint32_t i = 1; i < strip.size(); ++i) edges.push_back({i - 1, i});
    return edges;
}

// --- SprinkleField ---

SprinkleField::SprinkleField(int n, double rate, std::uint64_t seed)
    : n_(n), rate_(rate), seed_(mix64(seed ^ 0x5991C1E0F1E1D5EEull)),
      last_time_(static_cast<std::size_t>(n), 0.0),
      next_index_(static_cast<std::size_t>(n), 0),
      last_payload_(static_cast<std::size_t>(n)) {
    if (n <= 0) throw std::invalid_argument("sprinkle: need at least one component");
    if (!(rate > 0)) throw std::invalid_argument("sprinkle: rate must be positive");
    for (int i = 0; i < n; ++i)
        last_payload_[static_cast<std::size_t>(i)] = mix64(seed_ + static_cast<std::uint64_t>(i));
}

std::uint64_t SprinkleField::payload_for(int i, std::uint64_t k, std::uint64_t own,
                                         std::uint64_t left, std::uint64_t right) const {
    std::uint64_t h = seed_ + (static_cast<std::uint64_t>(i) << 32) + k;
    h = mix64(h ^ mix64(own + 0x9E3779B97F4A7C15ull));
    h = mix64(h ^ mix64(left + 0xBF58476D1CE4E5B9ull));
    h = mix64(h ^ mix64(right + 0x94D049BB133111EBull));
    return h;
}

std::vector<RelaxEvent> SprinkleField::generate(
    int first, int last, double /*t0*/, double t1,
    const std::vector<std::vector<RelaxEvent>>& assumed) const {
    // Materialize this block's intrinsic arrivals, then settle payloads in
    // time order so intra-block reads are causal within the pass.
    struct Slot {
        double time;
        int comp;
        std::uint64_t k;
    };
    std::vector<Slot> slots;
    for (int i = first; i < last; ++i) {
        double t = last_time_[static_cast<std::size_t>(i)];
        std::uint64_t k = next_index_[static_cast<std::size_t>(i)];
        for (;;) {
            t += exp_from_uniform(
                RandomStream::keyed(seed_, static_cast<std::uint64_t>(i), k).uniform01(), rate_);
            if (t >= t1) break;
            slots.push_back({t, i, k});
            ++k;
        }
    }
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        if (a.time != b.time) return a.time < b.time;
        return a.comp < b.comp;
    });

    std::vector<std::uint64_t> block_payload(static_cast<std::size_t>(last - first));
    std::vector<bool> block_has(static_cast<std::size_t>(last - first), false);
    auto latest = [&](int c, double before) -> std::uint64_t {
        if (c >= first && c < last) {
            auto s = static_cast<std::size_t>(c - first);
            return block_has[s] ? block_payload[s] : last_payload_[static_cast<std::size_t>(c)];
        }
        std::uint64_t v = last_payload_[static_cast<std::size_t>(c)];
        for (const RelaxEvent& e : assumed[static_cast<std::size_t>(c)]) {
            if (e.time >= before) break;
            v = e.payload;
        }
        return v;
    };

    std::vector<RelaxEvent> out;
    out.reserve(slots.size());
    for (const Slot& s : slots) {
        int lnb = (s.comp + n_ - 1) % n_;
        int rnb = (s.comp + 1) % n_;
        std::uint64_t own = latest(s.comp, s.time);
        std::uint64_t v =
            payload_for(s.comp, s.k, own, latest(lnb, s.time), latest(rnb, s.time));
        out.push_back({s.time, s.comp, v});
        block_payload[static_cast<std::size_t>(s.comp - first)] = v;
        block_has[static_cast<std::size_t>(s.comp - first)] = true;
    }
    return out;
}

void SprinkleField::commit(double, double, const std::vector<RelaxEvent>& strip) {
    for (const RelaxEvent& e : strip) {
        auto c = static_cast<std::size_t>(e.component);
        last_time_[c] = e.time;
        ++next_index_[c];
        last_payload_[c] = e.payload;
    }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>>
SprinkleField::strip_dependencies(const std::vector<RelaxEvent>& strip) const {
    // strip is sorted by time; immediate causes of an event are the latest
    // earlier strip events of its own component and its two ring neighbours.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
    std::vector<int> latest(static_cast<std::size_t>(n_), -1);
    for (std::uint32_t i = 0; i < strip.size(); ++i) {
        int c = strip[i].component;
        int reads[3] = {c, (c + n_ - 1) % n_, (c + 1) % n_};
        for (int r = 0; r < 3; ++r) {
            bool dup = false;
            for (int q = 0; q < r; ++q) dup = dup || reads[q] == reads[r];
            if (dup) continue;
            int j = latest[static_cast<std::size_t>(reads[r])];
            if (j >= 0) edges.push_back({static_cast<std::uint32_t>(j), i});
        }
        latest[static_cast<std::size_t>(c)] = static_cast<int>(i);
    }
    return edges;
}

} // namespace mcsim::parallel
