#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mcsim/deposition.hpp"

// Two parallel execution engines over a generic component-graph model, plus a
// single-threaded lockstep emulator used as the determinism oracle.
//
//  * Cautious advancement: every component carries its own Poisson clock;
//    a component fires its next arrival only once every neighbour's published
//    clock has passed that time, so no update ever reads state that could
//    still change.  Non-speculative and deadlock-free.
//  * Synchronous relaxation: time is cut into fixed strips; workers
//    speculatively generate per-component trajectories against the previous
//    iteration's guesses and iterate to a fixed point before committing.
//
// All stochastic draws are keyed by (component, event index) through
// counter-based streams, so re-generation reproduces identical values and
// concurrent workers never share generator state.

namespace mcsim::parallel {

// ---------------------------------------------------------------------------
// Cautious advancement
// ---------------------------------------------------------------------------

// Read-set enforcement handle passed to model updates.  An update must
// announce every component whose state it reads; undeclared reads halt the
// run, since the engine's waiting discipline cannot have protected them.
class NeighborGuard {
public:
    NeighborGuard(int self, const std::vector<int>& sorted_neighbors)
        : self_(self), nbrs_(sorted_neighbors) {}
    void check(int component) const;

private:
    int self_;
    const std::vector<int>& nbrs_;
};

class CautiousModel {
public:
    virtual ~CautiousModel() = default;
    virtual int component_count() const = 0;
    // Declared read set of component i, excluding i itself.  The engine waits
    // on the symmetric closure of this relation so that neither side of any
    // read can be mid-update while the other fires.
    virtual std::vector<int> neighbors(int i) const = 0;
    // Poisson clock rate of component i (> 0).
    virtual double rate(int i) const = 0;
    // Apply event number k (0-based) of component i at time t.
    virtual void apply(int i, std::uint64_t k, double t, const NeighborGuard& guard) = 0;
};

struct CommittedEvent {
    double time = 0;
    int component = 0;
    std::uint64_t index = 0; // per-component event number
    std::uint64_t cycle = 0; // lockstep emulation cycle (1-based); 0 otherwise
};

struct CautiousResult {
    std::vector<CommittedEvent> events; // sorted by (time, component)
    std::uint64_t cycles = 0;           // lockstep only
    std::vector<double> nonwaiting;     // lockstep only: firing fraction per cycle
};

// True when the two runs committed the same events (cycle tags ignored).
bool same_events(const CautiousResult& a, const CautiousResult& b);

// Threaded engine: `workers` threads own contiguous component blocks and
// communicate only through atomically published per-component clocks.
CautiousResult cautious_run(CautiousModel& model, double horizon, int workers,
                            std::uint64_t seed);

// Single-threaded cycle-by-cycle emulation of the same protocol: per cycle,
// every component whose next arrival beats all closure-neighbour clocks (ties
// broken by component id) fires together.  Records per-cycle firing fractions.
CautiousResult lockstep_emulate(CautiousModel& model, double horizon, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synchronous relaxation
// ---------------------------------------------------------------------------

struct RelaxEvent {
    double time = 0;
    int component = 0;
    std::uint64_t payload = 0;
};
bool operator==(const RelaxEvent& a, const RelaxEvent& b);

class RelaxModel {
public:
    virtual ~RelaxModel() = default;
    virtual int component_count() const = 0;
    // Jointly generate the events of components [first, last) over [t0, t1),
    // sorted by time, reading other components' trajectories from `assumed`
    // (one time-sorted list per component, previous iteration's result).
    // Must be a pure function of committed state, stream keys, and the
    // assumed lists outside [first, last).
    virtual std::vector<RelaxEvent> generate(
        int first, int last, double t0, double t1,
        const std::vector<std::vector<RelaxEvent>>& assumed) const = 0;
    // Fold a converged strip (sorted by time then component) into base state.
    virtual void commit(double t0, double t1, const std::vector<RelaxEvent>& strip) = 0;
};

struct RelaxStepStats {
    double t0 = 0;
    double t1 = 0;
    std::uint64_t iterations = 0; // passes that changed something
    std::uint64_t events = 0;
};

struct RelaxResult {
    std::vector<RelaxEvent> events; // merged committed trajectory
    std::vector<RelaxStepStats> steps;
    std::uint64_t max_iterations = 0;
};

// Iterate strips of width dt until each reaches a fixed point, then commit.
// A pass counts toward `iterations` only if it changed some trajectory; the
// final confirming pass is free.  Workers partition components contiguously;
// the committed trajectory is identical for every worker count.  Exceeding
// the iteration cap (default 10*ceil(log2 N) + 16) aborts.
RelaxResult syncrelax_run(RelaxModel& model, double horizon, double dt, int workers,
                          std::uint64_t iteration_cap = 0);

// Number of levels of a strip's event dependency graph: an event's level is
// one more than the deepest of its immediate causes.  Bounds the iteration
// count syncrelax can need for that strip.  Cyclic input halts.
std::uint64_t count_levels(std::size_t n_events,
                           const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges);

// ---------------------------------------------------------------------------
// Reference workloads
// ---------------------------------------------------------------------------

// Ballistic deposition with one component per substrate sector: the canonical
// cautious-advancement workload.  Each sector's clock runs at rate 1 and an
// arrival deposits a disk uniformly inside that sector.
class DepositionRing : public CautiousModel {
public:
    DepositionRing(const deposition::DepositionConfig& cfg, std::uint64_t seed);

    int component_count() const override { return store_.sectors(); }
    std::vector<int> neighbors(int i) const override;
    double rate(int) const override { return 1.0; }
    void apply(int i, std::uint64_t k, double t, const NeighborGuard& guard) override;

    // Committed disks in engine order, with arrival times.
    deposition::Trajectory merged(const CautiousResult& run) const;
    const deposition::SectorStore& store() const { return store_; }

private:
    struct Drop {
        double time;
        deposition::Particle p;
    };
    deposition::SectorStore store_;
    std::uint64_t seed_;
    std::vector<std::vector<Drop>> log_; // per sector, in that sector's order
};

// Fully independent Poisson streams: payloads never read other components.
// Relaxation settles every strip in one pass.
class DecoupledStreams : public RelaxModel {
public:
    DecoupledStreams(int n, double rate, std::uint64_t seed);
    int component_count() const override { return n_; }
    std::vector<RelaxEvent> generate(int first, int last, double t0, double t1,
                                     const std::vector<std::vector<RelaxEvent>>&) const override;
    void commit(double t0, double t1, const std::vector<RelaxEvent>& strip) override;

private:
    int n_;
    double rate_;
    std::uint64_t seed_;
    std::vector<double> last_time_;
    std::vector<std::uint64_t> next_index_;
};

// A single token hopping component-to-component at a fixed cadence; each
// hop's payload folds in the previous hop's.  With one component per worker a
// strip containing H hops needs exactly H relaxation passes: the constructed
// worst case for speculative execution.
class ChainRelay : public RelaxModel {
public:
    ChainRelay(int n, double hop_dt, std::uint64_t seed);
    int component_count() const override { return n_; }
    std::vector<RelaxEvent> generate(int first, int last, double t0, double t1,
                                     const std::vector<std::vector<RelaxEvent>>& assumed) const override;
    void commit(double t0, double t1, const std::vector<RelaxEvent>& strip) override;

    // Hop times are intrinsic: how many land inside [t0, t1)?
    std::uint64_t hops_inside(double t0, double t1) const;
    // Dependency edges between strip events (consecutive hops).
    std::vector<std::pair<std::uint32_t, std::uint32_t>>
    strip_dependencies(const std::vector<RelaxEvent>& strip) const;

private:
    std::uint64_t payload_at(std::uint64_t hop, std::uint64_t prev_payload) const;
    int n_;
    double hop_dt_;
    std::uint64_t seed_;
    std::uint64_t next_hop_ = 0;
    std::uint64_t last_payload_;
};

// Ring of components with intrinsic Poisson arrivals whose payloads hash the
// latest payload seen on each ring neighbour: a randomly sprinkled event
// dependency graph with tunable density.
class SprinkleField : public RelaxModel {
public:
    SprinkleField(int n, double rate, std::uint64_t seed);
    int component_count() const override { return n_; }
    std::vector<RelaxEvent> generate(int first, int last, double t0, double t1,
                                     const std::vector<std::vector<RelaxEvent>>& assumed) const override;
    void commit(double t0, double t1, const std::vector<RelaxEvent>& strip) override;

    // Immediate-cause edges of a committed strip: own previous event and the
    // latest earlier event on each ring neighbour, when inside the strip.
    std::vector<std::pair<std::uint32_t, std::uint32_t>>
    strip_dependencies(const std::vector<RelaxEvent>& strip) const;

private:
    std::uint64_t payload_for(int i, std::uint64_t k, std::uint64_t own,
                              std::uint64_t left, std::uint64_t right) const;
    int n_;
    double rate_;
    std::uint64_t seed_;
    std::vector<double> last_time_;
    std::vector<std::uint64_t> next_index_;
    std::vector<std::uint64_t> last_payload_;
};

} // namespace mcsim::parallel
