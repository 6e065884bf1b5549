#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcsim::billiards {

// A ball stores its kinematic state at the instant it was last touched;
// positions elsewhere follow from straight-line motion.
struct Ball {
    double x = 0;
    double v = 0;
    double last_update = 0;
};

struct GutterConfig {
    int n = 0;            // ball count
    double x_left = 0;    // wall positions
    double x_right = 0;
    double d0 = 0;        // ball diameter at t = 0
    double growth = 0;    // diameter growth rate (swelling mode when > 0)

    double diameter(double t) const { return d0 + growth * t; }
};

enum class EventKind : int {
    WallLeft = 0,  // ball 0 against the left wall
    Pair = 1,      // balls (subject, subject+1) exchange velocities
    WallRight = 2, // ball n-1 against the right wall
    Advance = 3,   // bookkeeping: reposition one ball, no velocity change
};

// Committed log row.  subject = left ball of a pair, else the ball itself.
struct Committed {
    double time = 0;
    int subject = 0;
    EventKind kind = EventKind::Pair;
};

struct RunResult {
    std::vector<Committed> events;       // committed order, advances included
    std::vector<Ball> final_balls;       // advanced to the stop time
    double stop_time = 0;
    bool jammed = false;
    double jam_time = 0;
    std::uint64_t advancement_count = 0; // committed bookkeeping events
    std::uint64_t collision_count = 0;   // physical events only
    // Every advancement assignment the lazy scheduler made (time, ball),
    // including ones replaced by a better collision before they fired.
    std::vector<Committed> advance_log;
};

// Straight-line motion to time t (>= the ball's last update).
Ball free_advance(const Ball& b, double t);

// Earliest future contact between a left ball and its right neighbour,
// diameters growing at `growth`.  nullopt when the gap never closes.
// A negative gap at `now` beyond tolerance is an overlap and halts.
std::optional<double> predict_pair_collision(const Ball& left, const Ball& right,
                                             double d0, double growth, double now);

// Elastic equal-mass exchange: the balls swap velocities, positions stay.
void resolve_collision(Ball& left, Ball& right);

// Event-driven engine, anticipatory scheduling: all gap predictions are kept
// current in an indexed heap, so a preempted pair's next-best candidate is
// already ranked.
RunResult run_anticipatory(const GutterConfig& cfg, std::span<const Ball> init,
                           double horizon, std::uint64_t max_events = UINT64_MAX);

// Event-driven engine, lazy scheduling: one pending event per ball.  A ball
// whose scheduled partner gets preempted receives an advancement event at the
// discarded collision time and re-plans when it fires.
RunResult run_lazy(const GutterConfig& cfg, std::span<const Ball> init,
                   double horizon, std::uint64_t max_events = UINT64_MAX);

// Fixed-step reference: advance everything by dt, then resolve any adjacent
// pair whose gap sign flipped during the step (at most one collision per
// ball per step), then wall reflections.
RunResult run_timedriven(const GutterConfig& cfg, std::span<const Ball> init,
                         double dt, double horizon);

// Physical rows only (pair + wall), for cross-scheduler comparison.
std::vector<Committed> physical_events(const std::vector<Committed>& log);

// Seeded initial condition helper: n balls spread over the gutter with
// velocities uniform in [-1, 1].
std::vector<Ball> random_initial(const GutterConfig& cfg, std::uint64_t seed);

// Analytic jamming instant for swelling mode: free length hits zero.
double jam_time(const GutterConfig& cfg);

std::string event_kind_name(EventKind k);

} // namespace mcsim::billiards
