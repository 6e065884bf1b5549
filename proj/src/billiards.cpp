#include "mcsim/billiards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mcsim/event_core.hpp"
#include "mcsim/random.hpp"

namespace mcsim::billiards {

namespace {

constexpr double kOverlapTol = 1e-9;

// Scheduling key: committed order is (time, subject, kind rank), which also
// settles exact-time ties deterministically.  Pair events outrank
// advancements at the same instant so contacts are never starved.
struct EventKey {
    double t;
    int subject;
    int rank;
    bool operator<(const EventKey& o) const {
        if (t != o.t) return t < o.t;
        if (subject != o.subject) return subject < o.subject;
        return rank < o.rank;
    }
    bool operator!=(const EventKey& o) const {
        return t != o.t || subject != o.subject || rank != o.rank;
    }
};

int rank_of(EventKind k) { return static_cast<int>(k); }

void validate_initial(const GutterConfig& cfg, std::span<const Ball> init) {
    if (cfg.n <= 0) throw std::invalid_argument("billiards: need at least one ball");
    if (static_cast<int>(init.size()) != cfg.n)
        throw std::invalid_argument("billiards: ball count does not match configuration");
    if (!(cfg.x_right > cfg.x_left)) throw std::invalid_argument("billiards: empty gutter");
    if (!(cfg.d0 > 0)) throw std::invalid_argument("billiards: diameter must be positive");
    if (cfg.growth < 0) throw std::invalid_argument("billiards: negative growth");
    for (int i = 0; i + 1 < cfg.n; ++i) {
        double gap = init[static_cast<std::size_t>(i + 1)].x - init[static_cast<std::size_t>(i)].x - cfg.d0;
        if (gap < -kOverlapTol)
            throw std::invalid_argument("billiards: initial balls overlap");
    }
    if (init.front().x - cfg.d0 / 2 < cfg.x_left - kOverlapTol ||
        init.back().x + cfg.d0 / 2 > cfg.x_right + kOverlapTol)
        throw std::invalid_argument("billiards: initial balls penetrate a wall");
}

// Wall-contact predictions, anchored on the ball's stored state so that all
// schedulers compute bit-identical times from identical committed states.
std::optional<double> predict_wall_left(const GutterConfig& cfg, const Ball& b, double now) {
    double slope = b.v - cfg.growth / 2; // d(left edge)/dt
    double intercept = (b.x - b.v * b.last_update) - cfg.d0 / 2;
    double gap_now = intercept + slope * now - cfg.x_left;
    if (gap_now < -kOverlapTol) throw std::logic_error("billiards: ball overlaps the left wall");
    if (!(slope < 0)) return std::nullopt;
    return (cfg.x_left - intercept) / slope;
}

std::optional<double> predict_wall_right(const GutterConfig& cfg, const Ball& b, double now) {
    double slope = b.v + cfg.growth / 2; // d(right edge)/dt
    double intercept = (b.x - b.v * b.last_update) + cfg.d0 / 2;
    double gap_now = cfg.x_right - (intercept + slope * now);
    if (gap_now < -kOverlapTol) throw std::logic_error("billiards: ball overlaps the right wall");
    if (!(slope > 0)) return std::nullopt;
    return (cfg.x_right - intercept) / slope;
}

struct Engine {
    const GutterConfig& cfg;
    std::vector<Ball> balls;
    RunResult out;
    double horizon;
    std::uint64_t max_events;
    double t_jam = std::numeric_limits<double>::infinity();

    Engine(const GutterConfig& c, std::span<const Ball> init, double hor, std::uint64_t maxev)
        : cfg(c), balls(init.begin(), init.end()), horizon(hor), max_events(maxev) {
        validate_initial(c, init);
        if (!(hor >= 0)) throw std::invalid_argument("billiards: negative horizon");
        if (c.growth > 0) t_jam = jam_time(c);
    }

    double committed() const { return out.events.empty() ? 0.0 : out.events.back().time; }

    std::optional<double> predict_pair(int i, double now) const {
        return predict_pair_collision(balls[static_cast<std::size_t>(i)],
                                      balls[static_cast<std::size_t>(i + 1)], cfg.d0, cfg.growth, now);
    }

    // Stop rule shared by both event-driven schedulers.  Returns true when
    // the run is over (horizon reached or jam detected).
    bool stops_before(double t_next) {
        if (t_next > horizon) {
            finish(horizon);
            return true;
        }
        if (cfg.growth > 0 && t_next > t_jam) {
            out.jammed = true;
            out.jam_time = t_jam;
            finish(committed());
            return true;
        }
        return false;
    }

    bool jam_by_free_length(double t) {
        if (cfg.growth <= 0) return false;
        double span = cfg.x_right - cfg.x_left;
        if (span - cfg.n * cfg.diameter(t) <= 1e-9 * span) {
            out.jammed = true;
            out.jam_time = t_jam;
            finish(committed());
            return true;
        }
        return false;
    }

    void finish(double t) {
        out.stop_time = t;
        for (auto& b : balls) b = free_advance(b, std::max(t, b.last_update));
        out.final_balls = balls;
    }

    void commit(double t, int subject, EventKind kind) {
        // Guard against sub-tolerance backward rounding of predicted times.
        double tc = std::max(t, committed());
        if (t < committed() - kOverlapTol)
            throw std::logic_error("billiards: committed time would move backwards");
        out.events.push_back({tc, subject, kind});
        if (kind == EventKind::Advance)
            ++out.advancement_count;
        else
            ++out.collision_count;
    }

    // Apply a physical event: re-anchor the touched balls at t and change
    // velocities.  Advancement events never pass through here, so anchors in
    // both schedulers only ever sit at physical events and all downstream
    // predictions agree bit-for-bit.
    void apply_pair(int i, double t) {
        Ball& l = balls[static_cast<std::size_t>(i)];
        Ball& r = balls[static_cast<std::size_t>(i + 1)];
        double closing = l.v - r.v + cfg.growth;
        l = free_advance(l, t);
        r = free_advance(r, t);
        resolve_collision(l, r);
        if (cfg.growth > 0 && 2 * cfg.growth - closing >= 0)
            throw std::runtime_error(
                "billiards: growth-bound violation (pair still closing after exchange)");
    }

    void apply_wall(int i, double t, bool left) {
        Ball& b = balls[static_cast<std::size_t>(i)];
        b = free_advance(b, t);
        b.v = -b.v;
        if (cfg.growth > 0) {
            bool still = left ? (b.v - cfg.growth / 2 < 0) : (b.v + cfg.growth / 2 > 0);
            if (still)
                throw std::runtime_error(
                    "billiards: growth-bound violation (ball still closing on the wall)");
        }
    }
};

} // namespace

Ball free_advance(const Ball& b, double t) {
    if (t < b.last_update)
        throw std::invalid_argument("free_advance: cannot move a ball into its past");
    return Ball{b.x + b.v * (t - b.last_update), b.v, t};
}

std::optional<double> predict_pair_collision(const Ball& left, const Ball& right,
                                             double d0, double growth, double now) {
    // gap(t) = A - closing * t with anchor-based intercept A, so the result
    // depends only on the stored states, never on when it is evaluated.
    double closing = left.v - right.v + growth;
    double a = (right.x - right.v * right.last_update) -
               (left.x - left.v * left.last_update) - d0;
    double gap_now = a - closing * now;
    if (gap_now < -kOverlapTol)
        throw std::logic_error("billiards: balls overlap (negative gap)");
    if (!(closing > 0)) return std::nullopt;
    return a / closing;
}

void resolve_collision(Ball& left, Ball& right) {
    if (left.last_update != right.last_update)
        throw std::invalid_argument("resolve_collision: balls not at a common time");
    std::swap(left.v, right.v); // equal masses: elastic exchange
}

double jam_time(const GutterConfig& cfg) {
    if (!(cfg.growth > 0)) return std::numeric_limits<double>::infinity();
    return ((cfg.x_right - cfg.x_left) - cfg.n * cfg.d0) / (cfg.n * cfg.growth);
}

std::string event_kind_name(EventKind k) {
    switch (k) {
    case EventKind::WallLeft: return "wall_left";
    case EventKind::Pair: return "pair";
    case EventKind::WallRight: return "wall_right";
    case EventKind::Advance: return "advance";
    }
    return "?";
}

std::vector<Committed> physical_events(const std::vector<Committed>& log) {
    std::vector<Committed> out;
    for (const auto& e : log)
        if (e.kind != EventKind::Advance) out.push_back(e);
    return out;
}

std::vector<Ball> random_initial(const GutterConfig& cfg, std::uint64_t seed) {
    double span = cfg.x_right - cfg.x_left;
    double spacing = span / (cfg.n + 1);
    if (spacing <= cfg.d0)
        throw std::invalid_argument("random_initial: gutter too crowded for even spacing");
    auto rng = RandomStream::keyed(seed, 0xB177ull);
    std::vector<Ball> balls(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
        balls[static_cast<std::size_t>(i)].x = cfg.x_left + spacing * (i + 1);
        balls[static_cast<std::size_t>(i)].v = rng.range(-1.0, 1.0);
        balls[static_cast<std::size_t>(i)].last_update = 0;
    }
    return balls;
}

// ---------------------------------------------------------------------------
// Anticipatory scheduler: every gap (wall|ball, ball|ball, ball|wall) keeps
// its current prediction in an indexed heap.  A committed event re-predicts
// only the gaps that share a ball with it, so the next-best candidate of a
// preempted pair is already in place.
// ---------------------------------------------------------------------------

RunResult run_anticipatory(const GutterConfig& cfg, std::span<const Ball> init,
                           double horizon, std::uint64_t max_events) {
    Engine eng(cfg, init, horizon, max_events);
    const int n = cfg.n;
    // Slots: 0..n-2 adjacent pairs, n-1 left wall, n right wall.
    const int slot_wall_left = n - 1 >= 0 ? n - 1 : 0;
    const int slot_wall_right = n;
    IndexedMinHeap<EventKey> gaps(n + 1);

    auto refresh_pair = [&](int i, double now) {
        if (i < 0 || i >= n - 1) return;
        auto t = eng.predict_pair(i, now);
        if (t)
            gaps.set(i, EventKey{*t, i, rank_of(EventKind::Pair)});
        else
            gaps.erase(i);
    };
    auto refresh_walls = [&](double now) {
        auto tl = predict_wall_left(cfg, eng.balls.front(), now);
        if (tl)
            gaps.set(slot_wall_left, EventKey{*tl, 0, rank_of(EventKind::WallLeft)});
        else
            gaps.erase(slot_wall_left);
        auto tr = predict_wall_right(cfg, eng.balls.back(), now);
        if (tr)
            gaps.set(slot_wall_right, EventKey{*tr, n - 1, rank_of(EventKind::WallRight)});
        else
            gaps.erase(slot_wall_right);
    };

    for (int i = 0; i < n - 1; ++i) refresh_pair(i, 0.0);
    refresh_walls(0.0);

    while (!gaps.empty() && eng.out.events.size() < max_events) {
        auto [slot, key] = gaps.min();
        if (eng.stops_before(key.t)) return eng.out;
        if (key.rank == rank_of(EventKind::Pair)) {
            eng.apply_pair(slot, key.t);
            eng.commit(key.t, slot, EventKind::Pair);
            double now = eng.committed();
            refresh_pair(slot - 1, now);
            refresh_pair(slot, now);
            refresh_pair(slot + 1, now);
            if (slot == 0 || slot + 1 == n - 1) refresh_walls(now);
        } else {
            bool left = key.rank == rank_of(EventKind::WallLeft);
            int ball = left ? 0 : n - 1;
            eng.apply_wall(ball, key.t, left);
            eng.commit(key.t, ball, left ? EventKind::WallLeft : EventKind::WallRight);
            double now = eng.committed();
            refresh_pair(left ? 0 : n - 2, now);
            refresh_walls(now);
        }
        if (eng.jam_by_free_length(eng.committed())) return eng.out;
    }
    eng.finish(eng.out.events.size() >= max_events ? eng.committed() : horizon);
    return eng.out;
}

// ---------------------------------------------------------------------------
// Lazy scheduler: exactly one pending event per ball.  A collision event is
// held symmetrically by both partners; when a better collision preempts one
// partner, the abandoned partner receives an advancement event at the
// discarded collision's time and re-plans when it fires.  Pairing is allowed
// only when the new collision's key beats the partner's current event, which
// makes the committed physical order identical to the anticipatory one.
// ---------------------------------------------------------------------------

namespace {

struct BallEvent {
    EventKey key{};
    EventKind kind = EventKind::Advance;
    int partner = -1; // other ball for Pair events
};

struct LazyState {
    Engine& eng;
    IndexedMinHeap<EventKey> heap;
    std::vector<BallEvent> ev;
    bool& any_pairing; // set when reschedule pairs two balls

    LazyState(Engine& e, bool& flag)
        : eng(e), heap(e.cfg.n), ev(static_cast<std::size_t>(e.cfg.n)), any_pairing(flag) {}

    void set_event(int ball, BallEvent be) {
        ev[static_cast<std::size_t>(ball)] = be;
        heap.set(ball, be.key);
    }

    void park(int ball) { heap.erase(ball); }

    // Give `ball` an advancement at the discarded event time.
    void demote_to_advance(int ball, double t) {
        set_event(ball, BallEvent{EventKey{t, ball, rank_of(EventKind::Advance)},
                                  EventKind::Advance, -1});
        eng.out.advance_log.push_back({t, ball, EventKind::Advance});
    }

    void reschedule(int ball, double now) {
        // A ball re-planned while holding a symmetric pair abandons its
        // partner unless the new plan keeps that same pair; the abandoned
        // partner advances at the discarded collision time.
        int old_partner = -1;
        double old_t = 0;
        if (heap.contains(ball)) {
            const BallEvent& cur = ev[static_cast<std::size_t>(ball)];
            if (cur.kind == EventKind::Pair) {
                old_partner = cur.partner;
                old_t = cur.key.t;
            }
        }
        auto abandon_old = [&](int kept) {
            if (old_partner >= 0 && old_partner != kept) demote_to_advance(old_partner, old_t);
        };

        const int n = eng.cfg.n;
        bool have = false;
        EventKey best{};
        EventKind best_kind = EventKind::Advance;
        int best_partner = -1;

        auto consider = [&](EventKey k, EventKind kind, int partner) {
            if (!have || k < best) {
                have = true;
                best = k;
                best_kind = kind;
                best_partner = partner;
            }
        };

        if (ball == 0) {
            auto t = predict_wall_left(eng.cfg, eng.balls.front(), now);
            if (t) consider(EventKey{*t, 0, rank_of(EventKind::WallLeft)}, EventKind::WallLeft, -1);
        } else {
            auto t = eng.predict_pair(ball - 1, now);
            if (t) consider(EventKey{*t, ball - 1, rank_of(EventKind::Pair)}, EventKind::Pair, ball - 1);
        }
        if (ball == n - 1) {
            auto t = predict_wall_right(eng.cfg, eng.balls.back(), now);
            if (t) consider(EventKey{*t, n - 1, rank_of(EventKind::WallRight)}, EventKind::WallRight, -1);
        } else {
            auto t = eng.predict_pair(ball, now);
            if (t) consider(EventKey{*t, ball, rank_of(EventKind::Pair)}, EventKind::Pair, ball + 1);
        }

        if (!have) {
            park(ball); // nothing ahead: neighbours will re-engage this ball
            abandon_old(-1);
            return;
        }
        if (best_kind != EventKind::Pair) {
            set_event(ball, BallEvent{best, best_kind, -1});
            abandon_old(-1);
            return;
        }

        int j = best_partner;
        const BallEvent& je = ev[static_cast<std::size_t>(j)];
        bool j_active = heap.contains(j);
        bool j_holds_us = j_active && je.kind == EventKind::Pair && je.partner == ball;
        if (!j_active || j_holds_us || best < je.key) {
            if (j_active && !j_holds_us && je.kind == EventKind::Pair) {
                // Preemption: the partner abandoned by j advances at the
                // discarded collision's time.
                int orphan = je.partner;
                demote_to_advance(orphan, je.key.t);
            }
            BallEvent pair_ev{best, EventKind::Pair, -1};
            pair_ev.partner = j;
            set_event(ball, pair_ev);
            pair_ev.partner = ball;
            set_event(j, pair_ev);
            any_pairing = true;
            abandon_old(j);
        } else {
            // Partner is busy earlier: come back at the predicted contact
            // time and re-plan from there.
            demote_to_advance(ball, best.t);
            abandon_old(-1);
        }
    }
};

} // namespace

RunResult run_lazy(const GutterConfig& cfg, std::span<const Ball> init,
                   double horizon, std::uint64_t max_events) {
    Engine eng(cfg, init, horizon, max_events);
    bool pairing_flag = false;
    LazyState st(eng, pairing_flag);

    // Every ball plans once; a ball already paired passively by a lower-index
    // neighbour re-plans with its own candidates (it may hold an earlier wall
    // hit) and demotes the abandoned partner if it switches away.
    for (int i = 0; i < cfg.n; ++i) st.reschedule(i, 0.0);

    while (!st.heap.empty() && eng.out.events.size() < max_events) {
        auto [ball, key] = st.heap.min();
        if (eng.stops_before(key.t)) return eng.out;
        BallEvent be = st.ev[static_cast<std::size_t>(ball)];
        switch (be.kind) {
        case EventKind::Advance: {
            // Bookkeeping only: the ball re-plans; its anchor is untouched so
            // later predictions match the anticipatory scheduler exactly.
            eng.commit(key.t, ball, EventKind::Advance);
            st.park(ball);
            st.reschedule(ball, eng.committed());
            break;
        }
        case EventKind::WallLeft:
        case EventKind::WallRight: {
            bool left = be.kind == EventKind::WallLeft;
            eng.apply_wall(ball, key.t, left);
            eng.commit(key.t, ball, be.kind);
            st.park(ball);
            st.reschedule(ball, eng.committed());
            break;
        }
        case EventKind::Pair: {
            int a = std::min(ball, be.partner);
            int b = std::max(ball, be.partner);
            eng.apply_pair(a, key.t);
            eng.commit(key.t, a, EventKind::Pair);
            st.park(a);
            st.park(b);
            double now = eng.committed();
            st.reschedule(a, now);
            // a's reschedule may already have re-paired with b.
            if (!(st.heap.contains(b) && st.ev[static_cast<std::size_t>(b)].kind == EventKind::Pair &&
                  st.ev[static_cast<std::size_t>(b)].partner == a))
                st.reschedule(b, now);
            break;
        }
        }
        if (eng.jam_by_free_length(eng.committed())) return eng.out;
    }
    eng.finish(eng.out.events.size() >= max_events ? eng.committed() : horizon);
    return eng.out;
}

// ---------------------------------------------------------------------------
// Fixed-step reference.
// ---------------------------------------------------------------------------

RunResult run_timedriven(const GutterConfig& cfg, std::span<const Ball> init,
                         double dt, double horizon) {
    validate_initial(cfg, init);
    if (!(dt > 0)) throw std::invalid_argument("run_timedriven: dt must be positive");
    RunResult out;
    std::vector<Ball> balls(init.begin(), init.end());
    const int n = cfg.n;
    std::vector<double> gap_start(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<char> touched(static_cast<std::size_t>(n), 0);

    timedriven_run(dt, horizon, [&](double t_end) {
        // Gap signs at the start of the step (index 0: left wall, i: pair
        // (i-1,i), n: right wall).
        double t_start = balls[0].last_update;
        double d_start = cfg.diameter(t_start);
        gap_start[0] = (balls[0].x - d_start / 2) - cfg.x_left;
        for (int i = 1; i < n; ++i)
            gap_start[static_cast<std::size_t>(i)] =
                balls[static_cast<std::size_t>(i)].x - balls[static_cast<std::size_t>(i - 1)].x - d_start;
        gap_start[static_cast<std::size_t>(n)] =
            cfg.x_right - (balls[static_cast<std::size_t>(n - 1)].x + d_start / 2);

        for (auto& b : balls) b = free_advance(b, t_end);
        std::fill(touched.begin(), touched.end(), 0);
        double d_end = cfg.diameter(t_end);

        // Pair exchanges where the gap sign flipped during this step; at most
        // one collision per ball per step.
        for (int i = 0; i + 1 < n; ++i) {
            if (touched[static_cast<std::size_t>(i)] || touched[static_cast<std::size_t>(i + 1)]) continue;
            double gap_end = balls[static_cast<std::size_t>(i + 1)].x - balls[static_cast<std::size_t>(i)].x - d_end;
            if (gap_end < 0 && gap_start[static_cast<std::size_t>(i + 1)] >= 0) {
                resolve_collision(balls[static_cast<std::size_t>(i)], balls[static_cast<std::size_t>(i + 1)]);
                touched[static_cast<std::size_t>(i)] = touched[static_cast<std::size_t>(i + 1)] = 1;
                out.events.push_back({t_end, i, EventKind::Pair});
                ++out.collision_count;
            }
        }
        if (!touched[0]) {
            double ge = (balls[0].x - d_end / 2) - cfg.x_left;
            if (ge < 0 && gap_start[0] >= 0 && balls[0].v < 0) {
                balls[0].v = -balls[0].v;
                out.events.push_back({t_end, 0, EventKind::WallLeft});
                ++out.collision_count;
            }
        }
        if (!touched[static_cast<std::size_t>(n - 1)]) {
            double ge = cfg.x_right - (balls[static_cast<std::size_t>(n - 1)].x + d_end / 2);
            if (ge < 0 && gap_start[static_cast<std::size_t>(n)] >= 0 &&
                balls[static_cast<std::size_t>(n - 1)].v > 0) {
                balls[static_cast<std::size_t>(n - 1)].v = -balls[static_cast<std::size_t>(n - 1)].v;
                out.events.push_back({t_end, n - 1, EventKind::WallRight});
                ++out.collision_count;
            }
        }
    });
    out.stop_time = horizon;
    for (auto& b : balls) b = free_advance(b, horizon);
    out.final_balls = balls;
    return out;
}

} // namespace mcsim::billiards
