#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace mcsim {

using SimTime = double;

// Raised when an operation would move simulated time backwards.
struct CausalityViolation : std::logic_error {
    using std::logic_error::logic_error;
};

template <class Payload>
struct EventDescriptor {
    SimTime time = 0;
    int subject = 0;
    Payload payload{};
};

// Pending-event container: binary min-heap ordered by (time, subject,
// insertion order), so equal-time events pop in a reproducible order.
// Committed time advances monotonically with every pop; inserting into the
// past is rejected.
template <class Payload>
class EventQueue {
public:
    using Event = EventDescriptor<Payload>;

    void insert(Event ev) {
        if (ev.time < committed_)
            throw CausalityViolation("EventQueue::insert: event time precedes committed time");
        heap_.push_back(Entry{ev.time, ev.subject, next_seq_++, std::move(ev.payload)});
        sift_up(heap_.size() - 1);
    }

    // Distinct no-pending-events condition: returns nullopt, never throws.
    std::optional<Event> pop_min() {
        if (heap_.empty()) return std::nullopt;
        Entry top = std::move(heap_.front());
        heap_.front() = std::move(heap_.back());
        heap_.pop_back();
        if (!heap_.empty()) sift_down(0);
        committed_ = top.time;
        return Event{top.time, top.subject, std::move(top.payload)};
    }

    const Event* peek() const {
        if (heap_.empty()) return nullptr;
        peeked_ = Event{heap_.front().time, heap_.front().subject, heap_.front().payload};
        return &peeked_;
    }

    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    SimTime committed_time() const { return committed_; }

private:
    struct Entry {
        SimTime time;
        int subject;
        std::uint64_t seq;
        Payload payload;
        bool operator<(const Entry& o) const {
            if (time != o.time) return time < o.time;
            if (subject != o.subject) return subject < o.subject;
            return seq < o.seq;
        }
    };

    void sift_up(std::size_t i) {
        while (i > 0) {
            std::size_t p = (i - 1) / 2;
            if (!(heap_[i] < heap_[p])) break;
            std::swap(heap_[i], heap_[p]);
            i = p;
        }
    }

    void sift_down(std::size_t i) {
        for (;;) {
            std::size_t l = 2 * i + 1, r = l + 1, m = i;
            if (l < heap_.size() && heap_[l] < heap_[m]) m = l;
            if (r < heap_.size() && heap_[r] < heap_[m]) m = r;
            if (m == i) break;
            std::swap(heap_[i], heap_[m]);
            i = m;
        }
    }

    std::vector<Entry> heap_;
    std::uint64_t next_seq_ = 0;
    SimTime committed_ = 0;
    mutable Event peeked_{};
};

// Min-heap over a fixed set of slots [0, n).  Each slot holds at most one
// key; keys can be replaced or erased in O(log n).  Ties on equal keys break
// toward the smaller slot index.  Used by schedulers that keep exactly one
// pending event per ball/component.
template <class Key>
class IndexedMinHeap {
public:
    explicit IndexedMinHeap(int n) : pos_(static_cast<std::size_t>(n), -1) {}

    bool contains(int slot) const { return pos_[slot] >= 0; }

    const Key& key_of(int slot) const {
        if (pos_[slot] < 0) throw std::logic_error("IndexedMinHeap: slot not present");
        return heap_[static_cast<std::size_t>(pos_[slot])].key;
    }

    void set(int slot, Key key) {
        if (pos_[slot] >= 0) {
            auto i = static_cast<std::size_t>(pos_[slot]);
            heap_[i].key = std::move(key);
            if (!sift_up(i)) sift_down(i);
        } else {
            pos_[slot] = static_cast<int>(heap_.size());
            heap_.push_back(Node{std::move(key), slot});
            sift_up(heap_.size() - 1);
        }
    }

    void erase(int slot) {
        if (pos_[slot] < 0) return;
        auto i = static_cast<std::size_t>(pos_[slot]);
        pos_[slot] = -1;
        if (i + 1 != heap_.size()) {
            heap_[i] = std::move(heap_.back());
            pos_[heap_[i].slot] = static_cast<int>(i);
            heap_.pop_back();
            if (!sift_up(i)) sift_down(i);
        } else {
            heap_.pop_back();
        }
    }

    bool empty() const { return heap_.empty(); }

    std::pair<int, Key> min() const {
        if (heap_.empty()) throw std::logic_error("IndexedMinHeap: empty");
        return {heap_[0].slot, heap_[0].key};
    }

private:
    struct Node {
        Key key;
        int slot;
        bool less(const Node& o) const {
            if (key != o.key) return key < o.key;
            return slot < o.slot;
        }
    };

    bool sift_up(std::size_t i) {
        bool moved = false;
        while (i > 0) {
            std::size_t p = (i - 1) / 2;
            if (!heap_[i].less(heap_[p])) break;
            swap_nodes(i, p);
            i = p;
            moved = true;
        }
        return moved;
    }

    void sift_down(std::size_t i) {
        for (;;) {
            std::size_t l = 2 * i + 1, r = l + 1, m = i;
            if (l < heap_.size() && heap_[l].less(heap_[m])) m = l;
            if (r < heap_.size() && heap_[r].less(heap_[m])) m = r;
            if (m == i) break;
            swap_nodes(i, m);
            i = m;
        }
    }

    void swap_nodes(std::size_t a, std::size_t b) {
        std::swap(heap_[a], heap_[b]);
        pos_[heap_[a].slot] = static_cast<int>(a);
        pos_[heap_[b].slot] = static_cast<int>(b);
    }

    std::vector<Node> heap_;
    std::vector<int> pos_;
};

// Incrementally maintained statistic.  Event handlers apply deltas as the
// events they describe are committed; query() is O(1) where a lazy rescan of
// the whole state would be O(N).  Cross-checks against such rescans are the
// intended validation path.
class MaintainedCounter {
public:
    void apply(long long delta) { value_ += delta; }
    long long value() const { return value_; }
    void reset(long long v = 0) { value_ = v; }

private:
    long long value_ = 0;
};

// Fixed-step driver: calls step(t_end) for each step boundary until the
// horizon is covered.  The final step is shortened to land exactly on the
// horizon.
template <class StepFn>
void timedriven_run(double dt, double horizon, StepFn&& step) {
    if (!(dt > 0)) throw std::invalid_argument("timedriven_run: dt must be positive");
    if (horizon < 0) throw std::invalid_argument("timedriven_run: negative horizon");
    double t = 0;
    while (t < horizon) {
        double next = t + dt;
        if (next > horizon) next = horizon;
        step(next);
        t = next;
    }
}

} // namespace mcsim
