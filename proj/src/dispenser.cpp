#include "mcsim/dispenser.hpp"

#include <cmath>

namespace mcsim {

namespace {

void check_rate(double r) {
    if (!(r >= 0.0) || !std::isfinite(r))
        throw std::invalid_argument("rate must be finite and non-negative");
}

int last_positive(std::span<const double> rates) {
    for (int i = static_cast<int>(rates.size()) - 1; i >= 0; --i)
        if (rates[static_cast<std::size_t>(i)] > 0) return i;
    throw NoActiveComponents("all rates are zero");
}

} // namespace

int linear_scan_select(std::span<const double> rates, double q) {
    if (!(q >= 0.0) || !(q < 1.0))
        throw std::invalid_argument("linear_scan_select: q must be in [0,1)");
    double total = 0;
    for (double r : rates) {
        check_rate(r);
        total += r;
    }
    if (!(total > 0)) throw NoActiveComponents("linear_scan_select: aggregate rate is zero");
    double theta = total * q;
    double prefix = 0;
    for (std::size_t i = 0; i < rates.size(); ++i) {
        prefix += rates[i];
        if (theta < prefix) return static_cast<int>(i);
    }
    return last_positive(rates); // theta rounded past the final prefix
}

RateTree::RateTree(std::vector<double> rates) {
    n_ = static_cast<int>(rates.size());
    if (n_ == 0) throw std::invalid_argument("RateTree: no components");
    int leaves = 1;
    while (leaves < n_) leaves *= 2;
    leaf_base_ = leaves;
    node_.assign(static_cast<std::size_t>(2 * leaves), 0.0);
    for (int i = 0; i < n_; ++i) {
        check_rate(rates[static_cast<std::size_t>(i)]);
        node_[static_cast<std::size_t>(leaf_base_ + i)] = rates[static_cast<std::size_t>(i)];
    }
    rebuild();
    counters_ = DispenserCounters{}; // construction is not an update
}

void RateTree::rebuild() {
    for (int k = leaf_base_ - 1; k >= 1; --k) {
        node_[static_cast<std::size_t>(k)] =
            node_[static_cast<std::size_t>(2 * k)] + node_[static_cast<std::size_t>(2 * k + 1)];
        ++counters_.node_writes;
    }
    updates_since_rebuild_ = 0;
}

void RateTree::update(int i, double rate) {
    if (i < 0 || i >= n_) throw std::invalid_argument("RateTree::update: component out of range");
    check_rate(rate);
    ++counters_.updates;
    std::size_t k = static_cast<std::size_t>(leaf_base_ + i);
    node_[k] = rate;
    ++counters_.node_writes;
    while (k > 1) {
        k /= 2;
        node_[k] = node_[2 * k] + node_[2 * k + 1];
        ++counters_.node_writes;
    }
    if (++updates_since_rebuild_ >= kRebuildPeriod) {
        rebuild();
        ++counters_.rebuilds;
    }
}

int RateTree::select(double q) {
    if (!(q >= 0.0) || !(q < 1.0))
        throw std::invalid_argument("RateTree::select: q must be in [0,1)");
    double total = node_[1];
    if (!(total > 0)) throw NoActiveComponents("RateTree::select: aggregate rate is zero");
    ++counters_.selects;
    double theta = total * q;
    std::size_t k = 1;
    while (k < static_cast<std::size_t>(leaf_base_)) {
        ++counters_.select_visits;
        double left = node_[2 * k];
        if (theta < left) {
            k = 2 * k;
        } else {
            theta -= left;
            k = 2 * k + 1;
        }
    }
    int i = static_cast<int>(k) - leaf_base_;
    if (i >= n_ || !(node_[k] > 0)) {
        // Rounding drove theta onto a padded or zero-rate leaf; land on the
        // last active component, matching the linear-scan fallback.
        std::span<const double> leaves(node_.data() + leaf_base_, static_cast<std::size_t>(n_));
        return last_positive(leaves);
    }
    return i;
}

void RateTree::corrupt_node_for_testing(std::size_t node, double delta) {
    if (node < 1 || node >= node_.size())
        throw std::invalid_argument("corrupt_node_for_testing: node out of range");
    node_[node] += delta;
}

double RateTree::max_child_sum_error() const {
    double worst = 0;
    for (int k = 1; k < leaf_base_; ++k) {
        double kids = node_[static_cast<std::size_t>(2 * k)] + node_[static_cast<std::size_t>(2 * k + 1)];
        double diff = std::fabs(node_[static_cast<std::size_t>(k)] - kids);
        double scale = std::fabs(kids) > 1.0 ? std::fabs(kids) : 1.0;
        double rel = diff / scale;
        if (rel > worst) worst = rel;
    }
    return worst;
}

RateClassTable::RateClassTable(std::vector<double> class_rates, int n_components) {
    if (class_rates.empty()) throw std::invalid_argument("RateClassTable: no classes");
    for (double r : class_rates) check_rate(r);
    class_rate_ = std::move(class_rates);
    members_.resize(class_rate_.size());
    comp_class_.assign(static_cast<std::size_t>(n_components), -1);
    comp_pos_.assign(static_cast<std::size_t>(n_components), -1);
}

double RateClassTable::total() const {
    double t = 0;
    for (std::size_t c = 0; c < class_rate_.size(); ++c)
        t += class_rate_[c] * static_cast<double>(members_[c].size());
    return t;
}

void RateClassTable::assign(int comp, int cls) {
    if (comp_class_[static_cast<std::size_t>(comp)] != -1)
        throw std::invalid_argument("RateClassTable::assign: component already placed");
    if (cls < 0 || cls >= class_count())
        throw std::invalid_argument("RateClassTable::assign: class out of range");
    auto& m = members_[static_cast<std::size_t>(cls)];
    comp_class_[static_cast<std::size_t>(comp)] = cls;
    comp_pos_[static_cast<std::size_t>(comp)] = static_cast<int>(m.size());
    m.push_back(comp);
}

void RateClassTable::move(int comp, int cls) {
    int old = comp_class_[static_cast<std::size_t>(comp)];
    if (old == -1) throw std::invalid_argument("RateClassTable::move: component never assigned");
    if (cls < 0 || cls >= class_count())
        throw std::invalid_argument("RateClassTable::move: class out of range");
    ++counters_.updates;
    if (old == cls) return;
    // Swap-with-last removal keeps member arrays dense and the move O(1).
    auto& src = members_[static_cast<std::size_t>(old)];
    int pos = comp_pos_[static_cast<std::size_t>(comp)];
    int moved = src.back();
    src[static_cast<std::size_t>(pos)] = moved;
    comp_pos_[static_cast<std::size_t>(moved)] = pos;
    src.pop_back();
    auto& dst = members_[static_cast<std::size_t>(cls)];
    comp_class_[static_cast<std::size_t>(comp)] = cls;
    comp_pos_[static_cast<std::size_t>(comp)] = static_cast<int>(dst.size());
    dst.push_back(comp);
}

int RateClassTable::select(double q_class, double q_member) {
    if (!(q_class >= 0.0) || !(q_class < 1.0) || !(q_member >= 0.0) || !(q_member < 1.0))
        throw std::invalid_argument("RateClassTable::select: draws must be in [0,1)");
    double t = total();
    if (!(t > 0)) throw NoActiveComponents("RateClassTable::select: aggregate rate is zero");
    ++counters_.selects;
    double theta = t * q_class;
    double prefix = 0;
    int chosen = -1;
    for (int c = 0; c < class_count(); ++c) {
        ++counters_.select_visits;
        prefix += class_rate_[static_cast<std::size_t>(c)] *
                  static_cast<double>(members_[static_cast<std::size_t>(c)].size());
        if (theta < prefix) {
            chosen = c;
            break;
        }
    }
    if (chosen == -1) {
        for (int c = class_count() - 1; c >= 0; --c) {
            if (!members_[static_cast<std::size_t>(c)].empty() &&
                class_rate_[static_cast<std::size_t>(c)] > 0) {
                chosen = c;
                break;
            }
        }
        if (chosen == -1) throw NoActiveComponents("RateClassTable::select: aggregate rate is zero");
    }
    const auto& m = members_[static_cast<std::size_t>(chosen)];
    auto idx = static_cast<std::size_t>(q_member * static_cast<double>(m.size()));
    if (idx >= m.size()) idx = m.size() - 1;
    return m[idx];
}

UniformizedSampler::UniformizedSampler(int n, double r_star) : n_(n), r_star_(r_star) {
    if (n <= 0) throw std::invalid_argument("UniformizedSampler: need at least one component");
    if (!(r_star > 0)) throw std::invalid_argument("UniformizedSampler: bound rate must be positive");
}

} // namespace mcsim
