#pragma once

// Fixed-capacity reservoir sample over the stream of all past training
// examples, with uniform with-replacement batch sampling and class inventory.

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "tfcsr/dataset.hpp"
#include "tfcsr/rng.hpp"

namespace tfcsr {

struct BufferItem {
    Tensor input;  // per-example shape
    int label = 0;
    int task_id = 0;
};

struct BufferSnapshot {
    std::size_t capacity = 0;
    std::size_t resident = 0;
    std::size_t seen_count = 0;
    std::map<int, std::size_t> class_counts;
    std::map<int, std::size_t> task_counts;
};

class ReservoirBuffer {
public:
    // The seed owns the buffer's insertion stream (Algorithm R decisions).
    ReservoirBuffer(std::size_t capacity, std::uint64_t seed);

    // One reservoir insertion: append while under capacity, afterwards
    // replace a uniformly random slot with probability capacity/seen_count.
    void add(Tensor input, int label, int task_id);

    // Every training example of the experience, in dataset order.
    void add_all(const TaskExperience& experience);

    // n items drawn uniformly with replacement from the resident items.
    // Throws std::runtime_error when the buffer is empty.
    Batch sample(std::size_t n, Rng& rng) const;

    std::set<int> classes_present() const;

    bool is_sufficient(std::size_t min_items) const { return items_.size() >= min_items; }

    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t seen_count() const { return seen_; }
    const std::vector<BufferItem>& items() const { return items_; }

    BufferSnapshot snapshot() const;

private:
    std::size_t capacity_;
    std::size_t seen_ = 0;
    std::vector<BufferItem> items_;
    Rng rng_;
};

}  // namespace tfcsr
