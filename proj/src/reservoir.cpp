#include "tfcsr/reservoir.hpp"

#include <stdexcept>

namespace tfcsr {

ReservoirBuffer::ReservoirBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
    if (capacity == 0) throw std::invalid_argument("reservoir: capacity must be >= 1");
}

void ReservoirBuffer::add(Tensor input, int label, int task_id) {
    ++seen_;
    if (items_.size() < capacity_) {
        items_.push_back(BufferItem{std::move(input), label, task_id});
        return;
    }
    // Algorithm R: a single uniform draw over [0, seen) both accepts the item
    // with probability capacity/seen and picks the evicted slot.
    const std::size_t j = static_cast<std::size_t>(rng_.uniform_int(seen_));
    if (j < capacity_) items_[j] = BufferItem{std::move(input), label, task_id};
}

void ReservoirBuffer::add_all(const TaskExperience& experience) {
    const std::size_t n = experience.train.labels.size();
    for (std::size_t i = 0; i < n; ++i)
        add(slice_example(experience.train.inputs, i), experience.train.labels[i],
            experience.task_id);
}

Batch ReservoirBuffer::sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw std::runtime_error("reservoir: cannot sample an empty buffer");
    const std::vector<std::size_t>& item_shape = items_.front().input.shape;
    std::vector<std::size_t> shape;
    shape.push_back(n);
    shape.insert(shape.end(), item_shape.begin(), item_shape.end());
    const std::size_t step = shape_numel(item_shape);

    Batch batch;
    batch.inputs = Tensor::zeros(shape);
    batch.targets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t pick = static_cast<std::size_t>(rng.uniform_int(items_.size()));
        const BufferItem& item = items_[pick];
        std::copy(item.input.data.begin(), item.input.data.end(),
                  batch.inputs.data.begin() + i * step);
        batch.targets.push_back(item.label);
    }
    return batch;
}

std::set<int> ReservoirBuffer::classes_present() const {
    std::set<int> classes;
    for (const auto& item : items_) classes.insert(item.label);
    return classes;
}

BufferSnapshot ReservoirBuffer::snapshot() const {
    BufferSnapshot snap;
    snap.capacity = capacity_;
    snap.resident = items_.size();
    snap.seen_count = seen_;
    for (const auto& item : items_) {
        ++snap.class_counts[item.label];
        ++snap.task_counts[item.task_id];
    }
    return snap;
}

}  // namespace tfcsr
