#pragma once

// Labeled datasets, synthetic cluster tasks and the sequential
// class-incremental split protocol.

#include <cstdint>
#include <optional>
#include <vector>

#include "tfcsr/network.hpp"
#include "tfcsr/tensor.hpp"

namespace tfcsr {

struct LabeledDataset {
    Tensor inputs;           // [n, ...]
    std::vector<int> labels; // global class indices, length n
    int class_count = 0;
};

// Validates the label range and count.
LabeledDataset make_dataset(Tensor inputs, std::vector<int> labels, int class_count);

struct DataSplit {
    LabeledDataset train;
    LabeledDataset test;
};

struct TaskExperience {
    int task_id = 0;
    std::vector<int> classes;  // ordered global class indices
    LabeledDataset train;
    LabeledDataset test;
};

struct TaskProtocol {
    std::vector<TaskExperience> tasks;
    int total_classes = 0;
};

// Gaussian clusters with unit-spaced means on a deterministic lattice:
// class c sits at the base-`side` digits of c, side = ceil(class_count^(1/dim)).
// 80/20 train/test split per class. Inputs have shape [n, dim].
DataSplit synth_tasks(int class_count, int dim, int per_class, double cluster_spread,
                      std::uint64_t seed);

// Splits a source dataset into contiguous ascending class blocks:
// task t holds classes [t*k, (t+1)*k). Optional per-class subsampling
// (uniform without replacement) keeps runs desk-sized.
TaskProtocol split_protocol(const DataSplit& source, int classes_per_task,
                            std::optional<int> subsample_per_class, std::uint64_t seed,
                            std::optional<int> subsample_test_per_class = std::nullopt);

// One pass over a fresh per-epoch shuffle; the final partial batch is
// included, so the batch count is ceil(n / batch_size).
std::vector<Batch> minibatches(const LabeledDataset& dataset, int batch_size,
                               std::uint64_t seed, int epoch);

}  // namespace tfcsr
