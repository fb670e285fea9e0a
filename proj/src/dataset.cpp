#include "tfcsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tfcsr/rng.hpp"

namespace tfcsr {

LabeledDataset make_dataset(Tensor inputs, std::vector<int> labels, int class_count) {
    if (labels.empty()) throw std::invalid_argument("dataset: needs at least one example");
    if (inputs.rank() < 1 || inputs.dim(0) != labels.size())
        throw std::invalid_argument("dataset: input count does not match label count");
    for (int l : labels)
        if (l < 0 || l >= class_count)
            throw std::invalid_argument("dataset: label outside [0, class_count)");
    return LabeledDataset{std::move(inputs), std::move(labels), class_count};
}

namespace {

// Rows of `source` selected by `indices`, stacked into a new batch tensor.
Tensor gather_rows(const Tensor& source, const std::vector<std::size_t>& indices) {
    const std::size_t step = shape_numel(source.shape) / source.dim(0);
    std::vector<std::size_t> shape = source.shape;
    shape[0] = indices.size();
    Tensor out = Tensor::zeros(shape);
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy_n(source.data.begin() + indices[i] * step, step,
                    out.data.begin() + i * step);
    return out;
}

LabeledDataset gather_dataset(const LabeledDataset& source,
                              const std::vector<std::size_t>& indices) {
    std::vector<int> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) labels[i] = source.labels[indices[i]];
    return LabeledDataset{gather_rows(source.inputs, indices), std::move(labels),
                          source.class_count};
}

std::vector<std::size_t> class_mean_digits(int cls, int dim, int side) {
    std::vector<std::size_t> digits(dim, 0);
    int rest = cls;
    for (int d = 0; d < dim && rest > 0; ++d) {
        digits[d] = static_cast<std::size_t>(rest % side);
        rest /= side;
    }
    return digits;
}

// Per-class subsample (uniform, without replacement) or all indices when no
// budget is given. Indices stay in source order.
std::vector<std::size_t> select_task_indices(const LabeledDataset& ds,
                                             const std::vector<int>& classes,
                                             std::optional<int> per_class_budget, Rng& rng) {
    std::vector<std::size_t> chosen;
    for (int cls : classes) {
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < ds.labels.size(); ++i)
            if (ds.labels[i] == cls) pool.push_back(i);
        if (per_class_budget && static_cast<std::size_t>(*per_class_budget) < pool.size()) {
            // Partial Fisher-Yates: the first `budget` slots end up a uniform
            // without-replacement sample.
            const std::size_t budget = static_cast<std::size_t>(*per_class_budget);
            for (std::size_t i = 0; i < budget; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(
                                              rng.uniform_int(pool.size() - i));
                std::swap(pool[i], pool[j]);
            }
            pool.resize(budget);
            std::sort(pool.begin(), pool.end());
        }
        chosen.insert(chosen.end(), pool.begin(), pool.end());
    }
    return chosen;
}

}  // namespace

DataSplit synth_tasks(int class_count, int dim, int per_class, double cluster_spread,
                      std::uint64_t seed) {
    if (class_count < 2) throw std::invalid_argument("synth_tasks: class_count must be >= 2");
    if (per_class < 2) throw std::invalid_argument("synth_tasks: per_class must be >= 2");
    if (dim < 1) throw std::invalid_argument("synth_tasks: dim must be >= 1");
    if (cluster_spread < 0.0)
        throw std::invalid_argument("synth_tasks: cluster_spread must be >= 0");

    int side = 1;
    while (std::pow(static_cast<double>(side), dim) < static_cast<double>(class_count)) ++side;

    const int train_per_class = (per_class * 4) / 5;
    const int test_per_class = per_class - train_per_class;

    Rng rng(stream_seed(seed, "sampling"));
    const std::size_t d = static_cast<std::size_t>(dim);
    Tensor train_x = Tensor::zeros({static_cast<std::size_t>(class_count) *
                                        static_cast<std::size_t>(train_per_class),
                                    d});
    Tensor test_x = Tensor::zeros({static_cast<std::size_t>(class_count) *
                                       static_cast<std::size_t>(test_per_class),
                                   d});
    std::vector<int> train_y, test_y;
    std::size_t train_row = 0, test_row = 0;
    for (int cls = 0; cls < class_count; ++cls) {
        const auto mean = class_mean_digits(cls, dim, side);
        for (int k = 0; k < per_class; ++k) {
            const bool is_train = k < train_per_class;
            double* row = is_train ? train_x.data.data() + train_row * d
                                   : test_x.data.data() + test_row * d;
            for (std::size_t j = 0; j < d; ++j)
                row[j] = static_cast<double>(mean[j]) + cluster_spread * rng.normal();
            if (is_train) {
                train_y.push_back(cls);
                ++train_row;
            } else {
                test_y.push_back(cls);
                ++test_row;
            }
        }
    }
    return DataSplit{make_dataset(std::move(train_x), std::move(train_y), class_count),
                     make_dataset(std::move(test_x), std::move(test_y), class_count)};
}

TaskProtocol split_protocol(const DataSplit& source, int classes_per_task,
                            std::optional<int> subsample_per_class, std::uint64_t seed,
                            std::optional<int> subsample_test_per_class) {
    const int total = source.train.class_count;
    if (classes_per_task < 1 || total % classes_per_task != 0)
        throw std::invalid_argument(
            "split_protocol: class_count must be divisible by classes_per_task");
    Rng rng(stream_seed(seed, "buffer"));
    TaskProtocol protocol;
    protocol.total_classes = total;
    const int task_count = total / classes_per_task;
    for (int t = 0; t < task_count; ++t) {
        TaskExperience exp;
        exp.task_id = t;
        for (int c = t * classes_per_task; c < (t + 1) * classes_per_task; ++c)
            exp.classes.push_back(c);
        exp.train = gather_dataset(
            source.train, select_task_indices(source.train, exp.classes, subsample_per_class, rng));
        exp.test = gather_dataset(source.test, select_task_indices(source.test, exp.classes,
                                                                   subsample_test_per_class, rng));
        protocol.tasks.push_back(std::move(exp));
    }
    return protocol;
}

std::vector<Batch> minibatches(const LabeledDataset& dataset, int batch_size,
                               std::uint64_t seed, int epoch) {
    if (batch_size < 1) throw std::invalid_argument("minibatches: batch_size must be >= 1");
    const std::size_t n = dataset.labels.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(substream(seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    std::vector<Batch> batches;
    const std::size_t bs = static_cast<std::size_t>(batch_size);
    for (std::size_t start = 0; start < n; start += bs) {
        const std::size_t stop = std::min(n, start + bs);
        std::vector<std::size_t> idx(order.begin() + start, order.begin() + stop);
        Batch b;
        b.inputs = gather_rows(dataset.inputs, idx);
        b.targets.reserve(idx.size());
        for (std::size_t i : idx) b.targets.push_back(dataset.labels[i]);
        batches.push_back(std::move(b));
    }
    return batches;
}

}  // namespace tfcsr
