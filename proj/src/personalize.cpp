#include "phsfl/personalize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "phsfl/rng.hpp"

namespace phsfl {

PersonalizedModel fine_tune_head(const LayeredModel& global_model, const PartitionSpec& spec,
                                 const Dataset& dataset, const ClientShard& shard,
                                 std::size_t steps, double lr, std::uint64_t seed) {
    spec.validate(global_model);
    if (shard.train_idx.empty())
        throw std::invalid_argument("cannot fine-tune on an empty shard");
    if (steps > 0 && !(lr > 0.0))
        throw std::invalid_argument("fine-tuning needs a positive learning rate");

    constexpr std::size_t kFullBatchLimit = 256;
    constexpr std::size_t kSampledBatch = 32;

    LayeredModel head;
    {
        SplitParts parts = split(global_model, spec);
        head = std::move(parts.server_head);
    }

    Rng rng = make_rng(seed, 0x66696e65ULL, shard.client_id);  // fine-tune stream
    const LayerRange body_range{0, spec.head_start};

    for (std::size_t k = 0; k < steps; ++k) {
        Batch batch = shard.train_idx.size() <= kFullBatchLimit
                          ? batch_from_indices(dataset, shard.train_idx)
                          : sample_minibatch(dataset, shard, kSampledBatch, rng);
        // feature extractor is frozen but recomputed every step
        const Tensor features = forward(global_model, body_range, batch.features);
        Tape head_tape;
        const Tensor logits = forward(head, LayerRange::full(head), features, &head_tape);
        Tensor dlogits;
        cross_entropy_grad(logits, batch.labels, dlogits);
        GradientSet grads = backward(head, LayerRange::full(head), head_tape, dlogits);
        sgd_step(head, grads, lr);
    }

    PersonalizedModel pm;
    pm.client_id = shard.client_id;
    pm.model = global_model;
    for (std::size_t i = 0; i < head.layer_count(); ++i)
        pm.model.params[spec.head_start + i] = head.params[i];
    return pm;
}

ClientEval evaluate(const LayeredModel& model, const Dataset& dataset,
                    const ClientShard& shard) {
    if (shard.test_idx.empty())
        throw std::invalid_argument("client " + std::to_string(shard.client_id) +
                                    " has an empty test split");
    constexpr std::size_t kChunk = 256;
    const LayerRange full = LayerRange::full(model);

    std::size_t correct = 0;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < shard.test_idx.size(); start += kChunk) {
        const std::size_t end = std::min(start + kChunk, shard.test_idx.size());
        const std::vector<std::uint32_t> idx(shard.test_idx.begin() + start,
                                             shard.test_idx.begin() + end);
        const Batch batch = batch_from_indices(dataset, idx);
        const Tensor logits = forward(model, full, batch.features);
        loss_sum += cross_entropy(logits, batch.labels) * static_cast<double>(idx.size());

        const std::size_t c = logits.shape[1];
        for (std::size_t s = 0; s < idx.size(); ++s) {
            const double* row = logits.data.data() + s * c;
            std::size_t best = 0;  // ties break toward the lowest class index
            for (std::size_t j = 1; j < c; ++j)
                if (row[j] > row[best]) best = j;
            if (best == static_cast<std::size_t>(batch.labels[s])) ++correct;
        }
    }

    ClientEval ev;
    ev.client_id = shard.client_id;
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(shard.test_idx.size());
    ev.loss = loss_sum / static_cast<double>(shard.test_idx.size());
    return ev;
}

EvalReport report(const std::vector<ClientEval>& evals) {
    if (evals.empty()) throw std::invalid_argument("report needs at least one client");
    EvalReport r;
    r.clients = evals;
    r.min_acc = evals[0].accuracy;
    r.max_acc = evals[0].accuracy;
    for (const auto& e : evals) {
        r.mean_acc += e.accuracy;
        r.mean_loss += e.loss;
        r.min_acc = std::min(r.min_acc, e.accuracy);
        r.max_acc = std::max(r.max_acc, e.accuracy);
    }
    const double n = static_cast<double>(evals.size());
    r.mean_acc /= n;
    r.mean_loss /= n;
    for (const auto& e : evals) {
        r.std_acc += (e.accuracy - r.mean_acc) * (e.accuracy - r.mean_acc);
        r.std_loss += (e.loss - r.mean_loss) * (e.loss - r.mean_loss);
    }
    r.std_acc = std::sqrt(r.std_acc / n);  // population std
    r.std_loss = std::sqrt(r.std_loss / n);
    return r;
}

void write_personalization_csv(const std::vector<ClientEval>& generalized,
                               const std::vector<ClientEval>& personalized,
                               const std::string& path) {
    if (generalized.size() != personalized.size())
        throw std::invalid_argument("generalized/personalized eval count mismatch");
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "client_id,generalized_acc,personalized_acc,generalized_loss,personalized_loss\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < generalized.size(); ++i) {
        if (generalized[i].client_id != personalized[i].client_id)
            throw std::invalid_argument("eval rows are not aligned by client");
        os << generalized[i].client_id << ',' << fmt(generalized[i].accuracy) << ','
           << fmt(personalized[i].accuracy) << ',' << fmt(generalized[i].loss) << ','
           << fmt(personalized[i].loss) << '\n';
    }
    if (!os) throw std::runtime_error("write failed for " + path);
}

}  // namespace phsfl
