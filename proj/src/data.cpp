#include "phsfl/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace phsfl {

static_assert(std::endian::native == std::endian::little,
              "dataset i/o assumes a little-endian host");

void Dataset::validate() const {
    if (size() == 0) throw std::invalid_argument("dataset is empty");
    if (features.shape.empty() || features.shape[0] != size())
        throw std::invalid_argument("dataset features/labels disagree on sample count");
    if (num_classes < 1 || num_classes > 255)
        throw std::invalid_argument("dataset class count must be in [1,255]");
    for (int lb : labels)
        if (lb < 0 || static_cast<std::size_t>(lb) >= num_classes)
            throw std::invalid_argument("dataset label " + std::to_string(lb) + " outside [0," +
                                        std::to_string(num_classes) + ")");
}

std::size_t Topology::num_clients() const {
    std::size_t n = 0;
    for (const auto& g : edge_clients) n += g.size();
    return n;
}

Topology Topology::contiguous(std::size_t num_clients, std::size_t num_edges) {
    if (num_edges == 0 || num_clients < num_edges)
        throw std::invalid_argument("need at least one client per edge");
    Topology t;
    t.edge_clients.resize(num_edges);
    const std::size_t base = num_clients / num_edges;
    const std::size_t extra = num_clients % num_edges;
    std::size_t next = 0;
    for (std::size_t b = 0; b < num_edges; ++b) {
        const std::size_t count = base + (b < extra ? 1 : 0);
        for (std::size_t i = 0; i < count; ++i) t.edge_clients[b].push_back(next++);
    }
    return t;
}

namespace {

/// Largest-remainder rounding of proportions to integer counts summing to n.
std::vector<std::size_t> apportion(const std::vector<double>& props, std::size_t n) {
    const std::size_t u = props.size();
    std::vector<std::size_t> counts(u);
    std::vector<std::pair<double, std::size_t>> remainders(u);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < u; ++i) {
        const double exact = props[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(exact);
        remainders[i] = {exact - static_cast<double>(counts[i]), i};
        assigned += counts[i];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) counts[remainders[k % u].second]++;
    return counts;
}

}  // namespace

std::vector<ClientShard> dirichlet_partition(const Dataset& dataset, std::size_t num_clients,
                                             double alpha, std::uint64_t seed,
                                             double test_fraction) {
    dataset.validate();
    if (num_clients < 1) throw std::invalid_argument("need at least one client");
    if (num_clients > dataset.size())
        throw std::invalid_argument("more clients (" + std::to_string(num_clients) +
                                    ") than samples (" + std::to_string(dataset.size()) + ")");
    if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet alpha must be positive");
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw std::invalid_argument("test fraction must be in [0,1)");

    const std::size_t C = dataset.num_classes;
    std::vector<std::vector<std::uint32_t>> by_class(C);
    for (std::uint32_t i = 0; i < dataset.size(); ++i)
        by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);

    Rng rng = make_rng(seed, 0x70617274ULL);  // partition stream
    std::gamma_distribution<double> gamma(alpha, 1.0);

    constexpr int kMaxRetries = 100;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        std::vector<std::vector<std::uint32_t>> assigned(num_clients);
        for (std::size_t c = 0; c < C; ++c) {
            auto order = by_class[c];
            std::shuffle(order.begin(), order.end(), rng);

            std::vector<double> props(num_clients);
            double total = 0.0;
            for (auto& p : props) {
                p = gamma(rng);
                total += p;
            }
            if (total <= 0.0) {  // all-zero draw at tiny alpha; make it a point mass
                props[rng() % num_clients] = 1.0;
                total = 1.0;
            }
            for (auto& p : props) p /= total;

            const auto counts = apportion(props, order.size());
            std::size_t cursor = 0;
            for (std::size_t u = 0; u < num_clients; ++u)
                for (std::size_t k = 0; k < counts[u]; ++k)
                    assigned[u].push_back(order[cursor++]);
        }

        const bool all_nonempty = std::all_of(assigned.begin(), assigned.end(),
                                              [](const auto& v) { return !v.empty(); });
        if (!all_nonempty) continue;

        std::vector<ClientShard> shards(num_clients);
        for (std::size_t u = 0; u < num_clients; ++u) {
            shards[u].client_id = u;
            auto& samples = assigned[u];
            std::sort(samples.begin(), samples.end());

            // stratified test split: per class, the last ~test_fraction
            std::vector<std::vector<std::uint32_t>> class_samples(C);
            for (std::uint32_t idx : samples)
                class_samples[static_cast<std::size_t>(dataset.labels[idx])].push_back(idx);
            for (std::size_t c = 0; c < C; ++c) {
                const auto& cs = class_samples[c];
                const std::size_t n_test =
                    static_cast<std::size_t>(static_cast<double>(cs.size()) * test_fraction);
                for (std::size_t k = 0; k < cs.size(); ++k)
                    (k < cs.size() - n_test ? shards[u].train_idx : shards[u].test_idx)
                        .push_back(cs[k]);
            }
            // degenerate shards: keep both splits nonempty whenever possible
            if (shards[u].train_idx.empty()) {
                shards[u].train_idx.push_back(shards[u].test_idx.back());
                shards[u].test_idx.pop_back();
            }
            if (shards[u].test_idx.empty() && shards[u].train_idx.size() >= 2 &&
                test_fraction > 0.0) {
                shards[u].test_idx.push_back(shards[u].train_idx.back());
                shards[u].train_idx.pop_back();
            }
            std::sort(shards[u].train_idx.begin(), shards[u].train_idx.end());
            std::sort(shards[u].test_idx.begin(), shards[u].test_idx.end());
        }
        return shards;
    }
    throw std::runtime_error("dirichlet partition failed to give every client a sample after " +
                             std::to_string(kMaxRetries) + " draws");
}

void assign_edges(std::vector<ClientShard>& shards, const Topology& topo) {
    if (topo.num_clients() != shards.size())
        throw std::invalid_argument("topology covers " + std::to_string(topo.num_clients()) +
                                    " clients, have " + std::to_string(shards.size()));
    for (std::size_t b = 0; b < topo.num_edges(); ++b)
        for (std::size_t u : topo.edge_clients[b]) shards.at(u).edge_id = b;
}

Batch batch_from_indices(const Dataset& dataset, const std::vector<std::uint32_t>& indices) {
    const Shape sample = dataset.sample_shape();
    const std::size_t stride = shape_numel(sample);
    Batch b;
    Shape bshape{indices.size()};
    bshape.insert(bshape.end(), sample.begin(), sample.end());
    b.features = Tensor(bshape);
    b.sample_indices = indices;
    b.labels.reserve(indices.size());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::uint32_t idx = indices[k];
        if (idx >= dataset.size())
            throw std::out_of_range("sample index " + std::to_string(idx) + " out of dataset");
        std::copy_n(dataset.features.data.begin() + idx * stride, stride,
                    b.features.data.begin() + k * stride);
        b.labels.push_back(dataset.labels[idx]);
    }
    return b;
}

Batch sample_minibatch(const Dataset& dataset, const ClientShard& shard, std::size_t n,
                       Rng& rng) {
    if (n == 0) throw std::invalid_argument("mini-batch size must be positive");
    if (n > shard.train_idx.size())
        throw std::invalid_argument("mini-batch of " + std::to_string(n) + " from a shard with " +
                                    std::to_string(shard.train_idx.size()) + " train samples");
    // partial Fisher-Yates: first n entries are a uniform sample w/o replacement
    std::vector<std::uint32_t> pool = shard.train_idx;
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(n);
    return batch_from_indices(dataset, pool);
}

Dataset generate_synthetic(std::size_t num_classes, std::size_t num_samples,
                           const Shape& sample_shape, std::uint64_t seed, double margin) {
    if (num_classes < 2) throw std::invalid_argument("synthetic data needs >= 2 classes");
    if (num_samples < num_classes)
        throw std::invalid_argument("need at least one sample per class");
    const std::size_t dim = shape_numel(sample_shape);

    Rng rng = make_rng(seed, 0x73796e74ULL);  // synth stream
    std::normal_distribution<double> normal(0.0, 1.0);

    // Class means drawn as random directions scaled to length `margin`.
    // For image-shaped samples {C,H,W} the mean is constant within each
    // channel, so the class signal survives weight-shared conv + pooling.
    std::vector<std::vector<double>> means(num_classes, std::vector<double>(dim));
    const bool image_like = sample_shape.size() == 3;
    const std::size_t plane = image_like ? sample_shape[1] * sample_shape[2] : 0;
    for (auto& mu : means) {
        if (image_like) {
            const std::size_t channels = sample_shape[0];
            std::vector<double> per_channel(channels);
            double norm_sq = 0.0;
            for (auto& v : per_channel) {
                v = normal(rng);
                norm_sq += v * v;
            }
            const double scale = margin / std::sqrt(std::max(norm_sq, 1e-12));
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t p = 0; p < plane; ++p) mu[c * plane + p] = per_channel[c] * scale;
        } else {
            double norm_sq = 0.0;
            for (auto& v : mu) {
                v = normal(rng);
                norm_sq += v * v;
            }
            const double scale = margin / std::sqrt(std::max(norm_sq, 1e-12));
            for (auto& v : mu) v *= scale;
        }
    }

    Dataset ds;
    ds.num_classes = num_classes;
    Shape full{num_samples};
    full.insert(full.end(), sample_shape.begin(), sample_shape.end());
    ds.features = Tensor(full);
    ds.labels.resize(num_samples);
    for (std::size_t i = 0; i < num_samples; ++i) {
        const std::size_t c = i % num_classes;  // balanced classes
        ds.labels[i] = static_cast<int>(c);
        double* row = ds.features.data.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j)
            row[j] = static_cast<double>(static_cast<float>(means[c][j] + normal(rng)));
    }
    ds.validate();
    return ds;
}

namespace {

constexpr char kDataMagic[8] = {'P', 'H', 'S', 'F', 'D', 'A', 'T', 'A'};

class Reader {
public:
    Reader(std::istream& is, const std::string& path) : is_(is), path_(path) {}

    void bytes(void* dst, std::size_t n, const char* what) {
        if (!is_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n)))
            throw std::runtime_error(path_ + ": truncated at offset " + std::to_string(offset_) +
                                     " while reading " + what);
        offset_ += n;
    }
    std::uint32_t u32(const char* what) {
        std::uint32_t v = 0;
        bytes(&v, sizeof v, what);
        return v;
    }
    std::size_t offset() const { return offset_; }

private:
    std::istream& is_;
    std::string path_;
    std::size_t offset_ = 0;
};

}  // namespace

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    Reader r(is, path);

    char magic[8];
    r.bytes(magic, sizeof magic, "magic");
    if (std::memcmp(magic, kDataMagic, sizeof kDataMagic) != 0)
        throw std::runtime_error(path + ": bad magic at offset 0");

    Dataset ds;
    const std::uint32_t d = r.u32("sample count");
    const std::uint32_t c = r.u32("class count");
    const std::uint32_t rank = r.u32("shape rank");
    std::size_t dim = 1;
    Shape full{d};
    for (std::uint32_t i = 0; i < rank; ++i) {
        const std::uint32_t v = r.u32("shape dim");
        full.push_back(v);
        dim *= v;
    }
    ds.num_classes = c;
    ds.features = Tensor(full);
    std::vector<float> raw(static_cast<std::size_t>(d) * dim);
    r.bytes(raw.data(), raw.size() * sizeof(float), "features");
    for (std::size_t i = 0; i < raw.size(); ++i) ds.features.data[i] = raw[i];
    std::vector<std::uint8_t> lbl(d);
    r.bytes(lbl.data(), lbl.size(), "labels");
    ds.labels.assign(lbl.begin(), lbl.end());
    ds.validate();
    return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    dataset.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os.write(kDataMagic, sizeof kDataMagic);
    auto u32 = [&os](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); };
    u32(static_cast<std::uint32_t>(dataset.size()));
    u32(static_cast<std::uint32_t>(dataset.num_classes));
    const Shape sample = dataset.sample_shape();
    u32(static_cast<std::uint32_t>(sample.size()));
    for (std::size_t dim : sample) u32(static_cast<std::uint32_t>(dim));
    std::vector<float> raw(dataset.features.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<float>(dataset.features.data[i]);
    os.write(reinterpret_cast<const char*>(raw.data()),
             static_cast<std::streamsize>(raw.size() * sizeof(float)));
    std::vector<std::uint8_t> lbl(dataset.labels.begin(), dataset.labels.end());
    os.write(reinterpret_cast<const char*>(lbl.data()),
             static_cast<std::streamsize>(lbl.size()));
    if (!os) throw std::runtime_error("write failed for " + path);
}

double label_entropy(const Dataset& dataset, const ClientShard& shard) {
    std::vector<std::size_t> hist(dataset.num_classes, 0);
    for (const auto* part : {&shard.train_idx, &shard.test_idx})
        for (std::uint32_t idx : *part) hist[static_cast<std::size_t>(dataset.labels[idx])]++;
    const double total = static_cast<double>(shard.size());
    double h = 0.0;
    for (std::size_t n : hist)
        if (n > 0) {
            const double p = static_cast<double>(n) / total;
            h -= p * std::log(p);
        }
    return h;
}

LabelStore::LabelStore(const Dataset& dataset, const std::vector<ClientShard>& shards,
                       const std::vector<std::size_t>& clients)
    : labels_(dataset.labels), present_(dataset.size(), false) {
    for (std::size_t u : clients)
        for (const auto* part : {&shards.at(u).train_idx, &shards.at(u).test_idx})
            for (std::uint32_t idx : *part) present_[idx] = true;
}

bool LabelStore::contains(std::uint32_t global_idx) const {
    return global_idx < present_.size() && present_[global_idx];
}

int LabelStore::label_at(std::uint32_t global_idx) const {
    if (!contains(global_idx))
        throw std::out_of_range("sample index " + std::to_string(global_idx) +
                                " not in this edge's label store");
    return labels_[global_idx];
}

}  // namespace phsfl
