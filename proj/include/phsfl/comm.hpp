#pragma once

#include <cstdint>
#include <vector>

namespace phsfl {

/// Inputs of the per-edge-round communication formulas. All bit counts are
/// exact unsigned integer arithmetic; overflow past 64 bits is rejected.
struct OverheadParams {
    std::uint64_t batch_size = 0;         // N
    std::uint64_t minibatches = 0;        // N-bar, per local epoch
    std::uint64_t cut_width = 0;          // Z_c
    std::uint64_t client_params = 0;      // Z_0
    std::uint64_t total_params = 0;       // Z
    std::uint64_t precision_bits = 64;    // omega
    std::uint64_t client_data_size = 0;   // |D_u,ft|
    std::uint64_t local_epochs = 0;       // kappa_0
};

/// Bits for one local epoch: N-bar * { 2[(N*Z_c)(w+1)] + N(ceil(log2 D_u)+1) }.
std::uint64_t phi_local(const OverheadParams& p);

/// Bits for one client-side model transfer: Z_0 * (w+1).
std::uint64_t phi_off(std::uint64_t client_params, std::uint64_t precision_bits);

/// Per-edge-round upper bound: kappa_0 * phi_local + 2 * phi_off.
std::uint64_t phi_phsfl_bound(const OverheadParams& p);

/// Full-model sync cost: 2 * Z * (w+1).
std::uint64_t phi_hfl(std::uint64_t total_params, std::uint64_t precision_bits);

/// The split scheme saves bits iff phi_hfl > phi_phsfl_bound.
bool phsfl_efficient(const OverheadParams& p);

/// Append-only log of every client<->edge exchange, priced with the same
/// conventions as the formulas: (w+1) bits per float, ceil(log2 D_u)+1 bits
/// per sample index.
class CommLedger {
public:
    explicit CommLedger(std::uint64_t precision_bits = 64) : omega_(precision_bits) {}

    void record_activation_upload(std::uint64_t n, std::uint64_t cut_width);
    void record_index_upload(std::uint64_t n, std::uint64_t client_data_size);
    void record_gradient_download(std::uint64_t n, std::uint64_t cut_width);
    void record_client_model_down(std::uint64_t client_params);
    void record_client_model_up(std::uint64_t client_params);
    void record_full_model_sync(std::uint64_t total_params);  // HFL up + down

    /// Marks the boundary of one (edge round, client) accounting window.
    void begin_window();
    void end_window();

    /// Appends another ledger's totals and closed windows (fixed-order
    /// reduction of per-client ledgers filled in parallel).
    void merge(const CommLedger& other);

    std::uint64_t total_bits() const { return total_; }
    std::uint64_t precision_bits() const { return omega_; }
    const std::vector<std::uint64_t>& window_bits() const { return windows_; }

private:
    void add(std::uint64_t bits);

    std::uint64_t omega_;
    std::uint64_t total_ = 0;
    std::uint64_t open_window_ = 0;
    bool window_active_ = false;
    std::vector<std::uint64_t> windows_;
};

struct CommCheckReport {
    std::uint64_t bound = 0;
    std::uint64_t max_measured = 0;
    std::uint64_t min_slack = 0;  // bound - max_measured
    std::size_t windows = 0;
    bool within_bound = true;
};

/// Compares every recorded per-window bit count against phi_phsfl_bound.
CommCheckReport measured_vs_formula(const CommLedger& ledger, const OverheadParams& p);

}  // namespace phsfl
