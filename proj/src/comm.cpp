#include "phsfl/comm.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace phsfl {

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw std::overflow_error("communication bit count exceeds 64 bits");
    return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r))
        throw std::overflow_error("communication bit count exceeds 64 bits");
    return r;
}

/// ceil(log2(x)) for x >= 1; 0 maps to 0 by convention.
std::uint64_t ceil_log2(std::uint64_t x) {
    if (x <= 1) return 0;
    return 64 - static_cast<std::uint64_t>(std::countl_zero(x - 1));
}

std::uint64_t index_bits(std::uint64_t n, std::uint64_t data_size) {
    return checked_mul(n, checked_add(ceil_log2(data_size), 1));
}

std::uint64_t float_bits(std::uint64_t count, std::uint64_t omega) {
    return checked_mul(count, checked_add(omega, 1));
}

}  // namespace

std::uint64_t phi_local(const OverheadParams& p) {
    // N-bar * { 2[(N * Z_c)(w+1)] + N(ceil(log2 D_u) + 1) }
    const std::uint64_t act = float_bits(checked_mul(p.batch_size, p.cut_width),
                                         p.precision_bits);
    const std::uint64_t per_step = checked_add(checked_mul(2, act),
                                               index_bits(p.batch_size, p.client_data_size));
    return checked_mul(p.minibatches, per_step);
}

std::uint64_t phi_off(std::uint64_t client_params, std::uint64_t precision_bits) {
    return float_bits(client_params, precision_bits);
}

std::uint64_t phi_phsfl_bound(const OverheadParams& p) {
    return checked_add(checked_mul(p.local_epochs, phi_local(p)),
                       checked_mul(2, phi_off(p.client_params, p.precision_bits)));
}

std::uint64_t phi_hfl(std::uint64_t total_params, std::uint64_t precision_bits) {
    return checked_mul(2, float_bits(total_params, precision_bits));
}

bool phsfl_efficient(const OverheadParams& p) {
    return phi_hfl(p.total_params, p.precision_bits) > phi_phsfl_bound(p);
}

void CommLedger::add(std::uint64_t bits) {
    total_ = checked_add(total_, bits);
    if (window_active_) open_window_ = checked_add(open_window_, bits);
}

void CommLedger::record_activation_upload(std::uint64_t n, std::uint64_t cut_width) {
    add(float_bits(checked_mul(n, cut_width), omega_));
}

void CommLedger::record_index_upload(std::uint64_t n, std::uint64_t client_data_size) {
    add(index_bits(n, client_data_size));
}

void CommLedger::record_gradient_download(std::uint64_t n, std::uint64_t cut_width) {
    add(float_bits(checked_mul(n, cut_width), omega_));
}

void CommLedger::record_client_model_down(std::uint64_t client_params) {
    add(float_bits(client_params, omega_));
}

void CommLedger::record_client_model_up(std::uint64_t client_params) {
    add(float_bits(client_params, omega_));
}

void CommLedger::record_full_model_sync(std::uint64_t total_params) {
    add(phi_hfl(total_params, omega_));
}

void CommLedger::begin_window() {
    window_active_ = true;
    open_window_ = 0;
}

void CommLedger::end_window() {
    if (!window_active_) throw std::logic_error("comm ledger window not open");
    windows_.push_back(open_window_);
    window_active_ = false;
}

void CommLedger::merge(const CommLedger& other) {
    if (other.window_active_) throw std::logic_error("cannot merge a ledger with an open window");
    total_ = checked_add(total_, other.total_);
    windows_.insert(windows_.end(), other.windows_.begin(), other.windows_.end());
}

CommCheckReport measured_vs_formula(const CommLedger& ledger, const OverheadParams& p) {
    CommCheckReport report;
    report.bound = phi_phsfl_bound(p);
    report.windows = ledger.window_bits().size();
    for (std::uint64_t bits : ledger.window_bits())
        report.max_measured = std::max(report.max_measured, bits);
    report.within_bound = report.max_measured <= report.bound;
    report.min_slack = report.within_bound ? report.bound - report.max_measured : 0;
    return report;
}

}  // namespace phsfl
