#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "fnucb/stats.hpp"

namespace fnucb {

/// Per-accumulator element count: p² in full mode, p in diagonal mode.
inline std::size_t accumulator_elements(CovMode mode, std::size_t p) {
    return mode == CovMode::full ? p * p : p;
}

/// Agent -> server payload: {W_new, B_new, θ, V_local⁻¹, α}.
struct AgentUpload {
    int agent_id = 0;
    long iteration = 0;
    CovMode mode = CovMode::full;
    int dim = 0;  ///< p₀
    std::vector<double> w_new;       // p₀² or p₀
    std::vector<double> b_new;       // p₀
    std::vector<double> theta;       // p₀
    std::vector<double> vlocal_inv;  // p₀² or p₀
    double alpha = 0.0;

    /// Exchanged parameter count: 2p₀²+2p₀+1 (full) or 4p₀+1 (diagonal).
    std::size_t param_count() const {
        const std::size_t p = static_cast<std::size_t>(dim);
        return 2 * accumulator_elements(mode, p) + 2 * p + 1;
    }
    void validate() const;
};

/// Server -> agents payload: {W_sync, B_sync, θ_sync,NN, V_sync,NN⁻¹, α}.
struct ServerBroadcast {
    long iteration = 0;
    CovMode mode = CovMode::full;
    int dim = 0;
    std::vector<double> w_sync;
    std::vector<double> b_sync;
    std::vector<double> theta_sync;
    std::vector<double> vsync_inv;
    double alpha = 0.0;

    std::size_t param_count() const {
        const std::size_t p = static_cast<std::size_t>(dim);
        return 2 * accumulator_elements(mode, p) + 2 * p + 1;
    }
    void validate() const;
};

// Serialization. JSON carries the same fields by name; the binary layout is
// a fixed header (magic, version, mode, dim, id/iteration, alpha) followed
// by the four arrays as little-endian IEEE doubles in the order W, B, θ,
// V⁻¹. Full-matrix accumulators are row-major symmetric; diagonal
// accumulators are the length-p₀ diagonal.

std::string to_json(const AgentUpload&);
std::string to_json(const ServerBroadcast&);
AgentUpload upload_from_json(const std::string&);
ServerBroadcast broadcast_from_json(const std::string&);

void write_binary(const AgentUpload&, std::ostream&);
void write_binary(const ServerBroadcast&, std::ostream&);
AgentUpload read_upload_binary(std::istream&);
ServerBroadcast read_broadcast_binary(std::istream&);

/// Serialized size in bytes of the binary encoding.
std::size_t binary_size(const AgentUpload&);
std::size_t binary_size(const ServerBroadcast&);

}  // namespace fnucb
