#pragma once

#include <span>
#include <vector>

#include "fnucb/packets.hpp"

namespace fnucb {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Central server: accumulates W_sync/B_sync across rounds, averages the
/// uploaded parameters and inverses, takes the minimum uncertainty ratio.
/// Stateless about θ between rounds. Aggregation is atomic with respect to
/// the round barrier; uploads are folded in agent-id-ascending order so the
/// result is independent of arrival order.
class Coordinator {
public:
    Coordinator(int num_agents, CovMode mode, int dim);

    /// Requires exactly one upload per registered agent.
    ServerBroadcast aggregate(std::span<const AgentUpload> uploads, long t);

    int num_agents() const { return n_; }
    long rounds() const { return rounds_; }
    std::span<const double> w_sync() const { return wsync_; }
    std::span<const double> b_sync() const { return bsync_; }
    const ServerBroadcast& last_broadcast() const { return last_; }

private:
    int n_;
    CovMode mode_;
    int dim_;
    std::vector<double> wsync_;
    std::vector<double> bsync_;
    ServerBroadcast last_;
    long rounds_ = 0;
};

}  // namespace fnucb
