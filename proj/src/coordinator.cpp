#include "fnucb/coordinator.hpp"

#include <algorithm>
#include <string>

namespace fnucb {

Coordinator::Coordinator(int num_agents, CovMode mode, int dim)
    : n_(num_agents), mode_(mode), dim_(dim) {
    if (num_agents <= 0) throw std::invalid_argument("Coordinator: need at least one agent");
    if (dim <= 0) throw std::invalid_argument("Coordinator: dim must be positive");
    wsync_.assign(accumulator_elements(mode_, static_cast<std::size_t>(dim_)), 0.0);
    bsync_.assign(static_cast<std::size_t>(dim_), 0.0);
}

ServerBroadcast Coordinator::aggregate(std::span<const AgentUpload> uploads, long t) {
    if (static_cast<int>(uploads.size()) != n_)
        throw ProtocolError("aggregate: expected " + std::to_string(n_) + " uploads, got " +
                            std::to_string(uploads.size()));

    // Index uploads by agent id; reject duplicates and strays.
    std::vector<const AgentUpload*> by_id(static_cast<std::size_t>(n_), nullptr);
    for (const AgentUpload& u : uploads) {
        u.validate();
        if (u.mode != mode_ || u.dim != dim_)
            throw ProtocolError("aggregate: upload shape mismatch from agent " +
                                std::to_string(u.agent_id));
        if (u.agent_id < 0 || u.agent_id >= n_)
            throw ProtocolError("aggregate: unknown agent id " + std::to_string(u.agent_id));
        auto& slot = by_id[static_cast<std::size_t>(u.agent_id)];
        if (slot != nullptr)
            throw ProtocolError("aggregate: duplicate upload from agent " +
                                std::to_string(u.agent_id));
        slot = &u;
    }

    const std::size_t p = static_cast<std::size_t>(dim_);
    const std::size_t acc = wsync_.size();
    std::vector<double> theta_sync(p, 0.0);
    std::vector<double> vsync_inv(acc, 0.0);
    double alpha = by_id[0]->alpha;

    // Fixed agent-id-ascending summation order for bitwise reproducibility.
    for (int i = 0; i < n_; ++i) {
        const AgentUpload& u = *by_id[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < acc; ++j) wsync_[j] += u.w_new[j];
        for (std::size_t j = 0; j < p; ++j) bsync_[j] += u.b_new[j];
        for (std::size_t j = 0; j < p; ++j) theta_sync[j] += u.theta[j];
        for (std::size_t j = 0; j < acc; ++j) vsync_inv[j] += u.vlocal_inv[j];
        alpha = std::min(alpha, u.alpha);
    }
    const double inv_n = 1.0 / static_cast<double>(n_);
    for (double& v : theta_sync) v *= inv_n;
    for (double& v : vsync_inv) v *= inv_n;

    ++rounds_;
    last_ = ServerBroadcast{t, mode_, dim_, wsync_, bsync_,
                            std::move(theta_sync), std::move(vsync_inv), alpha};
    return last_;
}

}  // namespace fnucb
