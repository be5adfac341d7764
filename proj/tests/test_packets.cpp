#include <doctest.h>

#include <sstream>

#include "fnucb/packets.hpp"
#include "fnucb/rng.hpp"

using namespace fnucb;

namespace {

AgentUpload make_upload(CovMode mode, int p, std::uint64_t seed) {
    Rng rng(seed);
    AgentUpload u;
    u.agent_id = 3;
    u.iteration = 17;
    u.mode = mode;
    u.dim = p;
    u.w_new.resize(accumulator_elements(mode, static_cast<std::size_t>(p)));
    u.b_new.resize(static_cast<std::size_t>(p));
    u.theta.resize(static_cast<std::size_t>(p));
    u.vlocal_inv.resize(accumulator_elements(mode, static_cast<std::size_t>(p)));
    for (auto& v : u.w_new) v = rng.next_gaussian();
    for (auto& v : u.b_new) v = rng.next_gaussian();
    for (auto& v : u.theta) v = rng.next_gaussian();
    for (auto& v : u.vlocal_inv) v = rng.next_gaussian();
    u.alpha = 0.25;
    return u;
}

}  // namespace

TEST_SUITE("packets") {

TEST_CASE("exchanged parameter counts match the closed forms") {
    for (const int p : {25, 220}) {
        const auto full = make_upload(CovMode::full, p, 1);
        const auto diag = make_upload(CovMode::diagonal, p, 2);
        CHECK(full.param_count() == 2u * p * p + 2u * p + 1u);
        CHECK(diag.param_count() == 4u * p + 1u);
    }
}

TEST_CASE("binary round trip is exact and the size accounting holds") {
    for (const CovMode mode : {CovMode::full, CovMode::diagonal}) {
        const AgentUpload u = make_upload(mode, 25, 7);
        std::stringstream ss;
        write_binary(u, ss);
        CHECK(ss.str().size() == binary_size(u));
        const AgentUpload back = read_upload_binary(ss);
        CHECK(back.agent_id == u.agent_id);
        CHECK(back.iteration == u.iteration);
        CHECK(back.mode == u.mode);
        CHECK(back.w_new == u.w_new);
        CHECK(back.b_new == u.b_new);
        CHECK(back.theta == u.theta);
        CHECK(back.vlocal_inv == u.vlocal_inv);
        CHECK(back.alpha == u.alpha);

        // The payload arrays carry exactly param_count doubles.
        const std::size_t array_doubles =
            u.w_new.size() + u.b_new.size() + u.theta.size() + u.vlocal_inv.size();
        CHECK(array_doubles + 1 == u.param_count());  // +1 for alpha
    }
}

TEST_CASE("json round trip on broadcasts") {
    const AgentUpload u = make_upload(CovMode::diagonal, 12, 9);
    ServerBroadcast b;
    b.iteration = 5;
    b.mode = u.mode;
    b.dim = u.dim;
    b.w_sync = u.w_new;
    b.b_sync = u.b_new;
    b.theta_sync = u.theta;
    b.vsync_inv = u.vlocal_inv;
    b.alpha = 0.75;
    const ServerBroadcast back = broadcast_from_json(to_json(b));
    CHECK(back.w_sync == b.w_sync);
    CHECK(back.b_sync == b.b_sync);
    CHECK(back.theta_sync == b.theta_sync);
    CHECK(back.vsync_inv == b.vsync_inv);
    CHECK(back.alpha == b.alpha);
    CHECK(back.param_count() == b.param_count());

    const AgentUpload u_back = upload_from_json(to_json(u));
    CHECK(u_back.w_new == u.w_new);
    CHECK(u_back.alpha == u.alpha);
}

TEST_CASE("shape mismatches are rejected") {
    AgentUpload u = make_upload(CovMode::full, 6, 3);
    u.b_new.pop_back();
    CHECK_THROWS_AS(u.validate(), std::invalid_argument);
    std::stringstream ss;
    CHECK_THROWS_AS(write_binary(u, ss), std::invalid_argument);

    std::stringstream truncated("FNUPxx");
    CHECK_THROWS_AS(read_upload_binary(truncated), std::runtime_error);
}

}  // TEST_SUITE
