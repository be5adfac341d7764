#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "fnucb/packets.hpp"

namespace fnucb {

namespace {

constexpr std::uint32_t kUploadMagic = 0x464E5550;     // "FNUP"
constexpr std::uint32_t kBroadcastMagic = 0x464E4243;  // "FNBC"
constexpr std::uint32_t kVersion = 1;

void check_sizes(CovMode mode, int dim, std::size_t w, std::size_t b, std::size_t theta,
                 std::size_t inv, const char* what) {
    const std::size_t p = static_cast<std::size_t>(dim);
    const std::size_t acc = accumulator_elements(mode, p);
    if (w != acc || inv != acc || b != p || theta != p)
        throw std::invalid_argument(std::string(what) + ": field sizes inconsistent with mode/dim");
}

const char* mode_name(CovMode m) { return m == CovMode::full ? "full" : "diagonal"; }

CovMode mode_from_name(const std::string& s) {
    if (s == "full") return CovMode::full;
    if (s == "diagonal") return CovMode::diagonal;
    throw std::invalid_argument("unknown covariance mode: " + s);
}

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("packet: truncated binary stream");
    return v;
}

void put_array(std::ostream& os, const std::vector<double>& v) {
    put<std::uint64_t>(os, v.size());
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_array(std::istream& is) {
    const auto n = get<std::uint64_t>(is);
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw std::runtime_error("packet: truncated binary stream");
    return v;
}

std::size_t array_bytes(const std::vector<double>& v) {
    return sizeof(std::uint64_t) + v.size() * sizeof(double);
}

}  // namespace

void AgentUpload::validate() const {
    check_sizes(mode, dim, w_new.size(), b_new.size(), theta.size(), vlocal_inv.size(),
                "AgentUpload");
}

void ServerBroadcast::validate() const {
    check_sizes(mode, dim, w_sync.size(), b_sync.size(), theta_sync.size(), vsync_inv.size(),
                "ServerBroadcast");
}

std::string to_json(const AgentUpload& u) {
    u.validate();
    nlohmann::json j{{"agent_id", u.agent_id}, {"iteration", u.iteration},
                     {"mode", mode_name(u.mode)}, {"dim", u.dim},
                     {"w_new", u.w_new},         {"b_new", u.b_new},
                     {"theta", u.theta},         {"vlocal_inv", u.vlocal_inv},
                     {"alpha", u.alpha}};
    return j.dump();
}

std::string to_json(const ServerBroadcast& b) {
    b.validate();
    nlohmann::json j{{"iteration", b.iteration}, {"mode", mode_name(b.mode)},
                     {"dim", b.dim},             {"w_sync", b.w_sync},
                     {"b_sync", b.b_sync},       {"theta_sync", b.theta_sync},
                     {"vsync_inv", b.vsync_inv}, {"alpha", b.alpha}};
    return j.dump();
}

AgentUpload upload_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    AgentUpload u;
    u.agent_id = j.at("agent_id").get<int>();
    u.iteration = j.at("iteration").get<long>();
    u.mode = mode_from_name(j.at("mode").get<std::string>());
    u.dim = j.at("dim").get<int>();
    u.w_new = j.at("w_new").get<std::vector<double>>();
    u.b_new = j.at("b_new").get<std::vector<double>>();
    u.theta = j.at("theta").get<std::vector<double>>();
    u.vlocal_inv = j.at("vlocal_inv").get<std::vector<double>>();
    u.alpha = j.at("alpha").get<double>();
    u.validate();
    return u;
}

ServerBroadcast broadcast_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    ServerBroadcast b;
    b.iteration = j.at("iteration").get<long>();
    b.mode = mode_from_name(j.at("mode").get<std::string>());
    b.dim = j.at("dim").get<int>();
    b.w_sync = j.at("w_sync").get<std::vector<double>>();
    b.b_sync = j.at("b_sync").get<std::vector<double>>();
    b.theta_sync = j.at("theta_sync").get<std::vector<double>>();
    b.vsync_inv = j.at("vsync_inv").get<std::vector<double>>();
    b.alpha = j.at("alpha").get<double>();
    b.validate();
    return b;
}

void write_binary(const AgentUpload& u, std::ostream& os) {
    u.validate();
    put(os, kUploadMagic);
    put(os, kVersion);
    put<std::int32_t>(os, u.agent_id);
    put<std::int64_t>(os, u.iteration);
    put<std::uint8_t>(os, u.mode == CovMode::full ? 0 : 1);
    put<std::int32_t>(os, u.dim);
    put(os, u.alpha);
    put_array(os, u.w_new);
    put_array(os, u.b_new);
    put_array(os, u.theta);
    put_array(os, u.vlocal_inv);
}

void write_binary(const ServerBroadcast& b, std::ostream& os) {
    b.validate();
    put(os, kBroadcastMagic);
    put(os, kVersion);
    put<std::int64_t>(os, b.iteration);
    put<std::uint8_t>(os, b.mode == CovMode::full ? 0 : 1);
    put<std::int32_t>(os, b.dim);
    put(os, b.alpha);
    put_array(os, b.w_sync);
    put_array(os, b.b_sync);
    put_array(os, b.theta_sync);
    put_array(os, b.vsync_inv);
}

AgentUpload read_upload_binary(std::istream& is) {
    if (get<std::uint32_t>(is) != kUploadMagic) throw std::runtime_error("packet: bad upload magic");
    if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("packet: unsupported version");
    AgentUpload u;
    u.agent_id = get<std::int32_t>(is);
    u.iteration = get<std::int64_t>(is);
    u.mode = get<std::uint8_t>(is) == 0 ? CovMode::full : CovMode::diagonal;
    u.dim = get<std::int32_t>(is);
    u.alpha = get<double>(is);
    u.w_new = get_array(is);
    u.b_new = get_array(is);
    u.theta = get_array(is);
    u.vlocal_inv = get_array(is);
    u.validate();
    return u;
}

ServerBroadcast read_broadcast_binary(std::istream& is) {
    if (get<std::uint32_t>(is) != kBroadcastMagic)
        throw std::runtime_error("packet: bad broadcast magic");
    if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("packet: unsupported version");
    ServerBroadcast b;
    b.iteration = get<std::int64_t>(is);
    b.mode = get<std::uint8_t>(is) == 0 ? CovMode::full : CovMode::diagonal;
    b.dim = get<std::int32_t>(is);
    b.alpha = get<double>(is);
    b.w_sync = get_array(is);
    b.b_sync = get_array(is);
    b.theta_sync = get_array(is);
    b.vsync_inv = get_array(is);
    b.validate();
    return b;
}

std::size_t binary_size(const AgentUpload& u) {
    return sizeof(kUploadMagic) + sizeof(kVersion) + sizeof(std::int32_t) + sizeof(std::int64_t) +
           sizeof(std::uint8_t) + sizeof(std::int32_t) + sizeof(double) + array_bytes(u.w_new) +
           array_bytes(u.b_new) + array_bytes(u.theta) + array_bytes(u.vlocal_inv);
}

std::size_t binary_size(const ServerBroadcast& b) {
    return sizeof(kBroadcastMagic) + sizeof(kVersion) + sizeof(std::int64_t) +
           sizeof(std::uint8_t) + sizeof(std::int32_t) + sizeof(double) + array_bytes(b.w_sync) +
           array_bytes(b.b_sync) + array_bytes(b.theta_sync) + array_bytes(b.vsync_inv);
}

}  // namespace fnucb
