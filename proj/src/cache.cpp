#include "crosscheck/cache.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>
#include <unistd.h>

namespace crosscheck {

namespace fs = std::filesystem;

namespace {

void append_field(std::string& buf, const std::string& s) {
    // Length prefix keeps ("ab","c") and ("a","bc") apart.
    const std::uint64_t n = s.size();
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
    buf += s;
}

void append_list(std::string& buf, const std::vector<std::string>& items) {
    append_field(buf, std::to_string(items.size()));
    for (const auto& s : items) append_field(buf, s);
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    static const char* hexdig = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hexdig[digest[i] >> 4]);
        out.push_back(hexdig[digest[i] & 0xF]);
    }
    return out;
}

CacheKey CacheKey::compute(const std::string& provider_id, const std::vector<std::string>& rows,
                           const std::optional<std::vector<std::string>>& cols) {
    std::string buf;
    append_field(buf, "crosscheck-entail-v1");
    append_field(buf, provider_id);
    append_field(buf, cols ? "cross" : "self");
    append_list(buf, rows);
    if (cols) append_list(buf, *cols);
    return CacheKey{sha256_hex(buf)};
}

MatrixCache::MatrixCache(std::string directory) : dir_(std::move(directory)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw InvalidArgument("cannot create cache directory " + dir_ + ": " + ec.message());
}

std::string MatrixCache::path_for(const CacheKey& key) const {
    return (fs::path(dir_) / (key.hex + ".json")).string();
}

std::optional<EntailmentMatrix> MatrixCache::get(const CacheKey& key) const {
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    try {
        nlohmann::json j;
        in >> j;
        const auto kind_name = j.at("kind").get<std::string>();
        MatrixKind kind;
        if (kind_name == to_string(MatrixKind::SelfTarget))
            kind = MatrixKind::SelfTarget;
        else if (kind_name == to_string(MatrixKind::CrossTargetVerifier))
            kind = MatrixKind::CrossTargetVerifier;
        else if (kind_name == to_string(MatrixKind::TargetTruth))
            kind = MatrixKind::TargetTruth;
        else
            return std::nullopt;
        return validate_matrix(j.at("values").get<std::vector<std::vector<double>>>(), kind);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void MatrixCache::put(const CacheKey& key, const EntailmentMatrix& m) const {
    nlohmann::json j;
    j["kind"] = to_string(m.kind());
    j["values"] = m.to_rows();
    static std::atomic<unsigned long> counter{0};
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    const std::string final_path = path_for(key);
    const std::string tmp = final_path + ".tmp." + std::to_string(::getpid()) + "." +
                            std::to_string(tid) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write cache entry " + tmp);
        out << j.dump() << '\n';
        out.flush();
        if (!out) throw Error("cannot write cache entry " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot commit cache entry " + final_path);
    }
}

}  // namespace crosscheck
