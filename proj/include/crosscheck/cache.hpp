#pragma once

// Content-addressed on-disk cache for entailment matrices: one JSON file per
// key, named by the hex SHA-256 of the inputs that produced the matrix.

#include "crosscheck/core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace crosscheck {

struct CacheKey {
    std::string hex;  // 64 lowercase hex digits

    /// Order-sensitive in both answer lists. An absent `cols` (self matrix)
    /// hashes differently from cols == rows.
    static CacheKey compute(const std::string& provider_id, const std::vector<std::string>& rows,
                            const std::optional<std::vector<std::string>>& cols);

    friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

std::string sha256_hex(const std::string& bytes);

class MatrixCache {
public:
    /// Creates the directory if needed.
    explicit MatrixCache(std::string directory);

    const std::string& directory() const noexcept { return dir_; }
    std::string path_for(const CacheKey& key) const;

    /// Absent on a miss. A corrupt entry is treated as a miss.
    std::optional<EntailmentMatrix> get(const CacheKey& key) const;
    /// Write-temp-then-rename, safe against concurrent writers of the same key.
    void put(const CacheKey& key, const EntailmentMatrix& m) const;

private:
    std::string dir_;
};

}  // namespace crosscheck
