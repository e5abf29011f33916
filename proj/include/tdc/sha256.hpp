#pragma once

#include <cstdint>
#include <string>

namespace tdc {

// SHA-256 (FIPS 180-4), used for input-file digests in run manifests.
class Sha256 {
public:
    Sha256();
    void update(const void* data, size_t len);
    // Finishes the digest and returns it as lowercase hex.
    std::string hex_digest();

private:
    void process_block(const uint8_t* block);

    uint32_t state_[8];
    uint64_t total_len_ = 0;
    uint8_t buffer_[64];
    size_t buffer_len_ = 0;
    bool finished_ = false;
};

std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

}  // namespace tdc
