#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sshash {

/// B bits packed little-endian into 64-bit words; bits past B are always zero.
class BitCode {
public:
    BitCode() = default;
    explicit BitCode(std::size_t bits);

    static std::size_t words_for(std::size_t bits) noexcept { return (bits + 63) / 64; }
    static BitCode from_bools(std::span<const std::uint8_t> bits);
    /// Inverse of to_hex. Rejects wrong length, non-hex digits and set padding bits.
    static BitCode from_hex(std::string_view hex, std::size_t bits);

    std::size_t bits() const noexcept { return bits_; }
    std::span<const std::uint64_t> words() const noexcept { return words_; }

    bool test(std::size_t i) const;
    void set(std::size_t i, bool value = true);

    /// The code read as the integer sum(bit_i * 2^i), as ceil(B/4) lowercase hex
    /// digits, most significant first.
    std::string to_hex() const;

    friend bool operator==(const BitCode&, const BitCode&) = default;

private:
    std::size_t bits_ = 0;
    std::vector<std::uint64_t> words_;
};

/// XOR + popcount over the packed words.
std::size_t hamming(const BitCode& a, const BitCode& b);

}  // namespace sshash
