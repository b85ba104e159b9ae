#include "sshash/bitcode.hpp"

#include <bit>

#include "sshash/matrix.hpp"

namespace sshash {

BitCode::BitCode(std::size_t bits) : bits_(bits), words_(words_for(bits), 0) {}

BitCode BitCode::from_bools(std::span<const std::uint8_t> bits) {
    BitCode code(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) code.set(i);
    return code;
}

bool BitCode::test(std::size_t i) const {
    if (i >= bits_) throw InvalidInput("BitCode::test: bit index out of range");
    return (words_[i / 64] >> (i % 64)) & 1U;
}

void BitCode::set(std::size_t i, bool value) {
    if (i >= bits_) throw InvalidInput("BitCode::set: bit index out of range");
    const std::uint64_t mask = std::uint64_t{1} << (i % 64);
    if (value)
        words_[i / 64] |= mask;
    else
        words_[i / 64] &= ~mask;
}

std::string BitCode::to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    const std::size_t digits = (bits_ + 3) / 4;
    std::string out(digits, '0');
    for (std::size_t d = 0; d < digits; ++d) {
        const std::size_t first_bit = 4 * d;
        const unsigned nibble = (words_[first_bit / 64] >> (first_bit % 64)) & 0xFU;
        out[digits - 1 - d] = kDigits[nibble];
    }
    return out;
}

BitCode BitCode::from_hex(std::string_view hex, std::size_t bits) {
    const std::size_t digits = (bits + 3) / 4;
    if (hex.size() != digits)
        throw InvalidInput("hex code '" + std::string(hex) + "' has " + std::to_string(hex.size()) +
                           " digits, expected " + std::to_string(digits) + " for " +
                           std::to_string(bits) + " bits");
    BitCode code(bits);
    for (std::size_t d = 0; d < digits; ++d) {
        const char ch = hex[digits - 1 - d];
        unsigned nibble = 0;
        if (ch >= '0' && ch <= '9')
            nibble = static_cast<unsigned>(ch - '0');
        else if (ch >= 'a' && ch <= 'f')
            nibble = static_cast<unsigned>(ch - 'a' + 10);
        else if (ch >= 'A' && ch <= 'F')
            nibble = static_cast<unsigned>(ch - 'A' + 10);
        else
            throw InvalidInput("hex code '" + std::string(hex) + "' contains a non-hex digit");
        for (unsigned b = 0; b < 4; ++b) {
            if (!((nibble >> b) & 1U)) continue;
            const std::size_t bit = 4 * d + b;
            if (bit >= bits)
                throw InvalidInput("hex code '" + std::string(hex) + "' sets bits beyond " +
                                   std::to_string(bits));
            code.set(bit);
        }
    }
    return code;
}

std::size_t hamming(const BitCode& a, const BitCode& b) {
    if (a.bits() != b.bits())
        throw InvalidInput("hamming: codes of " + std::to_string(a.bits()) + " and " +
                           std::to_string(b.bits()) + " bits");
    std::size_t d = 0;
    const auto wa = a.words();
    const auto wb = b.words();
    for (std::size_t i = 0; i < wa.size(); ++i) d += std::popcount(wa[i] ^ wb[i]);
    return d;
}

}  // namespace sshash
