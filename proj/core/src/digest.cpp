#include "emowb/digest.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include <openssl/evp.h>

namespace emowb {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[md[i] >> 4]);
        out.push_back(kHex[md[i] & 0x0f]);
    }
    return out;
}

std::string json_digest(const nlohmann::json& value) {
    // nlohmann::json objects are std::map backed, so dump() is key-sorted.
    return sha256_hex(value.dump());
}

std::string short_id(std::string_view prefix, std::string_view material) {
    return std::string(prefix) + sha256_hex(material).substr(0, 12);
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

std::string dump_pretty(const nlohmann::json& value) {
    return value.dump(2) + "\n";
}

}  // namespace emowb
