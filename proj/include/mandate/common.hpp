#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mandate {

// Error taxonomy, mirrored in CLI exit codes: usage 1, data 2, numeric 3.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- FNV-1a 64-bit hashing -------------------------------------------------

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(const void* bytes, std::size_t len,
                             std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

// Incremental hasher for content fingerprints (datasets, PE caches).
class HashStream {
public:
    void update(const void* bytes, std::size_t len) {
        h_ = fnv1a64(bytes, len, h_);
    }
    template <typename T>
    void put(const T& pod) {
        static_assert(std::is_trivially_copyable_v<T>);
        update(&pod, sizeof(T));
    }
    void put_str(std::string_view s) {
        std::uint64_t n = s.size();
        put(n);
        update(s.data(), s.size());
    }
    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = kFnvOffset;
};

// Shortest-exact decimal for doubles; used for all text artifacts so reruns
// are byte-identical.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace mandate
