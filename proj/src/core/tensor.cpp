#include "core/tensor.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

namespace semples {

bool Tensor::finite() const {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

Tensor Tensor::full(std::vector<int> s, double x) {
    Tensor t(std::move(s));
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
}

Tensor Tensor::randn(std::vector<int> s, std::mt19937_64& rng, double stddev) {
    Tensor t(std::move(s));
    std::normal_distribution<double> dist(0.0, stddev);
    for (double& x : t.v) x = dist(rng);
    return t;
}

std::string shape_str(const std::vector<int>& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed) {
    return fnv1a64(s.data(), s.size(), seed);
}

std::uint64_t hash_tensor(const Tensor& t) {
    std::uint64_t h = fnv1a64(t.shape.data(), t.shape.size() * sizeof(int));
    return fnv1a64(t.v.data(), t.v.size() * sizeof(double), h);
}

}  // namespace semples
