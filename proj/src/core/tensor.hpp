#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace semples {

// Errors are classified so the C API / CLI can map them to exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dense row-major float64 tensor. Rank up to 4 in practice; images and
/// feature maps are channel-planar {C,H,W}.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(count(shape), 0.0) {}
    Tensor(std::vector<int> s, std::vector<double> data) : shape(std::move(s)), v(std::move(data)) {
        if (v.size() != count(shape)) throw std::invalid_argument("Tensor: data/shape mismatch");
    }

    static std::size_t count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dim");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t size() const { return v.size(); }
    int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }

    double& at(std::size_t i) { return v[i]; }
    double at(std::size_t i) const { return v[i]; }

    bool finite() const;
    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<int> s, double x);
    static Tensor scalar(double x) { return Tensor({1}, {x}); }
    static Tensor randn(std::vector<int> s, std::mt19937_64& rng, double stddev = 1.0);
};

std::string shape_str(const std::vector<int>& s);

// FNV-1a, used for deterministic hashing of names and parameter bytes.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t hash_tensor(const Tensor& t);

}  // namespace semples
