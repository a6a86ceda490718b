#include "knowtrans/random.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace knowtrans {

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t count) {
    if (count > n) throw std::invalid_argument("sample_without_replacement: count > n");
    // Partial Fisher-Yates over a virtual identity permutation.
    std::unordered_map<std::size_t, std::size_t> swapped;
    auto value_at = [&](std::size_t i) {
        auto it = swapped.find(i);
        return it == swapped.end() ? i : it->second;
    };
    std::vector<std::size_t> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + below(n - i);
        const std::size_t vi = value_at(i);
        const std::size_t vj = value_at(j);
        swapped[j] = vi;
        out.push_back(vj);
    }
    return out;
}

}  // namespace knowtrans
