#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "tsxai/fcn.hpp"
#include "tsxai/tensor.hpp"

namespace fixture {

inline tsxai::Tensor3 random_tensor(std::size_t n, std::size_t c, std::size_t t, std::mt19937_64& rng,
                                    double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    tsxai::Tensor3 x(n, c, t);
    for (double& v : x.data()) v = dist(rng);
    return x;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

/// Small random architecture: channels <= max_channels, odd kernels <= 7.
inline tsxai::Architecture small_arch(std::mt19937_64& rng, std::size_t max_channels = 8,
                                      std::size_t max_input_channels = 2, std::size_t max_classes = 3) {
    std::uniform_int_distribution<std::size_t> ch(1, max_channels);
    std::uniform_int_distribution<std::size_t> in(1, max_input_channels);
    std::uniform_int_distribution<std::size_t> kernel(0, 3);
    std::uniform_int_distribution<std::size_t> classes(2, max_classes);
    tsxai::Architecture a;
    a.input_channels = in(rng);
    a.num_classes = classes(rng);
    for (auto& b : a.blocks) b = {ch(rng), 2 * kernel(rng) + 1};
    return a;
}

/// FCN with every parameter (biases and batch-norm affine terms included)
/// randomized, so no gradient is trivially zero by initialization.
inline tsxai::FcnParams randomized_params(const tsxai::Architecture& arch, std::mt19937_64& rng) {
    tsxai::FcnParams p = tsxai::FcnParams::init(arch, rng());
    std::uniform_real_distribution<double> small(-0.3, 0.3);
    std::uniform_real_distribution<double> gamma(0.5, 1.5);
    for (auto& block : p.blocks) {
        for (double& b : block.conv.bias) b = small(rng);
        for (double& g : block.bn.gamma) g = gamma(rng);
        for (double& b : block.bn.beta) b = small(rng);
        for (double& m : block.bn.running_mean) m = small(rng);
        for (double& v : block.bn.running_var) v = gamma(rng);
    }
    for (double& b : p.head.bias) b = small(rng);
    return p;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("tsxai_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixture
