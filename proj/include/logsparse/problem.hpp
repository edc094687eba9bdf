#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include "logsparse/rng.hpp"

namespace logsparse {

struct ProblemConfig {
    int n = 0;             // signal dimension N
    double alpha = 0.5;    // measurement rate M/N
    double rho = 0.1;      // signal density
    double sigma2 = 0.0;   // noise variance
    std::uint64_t seed = 0;

    int m() const {
        const long mm = std::lround(alpha * n);
        return static_cast<int>(mm < 1 ? 1 : mm);
    }

    void validate() const {
        if (n < 1)
            throw std::domain_error("ProblemConfig: n must be >= 1");
        if (!(alpha > 0.0))
            throw std::domain_error("ProblemConfig: alpha must be positive");
        if (!(rho >= 0.0 && rho <= 1.0))
            throw std::domain_error("ProblemConfig: rho must be in [0, 1]");
        if (!(sigma2 >= 0.0))
            throw std::domain_error("ProblemConfig: sigma2 must be non-negative");
    }
};

struct ProblemInstance {
    Eigen::MatrixXd a;       // M x N measurement matrix
    Eigen::VectorXd x_true;  // length N
    Eigen::VectorXd noise;   // length M
    Eigen::VectorXd y;       // A * x_true + noise
    ProblemConfig config;
};

/// Gaussian A with entry variance 1/N, Bernoulli-Gaussian signal, Gaussian
/// noise. Deterministic given config.seed.
inline ProblemInstance generate_instance(const ProblemConfig& config) {
    config.validate();
    const int n = config.n;
    const int m = config.m();
    Rng rng(config.seed);

    ProblemInstance inst;
    inst.config = config;
    inst.a.resize(m, n);
    const double col_scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            inst.a(i, j) = col_scale * rng.normal();

    inst.x_true.resize(n);
    for (int j = 0; j < n; ++j) {
        const double u = rng.uniform();
        const double g = rng.normal();
        inst.x_true(j) = (u < config.rho) ? g : 0.0;
    }

    inst.noise.resize(m);
    const double noise_scale = std::sqrt(config.sigma2);
    for (int i = 0; i < m; ++i)
        inst.noise(i) = noise_scale * rng.normal();

    inst.y = inst.a * inst.x_true + inst.noise;
    return inst;
}

inline double mse(const Eigen::VectorXd& x_hat, const Eigen::VectorXd& x_true) {
    if (x_hat.size() != x_true.size())
        throw std::domain_error("mse: length mismatch");
    return (x_hat - x_true).squaredNorm() / static_cast<double>(x_hat.size());
}

namespace detail {

inline void write_doubles(std::ostream& os, const double* p, std::size_t count) {
    os.write(reinterpret_cast<const char*>(p),
             static_cast<std::streamsize>(count * sizeof(double)));
}

inline void read_doubles(std::istream& is, double* p, std::size_t count) {
    is.read(reinterpret_cast<char*>(p),
            static_cast<std::streamsize>(count * sizeof(double)));
}

}  // namespace detail

/// Flat binary container for regression fixtures: header, then A (row-major),
/// x_true, noise, y.
inline void save_instance(const ProblemInstance& inst, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("save_instance: cannot open " + path);
    const char magic[4] = {'L', 'S', 'P', '1'};
    os.write(magic, 4);
    const std::int64_t n = inst.config.n;
    const std::int64_t m = inst.a.rows();
    os.write(reinterpret_cast<const char*>(&n), sizeof(n));
    os.write(reinterpret_cast<const char*>(&m), sizeof(m));
    os.write(reinterpret_cast<const char*>(&inst.config.alpha), sizeof(double));
    os.write(reinterpret_cast<const char*>(&inst.config.rho), sizeof(double));
    os.write(reinterpret_cast<const char*>(&inst.config.sigma2), sizeof(double));
    os.write(reinterpret_cast<const char*>(&inst.config.seed), sizeof(std::uint64_t));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a_rm = inst.a;
    detail::write_doubles(os, a_rm.data(), static_cast<std::size_t>(a_rm.size()));
    detail::write_doubles(os, inst.x_true.data(), static_cast<std::size_t>(n));
    detail::write_doubles(os, inst.noise.data(), static_cast<std::size_t>(m));
    detail::write_doubles(os, inst.y.data(), static_cast<std::size_t>(m));
    if (!os)
        throw std::runtime_error("save_instance: write failed for " + path);
}

inline ProblemInstance load_instance(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("load_instance: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || magic[0] != 'L' || magic[1] != 'S' || magic[2] != 'P' || magic[3] != '1')
        throw std::runtime_error("load_instance: bad magic in " + path);
    std::int64_t n = 0, m = 0;
    is.read(reinterpret_cast<char*>(&n), sizeof(n));
    is.read(reinterpret_cast<char*>(&m), sizeof(m));
    ProblemInstance inst;
    inst.config.n = static_cast<int>(n);
    is.read(reinterpret_cast<char*>(&inst.config.alpha), sizeof(double));
    is.read(reinterpret_cast<char*>(&inst.config.rho), sizeof(double));
    is.read(reinterpret_cast<char*>(&inst.config.sigma2), sizeof(double));
    is.read(reinterpret_cast<char*>(&inst.config.seed), sizeof(std::uint64_t));
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a_rm(m, n);
    detail::read_doubles(is, a_rm.data(), static_cast<std::size_t>(a_rm.size()));
    inst.a = a_rm;
    inst.x_true.resize(n);
    inst.noise.resize(m);
    inst.y.resize(m);
    detail::read_doubles(is, inst.x_true.data(), static_cast<std::size_t>(n));
    detail::read_doubles(is, inst.noise.data(), static_cast<std::size_t>(m));
    detail::read_doubles(is, inst.y.data(), static_cast<std::size_t>(m));
    if (!is)
        throw std::runtime_error("load_instance: truncated file " + path);
    return inst;
}

}  // namespace logsparse
