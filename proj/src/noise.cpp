#include "ppgdn/noise.hpp"

#include <random>
#include <stdexcept>

namespace ppgdn::noise {

std::string kind_name(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::gaussian: return "gaussian";
        case NoiseKind::poisson: return "poisson";
        case NoiseKind::uniform: return "uniform";
        case NoiseKind::salt_pepper: return "salt_pepper";
    }
    throw std::invalid_argument("unknown noise kind");
}

NoiseKind kind_from_name(const std::string& name) {
    if (name == "gaussian") return NoiseKind::gaussian;
    if (name == "poisson") return NoiseKind::poisson;
    if (name == "uniform") return NoiseKind::uniform;
    if (name == "salt_pepper") return NoiseKind::salt_pepper;
    throw std::invalid_argument("unknown noise kind: " + name);
}

NoiseSpec NoiseSpec::gaussian(double variance, std::uint64_t seed) {
    NoiseSpec s;
    s.kind = NoiseKind::gaussian;
    s.variance = variance;
    s.seed = seed;
    return s;
}

NoiseSpec NoiseSpec::poisson(double rate, std::uint64_t seed, bool center) {
    NoiseSpec s;
    s.kind = NoiseKind::poisson;
    s.rate = rate;
    s.poisson_center = center;
    s.seed = seed;
    return s;
}

NoiseSpec NoiseSpec::uniform(double low, double high, std::uint64_t seed) {
    NoiseSpec s;
    s.kind = NoiseKind::uniform;
    s.low = low;
    s.high = high;
    s.seed = seed;
    return s;
}

NoiseSpec NoiseSpec::salt_pepper(double density, std::uint64_t seed) {
    NoiseSpec s;
    s.kind = NoiseKind::salt_pepper;
    s.density = density;
    s.seed = seed;
    return s;
}

void NoiseSpec::validate() const {
    switch (kind) {
        case NoiseKind::gaussian:
            if (!(variance > 0.0))
                throw std::invalid_argument(
                    "gaussian noise requires variance > 0");
            return;
        case NoiseKind::poisson:
            if (!(rate > 0.0))
                throw std::invalid_argument("poisson noise requires rate > 0");
            return;
        case NoiseKind::uniform:
            if (!(low < high))
                throw std::invalid_argument(
                    "uniform noise requires low < high");
            return;
        case NoiseKind::salt_pepper:
            if (!(density > 0.0 && density < 1.0))
                throw std::invalid_argument(
                    "salt_pepper noise requires density in (0,1)");
            return;
    }
    throw std::invalid_argument("unknown noise kind");
}

std::vector<double> corrupt(const std::vector<double>& x,
                            const NoiseSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::vector<double> out(x);

    switch (spec.kind) {
        case NoiseKind::gaussian: {
            std::normal_distribution<double> dist(0.0,
                                                  std::sqrt(spec.variance));
            for (double& v : out) v += dist(rng);
            break;
        }
        case NoiseKind::poisson: {
            std::poisson_distribution<long> dist(spec.rate);
            const double shift = spec.poisson_center ? spec.rate : 0.0;
            for (double& v : out)
                v += static_cast<double>(dist(rng)) - shift;
            break;
        }
        case NoiseKind::uniform: {
            std::uniform_real_distribution<double> dist(spec.low, spec.high);
            for (double& v : out) v += dist(rng);
            break;
        }
        case NoiseKind::salt_pepper: {
            std::uniform_real_distribution<double> coin(0.0, 1.0);
            const double half = spec.density / 2.0;
            for (double& v : out) {
                const double u = coin(rng);
                if (u < half) v = 0.0;
                else if (u < spec.density) v = 1.0;
            }
            break;
        }
    }
    return out;
}

}  // namespace ppgdn::noise
