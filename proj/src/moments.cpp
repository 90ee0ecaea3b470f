#include "mcstats/moments.hpp"

namespace mcstats {

std::string_view to_string(MomentAlgorithm algorithm) noexcept {
    switch (algorithm) {
        case MomentAlgorithm::Naive: return "naive";
        case MomentAlgorithm::NaiveKahan: return "naive-kahan";
        case MomentAlgorithm::ShiftedNaiveKahan: return "shifted-naive-kahan";
        case MomentAlgorithm::Ling: return "ling";
        case MomentAlgorithm::LingKahan: return "ling-kahan";
        case MomentAlgorithm::ChanLewisKahan: return "chan-lewis-kahan";
        case MomentAlgorithm::NaiveKlein: return "naive-klein";
    }
    return "unknown";
}

MomentAlgorithm parse_moment_algorithm(std::string_view tag) {
    for (const auto algorithm : kAllMomentAlgorithms) {
        if (to_string(algorithm) == tag) return algorithm;
    }
    throw std::invalid_argument("unknown moment algorithm '" + std::string(tag) + "'");
}

template class MomentAccumulator<float>;
template class MomentAccumulator<double>;

}  // namespace mcstats
