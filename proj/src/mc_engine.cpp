#include "mcstats/mc_engine.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "mcstats/rng.hpp"

namespace mcstats {
namespace {

// Prices one path at the three spot levels from a single set of draws.
class PathPricer {
public:
    PathPricer(const SimulationPlan& plan, const PayoffSpec& spec)
        : spec_(spec), dims_(plan.dims_per_step), steps_(plan.steps) {
        const double dt = spec.maturity / static_cast<double>(plan.steps);
        drift_ = -0.5 * spec.volatility * spec.volatility * dt;
        diffusion_ = spec.volatility * std::sqrt(dt);
        spots_ = {spec.spot - plan.epsilon * spec.spot, spec.spot, spec.spot + plan.epsilon * spec.spot};
    }

    // The first coordinate of each step drives the asset; the remaining
    // dims_per_step - 1 coordinates belong to the path but are unused by a
    // single-asset model.
    std::array<double, kBumpLevels> price(StreamCursor& cursor) const noexcept {
        double exponent = 0.0;
        for (std::uint64_t m = 0; m < steps_; ++m) {
            const double z = cursor.next_normal();
            if (dims_ > 1) cursor.seek(cursor.position() + dims_ - 1);
            exponent = exponent + (drift_ + diffusion_ * z);
        }
        const double growth = std::exp(exponent);
        return {payoff(spec_, spots_[kDown] * growth), payoff(spec_, spots_[kMid] * growth),
                payoff(spec_, spots_[kUp] * growth)};
    }

private:
    PayoffSpec spec_;
    std::uint64_t dims_;
    std::uint64_t steps_;
    double drift_ = 0;
    double diffusion_ = 0;
    std::array<double, kBumpLevels> spots_{};
};

template <typename Fn>
void for_each_path(const SimulationPlan& plan, const PayoffSpec& spec, std::uint64_t first, std::uint64_t last,
                   Fn&& fn) {
    const PathPricer pricer(plan, spec);
    StreamCursor cursor(plan.seed);
    for (std::uint64_t path = first; path <= last; ++path) {
        cursor.skip_to(path, plan.dims_per_step, plan.steps);
        fn(path, cursor, pricer);
    }
}

}  // namespace

std::string_view to_string(PayoffKind kind) noexcept {
    return kind == PayoffKind::AssetOrNothing ? "asset-or-nothing" : "cash-or-nothing";
}

void PayoffSpec::validate() const {
    if (!(strike > 0)) throw std::invalid_argument("strike must be positive");
    if (!(maturity > 0)) throw std::invalid_argument("maturity must be positive");
    if (!(spot > 0)) throw std::invalid_argument("spot must be positive");
    if (!(volatility >= 0)) throw std::invalid_argument("volatility must be non-negative");
    if (!(quantity >= 0)) throw std::invalid_argument("quantity must be non-negative");
    if (!(rebate >= 0)) throw std::invalid_argument("rebate must be non-negative");
    if (kind == PayoffKind::AssetOrNothing && rebate != 0) {
        throw std::invalid_argument("a rebate only applies to cash-or-nothing payoffs");
    }
}

void SimulationPlan::validate() const {
    if (paths == 0) throw std::invalid_argument("path count must be at least 1");
    if (dims_per_step == 0) throw std::invalid_argument("dims per step must be at least 1");
    if (steps == 0) throw std::invalid_argument("step count must be at least 1");
    if (block_size == 0) throw std::invalid_argument("block size must be at least 1");
    if (workers == 0) throw std::invalid_argument("worker count must be at least 1");
    if (!(epsilon >= 0 && epsilon < 1)) throw std::invalid_argument("epsilon must lie in [0, 1)");
}

std::pair<std::uint64_t, std::uint64_t> SimulationPlan::block_paths(std::uint64_t block) const noexcept {
    const std::uint64_t first = block * block_size + 1;
    const std::uint64_t last = std::min(first + block_size - 1, paths);
    return {first, last};
}

double gbm_terminal(double spot, double volatility, double maturity, double z) noexcept {
    return spot * std::exp(0.0 + (-0.5 * volatility * volatility * maturity + volatility * std::sqrt(maturity) * z));
}

double payoff(const PayoffSpec& spec, double terminal) noexcept {
    const bool in_the_money = terminal >= spec.strike;
    switch (spec.kind) {
        case PayoffKind::AssetOrNothing: return in_the_money ? spec.quantity * terminal : 0.0;
        case PayoffKind::CashOrNothing: return in_the_money ? spec.quantity : spec.rebate;
    }
    return 0.0;
}

GammaEstimate gamma_fd(double v_up, double v_mid, double v_down, double spot, double epsilon) {
    if (!(epsilon > 0)) throw std::invalid_argument("gamma_fd: epsilon must be positive");
    GammaEstimate g{v_up, v_mid, v_down, 0.0, epsilon};
    g.gamma = (v_up - 2.0 * v_mid + v_down) / (spot * spot * epsilon * epsilon);
    return g;
}

std::vector<std::uint64_t> ReductionOrder::permutation(std::uint64_t blocks) const {
    std::vector<std::uint64_t> order(blocks);
    for (std::uint64_t i = 0; i < blocks; ++i) order[i] = i;
    if (kind == Kind::ByCompletion) seeded_shuffle(std::span<std::uint64_t>(order), seed);
    return order;
}

template <IeeeReal Real>
BlockResult<Real> run_block(const SimulationPlan& plan, const PayoffSpec& spec, std::uint64_t block,
                            std::vector<ConsumedRange>* audit) {
    if (block >= plan.block_count()) {
        throw std::out_of_range("block index " + std::to_string(block) + " outside plan of " +
                                std::to_string(plan.block_count()) + " blocks");
    }
    BlockResult<Real> result{block,
                             {MomentAccumulator<Real>(plan.algorithm), MomentAccumulator<Real>(plan.algorithm),
                              MomentAccumulator<Real>(plan.algorithm)}};
    const auto [first, last] = plan.block_paths(block);
    for_each_path(plan, spec, first, last, [&](std::uint64_t path, StreamCursor& cursor, const PathPricer& pricer) {
        const std::uint64_t start = cursor.position();
        const auto values = pricer.price(cursor);
        for (std::size_t level = 0; level < kBumpLevels; ++level) {
            result.levels[level].update(static_cast<Real>(values[level]));
        }
        if (audit) audit->push_back({path, start, start + plan.dims_per_path()});
    });
    return result;
}

template <IeeeReal Real>
std::vector<BlockResult<Real>> run_blocks(const SimulationPlan& plan, const PayoffSpec& spec) {
    plan.validate();
    spec.validate();
    const std::uint64_t blocks = plan.block_count();
    std::vector<BlockResult<Real>> results(blocks);

    std::atomic<std::uint64_t> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    std::uint64_t failed_block = 0;

    auto work = [&] {
        for (std::uint64_t b = next.fetch_add(1); b < blocks; b = next.fetch_add(1)) {
            try {
                results[b] = run_block<Real>(plan, spec, b);
            } catch (...) {
                const std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                    failed_block = b;
                }
                next.store(blocks);
            }
        }
    };

    const unsigned threads = static_cast<unsigned>(std::min<std::uint64_t>(plan.workers, blocks));
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    }

    if (failure) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            throw std::runtime_error("worker failed on block " + std::to_string(failed_block) + ": " + e.what());
        }
    }
    return results;
}

template <IeeeReal Real>
std::array<MomentAccumulator<Real>, kBumpLevels> reduce(const std::vector<BlockResult<Real>>& blocks,
                                                        const ReductionOrder& order) {
    if (blocks.empty()) throw std::invalid_argument("nothing to reduce");
    const MomentAlgorithm algorithm = blocks.front().levels[0].algorithm();
    std::array<MomentAccumulator<Real>, kBumpLevels> merged{
        MomentAccumulator<Real>(algorithm), MomentAccumulator<Real>(algorithm), MomentAccumulator<Real>(algorithm)};
    for (const std::uint64_t b : order.permutation(blocks.size())) {
        for (std::size_t level = 0; level < kBumpLevels; ++level) merged[level].merge(blocks[b].levels[level]);
    }
    for (auto& m : merged) m.normalize();
    return merged;
}

template <IeeeReal Real>
ParallelRunResult<Real> summarize(const std::array<MomentAccumulator<Real>, kBumpLevels>& merged,
                                  const SimulationPlan& plan, const PayoffSpec& spec) {
    ParallelRunResult<Real> out;
    for (std::size_t level = 0; level < kBumpLevels; ++level) out.levels[level] = merged[level].finalize();
    const double up = static_cast<double>(out.levels[kUp].mean);
    const double mid = static_cast<double>(out.levels[kMid].mean);
    const double down = static_cast<double>(out.levels[kDown].mean);
    if (plan.epsilon > 0) {
        out.gamma = gamma_fd(up, mid, down, spec.spot, plan.epsilon);
    } else {
        out.gamma = {up, mid, down, std::nan(""), 0.0};
    }
    return out;
}

template <IeeeReal Real>
ParallelRunResult<Real> run_parallel(const SimulationPlan& plan, const PayoffSpec& spec, const ReductionOrder& order) {
    return summarize<Real>(reduce<Real>(run_blocks<Real>(plan, spec), order), plan, spec);
}

std::array<std::vector<double>, kBumpLevels> collect_payoffs(const SimulationPlan& plan, const PayoffSpec& spec) {
    plan.validate();
    spec.validate();
    std::array<std::vector<double>, kBumpLevels> out;
    for (auto& v : out) v.reserve(plan.paths);
    for_each_path(plan, spec, 1, plan.paths, [&](std::uint64_t, StreamCursor& cursor, const PathPricer& pricer) {
        const auto values = pricer.price(cursor);
        for (std::size_t level = 0; level < kBumpLevels; ++level) out[level].push_back(values[level]);
    });
    return out;
}

std::array<ExactAccumulator, kBumpLevels> exact_payoff_moments(const SimulationPlan& plan, const PayoffSpec& spec) {
    plan.validate();
    spec.validate();
    std::array<ExactAccumulator, kBumpLevels> out;
    for_each_path(plan, spec, 1, plan.paths, [&](std::uint64_t, StreamCursor& cursor, const PathPricer& pricer) {
        const auto values = pricer.price(cursor);
        for (std::size_t level = 0; level < kBumpLevels; ++level) out[level].add_moment(values[level]);
    });
    return out;
}

#define MCSTATS_INSTANTIATE(Real)                                                                                   \
    template BlockResult<Real> run_block<Real>(const SimulationPlan&, const PayoffSpec&, std::uint64_t,            \
                                               std::vector<ConsumedRange>*);                                       \
    template std::vector<BlockResult<Real>> run_blocks<Real>(const SimulationPlan&, const PayoffSpec&);            \
    template std::array<MomentAccumulator<Real>, kBumpLevels> reduce<Real>(const std::vector<BlockResult<Real>>&,  \
                                                                           const ReductionOrder&);                 \
    template ParallelRunResult<Real> summarize<Real>(const std::array<MomentAccumulator<Real>, kBumpLevels>&,      \
                                                     const SimulationPlan&, const PayoffSpec&);                    \
    template ParallelRunResult<Real> run_parallel<Real>(const SimulationPlan&, const PayoffSpec&,                  \
                                                        const ReductionOrder&);

MCSTATS_INSTANTIATE(float)
MCSTATS_INSTANTIATE(double)

#undef MCSTATS_INSTANTIATE

}  // namespace mcstats
