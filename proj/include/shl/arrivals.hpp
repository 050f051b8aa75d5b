#pragma once

// Unit-intensity Poisson arrivals on a window [lo, hi] x [0, horizon].
//
// Every stream is a pure function of (seed, stream_id): the pair is hashed
// into a seed sequence for a private Mersenne Twister, so samples can be
// generated in any order, on any thread, with identical results.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace shl {

struct Arrival {
    double x = 0.0;
    double t = 0.0;
    friend bool operator==(const Arrival&, const Arrival&) = default;
};

struct Window {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
    friend bool operator==(const Window&, const Window&) = default;
};

/// Requested stream would not fit the arrival budget.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Default cap on materialized arrivals (16 bytes each).
inline constexpr double kDefaultArrivalBudget = 5.0e7;

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stream identifier for sample `sample` of experiment cell `cell`.
inline std::uint64_t derive_stream_id(std::uint64_t cell, std::uint64_t sample) {
    return (cell << 40) ^ sample;
}

/// Per-stream uniform/exponential source.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream_id) : engine_(make_engine(seed, stream_id)) {}

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

private:
    static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t state = seed;
        const std::uint64_t a = splitmix64(state);
        state ^= stream_id;
        const std::uint64_t b = splitmix64(state);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                          static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
        return std::mt19937_64(seq);
    }

    std::mt19937_64 engine_;
};

inline void validate_stream_shape(Window window, double horizon) {
    if (!(window.lo < window.hi)) throw std::invalid_argument("arrival window needs lo < hi");
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("horizon must be finite and >= 0");
}

/// Lazily produces arrivals in increasing time order. Inter-arrival gaps
/// are exponential with rate equal to the window width; positions are
/// uniform on the window. Restricted to [0, horizon] this is the same law
/// as a Poisson count of sorted uniform times.
class ArrivalGenerator {
public:
    ArrivalGenerator(Window window, double horizon, std::uint64_t seed, std::uint64_t stream_id)
        : window_(window), horizon_(horizon), rng_(seed, stream_id) {
        validate_stream_shape(window, horizon);
    }

    std::optional<Arrival> next() {
        if (done_) return std::nullopt;
        clock_ += rng_.exponential(window_.width());
        if (clock_ > horizon_) {
            done_ = true;
            return std::nullopt;
        }
        const double x = window_.lo + window_.width() * rng_.uniform();
        return Arrival{x < window_.hi ? x : window_.hi, clock_};
    }

    Window window() const { return window_; }
    double horizon() const { return horizon_; }

private:
    Window window_;
    double horizon_;
    StreamRng rng_;
    double clock_ = 0.0;
    bool done_ = false;
};

/// Materialized, time-ordered stream.
struct EventStream {
    Window window;
    double horizon = 0.0;
    std::vector<Arrival> arrivals;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

inline EventStream sample_arrivals(double window_lo, double window_hi, double horizon, std::uint64_t seed,
                                   std::uint64_t stream_id, double budget = kDefaultArrivalBudget) {
    const Window window{window_lo, window_hi};
    validate_stream_shape(window, horizon);
    const double expected = window.width() * horizon;
    if (expected > budget) {
        throw CapacityError("expected " + std::to_string(expected) + " arrivals exceeds the budget of " +
                            std::to_string(budget) + "; use ArrivalGenerator to stream them");
    }
    EventStream stream{window, horizon, {}, seed, stream_id};
    stream.arrivals.reserve(static_cast<std::size_t>(expected + 6.0 * std::sqrt(expected) + 16.0));
    ArrivalGenerator gen(window, horizon, seed, stream_id);
    while (auto a = gen.next()) stream.arrivals.push_back(*a);
    return stream;
}

/// Replays a materialized stream through the same interface as the
/// generator.
class StreamCursor {
public:
    explicit StreamCursor(const EventStream& stream) : stream_(&stream) {}

    std::optional<Arrival> next() {
        if (pos_ >= stream_->arrivals.size()) return std::nullopt;
        return stream_->arrivals[pos_++];
    }
    Window window() const { return stream_->window; }
    double horizon() const { return stream_->horizon; }

private:
    const EventStream* stream_;
    std::size_t pos_ = 0;
};

template <class S>
concept ArrivalSource = requires(S& s) {
    { s.next() } -> std::same_as<std::optional<Arrival>>;
    { s.window() } -> std::same_as<Window>;
    { s.horizon() } -> std::convertible_to<double>;
};

/// The arrivals of `source` that land in `window`; the restriction of a
/// Poisson process to a sub-window is again a Poisson process there.
template <ArrivalSource S>
class WindowRestriction {
public:
    WindowRestriction(S source, Window window) : source_(std::move(source)), window_(window) {
        const Window outer = source_.window();
        if (window.lo < outer.lo || window.hi > outer.hi || !(window.lo < window.hi)) {
            throw std::invalid_argument("restriction window must lie inside the source window");
        }
    }

    std::optional<Arrival> next() {
        while (auto a = source_.next()) {
            if (window_.contains(a->x)) return a;
        }
        return std::nullopt;
    }
    Window window() const { return window_; }
    double horizon() const { return source_.horizon(); }

private:
    S source_;
    Window window_;
};

}  // namespace shl
