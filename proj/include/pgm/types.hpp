#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>

namespace pgm {

using VarId = int;

/// Number of states of one discrete variable; states are indexed 0..size-1.
struct Alphabet {
    int size = 2;
};

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad file, inconsistent scopes, invalid arguments.
struct ValidationError : Error {
    using Error::Error;
};

/// Instance exceeds a configured exact-computation guard.
struct IntractableError : Error {
    using Error::Error;
};

/// A joint, partition function, or message collapsed to exactly zero.
struct ZeroMassError : Error {
    using Error::Error;
};

/// Partial or complete map from variable id to state index.
class Assignment {
public:
    Assignment() = default;
    Assignment(std::initializer_list<std::pair<const VarId, int>> init) : values_(init) {}

    void set(VarId v, int state) { values_[v] = state; }
    bool contains(VarId v) const { return values_.count(v) != 0; }
    int at(VarId v) const {
        auto it = values_.find(v);
        if (it == values_.end())
            throw ValidationError("assignment does not cover variable " + std::to_string(v));
        return it->second;
    }
    std::size_t size() const { return values_.size(); }

    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    bool operator==(const Assignment& other) const { return values_ == other.values_; }

private:
    std::map<VarId, int> values_;
};

/// Seeded generator with an explicit uniform mapping so sampled datasets are
/// reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    int uniform_int(int n) {  // [0, n)
        return static_cast<int>(uniform01() * n) % n;
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace pgm
