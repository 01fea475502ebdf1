#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "pgm/types.hpp"

namespace pgm {

/// Table domain: entries are weights, or logs of weights (-inf encodes a
/// hard zero).
enum class Domain { Linear, Log };

/// Nonnegative table over an ordered variable scope, row-major with the last
/// scope variable fastest. Immutable after construction apart from inspection.
class Factor {
public:
    struct MaxOutResult;

    /// Scalar unit factor (empty scope, single entry 1).
    Factor();

    Factor(std::vector<VarId> scope, std::vector<int> cards, std::vector<double> table,
           Domain domain = Domain::Linear);

    /// Factor of all ones over the given scope.
    static Factor ones(std::vector<VarId> scope, std::vector<int> cards);

    /// Scalar factor with a single entry.
    static Factor constant(double value);

    const std::vector<VarId>& scope() const { return scope_; }
    const std::vector<int>& cards() const { return cards_; }
    const std::vector<double>& table() const { return table_; }
    std::vector<double>& table() { return table_; }
    Domain domain() const { return domain_; }
    std::size_t size() const { return table_.size(); }
    int arity() const { return static_cast<int>(scope_.size()); }

    bool has(VarId v) const;
    /// Position of v in the scope, -1 if absent.
    int position(VarId v) const;
    int card(VarId v) const;

    /// Linear index of a (super)assignment covering the whole scope.
    std::size_t index_of(const Assignment& a) const;
    double at(const Assignment& a) const { return table_[index_of(a)]; }

    /// Pointwise product (sum in log domain); scope is this factor's scope
    /// followed by the other's new variables.
    Factor product(const Factor& g) const;

    /// Sum v out (linear domain only).
    Factor marginalize(VarId v) const;

    /// Max v out; ties resolve to the lowest state index. The argmax trace
    /// records, per remaining joint state, the maximizing state of v.
    MaxOutResult max_out(VarId v) const;

    /// Slice at v = state and drop v from the scope.
    Factor reduce(VarId v, int state) const;

    double sum() const;
    double max_value() const;
    Factor normalized() const;

    Factor to_log() const;
    /// Exact exp (log domain) or copy (linear).
    Factor to_linear() const;
    /// Max-shifted exp: returns (exp(t - s), s) with s = max entry, so that
    /// true table = e^s * returned table. Linear input returns (copy, 0).
    std::pair<Factor, double> to_linear_shifted() const;

private:
    std::vector<VarId> scope_;
    std::vector<int> cards_;
    std::vector<double> table_;
    Domain domain_ = Domain::Linear;

    void validate() const;
};

struct Factor::MaxOutResult {
    Factor factor;
    std::vector<int> argmax;  // indexed like factor.table()
};

}  // namespace pgm
