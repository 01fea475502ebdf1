#include "pgm/factor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgm/kernels.hpp"

namespace pgm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t table_size(const std::vector<int>& cards) {
    std::size_t n = 1;
    for (int c : cards) n *= static_cast<std::size_t>(c);
    return n;
}
}  // namespace

Factor::Factor() : table_{1.0} {}

Factor::Factor(std::vector<VarId> scope, std::vector<int> cards, std::vector<double> table,
               Domain domain)
    : scope_(std::move(scope)), cards_(std::move(cards)), table_(std::move(table)),
      domain_(domain) {
    validate();
}

Factor Factor::ones(std::vector<VarId> scope, std::vector<int> cards) {
    std::size_t n = table_size(cards);
    return Factor(std::move(scope), std::move(cards), std::vector<double>(n, 1.0));
}

Factor Factor::constant(double value) {
    return Factor({}, {}, {value});
}

void Factor::validate() const {
    if (scope_.size() != cards_.size())
        throw ValidationError("factor scope and cardinality lists differ in length");
    for (std::size_t i = 0; i < scope_.size(); ++i) {
        if (cards_[i] < 1) throw ValidationError("factor variable with cardinality < 1");
        for (std::size_t j = i + 1; j < scope_.size(); ++j)
            if (scope_[i] == scope_[j])
                throw ValidationError("duplicate variable " + std::to_string(scope_[i]) +
                                      " in factor scope");
    }
    if (table_.size() != table_size(cards_))
        throw ValidationError("factor table length " + std::to_string(table_.size()) +
                              ", expected " + std::to_string(table_size(cards_)));
    for (double v : table_) {
        if (std::isnan(v)) throw ValidationError("NaN in factor table");
        if (domain_ == Domain::Linear) {
            if (v < 0.0) throw ValidationError("negative entry in linear-domain factor");
        } else {
            if (v == std::numeric_limits<double>::infinity())
                throw ValidationError("+inf entry in log-domain factor");
        }
    }
}

bool Factor::has(VarId v) const { return position(v) >= 0; }

int Factor::position(VarId v) const {
    for (std::size_t i = 0; i < scope_.size(); ++i)
        if (scope_[i] == v) return static_cast<int>(i);
    return -1;
}

int Factor::card(VarId v) const {
    int p = position(v);
    if (p < 0) throw ValidationError("variable " + std::to_string(v) + " not in factor scope");
    return cards_[p];
}

std::size_t Factor::index_of(const Assignment& a) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scope_.size(); ++i) {
        int s = a.at(scope_[i]);
        if (s < 0 || s >= cards_[i])
            throw ValidationError("state " + std::to_string(s) + " out of range for variable " +
                                  std::to_string(scope_[i]));
        idx = idx * static_cast<std::size_t>(cards_[i]) + static_cast<std::size_t>(s);
    }
    return idx;
}

Factor Factor::product(const Factor& g) const {
    if (domain_ != g.domain_)
        throw ValidationError("factor product across table domains");

    std::vector<VarId> scope = scope_;
    std::vector<int> cards = cards_;
    for (std::size_t i = 0; i < g.scope_.size(); ++i) {
        int p = position(g.scope_[i]);
        if (p < 0) {
            scope.push_back(g.scope_[i]);
            cards.push_back(g.cards_[i]);
        } else if (cards_[p] != g.cards_[i]) {
            throw ValidationError("alphabet mismatch on shared variable " +
                                  std::to_string(g.scope_[i]));
        }
    }

    // Fast path: identical scopes in identical order.
    if (scope_ == g.scope_) {
        std::vector<double> out(table_.size());
        if (domain_ == Domain::Linear) {
            kernels::mul(out.data(), table_.data(), g.table_.data(), out.size());
        } else {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = table_[i] + g.table_[i];
        }
        return Factor(scope, cards, std::move(out), domain_);
    }

    const std::size_t n = table_size(cards);
    const std::size_t axes = scope.size();

    // Per-result-axis strides into each operand (0 where the axis is absent).
    std::vector<std::size_t> stride_f(axes, 0), stride_g(axes, 0);
    {
        std::size_t s = 1;
        for (int i = static_cast<int>(scope_.size()) - 1; i >= 0; --i) {
            int p = 0;
            while (scope[p] != scope_[i]) ++p;
            stride_f[p] = s;
            s *= static_cast<std::size_t>(cards_[i]);
        }
        s = 1;
        for (int i = static_cast<int>(g.scope_.size()) - 1; i >= 0; --i) {
            int p = 0;
            while (scope[p] != g.scope_[i]) ++p;
            stride_g[p] = s;
            s *= static_cast<std::size_t>(g.cards_[i]);
        }
    }

    std::vector<double> out(n);
    std::vector<int> digits(axes, 0);
    std::size_t fi = 0, gi = 0;
    for (std::size_t lin = 0; lin < n; ++lin) {
        out[lin] = (domain_ == Domain::Linear) ? table_[fi] * g.table_[gi]
                                               : table_[fi] + g.table_[gi];
        // odometer increment, last axis fastest
        for (int a = static_cast<int>(axes) - 1; a >= 0; --a) {
            fi += stride_f[a];
            gi += stride_g[a];
            if (++digits[a] < cards[a]) break;
            fi -= stride_f[a] * static_cast<std::size_t>(cards[a]);
            gi -= stride_g[a] * static_cast<std::size_t>(cards[a]);
            digits[a] = 0;
        }
    }
    return Factor(std::move(scope), std::move(cards), std::move(out), domain_);
}

Factor Factor::marginalize(VarId v) const {
    if (domain_ != Domain::Linear)
        throw ValidationError("marginalize requires a linear-domain factor");
    int p = position(v);
    if (p < 0) throw ValidationError("variable " + std::to_string(v) + " not in factor scope");

    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < p; ++i) outer *= static_cast<std::size_t>(cards_[i]);
    for (std::size_t i = p + 1; i < cards_.size(); ++i) inner *= static_cast<std::size_t>(cards_[i]);
    const std::size_t k = static_cast<std::size_t>(cards_[p]);

    std::vector<VarId> scope = scope_;
    std::vector<int> cards = cards_;
    scope.erase(scope.begin() + p);
    cards.erase(cards.begin() + p);

    std::vector<double> out(outer * inner);
    kernels::sum_axis(table_.data(), out.data(), outer, k, inner);
    return Factor(std::move(scope), std::move(cards), std::move(out), domain_);
}

Factor::MaxOutResult Factor::max_out(VarId v) const {
    int p = position(v);
    if (p < 0) throw ValidationError("variable " + std::to_string(v) + " not in factor scope");

    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < p; ++i) outer *= static_cast<std::size_t>(cards_[i]);
    for (std::size_t i = p + 1; i < cards_.size(); ++i) inner *= static_cast<std::size_t>(cards_[i]);
    const std::size_t k = static_cast<std::size_t>(cards_[p]);

    std::vector<VarId> scope = scope_;
    std::vector<int> cards = cards_;
    scope.erase(scope.begin() + p);
    cards.erase(cards.begin() + p);

    std::vector<double> out(outer * inner);
    std::vector<int> arg(outer * inner);
    kernels::max_axis(table_.data(), out.data(), arg.data(), outer, k, inner);
    return {Factor(std::move(scope), std::move(cards), std::move(out), domain_), std::move(arg)};
}

Factor Factor::reduce(VarId v, int state) const {
    int p = position(v);
    if (p < 0) throw ValidationError("variable " + std::to_string(v) + " not in factor scope");
    if (state < 0 || state >= cards_[p])
        throw ValidationError("state out of range in reduce");

    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < p; ++i) outer *= static_cast<std::size_t>(cards_[i]);
    for (std::size_t i = p + 1; i < cards_.size(); ++i) inner *= static_cast<std::size_t>(cards_[i]);
    const std::size_t k = static_cast<std::size_t>(cards_[p]);

    std::vector<VarId> scope = scope_;
    std::vector<int> cards = cards_;
    scope.erase(scope.begin() + p);
    cards.erase(cards.begin() + p);

    std::vector<double> out(outer * inner);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < inner; ++i)
            out[o * inner + i] = table_[(o * k + static_cast<std::size_t>(state)) * inner + i];
    return Factor(std::move(scope), std::move(cards), std::move(out), domain_);
}

double Factor::sum() const { return kernels::sum(table_.data(), table_.size()); }

double Factor::max_value() const { return kernels::max(table_.data(), table_.size()); }

Factor Factor::normalized() const {
    if (domain_ != Domain::Linear)
        throw ValidationError("normalized requires a linear-domain factor");
    double z = sum();
    if (z <= 0.0) throw ZeroMassError("factor normalizes to zero");
    Factor out = *this;
    kernels::scale(out.table_.data(), 1.0 / z, out.table_.size());
    return out;
}

Factor Factor::to_log() const {
    if (domain_ == Domain::Log) return *this;
    Factor out = *this;
    out.domain_ = Domain::Log;
    for (double& v : out.table_) v = (v == 0.0) ? kNegInf : std::log(v);
    return out;
}

Factor Factor::to_linear() const {
    if (domain_ == Domain::Linear) return *this;
    Factor out = *this;
    out.domain_ = Domain::Linear;
    for (double& v : out.table_) v = std::exp(v);
    return out;
}

std::pair<Factor, double> Factor::to_linear_shifted() const {
    if (domain_ == Domain::Linear) return {*this, 0.0};
    double shift = max_value();
    if (shift == kNegInf) throw ZeroMassError("log-domain factor is identically zero");
    Factor out = *this;
    out.domain_ = Domain::Linear;
    for (double& v : out.table_) v = std::exp(v - shift);
    return {std::move(out), shift};
}

}  // namespace pgm
