#include "pgm/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

namespace pgm::io {

namespace {

// Whitespace tokenizer that remembers line numbers for diagnostics.
class Tokens {
public:
    Tokens(std::istream& in, std::string name) : name_(std::move(name)) {
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) tokens_.emplace_back(tok, lineno);
        }
        last_line_ = lineno;
    }

    bool done() const { return pos_ >= tokens_.size(); }
    int line() const {
        return done() ? last_line_ : tokens_[pos_].second;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError(name_ + ":" + std::to_string(line()) + ": " + msg);
    }

    std::string next(const char* what) {
        if (done()) fail(std::string("unexpected end of file, expected ") + what);
        return tokens_[pos_++].first;
    }

    long integer(const char* what) {
        std::string tok = next(what);
        try {
            std::size_t used = 0;
            long v = std::stol(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail("expected " + std::string(what) + ", got '" + tok + "'");
        }
    }

    double real(const char* what) {
        std::string tok = next(what);
        try {
            std::size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail("expected " + std::string(what) + ", got '" + tok + "'");
        }
    }

private:
    std::string name_;
    std::vector<std::pair<std::string, int>> tokens_;
    std::size_t pos_ = 0;
    int last_line_ = 0;
};

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<int> read_cards(Tokens& t, long n) {
    if (n < 1) t.fail("variable count must be positive");
    std::vector<int> cards;
    for (long i = 0; i < n; ++i) {
        long c = t.integer("an alphabet size");
        if (c < 1) t.fail("alphabet size must be positive");
        cards.push_back(static_cast<int>(c));
    }
    return cards;
}

}  // namespace

ParsedModel parse_model(std::istream& in, const std::string& name) {
    Tokens t(in, name);
    std::string kind = t.next("MARKOV or BAYES");
    if (kind != "MARKOV" && kind != "BAYES") t.fail("expected MARKOV or BAYES, got '" + kind + "'");

    long n = t.integer("the variable count");
    std::vector<int> cards = read_cards(t, n);

    if (kind == "MARKOV") {
        FactorGraph g;
        for (long v = 1; v <= n; ++v)
            g.add_variable(static_cast<VarId>(v), cards[static_cast<std::size_t>(v - 1)]);
        long nf = t.integer("the factor count");
        if (nf < 0) t.fail("factor count must be nonnegative");
        for (long f = 0; f < nf; ++f) {
            long arity = t.integer("a factor arity");
            if (arity < 0) t.fail("factor arity must be nonnegative");
            std::vector<VarId> scope;
            std::vector<int> fcards;
            for (long i = 0; i < arity; ++i) {
                long v = t.integer("a variable id");
                if (v < 1 || v > n) t.fail("variable id " + std::to_string(v) + " out of range");
                scope.push_back(static_cast<VarId>(v));
                fcards.push_back(cards[static_cast<std::size_t>(v - 1)]);
            }
            long len = t.integer("the table length");
            std::size_t expect = 1;
            for (int c : fcards) expect *= static_cast<std::size_t>(c);
            if (len < 0 || static_cast<std::size_t>(len) != expect)
                t.fail("table length " + std::to_string(len) + ", expected " +
                       std::to_string(expect));
            std::vector<double> table;
            table.reserve(static_cast<std::size_t>(len));
            for (long i = 0; i < len; ++i) {
                double v = t.real("a table value");
                if (v < 0.0) t.fail("negative table value");
                table.push_back(v);
            }
            try {
                g.add_factor(Factor(std::move(scope), std::move(fcards), std::move(table)));
            } catch (const ValidationError& e) {
                t.fail(e.what());
            }
        }
        if (!t.done()) t.fail("trailing content after the declared factors");
        return g;
    }

    DirectedModel m;
    for (long v = 1; v <= n; ++v)
        m.add_variable(static_cast<VarId>(v), cards[static_cast<std::size_t>(v - 1)]);
    for (long v = 1; v <= n; ++v) {
        long np = t.integer("a parent count");
        if (np < 0) t.fail("parent count must be nonnegative");
        std::vector<VarId> parents;
        std::size_t expect = cards[static_cast<std::size_t>(v - 1)];
        for (long i = 0; i < np; ++i) {
            long p = t.integer("a parent id");
            if (p < 1 || p > n) t.fail("parent id " + std::to_string(p) + " out of range");
            parents.push_back(static_cast<VarId>(p));
            expect *= static_cast<std::size_t>(cards[static_cast<std::size_t>(p - 1)]);
        }
        try {
            m.set_parents(static_cast<VarId>(v), std::move(parents));
        } catch (const ValidationError& e) {
            t.fail(e.what());
        }
        long len = t.integer("the CPT length");
        if (len < 0 || static_cast<std::size_t>(len) != expect)
            t.fail("table length " + std::to_string(len) + ", expected " + std::to_string(expect));
        std::vector<double> table;
        for (long i = 0; i < len; ++i) {
            double x = t.real("a CPT value");
            if (x < 0.0) t.fail("negative CPT value");
            table.push_back(x);
        }
        try {
            m.set_cpt(static_cast<VarId>(v), std::move(table));
        } catch (const ValidationError& e) {
            t.fail(e.what());
        }
    }
    if (!t.done()) t.fail("trailing content after the declared tables");
    return m;
}

ParsedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return parse_model(in, path);
}

std::string write_model(const FactorGraph& g) {
    // Canonical form renumbers variables 1..N in declaration order.
    std::map<VarId, long> renum;
    std::ostringstream out;
    out << "MARKOV\n" << g.num_variables() << "\n";
    for (std::size_t i = 0; i < g.variables().size(); ++i) {
        renum[g.variables()[i]] = static_cast<long>(i + 1);
        out << (i ? " " : "") << g.card(g.variables()[i]);
    }
    out << "\n" << g.factors().size() << "\n";
    for (const Factor& f : g.factors()) {
        Factor lin = f.to_linear();
        out << lin.arity();
        for (VarId v : lin.scope()) out << " " << renum.at(v);
        out << "\n" << lin.size();
        for (double v : lin.table()) out << " " << format_value(v);
        out << "\n";
    }
    return out.str();
}

std::string write_model(const DirectedModel& m) {
    std::map<VarId, long> renum;
    std::ostringstream out;
    out << "BAYES\n" << m.num_variables() << "\n";
    for (std::size_t i = 0; i < m.variables().size(); ++i) {
        renum[m.variables()[i]] = static_cast<long>(i + 1);
        out << (i ? " " : "") << m.card(m.variables()[i]);
    }
    out << "\n";
    for (VarId v : m.variables()) {
        const auto& par = m.parents(v);
        out << par.size();
        for (VarId p : par) out << " " << renum.at(p);
        out << "\n";
        const Factor& cpt = m.cpt(v);
        out << cpt.size();
        for (double x : cpt.table()) out << " " << format_value(x);
        out << "\n";
    }
    return out.str();
}

void save_model(const ParsedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    if (std::holds_alternative<FactorGraph>(m))
        out << write_model(std::get<FactorGraph>(m));
    else
        out << write_model(std::get<DirectedModel>(m));
}

Dataset parse_dataset(std::istream& in, const std::string& name) {
    Dataset d;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw ValidationError(name + ":" + std::to_string(lineno) + ": " + msg);
    };
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) {
            // trim
            std::size_t a = cell.find_first_not_of(" \t\r");
            std::size_t b = cell.find_last_not_of(" \t\r");
            cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
        }
        return cells;
    };

    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split(line);
        if (!have_header) {
            for (const auto& c : cells) {
                try {
                    d.variables.emplace_back(static_cast<VarId>(std::stol(c)), 1);
                } catch (const std::exception&) {
                    fail("expected a variable id in the header, got '" + c + "'");
                }
            }
            have_header = true;
            continue;
        }
        if (cells.size() != d.variables.size())
            fail("row has " + std::to_string(cells.size()) + " entries, expected " +
                 std::to_string(d.variables.size()));
        std::vector<int> row;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i] == "?") {
                row.push_back(Dataset::kMissing);
                continue;
            }
            try {
                long v = std::stol(cells[i]);
                if (v < 0) fail("negative state index");
                row.push_back(static_cast<int>(v));
                d.variables[i].second = std::max(d.variables[i].second, static_cast<int>(v) + 1);
            } catch (const ValidationError&) {
                throw;
            } catch (const std::exception&) {
                fail("expected a state index or '?', got '" + cells[i] + "'");
            }
        }
        d.rows.push_back(std::move(row));
    }
    if (!have_header) throw ValidationError(name + ": empty dataset file");
    // Alphabets inferred as max observed state + 1, at least binary.
    for (auto& [_, card] : d.variables) card = std::max(card, 2);
    d.validate();
    return d;
}

Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return parse_dataset(in, path);
}

std::string write_dataset(const Dataset& d) {
    std::ostringstream out;
    for (std::size_t i = 0; i < d.variables.size(); ++i)
        out << (i ? "," : "") << d.variables[i].first;
    out << "\n";
    for (const auto& row : d.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "");
            if (row[i] == Dataset::kMissing)
                out << "?";
            else
                out << row[i];
        }
        out << "\n";
    }
    return out.str();
}

void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << write_dataset(d);
}

Image parse_image(std::istream& in, const std::string& name) {
    Tokens t(in, name);
    long w = t.integer("the width");
    long h = t.integer("the height");
    if (w < 1 || h < 1) t.fail("image dimensions must be positive");
    Image img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    for (long i = 0; i < w * h; ++i) {
        long v = t.integer("a pixel value");
        if (v != -1 && v != 1) t.fail("pixel values must be -1 or +1");
        img.pixels.push_back(static_cast<int>(v));
    }
    if (!t.done()) t.fail("trailing content after the pixel grid");
    return img;
}

Image load_image(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return parse_image(in, path);
}

std::string write_image(const Image& img) {
    std::ostringstream out;
    out << img.width << " " << img.height << "\n";
    for (int r = 0; r < img.height; ++r) {
        for (int c = 0; c < img.width; ++c) out << (c ? " " : "") << img.at(r, c);
        out << "\n";
    }
    return out.str();
}

CrowdAnswers parse_answers(std::istream& in, const std::string& name) {
    CrowdAnswers ans;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> void {
        throw ValidationError(name + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string wtok, ttok, atok;
        if (!std::getline(ls, wtok, ',') || !std::getline(ls, ttok, ',') ||
            !std::getline(ls, atok, ','))
            fail("expected worker,task,answer");
        try {
            long w = std::stol(wtok), t = std::stol(ttok), a = std::stol(atok);
            if (a != -1 && a != 1) fail("answer must be -1 or +1");
            if (w < 0 || t < 0) fail("worker and task ids must be nonnegative");
            ans.entries.push_back({static_cast<int>(w), static_cast<int>(t), static_cast<int>(a)});
            ans.num_workers = std::max(ans.num_workers, static_cast<int>(w) + 1);
            ans.num_tasks = std::max(ans.num_tasks, static_cast<int>(t) + 1);
        } catch (const ValidationError&) {
            throw;
        } catch (const std::exception&) {
            if (lineno == 1) continue;  // header row
            fail("expected numeric worker,task,answer");
        }
    }
    if (ans.entries.empty()) throw ValidationError(name + ": empty answers file");
    return ans;
}

CrowdAnswers load_answers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return parse_answers(in, path);
}

}  // namespace pgm::io
