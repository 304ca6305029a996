#include "alner/prob_matrix.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "alner/errors.hpp"

namespace alner {

bool ProbMatrix::row_stochastic(double tolerance) const {
    for (std::size_t t = 0; t < tokens_; ++t) {
        double sum = 0.0;
        for (std::size_t c = 0; c < classes_; ++c) {
            const double p = at(t, c);
            if (!(p >= 0.0) || !std::isfinite(p)) return false;
            sum += p;
        }
        if (std::abs(sum - 1.0) > tolerance) return false;
    }
    return true;
}

int argmax_row(std::span<const double> row) {
    int best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
        if (row[c] > row[best]) best = static_cast<int>(c);
    return best;
}

void export_probs(std::span<const ProbMatrix> matrices, const TagSet& tagset, std::ostream& out) {
    out << "#classes: ";
    for (std::size_t c = 0; c < tagset.size(); ++c) {
        if (c) out << ',';
        out << tagset.name(static_cast<int>(c));
    }
    out << '\n';
    char buf[32];
    for (std::size_t s = 0; s < matrices.size(); ++s) {
        const ProbMatrix& m = matrices[s];
        if (m.classes() != tagset.size())
            throw ConfigError("export: matrix class count does not match tagset");
        for (std::size_t t = 0; t < m.tokens(); ++t) {
            for (std::size_t c = 0; c < m.classes(); ++c) {
                std::snprintf(buf, sizeof(buf), "%.9f", m.at(t, c));
                if (c) out << ' ';
                out << buf;
            }
            out << '\n';
        }
        out << '\n';
    }
}

std::vector<ProbMatrix> import_probs(std::istream& in, const TagSet& tagset) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("import: empty stream");
    const std::string prefix = "#classes: ";
    if (line.rfind(prefix, 0) != 0) throw DataError("import: missing '#classes:' header");
    {
        std::string expected;
        for (std::size_t c = 0; c < tagset.size(); ++c) {
            if (c) expected += ',';
            expected += tagset.name(static_cast<int>(c));
        }
        std::string got = line.substr(prefix.size());
        while (!got.empty() && (got.back() == '\r' || got.back() == ' ')) got.pop_back();
        if (got != expected)
            throw DataError("import: class header '" + got + "' does not match tagset '" +
                            expected + "'");
    }

    const std::size_t classes = tagset.size();
    std::vector<ProbMatrix> out;
    std::vector<double> rows;
    std::size_t line_no = 1;

    auto flush = [&] {
        if (rows.empty()) return;
        const std::size_t tokens = rows.size() / classes;
        ProbMatrix m(tokens, classes);
        for (std::size_t t = 0; t < tokens; ++t) {
            double sum = 0.0;
            for (std::size_t c = 0; c < classes; ++c) {
                m.at(t, c) = rows[t * classes + c];
                sum += m.at(t, c);
            }
            if (std::abs(sum - 1.0) > 1e-4)
                throw DataError("import: non-stochastic row (sum " + std::to_string(sum) + ")");
            if (std::abs(sum - 1.0) > 1e-6)
                for (std::size_t c = 0; c < classes; ++c) m.at(t, c) /= sum;
        }
        out.push_back(std::move(m));
        rows.clear();
    };

    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        std::istringstream row(line);
        double v;
        std::size_t n = 0;
        while (row >> v) {
            if (v < 0.0 || !std::isfinite(v))
                throw DataError("import: line " + std::to_string(line_no) +
                                ": invalid probability");
            rows.push_back(v);
            ++n;
        }
        if (n != classes)
            throw DataError("import: line " + std::to_string(line_no) + ": expected " +
                            std::to_string(classes) + " values, got " + std::to_string(n));
    }
    flush();
    if (out.empty()) throw DataError("import: no sentences");
    return out;
}

}  // namespace alner
