#pragma once

// Sorted observation vectors with multiplicity weights (the empirical
// measure).  Ties are collapsed to distinct support points; weights sum
// to one.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace modecert {

struct DegenerateSample : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Sample {
  public:
    // raw observations, any order; ties collapsed with multiplicity weights
    static Sample from_observations(std::vector<double> xs) {
        for (double x : xs)
            if (!std::isfinite(x)) throw ParseError("Sample: non-finite observation");
        std::sort(xs.begin(), xs.end());
        Sample s;
        s.n_ = xs.size();
        for (std::size_t i = 0; i < xs.size();) {
            std::size_t j = i;
            while (j < xs.size() && xs[j] == xs[i]) ++j;
            s.points_.push_back(xs[i]);
            s.weights_.push_back(static_cast<double>(j - i) / static_cast<double>(xs.size()));
            i = j;
        }
        if (s.points_.size() < 2)
            throw DegenerateSample("Sample: fewer than 2 distinct support points; MLE does not exist");
        return s;
    }

    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    std::size_t n() const { return n_; }              // raw observation count
    std::size_t k() const { return points_.size(); }  // distinct points
    double min() const { return points_.front(); }
    double max() const { return points_.back(); }
    double range() const { return points_.back() - points_.front(); }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) m += weights_[i] * points_[i];
        return m;
    }

    double stddev() const {
        double m = mean(), v = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i)
            v += weights_[i] * (points_[i] - m) * (points_[i] - m);
        return std::sqrt(std::max(v, 0.0));
    }

    // Empirical CDF, right continuous.
    double ecdf(double x) const {
        double c = 0.0;
        for (std::size_t i = 0; i < points_.size() && points_[i] <= x; ++i) c += weights_[i];
        return c;
    }

  private:
    std::vector<double> points_;
    std::vector<double> weights_;
    std::size_t n_ = 0;
};

// One decimal number per line; lines starting with '#' are comments.
inline Sample read_sample(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open input file: " + path);
    std::vector<double> xs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        if (line[b] == '#') continue;
        const char* s = line.c_str() + b;
        char* end = nullptr;
        double v = std::strtod(s, &end);
        if (end == s) throw ParseError("parse error at line " + std::to_string(lineno));
        while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
        if (*end != '\0') throw ParseError("parse error at line " + std::to_string(lineno));
        if (!std::isfinite(v)) throw ParseError("non-finite value at line " + std::to_string(lineno));
        xs.push_back(v);
    }
    if (xs.empty()) throw ParseError("no data in " + path);
    return Sample::from_observations(std::move(xs));
}

} // namespace modecert
