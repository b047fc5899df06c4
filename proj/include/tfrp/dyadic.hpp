#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tfrp/errors.hpp"

namespace tfrp {

/// Dyadic grid t_k = k T / 2^n, k = 0..2^n.
struct DyadicGrid {
    int level = 0;
    double horizon = 1.0;

    DyadicGrid() = default;
    DyadicGrid(int n, double T = 1.0) : level(n), horizon(T) {
        if (n < 0) throw DomainError("DyadicGrid: level must be nonnegative");
        if (!(T > 0.0)) throw DomainError("DyadicGrid: horizon must be positive");
    }

    std::size_t point_count() const { return (std::size_t(1) << level) + 1; }
    std::size_t cell_count() const { return std::size_t(1) << level; }
    double mesh() const { return horizon / double(std::size_t(1) << level); }
    double point(std::size_t k) const { return horizon * double(k) / double(cell_count()); }

    std::vector<double> points() const {
        std::vector<double> ts(point_count());
        for (std::size_t k = 0; k < ts.size(); ++k) ts[k] = point(k);
        return ts;
    }
};

}  // namespace tfrp
