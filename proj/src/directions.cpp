#include "dect/directions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dect/rng.hpp"

namespace dect {

DirectionSet::DirectionSet(Matrix dirs, bool constrained_flag)
    : directions(std::move(dirs)), constrained(constrained_flag) {
    if (directions.rows() == 0) throw std::invalid_argument("direction set is empty");
    if (directions.cols() < 1)
        throw std::invalid_argument("directions need an ambient dimension of at least 1");
    if (constrained) {
        for (Eigen::Index d = 0; d < directions.rows(); ++d) {
            if (std::abs(directions.row(d).norm() - 1.0) > 1e-9)
                throw std::invalid_argument("constrained direction " + std::to_string(d) +
                                            " is not unit norm");
        }
    }
}

DirectionSet DirectionSet::renormalized() const {
    Matrix out = directions;
    for (Eigen::Index d = 0; d < out.rows(); ++d) {
        const double n = out.row(d).norm();
        if (n > 0.0) out.row(d) /= n;
    }
    return DirectionSet(std::move(out), true);
}

DirectionSet uniform_directions(int dim, int count, std::uint64_t seed) {
    if (dim < 1) throw std::invalid_argument("ambient dimension must be at least 1");
    if (count < 1) throw std::invalid_argument("direction count must be at least 1");

    Matrix dirs(count, dim);
    if (dim == 2) {
        for (int i = 0; i < count; ++i) {
            const double a = 2.0 * std::numbers::pi * i / count;
            dirs(i, 0) = std::cos(a);
            dirs(i, 1) = std::sin(a);
        }
    } else {
        Rng rng = Rng::substream(seed, "directions");
        for (int i = 0; i < count; ++i) {
            double norm = 0.0;
            do {
                for (int c = 0; c < dim; ++c) dirs(i, c) = rng.gaussian();
                norm = dirs.row(i).norm();
            } while (norm < 1e-12);
            dirs.row(i) /= norm;
        }
    }
    return DirectionSet(std::move(dirs), true);
}

}  // namespace dect
