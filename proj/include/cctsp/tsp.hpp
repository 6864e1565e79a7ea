#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cctsp/rng.hpp"

namespace cctsp {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// EuclideanExact is the optimization metric everywhere; EuclideanRounded
// (TSPLIB EUC_2D, each edge rounded to nearest integer) exists only for
// comparison against published optima.
enum class DistanceMode { EuclideanExact, EuclideanRounded };

struct TspInstance {
    std::string name;
    std::vector<Point> cities;
    std::optional<double> known_optimum;

    int size() const { return int(cities.size()); }
};

struct Tour {
    std::vector<int> order;
    std::optional<double> length_cache;
};

double distance(const Point& a, const Point& b, DistanceMode mode);

// Throws Error naming the offending index if `order` is not a permutation
// of 0..n-1.
void validate_permutation(const std::vector<int>& order, int n);

double tour_length(const std::vector<Point>& pts, const std::vector<int>& order,
                   DistanceMode mode = DistanceMode::EuclideanExact);
double tour_length(const TspInstance& inst, const Tour& tour,
                   DistanceMode mode = DistanceMode::EuclideanExact);

// TSPLIB EUC_2D subset: NAME, DIMENSION, EDGE_WEIGHT_TYPE: EUC_2D,
// NODE_COORD_SECTION with DIMENSION lines of "index x y" (1-based indices,
// mapped to 0-based internally). Parse errors carry the line number.
TspInstance parse_tsplib(std::istream& in);
void write_tsplib(std::ostream& out, const TspInstance& inst);

// Loads a .tsp file; if a sidecar "<stem>.opt" with one line "name optimum"
// exists next to it, attaches the known optimum.
TspInstance load_instance(const std::string& path);

// TSPLIB-style tour file (TOUR_SECTION, 1-based indices).
void write_tour_file(std::ostream& out, const std::string& name, const Tour& tour);

// n i.i.d. uniform points in [0,1]^2; deterministic given the stream.
TspInstance generate_uniform_instance(int n, RngStream& rng);

// Optional O(N^2) distance table; use only when N is at or below the
// threshold (default 4096) so memory stays linear for large instances.
class DistanceCache {
public:
    DistanceCache(const TspInstance& inst, DistanceMode mode,
                  int matrix_threshold = 4096);
    double operator()(int i, int j) const {
        if (!matrix_.empty()) return matrix_[std::size_t(i) * n_ + j];
        return dist_direct(i, j);
    }
    double tour_length(const std::vector<int>& order) const;
    int size() const { return n_; }

private:
    double dist_direct(int i, int j) const;
    const TspInstance& inst_;
    DistanceMode mode_;
    int n_;
    std::vector<double> matrix_;
};

}  // namespace cctsp
