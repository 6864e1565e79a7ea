#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cctsp/decompose.hpp"
#include "cctsp/ptrnet.hpp"
#include "cctsp/tsp.hpp"

namespace cctsp {

// Records the affine map applied by normalize_subcomponent.
struct NormalizeTransform {
    double offset_x = 0.0, offset_y = 0.0;
    double scale = 1.0;  // uniform on both axes
};

// Translate by the bounding-box minimum and scale both axes by
// 1/max(width,height); a degenerate box maps every point to (0.5, 0.5).
std::vector<Point> normalize_subcomponent(const std::vector<Point>& coords,
                                          NormalizeTransform* transform = nullptr);

// Sub-tour solver over normalized coordinates.
class SubSolver {
public:
    virtual ~SubSolver() = default;
    virtual std::vector<int> solve(const std::vector<Point>& coords,
                                   RngStream& rng) const = 0;
    virtual std::string name() const = 0;
    // True when the solver is exact: splicing may then lay each cluster down
    // as the provably optimal open path for whichever endpoints suit its
    // neighbors, instead of only cutting one edge of the returned cycle.
    virtual bool exact() const { return false; }
};

// Exact dynamic programming over subsets; n <= 13.
std::vector<int> held_karp(const std::vector<Point>& coords);
std::vector<int> nearest_neighbor(const std::vector<Point>& coords);
// Repeated improving 2-exchanges until locally optimal; never worsens.
std::vector<int> two_opt(const std::vector<Point>& coords, std::vector<int> start);

class HeldKarpSolver : public SubSolver {
public:
    std::vector<int> solve(const std::vector<Point>& coords, RngStream&) const override;
    std::string name() const override { return "held-karp"; }
    bool exact() const override { return true; }
};

class NearestNeighborSolver : public SubSolver {
public:
    std::vector<int> solve(const std::vector<Point>& coords, RngStream&) const override;
    std::string name() const override { return "nearest-neighbor"; }
};

class TwoOptSolver : public SubSolver {
public:
    std::vector<int> solve(const std::vector<Point>& coords, RngStream&) const override;
    std::string name() const override { return "two-opt"; }
};

class RandomSolver : public SubSolver {
public:
    std::vector<int> solve(const std::vector<Point>& coords, RngStream& rng) const override;
    std::string name() const override { return "random"; }
};

class PtrNetSolver : public SubSolver {
public:
    PtrNetSolver(const PtrNetModel& model, int samples = 1,
                 std::string checkpoint_id = "")
        : model_(model), samples_(samples), checkpoint_id_(std::move(checkpoint_id)) {}
    std::vector<int> solve(const std::vector<Point>& coords, RngStream& rng) const override;
    std::string name() const override {
        return checkpoint_id_.empty() ? "ptrnet" : "ptrnet:" + checkpoint_id_;
    }

private:
    const PtrNetModel& model_;
    int samples_;
    std::string checkpoint_id_;
};

struct EliteTour {
    Tour tour;
    std::vector<double> per_cluster_lengths;  // closed sub-tour, instance units
    std::string provenance;
};

// Per cluster in creation order: normalize, solve, map back to global city
// indices. Clusters of size 1 or 2 bypass the solver. Each cluster gets an
// independent sub-stream keyed by its index.
std::vector<std::vector<int>> solve_subcomponents(const TspInstance& inst,
                                                  const Decomposition& d,
                                                  const SubSolver& solver,
                                                  RngStream& rng,
                                                  bool two_opt_polish = false);

// Concatenate the sub-tours as open paths in cluster creation order; the
// closing edge back to the first city is implied by the tour objective.
EliteTour combine(const TspInstance& inst,
                  const std::vector<std::vector<int>>& sub_permutations,
                  const Decomposition& d, const std::string& provenance);

EliteTour build_elite(const TspInstance& inst, int k, const SubSolver& solver,
                      RngStream& rng, bool two_opt_polish = false);

}  // namespace cctsp
