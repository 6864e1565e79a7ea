#include "cctsp/tsp.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace cctsp {

double distance(const Point& a, const Point& b, DistanceMode mode) {
    const double d = std::hypot(a.x - b.x, a.y - b.y);
    return mode == DistanceMode::EuclideanRounded ? std::nearbyint(d) : d;
}

void validate_permutation(const std::vector<int>& order, int n) {
    if (int(order.size()) != n)
        throw Error("tour has " + std::to_string(order.size()) +
                    " entries, expected " + std::to_string(n));
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int idx : order) {
        if (idx < 0 || idx >= n)
            throw Error("tour index " + std::to_string(idx) + " out of range 0.." +
                        std::to_string(n - 1));
        if (seen[std::size_t(idx)])
            throw Error("duplicate city index " + std::to_string(idx) + " in tour");
        seen[std::size_t(idx)] = 1;
    }
}

double tour_length(const std::vector<Point>& pts, const std::vector<int>& order,
                   DistanceMode mode) {
    validate_permutation(order, int(pts.size()));
    double total = 0.0;
    const std::size_t n = order.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = pts[std::size_t(order[i])];
        const Point& b = pts[std::size_t(order[(i + 1) % n])];
        total += distance(a, b, mode);
    }
    return total;
}

double tour_length(const TspInstance& inst, const Tour& tour, DistanceMode mode) {
    return tour_length(inst.cities, tour.order, mode);
}

namespace {

[[noreturn]] void parse_fail(int line_no, const std::string& what) {
    throw Error("TSPLIB parse error at line " + std::to_string(line_no) + ": " + what);
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

TspInstance parse_tsplib(std::istream& in) {
    TspInstance inst;
    std::string line;
    int line_no = 0;
    long dimension = -1;
    bool saw_ewt = false;
    bool in_coords = false;

    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty()) continue;
        if (!in_coords) {
            if (t == "NODE_COORD_SECTION") {
                if (dimension < 0) parse_fail(line_no, "NODE_COORD_SECTION before DIMENSION");
                if (!saw_ewt) parse_fail(line_no, "missing EDGE_WEIGHT_TYPE header");
                in_coords = true;
                continue;
            }
            if (t == "EOF") break;
            auto colon = t.find(':');
            std::string key = trim(colon == std::string::npos ? t : t.substr(0, colon));
            std::string val = colon == std::string::npos ? "" : trim(t.substr(colon + 1));
            if (key == "NAME") {
                inst.name = val;
            } else if (key == "DIMENSION") {
                try {
                    dimension = std::stol(val);
                } catch (...) {
                    parse_fail(line_no, "non-numeric DIMENSION '" + val + "'");
                }
                if (dimension < 2) parse_fail(line_no, "DIMENSION must be >= 2");
            } else if (key == "EDGE_WEIGHT_TYPE") {
                if (val != "EUC_2D")
                    parse_fail(line_no, "unsupported EDGE_WEIGHT_TYPE '" + val + "'");
                saw_ewt = true;
            }
            // COMMENT, TYPE and other headers are ignored.
            continue;
        }
        if (t == "EOF") break;
        std::istringstream ls(t);
        long idx;
        double x, y;
        if (!(ls >> idx >> x >> y))
            parse_fail(line_no, "expected 'index x y', got '" + t + "'");
        if (idx != long(inst.cities.size()) + 1)
            parse_fail(line_no, "expected city index " +
                                    std::to_string(inst.cities.size() + 1) + ", got " +
                                    std::to_string(idx));
        if (!std::isfinite(x) || !std::isfinite(y))
            parse_fail(line_no, "non-finite coordinate");
        inst.cities.push_back({x, y});
        if (long(inst.cities.size()) == dimension) break;
    }

    if (dimension < 0) parse_fail(line_no, "missing DIMENSION header");
    if (!in_coords) parse_fail(line_no, "missing NODE_COORD_SECTION");
    if (long(inst.cities.size()) != dimension)
        parse_fail(line_no, "coordinate count mismatch: DIMENSION " +
                                std::to_string(dimension) + " but " +
                                std::to_string(inst.cities.size()) + " coordinates");
    if (inst.name.empty()) parse_fail(line_no, "missing NAME header");
    return inst;
}

void write_tsplib(std::ostream& out, const TspInstance& inst) {
    out << "NAME : " << inst.name << "\n";
    out << "TYPE : TSP\n";
    out << "DIMENSION : " << inst.size() << "\n";
    out << "EDGE_WEIGHT_TYPE : EUC_2D\n";
    out << "NODE_COORD_SECTION\n";
    out << std::setprecision(17);
    for (int i = 0; i < inst.size(); ++i)
        out << (i + 1) << " " << inst.cities[std::size_t(i)].x << " "
            << inst.cities[std::size_t(i)].y << "\n";
    out << "EOF\n";
}

TspInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open instance file: " + path);
    TspInstance inst = parse_tsplib(in);

    std::filesystem::path p(path);
    p.replace_extension(".opt");
    std::ifstream side(p);
    if (side) {
        std::string name;
        double opt;
        if (side >> name >> opt && name == inst.name) inst.known_optimum = opt;
    }
    return inst;
}

void write_tour_file(std::ostream& out, const std::string& name, const Tour& tour) {
    out << "NAME : " << name << "\n";
    out << "TYPE : TOUR\n";
    out << "DIMENSION : " << tour.order.size() << "\n";
    out << "TOUR_SECTION\n";
    for (int idx : tour.order) out << (idx + 1) << "\n";
    out << "-1\nEOF\n";
}

TspInstance generate_uniform_instance(int n, RngStream& rng) {
    if (n < 2) throw Error("instance size must be >= 2, got " + std::to_string(n));
    TspInstance inst;
    inst.name = "uniform" + std::to_string(n) + "-" + std::to_string(rng.seed());
    inst.cities.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = rng.next_double();
        double y = rng.next_double();
        inst.cities.push_back({x, y});
    }
    return inst;
}

DistanceCache::DistanceCache(const TspInstance& inst, DistanceMode mode,
                             int matrix_threshold)
    : inst_(inst), mode_(mode), n_(inst.size()) {
    if (n_ <= matrix_threshold) {
        matrix_.resize(static_cast<std::size_t>(n_) * std::size_t(n_));
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                matrix_[std::size_t(i) * std::size_t(n_) + std::size_t(j)] =
                    dist_direct(i, j);
    }
}

double DistanceCache::dist_direct(int i, int j) const {
    return distance(inst_.cities[std::size_t(i)], inst_.cities[std::size_t(j)], mode_);
}

double DistanceCache::tour_length(const std::vector<int>& order) const {
    double total = 0.0;
    const std::size_t n = order.size();
    for (std::size_t i = 0; i < n; ++i)
        total += (*this)(order[i], order[(i + 1) % n]);
    return total;
}

}  // namespace cctsp
