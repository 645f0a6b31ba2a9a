#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "maxid/csv.hpp"
#include "maxid/errors.hpp"

namespace maxid {

enum class DistanceMetric { euclidean, great_circle };

inline std::string metric_name(DistanceMetric m) {
    return m == DistanceMetric::euclidean ? "euclidean" : "great_circle";
}

inline DistanceMetric metric_from_name(const std::string& s) {
    if (s == "euclidean") return DistanceMetric::euclidean;
    if (s == "great_circle") return DistanceMetric::great_circle;
    throw ConfigError("unknown distance metric '" + s + "'");
}

struct Site {
    std::string name;
    double lon = 0.0;   // x coordinate under the euclidean metric
    double lat = 0.0;   // y coordinate under the euclidean metric
    double alt = 0.0;   // altitude covariate (km above reference)
};

// great-circle distances are expressed in thousands of km so that typical
// ranges stay O(1)
inline constexpr double kEarthRadiusScaled = 6.371;

struct StudyDesign {
    std::vector<Site> sites;
    DistanceMetric metric = DistanceMetric::euclidean;

    int n_sites() const { return static_cast<int>(sites.size()); }

    double distance(int i, int j) const {
        const Site& a = sites[i];
        const Site& b = sites[j];
        if (metric == DistanceMetric::euclidean)
            return std::hypot(a.lon - b.lon, a.lat - b.lat);
        const double p1 = a.lat * M_PI / 180.0, p2 = b.lat * M_PI / 180.0;
        const double dp = p2 - p1, dl = (b.lon - a.lon) * M_PI / 180.0;
        const double s = std::sin(0.5 * dp), t = std::sin(0.5 * dl);
        const double h = s * s + std::cos(p1) * std::cos(p2) * t * t;
        return 2.0 * kEarthRadiusScaled * std::asin(std::min(1.0, std::sqrt(h)));
    }

    // planar displacement, used when the correlation is anisotropic; under
    // great_circle it is the local equirectangular approximation at the
    // midpoint latitude, in the same thousands-of-km units
    Eigen::Vector2d displacement(int i, int j) const {
        const Site& a = sites[i];
        const Site& b = sites[j];
        if (metric == DistanceMetric::euclidean)
            return {b.lon - a.lon, b.lat - a.lat};
        const double mid = 0.5 * (a.lat + b.lat) * M_PI / 180.0;
        return {kEarthRadiusScaled * (b.lon - a.lon) * M_PI / 180.0 * std::cos(mid),
                kEarthRadiusScaled * (b.lat - a.lat) * M_PI / 180.0};
    }
};

inline StudyDesign read_design(const std::string& path,
                               DistanceMetric metric = DistanceMetric::euclidean) {
    const csv::Table t = csv::read(path);
    const std::vector<std::string> want = {"station", "lon", "lat", "alt_km"};
    if (t.header != want)
        throw ConfigError("design csv '" + path +
                          "' must have header station,lon,lat,alt_km");
    StudyDesign d;
    d.metric = metric;
    std::set<std::string> seen;
    for (const auto& row : t.rows) {
        if (!seen.insert(row[0]).second)
            throw ConfigError("design csv: duplicate station '" + row[0] + "'");
        Site s;
        s.name = row[0];
        s.lon = csv::to_double(row[1], "lon");
        s.lat = csv::to_double(row[2], "lat");
        s.alt = csv::to_double(row[3], "alt_km");
        d.sites.push_back(std::move(s));
    }
    if (d.n_sites() < 2) throw ConfigError("design csv: need at least 2 stations");
    return d;
}

inline void write_design(const std::string& path, const StudyDesign& d) {
    csv::Table t;
    t.header = {"station", "lon", "lat", "alt_km"};
    for (const auto& s : d.sites)
        t.rows.push_back({s.name, csv::num(s.lon), csv::num(s.lat), csv::num(s.alt)});
    csv::write(path, t);
}

} // namespace maxid
