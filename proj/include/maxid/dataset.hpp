#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "maxid/csv.hpp"
#include "maxid/design.hpp"
#include "maxid/errors.hpp"

namespace maxid {

// Block maxima, one row per replicate (year), one column per station.
// NaN marks missing cells.  The time covariate defaults to a centered index
// on [-1, 1] and can be overridden from configuration.
struct MaximaDataset {
    std::vector<std::string> stations;
    std::vector<std::string> replicate_ids;
    Eigen::MatrixXd values;
    std::vector<double> times;
    std::string scale = "data";   // "data" or "uniform"

    int n_rep() const { return static_cast<int>(values.rows()); }
    int n_sites() const { return static_cast<int>(values.cols()); }
    bool is_missing(int k, int j) const { return std::isnan(values(k, j)); }

    void default_times() {
        const int k = n_rep();
        times.resize(k);
        for (int i = 0; i < k; ++i)
            times[i] = (k > 1) ? 2.0 * i / (k - 1.0) - 1.0 : 0.0;
    }
};

inline MaximaDataset read_data(const std::string& path) {
    const csv::Table t = csv::read(path);
    if (t.header.empty() || t.header[0] != "replicate")
        throw ConfigError("data csv '" + path + "' must start with a 'replicate' column");
    if (t.header.size() < 2)
        throw ConfigError("data csv '" + path + "' has no station columns");
    MaximaDataset d;
    d.stations.assign(t.header.begin() + 1, t.header.end());
    const int n = static_cast<int>(t.rows.size());
    const int m = static_cast<int>(d.stations.size());
    if (n == 0) throw ConfigError("data csv '" + path + "' has no rows");
    d.values.resize(n, m);
    for (int k = 0; k < n; ++k) {
        d.replicate_ids.push_back(t.rows[k][0]);
        for (int j = 0; j < m; ++j) {
            const std::string& cell = t.rows[k][j + 1];
            d.values(k, j) = cell.empty()
                                 ? std::nan("")
                                 : csv::to_double(cell, "value at replicate " +
                                                            t.rows[k][0]);
        }
    }
    d.default_times();
    return d;
}

inline void write_data(const std::string& path, const MaximaDataset& d) {
    csv::Table t;
    t.header.push_back("replicate");
    for (const auto& s : d.stations) t.header.push_back(s);
    for (int k = 0; k < d.n_rep(); ++k) {
        std::vector<std::string> row;
        row.push_back(d.replicate_ids[k]);
        for (int j = 0; j < d.n_sites(); ++j)
            row.push_back(d.is_missing(k, j) ? "" : csv::num(d.values(k, j)));
        t.rows.push_back(std::move(row));
    }
    csv::write(path, t);
}

// Reorders the dataset columns to match the design; every design station
// must be present and no extras are allowed.
inline MaximaDataset align_to_design(const MaximaDataset& d, const StudyDesign& design) {
    if (d.n_sites() != design.n_sites())
        throw ConfigError("data has " + std::to_string(d.n_sites()) +
                          " stations but design has " +
                          std::to_string(design.n_sites()));
    std::vector<int> pos(design.n_sites(), -1);
    for (int i = 0; i < design.n_sites(); ++i) {
        for (int j = 0; j < d.n_sites(); ++j)
            if (d.stations[j] == design.sites[i].name) {
                pos[i] = j;
                break;
            }
        if (pos[i] < 0)
            throw ConfigError("data is missing station '" + design.sites[i].name + "'");
    }
    MaximaDataset out = d;
    for (int i = 0; i < design.n_sites(); ++i) {
        out.stations[i] = d.stations[pos[i]];
        out.values.col(i) = d.values.col(pos[i]);
    }
    return out;
}

} // namespace maxid
