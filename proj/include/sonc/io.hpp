#pragma once

#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sonc/certificates.hpp"
#include "sonc/measure.hpp"
#include "sonc/minnorm.hpp"
#include "sonc/partition.hpp"
#include "sonc/solver.hpp"

namespace sonc {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
            ++pos;
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(std::string("cannot parse ") + what + ": '" + s + "'");
    }
}

} // namespace detail

/// CSV point set: header "x0,...,x{d-1},weight", one atom per row.
inline DiscreteMeasure read_measure_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty measure file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header.back() != "weight")
        throw IoError("measure CSV header must be x0,...,weight");
    const std::size_t d = header.size() - 1;
    for (std::size_t k = 0; k < d; ++k)
        if (header[k] != "x" + std::to_string(k))
            throw IoError("measure CSV header must be x0,...,weight");

    std::vector<Vector> pts;
    std::vector<double> wts;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != d + 1)
            throw IoError("measure CSV row has wrong column count");
        Vector x(d);
        for (std::size_t k = 0; k < d; ++k)
            x[k] = detail::parse_double(cells[k], "coordinate");
        pts.push_back(std::move(x));
        wts.push_back(detail::parse_double(cells[d], "weight"));
    }
    return DiscreteMeasure(static_cast<int>(d), std::move(pts), std::move(wts));
}

inline void write_measure_csv(std::ostream& out, const DiscreteMeasure& m) {
    out << std::setprecision(17);
    for (int k = 0; k < m.dim(); ++k) out << 'x' << k << ',';
    out << "weight\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (int k = 0; k < m.dim(); ++k) out << m.point(i)[k] << ',';
        out << m.weight(i) << '\n';
    }
}

/// JSON point set: {"dim": d, "points": [[...]], "weights": [...]}.
inline DiscreteMeasure measure_from_json(const nlohmann::json& j) {
    if (!j.contains("dim") || !j.contains("points") || !j.contains("weights"))
        throw IoError("measure JSON needs dim, points, weights");
    std::size_t d = j["dim"].get<std::size_t>();
    std::vector<Vector> pts;
    for (const auto& row : j["points"]) {
        if (row.size() != d) throw IoError("measure JSON point has wrong dim");
        Vector x(d);
        for (std::size_t k = 0; k < d; ++k) x[k] = row[k].get<double>();
        pts.push_back(std::move(x));
    }
    std::vector<double> wts = j["weights"].get<std::vector<double>>();
    return DiscreteMeasure(static_cast<int>(d), std::move(pts), std::move(wts));
}

inline nlohmann::json measure_to_json(const DiscreteMeasure& m) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int k = 0; k < m.dim(); ++k) row.push_back(m.point(i)[k]);
        pts.push_back(std::move(row));
    }
    return {{"dim", m.dim()}, {"points", pts}, {"weights", m.weights()}};
}

inline DiscreteMeasure read_measure_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        nlohmann::json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw IoError(std::string("bad JSON in ") + path + ": " + e.what());
        }
        return measure_from_json(j);
    }
    return read_measure_csv(in);
}

/// Partition CSV: single column "label", row order matching the measure.
inline Partition read_partition_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty partition file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "label") throw IoError("partition CSV header must be 'label'");
    std::vector<int> raw;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        raw.push_back(static_cast<int>(
            detail::parse_double(line, "label")));
    }
    return Partition::from_labels(raw);
}

inline void write_partition_csv(std::ostream& out, const Partition& p) {
    out << "label\n";
    for (int l : p.labels) out << l << '\n';
}

inline nlohmann::json solver_result_to_json(const SolverResult& r) {
    nlohmann::json u = nlohmann::json::array();
    for (const auto& v : r.u_values) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < v.size(); ++k) row.push_back(v[k]);
        u.push_back(std::move(row));
    }
    return {{"lambda", r.lambda},
            {"objective", r.objective},
            {"u", u},
            {"converged", r.converged},
            {"iterations", r.iterations},
            {"residuals",
             {{"primal", r.primal_residual}, {"dual", r.dual_residual}}}};
}

inline SolverResult solver_result_from_json(const nlohmann::json& j) {
    SolverResult r;
    r.lambda = j.at("lambda").get<double>();
    r.objective = j.at("objective").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<int>();
    r.primal_residual = j.at("residuals").at("primal").get<double>();
    r.dual_residual = j.at("residuals").at("dual").get<double>();
    for (const auto& row : j.at("u")) {
        Vector v(row.size());
        for (std::size_t k = 0; k < row.size(); ++k) v[k] = row[k].get<double>();
        r.u_values.push_back(std::move(v));
    }
    return r;
}

/// Pair-indexed dual certificate; pair (i, j), i < j, sits at the canonical
/// flat index used throughout.
inline nlohmann::json kkt_certificate_to_json(const KktCertificate& c) {
    nlohmann::json w = nlohmann::json::array();
    for (Eigen::Index p = 0; p < c.w.cols(); ++p) {
        nlohmann::json col = nlohmann::json::array();
        for (Eigen::Index k = 0; k < c.w.rows(); ++k) col.push_back(c.w(k, p));
        w.push_back(std::move(col));
    }
    return {{"w", w},
            {"max_norm", c.max_norm},
            {"stationarity_residual", c.stationarity_residual},
            {"sign_residual", c.sign_residual}};
}

/// "inf" stands in for the unbounded variant; never a float infinity.
inline nlohmann::json lambda_star_to_json(const LambdaStar& ls) {
    if (ls.unbounded) return {{"lambda_star", "inf"}};
    return {{"lambda_star", ls.value}};
}

inline nlohmann::json detection_interval_to_json(const DetectionInterval& di) {
    nlohmann::json j = {{"lower", di.lower}, {"nonempty", di.nonempty}};
    j["upper"] = di.upper_unbounded ? nlohmann::json("inf")
                                    : nlohmann::json(di.upper);
    return j;
}

} // namespace sonc
