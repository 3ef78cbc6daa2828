#include "gradsel/csv.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

#include "gradsel/errors.hpp"

namespace gradsel {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return errno == 0 && end == s.c_str() + s.size();
}

std::string list_values(const std::set<std::string>& values) {
    std::string out;
    int shown = 0;
    for (const std::string& v : values) {
        if (shown == 8) {
            out += ", ...";
            break;
        }
        if (shown) out += ", ";
        out += "'" + v + "'";
        ++shown;
    }
    return out;
}

}  // namespace

Dataset load_csv(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) fail("csv", "cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) fail("csv", "'" + path + "' is empty");
    std::vector<std::string> header = split_fields(line);
    const std::size_t width = header.size();

    std::size_t label_at = width;
    for (std::size_t c = 0; c < width; ++c) {
        if (header[c] == options.label_column) {
            if (label_at != width) fail("csv", "duplicate label column '" + options.label_column + "'");
            label_at = c;
        }
    }
    if (label_at == width)
        fail("csv", "label column '" + options.label_column + "' not found in header");
    if (width < 2) fail("csv", "no feature columns");

    std::vector<std::vector<double>> rows;
    std::vector<std::string> labels;
    int r = 0;
    while (std::getline(in, line)) {
        if (line.empty() && in.eof()) break;
        ++r;
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() == 1 && fields[0].empty()) {
            --r;
            continue;  // blank line
        }
        if (fields.size() != width)
            fail("csv", "row " + std::to_string(r) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(width));
        std::vector<double> vals;
        vals.reserve(width - 1);
        for (std::size_t c = 0; c < width; ++c) {
            if (fields[c].empty())
                fail("csv", "missing value at row " + std::to_string(r) + ", column " +
                                std::to_string(c + 1));
            if (c == label_at) {
                labels.push_back(fields[c]);
                continue;
            }
            double v = 0.0;
            if (!parse_number(fields[c], v))
                fail("csv", "invalid numeric value at row " + std::to_string(r) + ", column " +
                                std::to_string(c + 1));
            vals.push_back(v);
        }
        rows.push_back(std::move(vals));
    }
    if (rows.size() < 2) fail("csv", "need at least 2 data rows");

    Dataset data;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index p = static_cast<Eigen::Index>(width - 1);
    data.x.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j)
            data.x(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    for (std::size_t c = 0; c < width; ++c)
        if (c != label_at) data.feature_names.push_back(header[c]);

    std::set<std::string> distinct(labels.begin(), labels.end());
    data.y.resize(n);
    if (!options.positive_label.empty()) {
        if (distinct.size() != 2 || !distinct.count(options.positive_label))
            fail("csv", "label column must hold exactly two values including the declared "
                        "positive class; found " +
                            list_values(distinct));
        for (Eigen::Index i = 0; i < n; ++i)
            data.y[i] = labels[static_cast<std::size_t>(i)] == options.positive_label ? 1.0 : -1.0;
    } else {
        bool all_pm1 = true, all_01 = true;
        std::vector<double> parsed(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            double v = 0.0;
            if (!parse_number(labels[i], v)) {
                fail("csv", "label column is not numeric (values " + list_values(distinct) +
                                "); declare the positive class to use string labels");
            }
            parsed[i] = v;
            if (v != 1.0 && v != -1.0) all_pm1 = false;
            if (v != 1.0 && v != 0.0) all_01 = false;
        }
        if (!all_pm1 && !all_01)
            fail("csv", "label column values must be -1/1 or 0/1; found " + list_values(distinct));
        for (Eigen::Index i = 0; i < n; ++i) {
            double v = parsed[static_cast<std::size_t>(i)];
            data.y[i] = (v == 1.0) ? 1.0 : -1.0;
        }
    }

    standardize(data.x);
    data.validate(true);
    return data;
}

std::string render_csv(const Dataset& data) {
    std::ostringstream out;
    const Eigen::Index p = data.p();
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!data.feature_names.empty())
            out << data.feature_names[static_cast<std::size_t>(j)];
        else
            out << "x" << (j + 1);
        out << ',';
    }
    out << "y\n";
    char buf[40];
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.x(i, j));
            out << buf << ',';
        }
        out << (data.y[i] > 0 ? "1" : "-1") << '\n';
    }
    return out.str();
}

void write_csv(const std::string& path, const Dataset& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("csv", "cannot write '" + path + "'");
    f << render_csv(data);
    if (!f) fail("csv", "write failed for '" + path + "'");
}

}  // namespace gradsel
